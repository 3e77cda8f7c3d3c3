//! Topology search: exhaustive grid baseline, swarm search over the same
//! space, and the head-to-head comparison between them.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use swarmtune_core::pso::{self, Bounds, PsoError, SwarmConfig};
use swarmtune_core::topology::{decode, NetworkTopology, TopologySpace};
use thiserror::Error;

use crate::fitness::{FitnessCache, SpaceObjective, TopologyEvaluator};

/// Errors from search setup or the swarm engine.
#[derive(Debug, Error)]
pub enum SearchError {
    /// Grid values are empty, unordered, or outside the space.
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    /// Failure inside the swarm engine (bad config or evaluator error).
    #[error(transparent)]
    Swarm(#[from] PsoError),
}

/// Which search produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMethod {
    /// Particle swarm over the topology space.
    Pso,
    /// Exhaustive grid over prepared value lists.
    Grid,
}

impl SearchMethod {
    /// Lowercase name used in file names and CSV cells.
    pub fn name(self) -> &'static str {
        match self {
            SearchMethod::Pso => "pso",
            SearchMethod::Grid => "grid",
        }
    }
}

impl fmt::Display for SearchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SearchMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pso" => Ok(SearchMethod::Pso),
            "grid" => Ok(SearchMethod::Grid),
            other => Err(format!(
                "unknown method `{other}`, expected `pso` or `grid`"
            )),
        }
    }
}

/// Prepared value lists for the grid baseline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Hidden-layer counts to try, strictly increasing.
    pub layer_values: Vec<u32>,
    /// Per-layer widths to try, strictly increasing.
    pub neuron_values: Vec<u32>,
}

impl GridSpec {
    /// Checks both lists: non-empty, strictly increasing, inside `space`.
    pub fn validate(&self, space: &TopologySpace) -> Result<(), SearchError> {
        let check = |values: &[u32]| -> Result<(), SearchError> {
            if values.is_empty() {
                return Err(SearchError::InvalidGrid("value list is empty"));
            }
            if values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SearchError::InvalidGrid(
                    "values must be strictly increasing",
                ));
            }
            Ok(())
        };
        check(&self.layer_values)?;
        check(&self.neuron_values)?;
        let inside = self.cells().all(|t| space.contains(&t));
        if !inside {
            return Err(SearchError::InvalidGrid(
                "grid reaches outside the topology space",
            ));
        }
        Ok(())
    }

    /// All cells in layers-major order.
    pub fn cells(&self) -> impl Iterator<Item = NetworkTopology> + '_ {
        self.layer_values.iter().flat_map(move |&l| {
            self.neuron_values
                .iter()
                .map(move |&n| NetworkTopology::new(l, n))
        })
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.layer_values.len() * self.neuron_values.len()
    }

    /// True when either value list is empty.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Grid used by the experiments when a config does not override it:
/// layers 1..=10 crossed with widths 10, 20, ..., 200.
pub fn default_experiment_grid() -> GridSpec {
    GridSpec {
        layer_values: (1..=10).collect(),
        neuron_values: (1..=20).map(|k| k * 10).collect(),
    }
}

/// One point of a search's progress.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    /// Grid: cells evaluated so far. Swarm: iteration index (0 = initial).
    pub step: usize,
    /// Best accuracy seen up to this step.
    pub best_accuracy: f64,
    /// Distinct topologies evaluated up to this step.
    pub unique_configurations: usize,
}

/// Outcome of one search run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Search that produced this result.
    pub method: SearchMethod,
    /// Best topology found (first achiever on ties).
    pub best_topology: NetworkTopology,
    /// Accuracy of the best topology.
    pub best_accuracy: f64,
    /// Distinct topologies trained.
    pub unique_configurations: usize,
    /// Evaluation requests issued, cache hits included.
    pub total_evaluations: usize,
    /// Wall-clock time, captured only when the cache records timings.
    pub wall_seconds: Option<f64>,
    /// Progress trace; `best_accuracy` equals its final best.
    pub history: Vec<HistoryPoint>,
}

/// Trains every grid cell exactly once and returns the argmax, first-wins on
/// ties. A failed evaluation is recorded as accuracy 0 and the sweep goes on.
pub fn grid_search<E: TopologyEvaluator>(
    grid: &GridSpec,
    space: &TopologySpace,
    cache: &FitnessCache<E>,
) -> Result<SearchResult, SearchError> {
    grid.validate(space)?;
    let started = cache.timings_enabled().then(Instant::now);
    let cells: Vec<NetworkTopology> = grid.cells().collect();
    let scores = cache.evaluate_many(&cells);

    let mut best: Option<(NetworkTopology, f64)> = None;
    let mut history = Vec::with_capacity(cells.len());
    for (i, (cell, score)) in cells.iter().zip(scores).enumerate() {
        let accuracy = match score {
            Ok(s) => s.accuracy,
            Err(e) => {
                log::warn!("{cell}: evaluation failed ({e}), recorded as accuracy 0");
                0.0
            }
        };
        if best.as_ref().is_none_or(|(_, b)| accuracy > *b) {
            best = Some((*cell, accuracy));
        }
        let (_, best_accuracy) = best.as_ref().expect("set on first cell");
        // Grid cells are all distinct, so cells swept = topologies evaluated.
        history.push(HistoryPoint {
            step: i + 1,
            best_accuracy: *best_accuracy,
            unique_configurations: i + 1,
        });
    }
    let (best_topology, best_accuracy) = best.expect("grid is non-empty");

    Ok(SearchResult {
        method: SearchMethod::Grid,
        best_topology,
        best_accuracy,
        unique_configurations: grid.len(),
        total_evaluations: cells.len(),
        wall_seconds: started.map(|s| s.elapsed().as_secs_f64()),
        history,
    })
}

/// Runs the swarm engine over the 2-D topology box. Positions decode to
/// integer topologies before evaluation, so the unique count comes from the
/// cache, not from real-valued positions.
pub fn pso_search<E: TopologyEvaluator>(
    config: &SwarmConfig,
    space: &TopologySpace,
    cache: &FitnessCache<E>,
) -> Result<SearchResult, SearchError> {
    let started = cache.timings_enabled().then(Instant::now);
    let bounds = Bounds::new(vec![
        (f64::from(space.min_layers), f64::from(space.max_layers)),
        (f64::from(space.min_neurons), f64::from(space.max_neurons)),
    ])?;
    let objective = SpaceObjective::new(cache, *space);
    let outcome = pso::run(config, &bounds, &objective)?;

    let best_topology = decode(&outcome.best_position, space)
        .expect("best position stays inside the bounded space");
    let history = outcome
        .history
        .iter()
        .map(|r| HistoryPoint {
            step: r.iteration,
            best_accuracy: r.gbest_fitness,
            unique_configurations: r.unique_evaluations,
        })
        .collect();

    Ok(SearchResult {
        method: SearchMethod::Pso,
        best_topology,
        best_accuracy: outcome.best_fitness,
        unique_configurations: outcome.unique_evaluations,
        total_evaluations: outcome.total_evaluations,
        wall_seconds: started.map(|s| s.elapsed().as_secs_f64()),
        history,
    })
}

/// Head-to-head between a swarm run and a grid run on the same task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    /// Swarm result.
    pub pso: SearchResult,
    /// Grid result.
    pub grid: SearchResult,
    /// `1 - pso_unique / grid_unique`; negative when the swarm trained more.
    pub reduction: f64,
    /// `pso best accuracy - grid best accuracy`.
    pub accuracy_delta: f64,
}

/// Computes the training-effort reduction and accuracy gap between runs that
/// used the same task, seed, and evaluator settings.
pub fn compare(pso: SearchResult, grid: SearchResult) -> ComparisonRow {
    let reduction = 1.0 - pso.unique_configurations as f64 / grid.unique_configurations as f64;
    let accuracy_delta = pso.best_accuracy - grid.best_accuracy;
    ComparisonRow {
        pso,
        grid,
        reduction,
        accuracy_delta,
    }
}
