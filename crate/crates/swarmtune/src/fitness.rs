//! Topology fitness: trains one network per candidate topology on a prepared
//! occupancy task and scores it with the tolerance-window accuracy, memoizing
//! results so repeated visits to a topology never retrain.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use swarmtune_core::fitness::{window_accuracy, FitnessError, ToleranceWindow};
use swarmtune_core::mlp::{Activation, MLPModel, MlpError, TrainConfig};
use swarmtune_core::pso::{EvalError, Objective};
use swarmtune_core::seed;
use swarmtune_core::topology::{decode, NetworkTopology, TopologySpace};

use crate::data::SupervisedSet;
use thiserror::Error;

/// Errors preparing a task for evaluation.
#[derive(Debug, Error)]
pub enum TaskError {
    /// The training split has no rows.
    #[error("training split is empty")]
    EmptyTrain,
    /// The test split has no rows.
    #[error("test split is empty")]
    EmptyTest,
    /// Rows disagree on feature dimension.
    #[error("inconsistent feature dimension: expected {expected}, found {found}")]
    DimensionMismatch {
        /// Dimension of the first row.
        expected: usize,
        /// Offending row's dimension.
        found: usize,
    },
    /// Invalid training configuration.
    #[error(transparent)]
    Train(#[from] MlpError),
    /// Invalid metric inputs.
    #[error(transparent)]
    Metric(#[from] FitnessError),
}

/// Score of one trained topology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskScore {
    /// Tolerance-window accuracy on the test split, in [0, 1].
    pub accuracy: f64,
    /// True when training diverged and the accuracy was pinned to 0.
    pub diverged: bool,
}

/// Anything that can score a topology. Implementations must be safe to call
/// from parallel workers.
pub trait TopologyEvaluator: Sync {
    /// Scores one topology from scratch.
    fn evaluate_topology(&self, topology: &NetworkTopology) -> Result<TaskScore, EvalError>;
}

impl<F> TopologyEvaluator for F
where
    F: Fn(&NetworkTopology) -> f64 + Sync,
{
    fn evaluate_topology(&self, topology: &NetworkTopology) -> Result<TaskScore, EvalError> {
        Ok(TaskScore {
            accuracy: self(topology),
            diverged: false,
        })
    }
}

/// A standardized train/test task ready for repeated topology evaluation.
///
/// Features and targets are standardized with training-split statistics;
/// predictions are mapped back to raw counts before scoring so the accuracy
/// window applies to occupant counts, not standardized units.
#[derive(Debug, Clone)]
pub struct PreparedTask {
    train_features: Vec<Vec<f64>>,
    train_targets: Vec<f64>,
    test_features: Vec<Vec<f64>>,
    test_actuals: Vec<f64>,
    target_mean: f64,
    target_std: f64,
    input_dim: usize,
    window: ToleranceWindow,
    train_config: TrainConfig,
    activation: Activation,
    seed: u64,
}

impl PreparedTask {
    /// Standardizes the splits and captures everything evaluation needs.
    ///
    /// `seed` is the experiment seed; each topology derives its own model
    /// seed from it, so cache hits and recomputation agree exactly.
    pub fn new(
        train: &SupervisedSet,
        test: &SupervisedSet,
        window: ToleranceWindow,
        train_config: TrainConfig,
        activation: Activation,
        seed: u64,
    ) -> Result<Self, TaskError> {
        train_config.validate()?;
        if train.rows.is_empty() {
            return Err(TaskError::EmptyTrain);
        }
        if test.rows.is_empty() {
            return Err(TaskError::EmptyTest);
        }
        let input_dim = train.rows[0].features.len();
        for row in train.rows.iter().chain(&test.rows) {
            if row.features.len() != input_dim {
                return Err(TaskError::DimensionMismatch {
                    expected: input_dim,
                    found: row.features.len(),
                });
            }
        }

        let rows = train.rows.len() as f64;
        let mut mean = vec![0.0; input_dim];
        for row in &train.rows {
            for (m, v) in mean.iter_mut().zip(&row.features) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= rows;
        }
        let mut std = vec![0.0; input_dim];
        for row in &train.rows {
            for ((s, m), v) in std.iter_mut().zip(&mean).zip(&row.features) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut std {
            *s = (*s / rows).sqrt();
            // Constant columns standardize to zero instead of dividing by zero.
            if *s < 1e-12 {
                *s = 1.0;
            }
        }

        let target_mean = train.rows.iter().map(|r| f64::from(r.target)).sum::<f64>() / rows;
        let mut target_var = 0.0;
        for row in &train.rows {
            let d = f64::from(row.target) - target_mean;
            target_var += d * d;
        }
        let mut target_std = (target_var / rows).sqrt();
        if target_std < 1e-12 {
            target_std = 1.0;
        }

        let standardize = |set: &SupervisedSet| -> Vec<Vec<f64>> {
            set.rows
                .iter()
                .map(|row| {
                    row.features
                        .iter()
                        .zip(&mean)
                        .zip(&std)
                        .map(|((v, m), s)| (v - m) / s)
                        .collect()
                })
                .collect()
        };

        Ok(PreparedTask {
            train_features: standardize(train),
            train_targets: train
                .rows
                .iter()
                .map(|r| (f64::from(r.target) - target_mean) / target_std)
                .collect(),
            test_features: standardize(test),
            test_actuals: test.rows.iter().map(|r| f64::from(r.target)).collect(),
            target_mean,
            target_std,
            input_dim,
            window,
            train_config,
            activation,
            seed,
        })
    }

    /// Feature dimension the models are built for.
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Number of training rows.
    pub fn train_len(&self) -> usize {
        self.train_features.len()
    }

    /// Number of test rows.
    pub fn test_len(&self) -> usize {
        self.test_features.len()
    }
}

impl TopologyEvaluator for PreparedTask {
    fn evaluate_topology(&self, topology: &NetworkTopology) -> Result<TaskScore, EvalError> {
        let model_seed = seed::derive(
            self.seed,
            &[
                u64::from(topology.num_hidden_layers),
                u64::from(topology.neurons_per_layer),
            ],
        );
        let mut config = self.train_config.clone();
        config.seed = seed::derive(model_seed, &[1]);

        let as_eval = |e: MlpError| EvalError::new(e.to_string());
        let mut model = MLPModel::build(
            topology,
            self.input_dim,
            1,
            self.activation,
            config.init,
            model_seed,
        )
        .map_err(as_eval)?;

        match model.train(&self.train_features, &self.train_targets, &config) {
            Ok(_) => {}
            Err(MlpError::Diverged { .. }) => {
                return Ok(TaskScore {
                    accuracy: 0.0,
                    diverged: true,
                })
            }
            Err(e) => return Err(as_eval(e)),
        }

        let predictions: Vec<f64> = model
            .predict_batch(&self.test_features)
            .map_err(as_eval)?
            .into_iter()
            .map(|p| p * self.target_std + self.target_mean)
            .collect();
        let accuracy = window_accuracy(&predictions, &self.test_actuals, self.window)
            .map_err(|e| EvalError::new(e.to_string()))?;
        Ok(TaskScore {
            accuracy,
            diverged: false,
        })
    }
}

/// One stored evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheEntry {
    /// Tolerance-window accuracy, 0 for diverged runs.
    pub accuracy: f64,
    /// Training wall time, present only when timing capture is enabled.
    pub train_seconds: Option<f64>,
    /// True when training diverged.
    pub diverged: bool,
}

/// One row of the evaluation log, in request order.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalLogRow {
    /// Topology that was requested.
    pub topology: NetworkTopology,
    /// Accuracy served for the request.
    pub accuracy: f64,
    /// Training wall time for the request that actually trained.
    pub train_seconds: Option<f64>,
    /// True when the stored evaluation diverged.
    pub diverged: bool,
    /// True when the request was served from the cache without training.
    pub cache_hit: bool,
}

#[derive(Default)]
struct CacheInner {
    entries: BTreeMap<NetworkTopology, CacheEntry>,
    log: Vec<EvalLogRow>,
}

/// Memoizing wrapper around a [`TopologyEvaluator`].
///
/// Each distinct topology is trained at most once; repeated requests are
/// served from the stored entry. Batch requests dedupe first, train the
/// misses in parallel, then commit results in request order, so the log and
/// the entry set are independent of worker count.
pub struct FitnessCache<E> {
    evaluator: E,
    record_timings: bool,
    inner: Mutex<CacheInner>,
}

impl<E: TopologyEvaluator> FitnessCache<E> {
    /// Wraps an evaluator. `record_timings` enables wall-clock capture, which
    /// makes output files nondeterministic and is therefore off by default.
    pub fn new(evaluator: E, record_timings: bool) -> Self {
        FitnessCache {
            evaluator,
            record_timings,
            inner: Mutex::new(CacheInner::default()),
        }
    }

    /// True when wall-clock capture was requested at construction.
    pub fn timings_enabled(&self) -> bool {
        self.record_timings
    }

    /// Number of distinct topologies evaluated so far.
    pub fn unique_evaluations(&self) -> usize {
        self.inner.lock().expect("cache lock").entries.len()
    }

    /// Total requests served, hits included.
    pub fn total_requests(&self) -> usize {
        self.inner.lock().expect("cache lock").log.len()
    }

    /// Snapshot of the request log in request order.
    pub fn log(&self) -> Vec<EvalLogRow> {
        self.inner.lock().expect("cache lock").log.clone()
    }

    /// Scores one topology, training only on the first request.
    pub fn evaluate_topology(&self, topology: &NetworkTopology) -> Result<TaskScore, EvalError> {
        self.evaluate_many(std::slice::from_ref(topology))
            .pop()
            .expect("one result per input")
    }

    /// Scores a batch. Distinct misses train in parallel; every result,
    /// log row, and cache insert lands in request order.
    pub fn evaluate_many(
        &self,
        topologies: &[NetworkTopology],
    ) -> Vec<Result<TaskScore, EvalError>> {
        // Phase 1: plan against the current entries, deduping new topologies.
        let mut misses: Vec<NetworkTopology> = Vec::new();
        let mut plan: Vec<Plan> = Vec::with_capacity(topologies.len());
        {
            let inner = self.inner.lock().expect("cache lock");
            for t in topologies {
                if inner.entries.contains_key(t) {
                    plan.push(Plan::Hit);
                } else if let Some(i) = misses.iter().position(|m| m == t) {
                    plan.push(Plan::Pending(i));
                } else {
                    plan.push(Plan::Train(misses.len()));
                    misses.push(*t);
                }
            }
        }

        // Phase 2: train the misses, possibly in parallel.
        let record_timings = self.record_timings;
        let evaluate = |t: &NetworkTopology| -> Result<CacheEntry, EvalError> {
            let started = record_timings.then(Instant::now);
            let score = self.evaluator.evaluate_topology(t)?;
            Ok(CacheEntry {
                accuracy: score.accuracy,
                train_seconds: started.map(|s| s.elapsed().as_secs_f64()),
                diverged: score.diverged,
            })
        };
        let trained: Vec<Result<CacheEntry, EvalError>> = if misses.len() > 1 {
            misses.par_iter().map(evaluate).collect()
        } else {
            misses.iter().map(evaluate).collect()
        };

        // Phase 3: commit in request order.
        let mut inner = self.inner.lock().expect("cache lock");
        let mut out = Vec::with_capacity(topologies.len());
        for (t, step) in topologies.iter().zip(&plan) {
            let (entry, cache_hit) = match step {
                Plan::Hit => (Ok(inner.entries[t]), true),
                Plan::Pending(i) => (trained[*i].clone().map(strip_timing), true),
                Plan::Train(i) => (trained[*i].clone(), false),
            };
            match entry {
                Ok(entry) => {
                    if let Plan::Train(_) = step {
                        inner.entries.insert(*t, entry);
                    }
                    inner.log.push(EvalLogRow {
                        topology: *t,
                        accuracy: entry.accuracy,
                        train_seconds: entry.train_seconds,
                        diverged: entry.diverged,
                        cache_hit,
                    });
                    out.push(Ok(TaskScore {
                        accuracy: entry.accuracy,
                        diverged: entry.diverged,
                    }));
                }
                Err(e) => out.push(Err(e)),
            }
        }
        out
    }
}

enum Plan {
    /// Entry existed before this batch.
    Hit,
    /// Duplicate of a miss earlier in this batch.
    Pending(usize),
    /// First request for this topology; index into the miss list.
    Train(usize),
}

fn strip_timing(entry: CacheEntry) -> CacheEntry {
    CacheEntry {
        train_seconds: None,
        ..entry
    }
}

/// Adapts a cache to the swarm engine's position-space objective: positions
/// decode to topologies before evaluation, so the swarm's unique-evaluation
/// count reflects distinct topologies, not distinct real-valued positions.
pub struct SpaceObjective<'a, E> {
    cache: &'a FitnessCache<E>,
    space: TopologySpace,
}

impl<'a, E: TopologyEvaluator> SpaceObjective<'a, E> {
    /// Couples a cache with the topology space used for decoding.
    pub fn new(cache: &'a FitnessCache<E>, space: TopologySpace) -> Self {
        SpaceObjective { cache, space }
    }
}

impl<E: TopologyEvaluator> Objective for SpaceObjective<'_, E> {
    fn evaluate(&self, position: &[f64]) -> Result<f64, EvalError> {
        self.evaluate_batch(&[position.to_vec()])
            .pop()
            .expect("one result per input")
    }

    fn evaluate_batch(&self, positions: &[Vec<f64>]) -> Vec<Result<f64, EvalError>> {
        let decoded: Vec<Result<NetworkTopology, EvalError>> = positions
            .iter()
            .map(|p| decode(p, &self.space).map_err(|e| EvalError::new(e.to_string())))
            .collect();
        let wanted: Vec<NetworkTopology> = decoded
            .iter()
            .filter_map(|d| d.as_ref().ok())
            .cloned()
            .collect();
        let mut scores = self.cache.evaluate_many(&wanted).into_iter();
        decoded
            .into_iter()
            .map(|d| match d {
                Ok(_) => scores
                    .next()
                    .expect("one score per decoded topology")
                    .map(|s| s.accuracy),
                Err(e) => Err(e),
            })
            .collect()
    }

    fn unique_evaluations(&self) -> Option<usize> {
        Some(self.cache.unique_evaluations())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LocationKey, SupervisedRow, SupervisedSet};
    use chrono::NaiveDate;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct CountingEvaluator {
        calls: AtomicUsize,
    }

    impl CountingEvaluator {
        fn new() -> Self {
            CountingEvaluator {
                calls: AtomicUsize::new(0),
            }
        }
    }

    impl TopologyEvaluator for CountingEvaluator {
        fn evaluate_topology(&self, t: &NetworkTopology) -> Result<TaskScore, EvalError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(TaskScore {
                accuracy: f64::from(t.num_hidden_layers) / 10.0
                    + f64::from(t.neurons_per_layer) / 1000.0,
                diverged: false,
            })
        }
    }

    fn topo(layers: u32, neurons: u32) -> NetworkTopology {
        NetworkTopology {
            num_hidden_layers: layers,
            neurons_per_layer: neurons,
        }
    }

    #[test]
    fn second_request_is_served_without_retraining() {
        let cache = FitnessCache::new(CountingEvaluator::new(), false);
        let first = cache.evaluate_topology(&topo(3, 40)).unwrap();
        let second = cache.evaluate_topology(&topo(3, 40)).unwrap();
        assert_eq!(first, second);
        assert_eq!(cache.evaluator.calls.load(Ordering::SeqCst), 1);
        assert_eq!(cache.unique_evaluations(), 1);
        assert_eq!(cache.total_requests(), 2);
        let log = cache.log();
        assert!(!log[0].cache_hit);
        assert!(log[1].cache_hit);
    }

    #[test]
    fn two_distinct_topologies_count_twice() {
        let cache = FitnessCache::new(CountingEvaluator::new(), false);
        cache.evaluate_topology(&topo(1, 10)).unwrap();
        cache.evaluate_topology(&topo(2, 10)).unwrap();
        assert_eq!(cache.unique_evaluations(), 2);
    }

    #[test]
    fn batches_dedupe_before_training() {
        let cache = FitnessCache::new(CountingEvaluator::new(), false);
        let batch = vec![topo(1, 10), topo(2, 20), topo(1, 10), topo(1, 10)];
        let out: Vec<TaskScore> = cache
            .evaluate_many(&batch)
            .into_iter()
            .map(Result::unwrap)
            .collect();
        assert_eq!(cache.evaluator.calls.load(Ordering::SeqCst), 2);
        assert_eq!(out[0], out[2]);
        assert_eq!(out[0], out[3]);
        assert_eq!(cache.unique_evaluations(), 2);
        let hits: Vec<bool> = cache.log().iter().map(|r| r.cache_hit).collect();
        assert_eq!(hits, vec![false, false, true, true]);
    }

    fn linear_sets() -> (SupervisedSet, SupervisedSet) {
        // Noiseless linear task: target = round(2a + 3b - c + 40).
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let base = NaiveDate::from_ymd_opt(2024, 1, 1)
            .unwrap()
            .and_hms_opt(8, 0, 0)
            .unwrap();
        let mut rows = Vec::new();
        for i in 0..260 {
            let a: f64 = rng.random_range(0.0..10.0);
            let b: f64 = rng.random_range(0.0..10.0);
            let c: f64 = rng.random_range(0.0..10.0);
            let target = (2.0 * a + 3.0 * b - c + 40.0).round() as u32;
            rows.push(SupervisedRow {
                location: LocationKey {
                    ap_id: "ap".to_string(),
                    building: "b".to_string(),
                },
                bucket_start: base + chrono::TimeDelta::minutes(15 * i),
                features: vec![a, b, c],
                target,
            });
        }
        let test = rows.split_off(200);
        let make = |rows| SupervisedSet {
            bucket_minutes: 15,
            horizon_minutes: 60,
            rows,
        };
        (make(rows), make(test))
    }

    /// Ordinary least squares on (features, target), returning test RMSE-free
    /// predictions; verifies the task is linearly solvable before asking the
    /// network to solve it.
    fn least_squares_predictions(train: &SupervisedSet, test: &SupervisedSet) -> Vec<f64> {
        let d = train.rows[0].features.len() + 1;
        let mut ata = vec![0.0; d * d];
        let mut atb = vec![0.0; d];
        for row in &train.rows {
            let mut x = row.features.clone();
            x.push(1.0);
            for i in 0..d {
                for j in 0..d {
                    ata[i * d + j] += x[i] * x[j];
                }
                atb[i] += x[i] * f64::from(row.target);
            }
        }
        // Gaussian elimination with partial pivoting.
        let mut a = ata;
        let mut b = atb;
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&i, &j| {
                    a[i * d + col]
                        .abs()
                        .partial_cmp(&a[j * d + col].abs())
                        .unwrap()
                })
                .unwrap();
            for j in 0..d {
                a.swap(col * d + j, pivot * d + j);
            }
            b.swap(col, pivot);
            let diag = a[col * d + col];
            for row in col + 1..d {
                let factor = a[row * d + col] / diag;
                for j in col..d {
                    a[row * d + j] -= factor * a[col * d + j];
                }
                b[row] -= factor * b[col];
            }
        }
        let mut w = vec![0.0; d];
        for row in (0..d).rev() {
            let mut sum = b[row];
            for j in row + 1..d {
                sum -= a[row * d + j] * w[j];
            }
            w[row] = sum / a[row * d + row];
        }
        test.rows
            .iter()
            .map(|r| r.features.iter().zip(&w).map(|(x, wi)| x * wi).sum::<f64>() + w[d - 1])
            .collect()
    }

    #[test]
    fn well_sized_network_solves_a_linear_task() {
        let (train, test) = linear_sets();
        let window = ToleranceWindow::new(10);

        // The closed-form baseline confirms the task is linearly solvable.
        let ls_predictions = least_squares_predictions(&train, &test);
        let actuals: Vec<f64> = test.rows.iter().map(|r| f64::from(r.target)).collect();
        let baseline = window_accuracy(&ls_predictions, &actuals, window).unwrap();
        assert!(baseline > 0.99, "least squares scored {baseline}");

        let task = PreparedTask::new(
            &train,
            &test,
            window,
            TrainConfig {
                learning_rate: 0.02,
                epochs: 150,
                batch_size: 32,
                ..TrainConfig::default()
            },
            Activation::Relu,
            7,
        )
        .unwrap();
        let score = task.evaluate_topology(&topo(1, 16)).unwrap();
        assert!(!score.diverged);
        assert!(score.accuracy >= 0.9, "network scored {}", score.accuracy);
    }

    #[test]
    fn cache_and_direct_evaluation_agree() {
        let (train, test) = linear_sets();
        let task = PreparedTask::new(
            &train,
            &test,
            ToleranceWindow::new(10),
            TrainConfig {
                epochs: 30,
                ..TrainConfig::default()
            },
            Activation::Relu,
            3,
        )
        .unwrap();
        let direct = task.evaluate_topology(&topo(2, 12)).unwrap();
        let cache = FitnessCache::new(task, false);
        let via_cache = cache.evaluate_topology(&topo(2, 12)).unwrap();
        let again = cache.evaluate_topology(&topo(2, 12)).unwrap();
        assert_eq!(direct, via_cache);
        assert_eq!(direct, again);
    }

    #[test]
    fn divergent_training_scores_zero_and_is_flagged() {
        let (train, test) = linear_sets();
        let task = PreparedTask::new(
            &train,
            &test,
            ToleranceWindow::new(10),
            TrainConfig {
                learning_rate: 1e12,
                epochs: 5,
                ..TrainConfig::default()
            },
            Activation::Relu,
            3,
        )
        .unwrap();
        let cache = FitnessCache::new(task, false);
        let score = cache.evaluate_topology(&topo(2, 16)).unwrap();
        assert_eq!(score.accuracy, 0.0);
        assert!(score.diverged);
        assert!(cache.log()[0].diverged);
    }

    #[test]
    fn positions_decode_before_hitting_the_cache() {
        let cache = FitnessCache::new(CountingEvaluator::new(), false);
        let objective = SpaceObjective::new(&cache, TopologySpace::default());
        let batch = vec![vec![2.4, 33.6], vec![1.6, 34.4], vec![2.2, 60.0]];
        let out = objective.evaluate_batch(&batch);
        // First two decode to the same topology (2, 34).
        assert_eq!(out[0].as_ref().unwrap(), out[1].as_ref().unwrap());
        assert_eq!(cache.unique_evaluations(), 2);
        assert_eq!(objective.unique_evaluations(), Some(2));
        let expected = f64::from(2u32) / 10.0 + f64::from(34u32) / 1000.0;
        assert_eq!(*out[0].as_ref().unwrap(), expected);
    }

    #[test]
    fn timing_capture_is_opt_in() {
        let cache = FitnessCache::new(CountingEvaluator::new(), false);
        cache.evaluate_topology(&topo(1, 10)).unwrap();
        assert_eq!(cache.log()[0].train_seconds, None);

        let timed = FitnessCache::new(CountingEvaluator::new(), true);
        timed.evaluate_topology(&topo(1, 10)).unwrap();
        assert!(timed.log()[0].train_seconds.is_some());
    }
}
