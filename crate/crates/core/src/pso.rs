//! Particle swarm optimization over a bounded real box, maximizing a
//! black-box objective.
//!
//! Determinism contract: for a fixed (config, bounds, objective) the
//! result is bit-identical no matter how the objective parallelizes its
//! batch evaluations. All random draws for an iteration happen in fixed
//! particle order before any evaluation is dispatched, and results are
//! folded back in the same order.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Failure raised by an [`Objective`] evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message}")]
pub struct EvalError {
    /// Human-readable cause.
    pub message: String,
}

impl EvalError {
    /// Builds an error from any displayable cause.
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

/// Errors from swarm construction and iteration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsoError {
    /// Bounds were empty, inverted, or non-finite.
    #[error("invalid bounds: {0}")]
    InvalidBounds(&'static str),
    /// A config field violated its range.
    #[error("invalid swarm config: {0}")]
    InvalidConfig(&'static str),
    /// The objective failed; the position identifies the particle.
    #[error("objective failed at position {position:?}: {source}")]
    Evaluation {
        /// Position the objective was asked to evaluate.
        position: Vec<f64>,
        /// The underlying objective error.
        #[source]
        source: EvalError,
    },
    /// The objective returned NaN or an infinity. Surfaced instead of
    /// letting the comparison logic silently misbehave.
    #[error("objective returned non-finite fitness {value} at position {position:?}")]
    NonFiniteFitness {
        /// Position the objective was asked to evaluate.
        position: Vec<f64>,
        /// The offending fitness value.
        value: f64,
    },
}

/// Per-dimension closed search box.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    dims: Vec<(f64, f64)>,
}

impl Bounds {
    /// Builds bounds from (min, max) pairs; each min must be strictly
    /// below its max and both finite.
    pub fn new(dims: Vec<(f64, f64)>) -> Result<Self, PsoError> {
        if dims.is_empty() {
            return Err(PsoError::InvalidBounds("at least one dimension required"));
        }
        for &(lo, hi) in &dims {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(PsoError::InvalidBounds("bounds must be finite"));
            }
            if lo >= hi {
                return Err(PsoError::InvalidBounds("min must be strictly below max"));
            }
        }
        Ok(Self { dims })
    }

    /// Number of dimensions.
    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    /// The (min, max) pairs.
    pub fn dims(&self) -> &[(f64, f64)] {
        &self.dims
    }
}

/// Symmetric per-dimension velocity limits: vmax = fraction·(max − min),
/// vmin = −vmax.
pub fn velocity_limits(bounds: &Bounds, clamp_fraction: f64) -> Vec<(f64, f64)> {
    bounds
        .dims()
        .iter()
        .map(|&(lo, hi)| {
            let vmax = clamp_fraction * (hi - lo);
            (-vmax, vmax)
        })
        .collect()
}

/// How the acceleration coefficients c1 and c2 are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CoefficientMode {
    /// Use the configured `c1`/`c2` values as given.
    Fixed,
    /// Draw c1 and c2 uniformly from [0, 4] once at initialization and
    /// hold them fixed for the whole run. The drawn values are visible
    /// in the result.
    #[default]
    SampledOnce,
}

/// Stagnation rule checked between consecutive iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EarlyStop {
    /// Run until the iteration cap regardless of stagnation.
    Disabled,
    /// Stop once the global best changes by at most `epsilon` between
    /// two consecutive iterations. Zero means exact equality.
    Stall {
        /// Maximum tolerated change, ≥ 0.
        epsilon: f64,
    },
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self::Stall { epsilon: 0.0 }
    }
}

/// What the attraction terms subtract from the best positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AttractionReference {
    /// Standard form: pull proportional to (best − position).
    #[default]
    Position,
    /// Variant that pulls proportional to (best − velocity) instead.
    /// Nonstandard; kept selectable for side-by-side experiments.
    Velocity,
}

/// Swarm hyperparameters. `c1`/`c2` are used verbatim under
/// [`CoefficientMode::Fixed`]; under [`CoefficientMode::SampledOnce`]
/// they are replaced by one uniform draw from [0, 4] per run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SwarmConfig {
    /// Number of particles, ≥ 1.
    pub population_size: usize,
    /// Cognitive coefficient, ≥ 0.
    pub c1: f64,
    /// Social coefficient, ≥ 0.
    pub c2: f64,
    /// Inertia weight, ≥ 0.
    pub w: f64,
    /// Iteration cap, ≥ 1.
    pub max_iterations: usize,
    /// Velocity limit as a fraction of each dimension's range, in (0, 1].
    pub velocity_clamp_fraction: f64,
    /// Seed for all randomness in the run.
    pub seed: u64,
    /// Coefficient selection rule.
    pub coefficient_mode: CoefficientMode,
    /// Stagnation rule.
    pub early_stop: EarlyStop,
    /// Velocity update form.
    pub attraction_reference: AttractionReference,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            population_size: 10,
            c1: 2.0,
            c2: 2.0,
            w: 0.729,
            max_iterations: 10,
            velocity_clamp_fraction: 0.1,
            seed: 0,
            coefficient_mode: CoefficientMode::default(),
            early_stop: EarlyStop::default(),
            attraction_reference: AttractionReference::default(),
        }
    }
}

impl SwarmConfig {
    /// Checks every field range.
    pub fn validate(&self) -> Result<(), PsoError> {
        if self.population_size < 1 {
            return Err(PsoError::InvalidConfig(
                "population_size must be at least 1",
            ));
        }
        if self.max_iterations < 1 {
            return Err(PsoError::InvalidConfig("max_iterations must be at least 1"));
        }
        for (value, name) in [
            (self.c1, "c1 must be finite and non-negative"),
            (self.c2, "c2 must be finite and non-negative"),
            (self.w, "w must be finite and non-negative"),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(PsoError::InvalidConfig(name));
            }
        }
        if !self.velocity_clamp_fraction.is_finite()
            || self.velocity_clamp_fraction <= 0.0
            || self.velocity_clamp_fraction > 1.0
        {
            return Err(PsoError::InvalidConfig(
                "velocity_clamp_fraction must be in (0, 1]",
            ));
        }
        if let EarlyStop::Stall { epsilon } = self.early_stop {
            if !epsilon.is_finite() || epsilon < 0.0 {
                return Err(PsoError::InvalidConfig(
                    "early-stop epsilon must be finite and non-negative",
                ));
            }
        }
        Ok(())
    }
}

/// One candidate solution with personal-best memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    /// Current position, always inside the bounds.
    pub position: Vec<f64>,
    /// Current velocity, always inside the velocity limits.
    pub velocity: Vec<f64>,
    /// Best position this particle has evaluated.
    pub pbest_position: Vec<f64>,
    /// Fitness at `pbest_position`; −∞ until the first evaluation.
    pub pbest_fitness: f64,
}

/// Full swarm snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    /// All particles in index order.
    pub particles: Vec<Particle>,
    /// Best position found by any particle so far.
    pub gbest_position: Vec<f64>,
    /// Fitness at `gbest_position`; −∞ until the first evaluation.
    pub gbest_fitness: f64,
    /// Completed iterations; 0 right after initialization.
    pub iteration: usize,
    /// Distinct evaluations performed so far (see
    /// [`Objective::unique_evaluations`]).
    pub unique_evaluations: usize,
}

/// Global best and evaluation count after one iteration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRecord {
    /// Iteration index; 0 is the initial evaluation.
    pub iteration: usize,
    /// Global best fitness after this iteration.
    pub gbest_fitness: f64,
    /// Distinct evaluations performed up to this point.
    pub unique_evaluations: usize,
}

/// Outcome of a completed run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptimizationResult {
    /// Best position found.
    pub best_position: Vec<f64>,
    /// Fitness at the best position.
    pub best_fitness: f64,
    /// Iterations executed, excluding the initial evaluation.
    pub iterations_run: usize,
    /// Distinct evaluations performed.
    pub unique_evaluations: usize,
    /// Objective calls issued, counting repeats.
    pub total_evaluations: usize,
    /// Cognitive coefficient actually used (after any sampling).
    pub c1: f64,
    /// Social coefficient actually used (after any sampling).
    pub c2: f64,
    /// Per-iteration global best, non-decreasing.
    pub history: Vec<IterationRecord>,
}

/// A maximization target over positions in the search box.
pub trait Objective {
    /// Fitness at `position`; larger is better. Must be finite.
    fn evaluate(&self, position: &[f64]) -> Result<f64, EvalError>;

    /// Evaluates a whole batch, one result per input position, in input
    /// order. Implementations may fan the work out across threads as
    /// long as the returned order matches.
    fn evaluate_batch(&self, positions: &[Vec<f64>]) -> Vec<Result<f64, EvalError>> {
        positions.iter().map(|p| self.evaluate(p)).collect()
    }

    /// Count of distinct underlying evaluations so far, for objectives
    /// that deduplicate repeated positions (e.g. through a cache).
    /// `None` means no deduplication: every call counts.
    fn unique_evaluations(&self) -> Option<usize> {
        None
    }
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64,
{
    fn evaluate(&self, position: &[f64]) -> Result<f64, EvalError> {
        Ok(self(position))
    }
}

/// One velocity update, component-wise, then clamped into `limits`:
///
/// v' = w·v + c1·r1·(pbest − x) + c2·r2·(gbest − x)
///
/// `config.c1`/`config.c2` are used verbatim; coefficient sampling
/// happens at swarm construction. [`AttractionReference::Velocity`]
/// swaps x for v inside the parentheses.
#[allow(clippy::too_many_arguments)]
pub fn update_velocity(
    velocity: &[f64],
    position: &[f64],
    pbest_position: &[f64],
    gbest_position: &[f64],
    r1: &[f64],
    r2: &[f64],
    config: &SwarmConfig,
    limits: &[(f64, f64)],
) -> Vec<f64> {
    let mut out = Vec::with_capacity(velocity.len());
    for d in 0..velocity.len() {
        let anchor = match config.attraction_reference {
            AttractionReference::Position => position[d],
            AttractionReference::Velocity => velocity[d],
        };
        let raw = config.w * velocity[d]
            + config.c1 * r1[d] * (pbest_position[d] - anchor)
            + config.c2 * r2[d] * (gbest_position[d] - anchor);
        let (lo, hi) = limits[d];
        out.push(raw.clamp(lo, hi));
    }
    out
}

/// One position update: x' = x + v, clamped into the bounds.
pub fn update_position(position: &[f64], velocity: &[f64], bounds: &Bounds) -> Vec<f64> {
    position
        .iter()
        .zip(velocity)
        .zip(bounds.dims())
        .map(|((x, v), &(lo, hi))| (x + v).clamp(lo, hi))
        .collect()
}

/// A swarm mid-run. [`Swarm::new`] initializes and evaluates the
/// starting population; [`Swarm::step`] advances one iteration.
pub struct Swarm<'a, O: ?Sized> {
    config: SwarmConfig,
    bounds: Bounds,
    limits: Vec<(f64, f64)>,
    objective: &'a O,
    rng: ChaCha8Rng,
    state: SwarmState,
    history: Vec<IterationRecord>,
    total_evaluations: usize,
    unique_base: usize,
    prev_gbest: Option<f64>,
    stalled: bool,
}

impl<'a, O: Objective + ?Sized> Swarm<'a, O> {
    /// Validates the config, seeds the generator, draws the initial
    /// population (per particle: position components then velocity
    /// components, dimensions in order), and evaluates it.
    ///
    /// Under [`CoefficientMode::SampledOnce`] the c1/c2 draws happen
    /// first, before any particle state.
    pub fn new(
        mut config: SwarmConfig,
        bounds: Bounds,
        objective: &'a O,
    ) -> Result<Self, PsoError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        if config.coefficient_mode == CoefficientMode::SampledOnce {
            config.c1 = rng.random_range(0.0..=4.0);
            config.c2 = rng.random_range(0.0..=4.0);
        }
        let limits = velocity_limits(&bounds, config.velocity_clamp_fraction);
        let mut particles = Vec::with_capacity(config.population_size);
        for _ in 0..config.population_size {
            let mut position = Vec::with_capacity(bounds.dimension());
            for &(lo, hi) in bounds.dims() {
                position.push(rng.random_range(lo..=hi));
            }
            let mut velocity = Vec::with_capacity(bounds.dimension());
            for &(lo, hi) in &limits {
                velocity.push(rng.random_range(lo..=hi));
            }
            particles.push(Particle {
                pbest_position: position.clone(),
                pbest_fitness: f64::NEG_INFINITY,
                position,
                velocity,
            });
        }
        let gbest_position = particles[0].position.clone();
        let unique_base = objective.unique_evaluations().unwrap_or(0);
        let mut swarm = Self {
            config,
            bounds,
            limits,
            objective,
            rng,
            state: SwarmState {
                particles,
                gbest_position,
                gbest_fitness: f64::NEG_INFINITY,
                iteration: 0,
                unique_evaluations: 0,
            },
            history: Vec::new(),
            total_evaluations: 0,
            unique_base,
            prev_gbest: None,
            stalled: false,
        };
        swarm.evaluate_initial()?;
        Ok(swarm)
    }

    /// Current snapshot.
    pub fn state(&self) -> &SwarmState {
        &self.state
    }

    /// Config in effect, with sampled coefficients resolved.
    pub fn config(&self) -> &SwarmConfig {
        &self.config
    }

    /// Per-iteration records so far, starting at iteration 0.
    pub fn history(&self) -> &[IterationRecord] {
        &self.history
    }

    /// True once the iteration cap is reached or the global best has
    /// stalled per the early-stop rule.
    pub fn finished(&self) -> bool {
        self.stalled || self.state.iteration >= self.config.max_iterations
    }

    /// Advances one iteration: draws all randomness in fixed particle
    /// order, computes candidate velocities and positions, evaluates
    /// them as one batch, then commits updates in particle order.
    ///
    /// On error no particle state changes, but the consumed random
    /// draws are not rewound. Does not check [`Swarm::finished`];
    /// [`Swarm::run`] enforces the termination contract.
    pub fn step(&mut self) -> Result<(), PsoError> {
        let dim = self.bounds.dimension();
        let pop = self.state.particles.len();
        let mut draws = Vec::with_capacity(pop);
        for _ in 0..pop {
            let mut r1 = Vec::with_capacity(dim);
            let mut r2 = Vec::with_capacity(dim);
            for _ in 0..dim {
                r1.push(self.rng.random_range(0.0..=1.0));
                r2.push(self.rng.random_range(0.0..=1.0));
            }
            draws.push((r1, r2));
        }

        let mut proposals = Vec::with_capacity(pop);
        let mut positions = Vec::with_capacity(pop);
        for (particle, (r1, r2)) in self.state.particles.iter().zip(&draws) {
            let velocity = update_velocity(
                &particle.velocity,
                &particle.position,
                &particle.pbest_position,
                &self.state.gbest_position,
                r1,
                r2,
                &self.config,
                &self.limits,
            );
            let position = update_position(&particle.position, &velocity, &self.bounds);
            positions.push(position.clone());
            proposals.push((position, velocity));
        }

        let fitnesses = self.dispatch(&positions)?;

        for ((particle, (position, velocity)), fitness) in self
            .state
            .particles
            .iter_mut()
            .zip(proposals)
            .zip(fitnesses)
        {
            particle.position = position;
            particle.velocity = velocity;
            if fitness > particle.pbest_fitness {
                particle.pbest_fitness = fitness;
                particle.pbest_position = particle.position.clone();
            }
        }
        self.refresh_gbest();
        self.state.iteration += 1;
        self.snapshot_unique();
        self.record_history();

        if let EarlyStop::Stall { epsilon } = self.config.early_stop {
            if let Some(prev) = self.prev_gbest {
                if (self.state.gbest_fitness - prev).abs() <= epsilon {
                    self.stalled = true;
                }
            }
            self.prev_gbest = Some(self.state.gbest_fitness);
        }
        Ok(())
    }

    /// Steps until [`Swarm::finished`].
    pub fn run(&mut self) -> Result<(), PsoError> {
        while !self.finished() {
            self.step()?;
        }
        Ok(())
    }

    /// Snapshot of the outcome so far.
    pub fn result(&self) -> OptimizationResult {
        OptimizationResult {
            best_position: self.state.gbest_position.clone(),
            best_fitness: self.state.gbest_fitness,
            iterations_run: self.state.iteration,
            unique_evaluations: self.state.unique_evaluations,
            total_evaluations: self.total_evaluations,
            c1: self.config.c1,
            c2: self.config.c2,
            history: self.history.clone(),
        }
    }

    fn evaluate_initial(&mut self) -> Result<(), PsoError> {
        let positions: Vec<Vec<f64>> = self
            .state
            .particles
            .iter()
            .map(|p| p.position.clone())
            .collect();
        let fitnesses = self.dispatch(&positions)?;
        for (particle, fitness) in self.state.particles.iter_mut().zip(fitnesses) {
            particle.pbest_fitness = fitness;
            particle.pbest_position = particle.position.clone();
        }
        self.refresh_gbest();
        self.snapshot_unique();
        self.record_history();
        Ok(())
    }

    fn dispatch(&mut self, positions: &[Vec<f64>]) -> Result<Vec<f64>, PsoError> {
        let results = self.objective.evaluate_batch(positions);
        debug_assert_eq!(results.len(), positions.len());
        self.total_evaluations += positions.len();
        let mut fitnesses = Vec::with_capacity(results.len());
        for (position, result) in positions.iter().zip(results) {
            match result {
                Ok(value) if value.is_finite() => fitnesses.push(value),
                Ok(value) => {
                    return Err(PsoError::NonFiniteFitness {
                        position: position.clone(),
                        value,
                    })
                }
                Err(source) => {
                    return Err(PsoError::Evaluation {
                        position: position.clone(),
                        source,
                    })
                }
            }
        }
        Ok(fitnesses)
    }

    /// Strict-improvement replacement keeps the first achiever on ties.
    fn refresh_gbest(&mut self) {
        // Split borrow so gbest can be cloned from a particle in the loop.
        let state = &mut self.state;
        for particle in &state.particles {
            if particle.pbest_fitness > state.gbest_fitness {
                state.gbest_fitness = particle.pbest_fitness;
                state.gbest_position = particle.pbest_position.clone();
            }
        }
    }

    fn snapshot_unique(&mut self) {
        self.state.unique_evaluations = match self.objective.unique_evaluations() {
            Some(count) => count.saturating_sub(self.unique_base),
            None => self.total_evaluations,
        };
    }

    fn record_history(&mut self) {
        self.history.push(IterationRecord {
            iteration: self.state.iteration,
            gbest_fitness: self.state.gbest_fitness,
            unique_evaluations: self.state.unique_evaluations,
        });
    }
}

/// Runs a full optimization: initialize, evaluate, iterate until the
/// iteration cap or a gbest stall.
pub fn run<O: Objective + ?Sized>(
    config: &SwarmConfig,
    bounds: &Bounds,
    objective: &O,
) -> Result<OptimizationResult, PsoError> {
    let mut swarm = Swarm::new(config.clone(), bounds.clone(), objective)?;
    swarm.run()?;
    Ok(swarm.result())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::cell::RefCell;

    fn sphere(position: &[f64]) -> f64 {
        -position.iter().map(|x| x * x).sum::<f64>()
    }

    fn box2(lo: f64, hi: f64) -> Bounds {
        Bounds::new(vec![(lo, hi), (lo, hi)]).unwrap()
    }

    fn fixed_config() -> SwarmConfig {
        SwarmConfig {
            coefficient_mode: CoefficientMode::Fixed,
            ..SwarmConfig::default()
        }
    }

    #[test]
    fn velocity_limits_examples() {
        let b = Bounds::new(vec![(1.0, 200.0)]).unwrap();
        let limits = velocity_limits(&b, 0.1);
        assert!((limits[0].1 - 19.9).abs() < 1e-12);
        assert!((limits[0].0 + 19.9).abs() < 1e-12);

        let b = Bounds::new(vec![(1.0, 10.0)]).unwrap();
        assert!((velocity_limits(&b, 0.1)[0].1 - 0.9).abs() < 1e-12);

        let b = Bounds::new(vec![(0.0, 1.0)]).unwrap();
        assert_eq!(velocity_limits(&b, 1.0)[0], (-1.0, 1.0));
    }

    #[test]
    fn bounds_validation() {
        assert!(Bounds::new(vec![]).is_err());
        assert!(Bounds::new(vec![(1.0, 1.0)]).is_err());
        assert!(Bounds::new(vec![(2.0, 1.0)]).is_err());
        assert!(Bounds::new(vec![(0.0, f64::INFINITY)]).is_err());
        assert!(Bounds::new(vec![(1.0, 200.0), (1.0, 10.0)]).is_ok());
    }

    #[test]
    fn config_validation() {
        assert!(SwarmConfig::default().validate().is_ok());
        let bad = SwarmConfig {
            population_size: 0,
            ..SwarmConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SwarmConfig {
            max_iterations: 0,
            ..SwarmConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SwarmConfig {
            velocity_clamp_fraction: 0.0,
            ..SwarmConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SwarmConfig {
            velocity_clamp_fraction: 1.5,
            ..SwarmConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SwarmConfig {
            c1: f64::NAN,
            ..SwarmConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SwarmConfig {
            early_stop: EarlyStop::Stall { epsilon: -1.0 },
            ..SwarmConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn update_velocity_zero_terms_gives_zero() {
        let config = SwarmConfig {
            w: 0.0,
            c1: 0.0,
            c2: 0.0,
            ..fixed_config()
        };
        let v = update_velocity(
            &[3.0, -2.0],
            &[5.0, 5.0],
            &[1.0, 1.0],
            &[9.0, 9.0],
            &[0.7, 0.7],
            &[0.3, 0.3],
            &config,
            &[(-19.9, 19.9), (-19.9, 19.9)],
        );
        assert_eq!(v, vec![0.0, 0.0]);
    }

    #[test]
    fn update_velocity_at_both_bests_is_pure_inertia() {
        let config = SwarmConfig {
            w: 0.5,
            c1: 2.0,
            c2: 2.0,
            ..fixed_config()
        };
        let x = [4.0, -3.0];
        let v = update_velocity(
            &[2.0, -2.0],
            &x,
            &x,
            &x,
            &[1.0, 1.0],
            &[1.0, 1.0],
            &config,
            &[(-19.9, 19.9), (-19.9, 19.9)],
        );
        assert_eq!(v, vec![1.0, -1.0]);
    }

    #[test]
    fn update_velocity_clamps_to_limit() {
        let config = SwarmConfig {
            w: 1.0,
            c1: 0.0,
            c2: 0.0,
            ..fixed_config()
        };
        let x = [5.0];
        let v = update_velocity(
            &[30.0],
            &x,
            &x,
            &x,
            &[0.5],
            &[0.5],
            &config,
            &[(-19.9, 19.9)],
        );
        assert_eq!(v, vec![19.9]);
    }

    #[test]
    fn update_position_examples() {
        let b = Bounds::new(vec![(1.0, 200.0)]).unwrap();
        assert_eq!(update_position(&[5.0], &[2.0], &b), vec![7.0]);

        let b = Bounds::new(vec![(1.0, 10.0)]).unwrap();
        assert_eq!(update_position(&[9.5], &[2.0], &b), vec![10.0]);
        assert_eq!(update_position(&[9.5], &[0.0], &b), vec![9.5]);
    }

    #[test]
    fn init_same_seed_is_identical() {
        let config = SwarmConfig {
            seed: 42,
            ..SwarmConfig::default()
        };
        let a = Swarm::new(config.clone(), box2(-5.0, 5.0), &sphere).unwrap();
        let b = Swarm::new(config, box2(-5.0, 5.0), &sphere).unwrap();
        assert_eq!(a.state(), b.state());
        assert_eq!(a.config(), b.config());
    }

    #[test]
    fn init_respects_bounds_and_limits() {
        let config = SwarmConfig {
            population_size: 10,
            seed: 7,
            ..SwarmConfig::default()
        };
        let bounds = box2(-5.0, 5.0);
        let limits = velocity_limits(&bounds, config.velocity_clamp_fraction);
        let swarm = Swarm::new(config, bounds, &sphere).unwrap();
        assert_eq!(swarm.state().particles.len(), 10);
        for particle in &swarm.state().particles {
            for (d, limit) in limits.iter().enumerate() {
                assert!((-5.0..=5.0).contains(&particle.position[d]));
                assert!(particle.velocity[d].abs() <= limit.1);
            }
        }
    }

    #[test]
    fn init_narrow_box() {
        let bounds = Bounds::new(vec![(5.0, 5.0001)]).unwrap();
        let swarm = Swarm::new(SwarmConfig::default(), bounds, &sphere).unwrap();
        for particle in &swarm.state().particles {
            assert!((5.0..=5.0001).contains(&particle.position[0]));
        }
    }

    #[test]
    fn sampled_coefficients_land_in_range_and_are_reported() {
        let config = SwarmConfig {
            seed: 11,
            coefficient_mode: CoefficientMode::SampledOnce,
            ..SwarmConfig::default()
        };
        let swarm = Swarm::new(config.clone(), box2(-5.0, 5.0), &sphere).unwrap();
        let resolved = swarm.config();
        assert!((0.0..=4.0).contains(&resolved.c1));
        assert!((0.0..=4.0).contains(&resolved.c2));
        let again = Swarm::new(config, box2(-5.0, 5.0), &sphere).unwrap();
        assert_eq!(resolved.c1, again.config().c1);
        assert_eq!(resolved.c2, again.config().c2);
        assert_eq!(swarm.result().c1, resolved.c1);
    }

    #[test]
    fn constant_fitness_stops_after_two_iterations() {
        let constant = |_: &[f64]| 0.5;
        let result = run(&SwarmConfig::default(), &box2(-5.0, 5.0), &constant).unwrap();
        assert_eq!(result.iterations_run, 2);
        assert_eq!(result.best_fitness, 0.5);
        // initial evaluation plus two steps
        assert_eq!(result.history.len(), 3);
    }

    #[test]
    fn constant_fitness_step_keeps_gbest() {
        let constant = |_: &[f64]| 0.5;
        let mut swarm = Swarm::new(SwarmConfig::default(), box2(-5.0, 5.0), &constant).unwrap();
        let before = swarm.state().gbest_position.clone();
        swarm.step().unwrap();
        assert_eq!(swarm.state().gbest_fitness, 0.5);
        assert_eq!(swarm.state().gbest_position, before);
    }

    #[test]
    fn early_stop_disabled_runs_to_cap() {
        let constant = |_: &[f64]| 0.5;
        let config = SwarmConfig {
            max_iterations: 7,
            early_stop: EarlyStop::Disabled,
            ..SwarmConfig::default()
        };
        let result = run(&config, &box2(-5.0, 5.0), &constant).unwrap();
        assert_eq!(result.iterations_run, 7);
    }

    #[test]
    fn budget_and_cap_on_sphere() {
        let config = SwarmConfig {
            population_size: 10,
            max_iterations: 10,
            early_stop: EarlyStop::Disabled,
            seed: 3,
            ..SwarmConfig::default()
        };
        let result = run(&config, &box2(-5.0, 5.0), &sphere).unwrap();
        assert_eq!(result.iterations_run, 10);
        assert_eq!(result.total_evaluations, 10 * 11);
        assert!(result.unique_evaluations <= 10 * (result.iterations_run + 1));
    }

    #[test]
    fn run_is_deterministic() {
        let config = SwarmConfig {
            seed: 99,
            max_iterations: 20,
            ..SwarmConfig::default()
        };
        let a = run(&config, &box2(-5.0, 5.0), &sphere).unwrap();
        let b = run(&config, &box2(-5.0, 5.0), &sphere).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pbest_is_running_max_of_own_evaluations() {
        struct Logging {
            log: RefCell<Vec<f64>>,
        }
        impl Objective for Logging {
            fn evaluate(&self, position: &[f64]) -> Result<f64, EvalError> {
                let fitness = sphere(position);
                self.log.borrow_mut().push(fitness);
                Ok(fitness)
            }
        }
        let objective = Logging {
            log: RefCell::new(Vec::new()),
        };
        let config = SwarmConfig {
            population_size: 4,
            max_iterations: 6,
            early_stop: EarlyStop::Disabled,
            seed: 5,
            ..SwarmConfig::default()
        };
        let mut swarm = Swarm::new(config.clone(), box2(-5.0, 5.0), &objective).unwrap();
        swarm.run().unwrap();
        let log = objective.log.borrow();
        // Evaluations arrive in particle order, one chunk per iteration.
        for (i, particle) in swarm.state().particles.iter().enumerate() {
            let own_max = log
                .iter()
                .skip(i)
                .step_by(config.population_size)
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(particle.pbest_fitness, own_max);
        }
    }

    #[test]
    fn evaluation_error_names_the_position() {
        struct Failing;
        impl Objective for Failing {
            fn evaluate(&self, _: &[f64]) -> Result<f64, EvalError> {
                Err(EvalError::new("deliberate"))
            }
        }
        let Err(err) = Swarm::new(SwarmConfig::default(), box2(-5.0, 5.0), &Failing) else {
            panic!("expected construction to fail");
        };
        match err {
            PsoError::Evaluation { position, source } => {
                assert_eq!(position.len(), 2);
                assert_eq!(source.message, "deliberate");
            }
            other => panic!("expected Evaluation error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_fitness_is_rejected() {
        let nan = |_: &[f64]| f64::NAN;
        let Err(err) = Swarm::new(SwarmConfig::default(), box2(-5.0, 5.0), &nan) else {
            panic!("expected construction to fail");
        };
        assert!(matches!(err, PsoError::NonFiniteFitness { .. }));
    }

    #[test]
    fn history_tracks_gbest_monotonically() {
        let config = SwarmConfig {
            seed: 17,
            max_iterations: 15,
            early_stop: EarlyStop::Disabled,
            ..SwarmConfig::default()
        };
        let result = run(&config, &box2(-5.0, 5.0), &sphere).unwrap();
        for pair in result.history.windows(2) {
            assert!(pair[1].gbest_fitness >= pair[0].gbest_fitness);
            assert!(pair[1].unique_evaluations >= pair[0].unique_evaluations);
        }
        assert_eq!(result.history.len(), result.iterations_run + 1);
    }
}
