//! Versioned experiment configuration.
//!
//! One JSON file describes a whole experiment: where the data comes from,
//! which day models and horizons to build, the topology space and grid, the
//! swarm variants to try, and the training recipe. A single experiment seed
//! drives every random choice; run- and model-level seeds are derived from
//! it, never stored.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use swarmtune_core::mlp::{Activation, MlpError, TrainConfig, WeightInit};
use swarmtune_core::pso::{AttractionReference, CoefficientMode, EarlyStop, SwarmConfig};
use swarmtune_core::seed;
use swarmtune_core::topology::TopologySpace;
use thiserror::Error;

use crate::data::synth::SynthConfig;
use crate::data::{DayOfWeek, SplitSpec};
use crate::search::{default_experiment_grid, GridSpec, SearchError};

/// Schema version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Horizons the experiment pipeline supports, in minutes.
pub const SUPPORTED_HORIZONS: [u32; 3] = [15, 30, 60];

/// Seed-derivation domain for the synthetic dataset.
const DOMAIN_SYNTH: u64 = 1;
/// Seed-derivation domain for swarm runs.
const DOMAIN_SEARCH: u64 = 2;

/// Errors loading or validating a configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// Could not read the file.
    #[error("{path}: {source}")]
    Io {
        /// File being read.
        path: PathBuf,
        /// Underlying failure.
        #[source]
        source: std::io::Error,
    },
    /// File is not valid JSON for this schema.
    #[error("{path}: {source}")]
    Parse {
        /// File being read.
        path: PathBuf,
        /// Underlying failure.
        #[source]
        source: serde_json::Error,
    },
    /// File declares a schema this build does not understand.
    #[error("unsupported schema_version {got}, this build reads {SCHEMA_VERSION}")]
    Version {
        /// Version found in the file.
        got: u32,
    },
    /// A field combination is invalid.
    #[error("invalid config: {0}")]
    Invalid(&'static str),
    /// The grid is malformed or outside the topology space.
    #[error(transparent)]
    Grid(#[from] SearchError),
    /// The training recipe is malformed.
    #[error(transparent)]
    Train(#[from] MlpError),
}

/// Where the connection log comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetSource {
    /// Read an existing log.
    Csv {
        /// Path of the CSV file.
        path: PathBuf,
    },
    /// Generate a log; the generator seed derives from the experiment seed.
    Synth(SynthSpec),
}

/// Synthetic dataset shape, minus the seed (always derived).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    /// Number of buildings.
    pub n_buildings: u32,
    /// Access points per building.
    pub aps_per_building: u32,
    /// Whole calendar weeks to generate.
    pub weeks: u32,
    /// Peak event rate per AP in records per minute.
    pub base_rate: f64,
    /// Size of each AP's device pool.
    pub macs_per_ap: u32,
    /// First day of the dataset.
    pub start: NaiveDate,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let d = SynthConfig::default();
        SynthSpec {
            n_buildings: d.n_buildings,
            aps_per_building: d.aps_per_building,
            weeks: d.weeks,
            base_rate: d.base_rate,
            macs_per_ap: d.macs_per_ap,
            start: d.start,
        }
    }
}

impl SynthSpec {
    /// Couples the shape with a derived generator seed.
    pub fn to_config(self, experiment_seed: u64) -> SynthConfig {
        SynthConfig {
            n_buildings: self.n_buildings,
            aps_per_building: self.aps_per_building,
            weeks: self.weeks,
            base_rate: self.base_rate,
            macs_per_ap: self.macs_per_ap,
            seed: seed::derive(experiment_seed, &[DOMAIN_SYNTH]),
            start: self.start,
        }
    }
}

/// One swarm variant to run. Runs derive their seeds, so none is stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwarmSettings {
    /// Number of particles.
    pub population_size: usize,
    /// Iteration cap.
    pub max_iterations: usize,
    /// Cognitive coefficient (used in `fixed` mode).
    pub c1: f64,
    /// Social coefficient (used in `fixed` mode).
    pub c2: f64,
    /// Inertia weight.
    pub w: f64,
    /// Velocity limit as a fraction of each dimension's range.
    pub velocity_clamp_fraction: f64,
    /// Coefficient selection rule.
    pub coefficient_mode: CoefficientMode,
    /// Stagnation rule.
    pub early_stop: EarlyStop,
    /// Velocity update form.
    pub attraction_reference: AttractionReference,
}

impl Default for SwarmSettings {
    fn default() -> Self {
        let d = SwarmConfig::default();
        SwarmSettings {
            population_size: d.population_size,
            max_iterations: d.max_iterations,
            c1: d.c1,
            c2: d.c2,
            w: d.w,
            velocity_clamp_fraction: d.velocity_clamp_fraction,
            coefficient_mode: d.coefficient_mode,
            early_stop: d.early_stop,
            attraction_reference: d.attraction_reference,
        }
    }
}

impl SwarmSettings {
    /// Couples the settings with a run seed.
    pub fn to_config(&self, run_seed: u64) -> SwarmConfig {
        SwarmConfig {
            population_size: self.population_size,
            c1: self.c1,
            c2: self.c2,
            w: self.w,
            max_iterations: self.max_iterations,
            velocity_clamp_fraction: self.velocity_clamp_fraction,
            seed: run_seed,
            coefficient_mode: self.coefficient_mode,
            early_stop: self.early_stop,
            attraction_reference: self.attraction_reference,
        }
    }
}

/// Training recipe shared by every topology evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSettings {
    /// Gradient step size.
    pub learning_rate: f64,
    /// Passes over the training split.
    pub epochs: usize,
    /// Rows per gradient step.
    pub batch_size: usize,
    /// Weight initialization scheme.
    pub init: WeightInit,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSettings {
            learning_rate: d.learning_rate,
            epochs: d.epochs,
            batch_size: d.batch_size,
            init: d.init,
        }
    }
}

impl TrainSettings {
    /// Expands into the trainer's config; the shuffle seed is derived per
    /// topology later, so it starts at zero here.
    pub fn to_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: 0,
            init: self.init,
        }
    }
}

/// Everything one experiment needs, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Schema version, must equal [`SCHEMA_VERSION`].
    pub schema_version: u32,
    /// Experiment seed; every derived seed flows from it.
    pub seed: u64,
    /// Where the connection log comes from.
    pub dataset: DatasetSource,
    /// Day models to build.
    pub days: Vec<DayOfWeek>,
    /// Horizons (minutes) to run when no flag narrows them down.
    pub horizons: Vec<u32>,
    /// Occupancy bucket width in minutes.
    pub bucket_minutes: u32,
    /// Tolerance window (occupant counts) for the accuracy metric.
    pub window_n: u32,
    /// Topology search space.
    pub space: TopologySpace,
    /// Grid baseline values.
    pub grid: GridSpec,
    /// Swarm variants, e.g. one per population size.
    pub swarms: Vec<SwarmSettings>,
    /// Training recipe.
    pub train: TrainSettings,
    /// Hidden-layer activation.
    pub activation: Activation,
    /// Week-based split.
    pub split: SplitSpec,
    /// Capture wall-clock timings (makes outputs nondeterministic).
    pub record_timings: bool,
    /// Output directory; the `--out` flag overrides it.
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            dataset: DatasetSource::Synth(SynthSpec::default()),
            days: DayOfWeek::ALL.to_vec(),
            horizons: SUPPORTED_HORIZONS.to_vec(),
            bucket_minutes: 15,
            window_n: 20,
            space: TopologySpace::default(),
            grid: default_experiment_grid(),
            swarms: vec![
                SwarmSettings {
                    population_size: 10,
                    ..SwarmSettings::default()
                },
                SwarmSettings {
                    population_size: 25,
                    ..SwarmSettings::default()
                },
                SwarmSettings {
                    population_size: 50,
                    ..SwarmSettings::default()
                },
            ],
            train: TrainSettings::default(),
            activation: Activation::default(),
            split: SplitSpec::default(),
            record_timings: false,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
                path: path.to_path_buf(),
                source,
            })?;
        config.validate()?;
        Ok(config)
    }

    /// Checks cross-field consistency.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Version {
                got: self.schema_version,
            });
        }
        if self.days.is_empty() {
            return Err(ConfigError::Invalid("days must not be empty"));
        }
        if self.horizons.is_empty() {
            return Err(ConfigError::Invalid("horizons must not be empty"));
        }
        for h in &self.horizons {
            validate_horizon(*h, self.bucket_minutes)?;
        }
        if self.bucket_minutes == 0 || 60 % self.bucket_minutes != 0 {
            return Err(ConfigError::Invalid("bucket_minutes must divide 60"));
        }
        if self.swarms.is_empty() {
            return Err(ConfigError::Invalid("swarms must not be empty"));
        }
        for s in &self.swarms {
            if s.population_size == 0 || s.max_iterations == 0 {
                return Err(ConfigError::Invalid(
                    "swarm population and iterations must be positive",
                ));
            }
        }
        self.grid.validate(&self.space)?;
        self.train.to_config().validate()?;
        Ok(())
    }

    /// Seed for one swarm run, separated by day, horizon, and swarm index.
    pub fn swarm_run_seed(&self, day: DayOfWeek, horizon: u32, swarm_index: usize) -> u64 {
        seed::derive(
            self.seed,
            &[
                DOMAIN_SEARCH,
                day.index() as u64,
                u64::from(horizon),
                swarm_index as u64,
            ],
        )
    }
}

/// Checks a horizon against the supported set and the bucket width.
pub fn validate_horizon(horizon: u32, bucket_minutes: u32) -> Result<(), ConfigError> {
    if !SUPPORTED_HORIZONS.contains(&horizon) {
        return Err(ConfigError::Invalid("horizon must be 15, 30, or 60"));
    }
    if bucket_minutes == 0 || !horizon.is_multiple_of(bucket_minutes) {
        return Err(ConfigError::Invalid(
            "horizon must be a multiple of bucket_minutes",
        ));
    }
    Ok(())
}
