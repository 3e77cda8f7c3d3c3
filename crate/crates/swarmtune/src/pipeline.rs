//! From raw connection records to per-day prepared tasks.

use swarmtune_core::fitness::ToleranceWindow;
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::data::{
    bucket_counts, build_supervised, split_train_test, ConnectionRecord, DataError, DayOfWeek,
    SupervisedSet,
};
use crate::fitness::{PreparedTask, TaskError};

/// Errors assembling a day task.
#[derive(Debug, Error)]
pub enum PipelineError {
    /// Failure in the data pipeline.
    #[error("{day} model: {source}")]
    Data {
        /// Day model being built.
        day: DayOfWeek,
        /// Underlying failure.
        #[source]
        source: DataError,
    },
    /// Failure preparing the task for training.
    #[error("{day} model: {source}")]
    Task {
        /// Day model being built.
        day: DayOfWeek,
        /// Underlying failure.
        #[source]
        source: TaskError,
    },
}

/// One day model's train and test splits.
#[derive(Debug, Clone)]
pub struct DaySplits {
    /// Day of week the model covers.
    pub day: DayOfWeek,
    /// Training split (the leading weeks).
    pub train: SupervisedSet,
    /// Test split (the held-out week).
    pub test: SupervisedSet,
}

/// Builds one day's supervised set: filter to the day, bucket, featurize.
///
/// Fails with [`DataError::NoSupervisedRows`] when the day has no usable
/// data; callers that tolerate empty days (file emission) catch that case.
pub fn supervised_for_day(
    records: &[ConnectionRecord],
    day: DayOfWeek,
    bucket_minutes: u32,
    horizon_minutes: u32,
) -> Result<SupervisedSet, DataError> {
    let day_records: Vec<ConnectionRecord> = records
        .iter()
        .filter(|r| DayOfWeek::from_date(r.timestamp.date()) == day)
        .cloned()
        .collect();
    let series = bucket_counts(&day_records, bucket_minutes)?;
    build_supervised(&series, horizon_minutes)
}

/// Builds and splits one day model according to the experiment config.
pub fn day_splits(
    records: &[ConnectionRecord],
    day: DayOfWeek,
    horizon_minutes: u32,
    config: &ExperimentConfig,
) -> Result<DaySplits, PipelineError> {
    let wrap = |source| PipelineError::Data { day, source };
    let set =
        supervised_for_day(records, day, config.bucket_minutes, horizon_minutes).map_err(wrap)?;
    let (train, test) = split_train_test(&set, &config.split).map_err(wrap)?;
    if train.rows.is_empty() {
        return Err(PipelineError::Data {
            day,
            source: DataError::NoSupervisedRows,
        });
    }
    Ok(DaySplits { day, train, test })
}

/// Standardizes one day model's splits into a task ready for evaluation.
pub fn prepare_task(
    splits: &DaySplits,
    config: &ExperimentConfig,
) -> Result<PreparedTask, PipelineError> {
    PreparedTask::new(
        &splits.train,
        &splits.test,
        ToleranceWindow::new(config.window_n),
        config.train.to_config(),
        config.activation,
        config.seed,
    )
    .map_err(|source| PipelineError::Task {
        day: splits.day,
        source,
    })
}
