//! Output-file schemas, naming conventions, and atomic writing.
//!
//! Every artifact is written to a temporary file in the destination directory
//! and renamed into place, so a crash never leaves a partial file behind and
//! reruns with identical inputs produce byte-identical outputs.

use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::SCHEMA_VERSION;
use crate::data::DayOfWeek;
use crate::fitness::EvalLogRow;
use crate::search::{ComparisonRow, SearchMethod, SearchResult};

/// Writes `bytes` to `path` atomically, creating parent directories.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::Builder::new()
        .prefix(".swarmtune.")
        .tempfile_in(dir)?;
    tmp.as_file_mut().write_all(bytes)?;
    tmp.as_file_mut().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Serializes `value` as pretty JSON and writes it atomically.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Path of the synthetic (or copied) dataset CSV.
pub fn dataset_path(out: &Path) -> PathBuf {
    out.join("dataset.csv")
}

/// Path of one day's supervised CSV for a horizon.
pub fn supervised_path(out: &Path, day: DayOfWeek, horizon: u32) -> PathBuf {
    out.join(format!("supervised_{}_h{}.csv", day.name(), horizon))
}

/// Path of a tuning run's result JSON.
pub fn tune_json_path(out: &Path, method: SearchMethod, horizon: u32) -> PathBuf {
    out.join(format!("tune_{}_h{}.json", method.name(), horizon))
}

/// Path of a tuning run's evaluation-log CSV.
pub fn tune_evals_path(out: &Path, method: SearchMethod, horizon: u32) -> PathBuf {
    out.join(format!("tune_{}_h{}_evals.csv", method.name(), horizon))
}

/// Path of the per-horizon comparison table.
pub fn comparison_path(out: &Path, horizon: u32) -> PathBuf {
    out.join(format!("comparison_h{horizon}.csv"))
}

/// Path of the accuracy-per-model plot data for a horizon.
pub fn plot_accuracy_path(out: &Path, horizon: u32) -> PathBuf {
    out.join(format!("plot_accuracy_h{horizon}.csv"))
}

/// Path of the configurations-per-model plot data for a horizon.
pub fn plot_configurations_path(out: &Path, horizon: u32) -> PathBuf {
    out.join(format!("plot_configurations_h{horizon}.csv"))
}

/// Contents of one `tune_<method>_h<horizon>.json` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutput {
    /// Schema version of this file.
    pub schema_version: u32,
    /// Search method that produced the results.
    pub method: SearchMethod,
    /// Prediction horizon in minutes.
    pub horizon_minutes: u32,
    /// Experiment seed the run derived everything from.
    pub seed: u64,
    /// Tolerance window used by the accuracy metric.
    pub window_n: u32,
    /// One entry per day model, in config order.
    pub days: Vec<DayTuneResult>,
}

impl TuneOutput {
    /// Assembles a tune file body with the current schema version.
    pub fn new(
        method: SearchMethod,
        horizon_minutes: u32,
        seed: u64,
        window_n: u32,
        days: Vec<DayTuneResult>,
    ) -> Self {
        TuneOutput {
            schema_version: SCHEMA_VERSION,
            method,
            horizon_minutes,
            seed,
            window_n,
            days,
        }
    }

    /// Reads a tune file back, checking the schema version.
    pub fn load(path: &Path) -> io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let output: TuneOutput = serde_json::from_str(&text).map_err(io::Error::other)?;
        if output.schema_version != SCHEMA_VERSION {
            return Err(io::Error::other(format!(
                "{}: unsupported schema_version {}",
                path.display(),
                output.schema_version
            )));
        }
        Ok(output)
    }
}

/// Search outcomes for one day model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayTuneResult {
    /// Day of week the model covers.
    pub day: DayOfWeek,
    /// Training rows the task had.
    pub train_rows: usize,
    /// Test rows the task had.
    pub test_rows: usize,
    /// One run per swarm variant; a single unlabeled run for the grid.
    pub runs: Vec<TuneRun>,
}

/// One search run within a day model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRun {
    /// Swarm population for swarm runs; absent for the grid baseline.
    pub swarm_population: Option<usize>,
    /// The search outcome.
    pub result: SearchResult,
}

/// Evaluation-log rows of one run, labeled for the combined CSV.
#[derive(Debug, Clone)]
pub struct EvalSection {
    /// Day model the run belonged to.
    pub day: DayOfWeek,
    /// Swarm population, absent for the grid baseline.
    pub swarm_population: Option<usize>,
    /// Log rows in request order.
    pub rows: Vec<EvalLogRow>,
}

fn fmt_opt<T: ToString>(value: &Option<T>) -> String {
    value.as_ref().map_or_else(String::new, T::to_string)
}

/// Writes the combined evaluation log of one tune invocation.
pub fn write_eval_log_csv(path: &Path, sections: &[EvalSection]) -> io::Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "day",
            "swarm_population",
            "request",
            "hidden_layers",
            "neurons_per_layer",
            "accuracy",
            "diverged",
            "cache_hit",
            "train_seconds",
        ])
        .map_err(io::Error::other)?;
    for section in sections {
        for (i, row) in section.rows.iter().enumerate() {
            writer
                .write_record([
                    section.day.name().to_string(),
                    fmt_opt(&section.swarm_population),
                    (i + 1).to_string(),
                    row.topology.num_hidden_layers.to_string(),
                    row.topology.neurons_per_layer.to_string(),
                    row.accuracy.to_string(),
                    row.diverged.to_string(),
                    row.cache_hit.to_string(),
                    fmt_opt(&row.train_seconds),
                ])
                .map_err(io::Error::other)?;
        }
    }
    let bytes = writer.into_inner().expect("writing to Vec cannot fail");
    write_atomic(path, &bytes)
}

/// One comparison table line: a swarm variant against the grid on one day.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonLine {
    /// Day model compared.
    pub day: DayOfWeek,
    /// Swarm population of the swarm side.
    pub swarm_population: Option<usize>,
    /// The underlying comparison.
    pub row: ComparisonRow,
}

/// Writes the per-horizon comparison table.
pub fn write_comparison_csv(path: &Path, lines: &[ComparisonLine]) -> io::Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "day",
            "swarm_population",
            "pso_best_topology",
            "grid_best_topology",
            "pso_unique",
            "grid_unique",
            "pso_total",
            "grid_total",
            "pso_best_accuracy",
            "grid_best_accuracy",
            "accuracy_delta",
            "reduction",
        ])
        .map_err(io::Error::other)?;
    for line in lines {
        let r = &line.row;
        writer
            .write_record([
                line.day.name().to_string(),
                fmt_opt(&line.swarm_population),
                r.pso.best_topology.to_string(),
                r.grid.best_topology.to_string(),
                r.pso.unique_configurations.to_string(),
                r.grid.unique_configurations.to_string(),
                r.pso.total_evaluations.to_string(),
                r.grid.total_evaluations.to_string(),
                r.pso.best_accuracy.to_string(),
                r.grid.best_accuracy.to_string(),
                r.accuracy_delta.to_string(),
                r.reduction.to_string(),
            ])
            .map_err(io::Error::other)?;
    }
    let bytes = writer.into_inner().expect("writing to Vec cannot fail");
    write_atomic(path, &bytes)
}

/// One plot-data row: a day model's value under one search setup.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotLine {
    /// Model label: `grid` or `pso-<population>`.
    pub model: String,
    /// Day of week.
    pub day: DayOfWeek,
    /// Plotted value (accuracy or configuration count).
    pub value: f64,
}

/// Writes tidy plot data with one value column named `value_name`.
pub fn write_plot_csv(path: &Path, value_name: &str, lines: &[PlotLine]) -> io::Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["model", "day", value_name])
        .map_err(io::Error::other)?;
    for line in lines {
        writer
            .write_record([
                line.model.clone(),
                line.day.name().to_string(),
                line.value.to_string(),
            ])
            .map_err(io::Error::other)?;
    }
    let bytes = writer.into_inner().expect("writing to Vec cannot fail");
    write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_existing_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("out.txt");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        // No temp files left behind.
        let leftovers: Vec<_> = std::fs::read_dir(path.parent().unwrap())
            .unwrap()
            .filter_map(Result::ok)
            .filter(|e| e.file_name().to_string_lossy().starts_with(".swarmtune."))
            .collect();
        assert!(leftovers.is_empty());
    }
}
