//! The `swarmtune` command line tool: `synth`, `prepare`, `tune`, `compare`.
//!
//! Every subcommand is driven by one experiment config and seed, writes all
//! artifacts under the output directory with documented names, and is
//! idempotent: identical config and seed reproduce identical bytes. The
//! `SWARMTUNE_LOG` environment variable sets the log level.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::{validate_horizon, DatasetSource, ExperimentConfig};
use crate::data::{self, synth, ConnectionRecord, DataError, SupervisedSet};
use crate::fitness::FitnessCache;
use crate::pipeline;
use crate::report::{
    self, ComparisonLine, DayTuneResult, EvalSection, PlotLine, TuneOutput, TuneRun,
};
use crate::search::{compare, grid_search, pso_search, SearchMethod};

/// Top-level argument parser.
#[derive(Debug, Parser)]
#[command(
    name = "swarmtune",
    version,
    about = "Tune network topologies for occupancy prediction with swarm and grid search"
)]
pub struct Cli {
    /// Subcommand to run.
    #[command(subcommand)]
    pub command: Command,
}

/// Flags every subcommand accepts.
#[derive(Debug, Args)]
pub struct Common {
    /// Experiment config JSON; built-in defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override the config's experiment seed.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory; overrides the config's `out_dir`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic connection log declared in the config.
    Synth {
        /// Shared flags.
        #[command(flatten)]
        common: Common,
    },
    /// Emit per-day supervised CSVs for each horizon.
    Prepare {
        /// Shared flags.
        #[command(flatten)]
        common: Common,
        /// Single horizon in minutes; defaults to every configured horizon.
        #[arg(long, value_name = "15|30|60")]
        horizon: Option<u32>,
    },
    /// Search the topology space with one method and write results.
    Tune {
        /// Shared flags.
        #[command(flatten)]
        common: Common,
        /// Search method.
        #[arg(long, value_parser = parse_method)]
        method: SearchMethod,
        /// Single horizon in minutes; defaults to every configured horizon.
        #[arg(long, value_name = "15|30|60")]
        horizon: Option<u32>,
        /// Parallel fitness evaluations; defaults to the number of cores.
        #[arg(long, value_name = "K")]
        workers: Option<usize>,
        /// Capture wall-clock timings (makes outputs nondeterministic).
        #[arg(long)]
        timings: bool,
    },
    /// Join tune outputs into comparison and plot tables.
    Compare {
        /// Shared flags.
        #[command(flatten)]
        common: Common,
        /// Single horizon in minutes; defaults to every configured horizon.
        #[arg(long, value_name = "15|30|60")]
        horizon: Option<u32>,
    },
}

fn parse_method(s: &str) -> Result<SearchMethod, String> {
    s.parse()
}

/// Entry point used by `main`; returns the process exit code.
pub fn main_entry() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SWARMTUNE_LOG", "info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    }
}

/// Dispatches one parsed invocation.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { common } => {
            let (config, out) = resolve(&common)?;
            cmd_synth(&config, &out)?;
        }
        Command::Prepare { common, horizon } => {
            let (config, out) = resolve(&common)?;
            let horizons = pick_horizons(&config, horizon)?;
            cmd_prepare(&config, &horizons, &out)?;
        }
        Command::Tune {
            common,
            method,
            horizon,
            workers,
            timings,
        } => {
            let (mut config, out) = resolve(&common)?;
            if timings {
                config.record_timings = true;
            }
            let horizons = pick_horizons(&config, horizon)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.unwrap_or(0))
                .build()
                .context("building the worker pool")?;
            pool.install(|| cmd_tune(&config, method, &horizons, &out))?;
        }
        Command::Compare { common, horizon } => {
            let (config, out) = resolve(&common)?;
            let horizons = pick_horizons(&config, horizon)?;
            cmd_compare(&horizons, &out)?;
        }
    }
    Ok(())
}

fn resolve(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| config.out_dir.clone());
    Ok((config, out))
}

fn pick_horizons(config: &ExperimentConfig, flag: Option<u32>) -> Result<Vec<u32>> {
    match flag {
        Some(h) => {
            validate_horizon(h, config.bucket_minutes)?;
            Ok(vec![h])
        }
        None => Ok(config.horizons.clone()),
    }
}

fn load_records(config: &ExperimentConfig) -> Result<Vec<ConnectionRecord>> {
    match &config.dataset {
        DatasetSource::Synth(spec) => {
            let records = synth::generate(&spec.to_config(config.seed))?;
            log::info!("generated {} synthetic records", records.len());
            Ok(records)
        }
        DatasetSource::Csv { path } => {
            let report = data::ingest_csv(path)?;
            log::info!(
                "ingested {} records from {} ({} skipped)",
                report.records.len(),
                path.display(),
                report.skipped.len()
            );
            for skip in report.skipped.iter().take(5) {
                log::debug!("line {}: {}", skip.line, skip.reason);
            }
            Ok(report.records)
        }
    }
}

/// Writes the synthetic dataset declared in the config to `dataset.csv`.
pub fn cmd_synth(config: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let DatasetSource::Synth(spec) = &config.dataset else {
        bail!("config dataset is a CSV path; `synth` needs a synthetic source");
    };
    let records = synth::generate(&spec.to_config(config.seed))?;
    let path = report::dataset_path(out);
    data::write_records_csv(&path, &records)?;
    log::info!("wrote {} records to {}", records.len(), path.display());
    Ok(path)
}

/// Writes one supervised CSV per configured day per horizon. A day with no
/// usable rows still gets its file, holding only the header.
pub fn cmd_prepare(
    config: &ExperimentConfig,
    horizons: &[u32],
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let records = load_records(config)?;
    let mut written = Vec::new();
    for &horizon in horizons {
        for &day in &config.days {
            let set =
                match pipeline::supervised_for_day(&records, day, config.bucket_minutes, horizon) {
                    Ok(set) => set,
                    Err(DataError::NoSupervisedRows) => SupervisedSet {
                        bucket_minutes: config.bucket_minutes,
                        horizon_minutes: horizon,
                        rows: Vec::new(),
                    },
                    Err(err) => return Err(err.into()),
                };
            let path = report::supervised_path(out, day, horizon);
            data::write_supervised_csv(&path, &set)?;
            log::info!("wrote {} rows to {}", set.rows.len(), path.display());
            written.push(path);
        }
    }
    Ok(written)
}

/// Runs one search method over every configured day model and horizon,
/// writing a result JSON and an evaluation-log CSV per horizon.
pub fn cmd_tune(
    config: &ExperimentConfig,
    method: SearchMethod,
    horizons: &[u32],
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let records = load_records(config)?;
    let mut written = Vec::new();
    for &horizon in horizons {
        let mut day_results = Vec::new();
        let mut sections = Vec::new();
        for &day in &config.days {
            let splits = pipeline::day_splits(&records, day, horizon, config)?;
            let task = pipeline::prepare_task(&splits, config)?;
            log::info!(
                "{day} h{horizon}: {} train rows, {} test rows",
                splits.train.rows.len(),
                splits.test.rows.len()
            );

            let mut runs = Vec::new();
            match method {
                SearchMethod::Grid => {
                    let cache = FitnessCache::new(task, config.record_timings);
                    let result = grid_search(&config.grid, &config.space, &cache)?;
                    log::info!(
                        "{day} h{horizon} grid: best {} at {:.4} ({} configurations)",
                        result.best_topology,
                        result.best_accuracy,
                        result.unique_configurations
                    );
                    sections.push(EvalSection {
                        day,
                        swarm_population: None,
                        rows: cache.log(),
                    });
                    runs.push(TuneRun {
                        swarm_population: None,
                        result,
                    });
                }
                SearchMethod::Pso => {
                    for (i, swarm) in config.swarms.iter().enumerate() {
                        let cache = FitnessCache::new(task.clone(), config.record_timings);
                        let swarm_config = swarm.to_config(config.swarm_run_seed(day, horizon, i));
                        let result = pso_search(&swarm_config, &config.space, &cache)?;
                        log::info!(
                            "{day} h{horizon} pso-{}: best {} at {:.4} ({} unique)",
                            swarm.population_size,
                            result.best_topology,
                            result.best_accuracy,
                            result.unique_configurations
                        );
                        sections.push(EvalSection {
                            day,
                            swarm_population: Some(swarm.population_size),
                            rows: cache.log(),
                        });
                        runs.push(TuneRun {
                            swarm_population: Some(swarm.population_size),
                            result,
                        });
                    }
                }
            }
            day_results.push(DayTuneResult {
                day,
                train_rows: splits.train.rows.len(),
                test_rows: splits.test.rows.len(),
                runs,
            });
        }

        let output = TuneOutput::new(method, horizon, config.seed, config.window_n, day_results);
        let json_path = report::tune_json_path(out, method, horizon);
        report::write_json(&json_path, &output)
            .with_context(|| format!("writing {}", json_path.display()))?;
        let evals_path = report::tune_evals_path(out, method, horizon);
        report::write_eval_log_csv(&evals_path, &sections)
            .with_context(|| format!("writing {}", evals_path.display()))?;
        written.push(json_path);
        written.push(evals_path);
    }
    Ok(written)
}

/// Joins the two tune files of each horizon into a comparison table and
/// tidy plot data (accuracy per model, configurations per model).
pub fn cmd_compare(horizons: &[u32], out: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for &horizon in horizons {
        let pso_path = report::tune_json_path(out, SearchMethod::Pso, horizon);
        let grid_path = report::tune_json_path(out, SearchMethod::Grid, horizon);
        let pso = TuneOutput::load(&pso_path).with_context(|| {
            format!(
                "missing or unreadable {}; run `tune --method pso` first",
                pso_path.display()
            )
        })?;
        let grid = TuneOutput::load(&grid_path).with_context(|| {
            format!(
                "missing or unreadable {}; run `tune --method grid` first",
                grid_path.display()
            )
        })?;

        let mut accuracy_plot = Vec::new();
        let mut configurations_plot = Vec::new();
        for day_result in &grid.days {
            let run = day_result.runs.first().with_context(|| {
                format!("{} has no runs for {}", grid_path.display(), day_result.day)
            })?;
            accuracy_plot.push(PlotLine {
                model: "grid".to_string(),
                day: day_result.day,
                value: run.result.best_accuracy,
            });
            configurations_plot.push(PlotLine {
                model: "grid".to_string(),
                day: day_result.day,
                value: run.result.unique_configurations as f64,
            });
        }

        let runs_per_day = pso.days.first().map_or(0, |d| d.runs.len());
        let mut lines = Vec::new();
        for run_index in 0..runs_per_day {
            for day_result in &pso.days {
                let run = day_result.runs.get(run_index).with_context(|| {
                    format!(
                        "{} is missing run {run_index} for {}",
                        pso_path.display(),
                        day_result.day
                    )
                })?;
                let model = run
                    .swarm_population
                    .map_or("pso".to_string(), |p| format!("pso-{p}"));
                accuracy_plot.push(PlotLine {
                    model: model.clone(),
                    day: day_result.day,
                    value: run.result.best_accuracy,
                });
                configurations_plot.push(PlotLine {
                    model,
                    day: day_result.day,
                    value: run.result.unique_configurations as f64,
                });

                let grid_day = grid
                    .days
                    .iter()
                    .find(|d| d.day == day_result.day)
                    .with_context(|| {
                        format!(
                            "{} has no results for {}",
                            grid_path.display(),
                            day_result.day
                        )
                    })?;
                let grid_run = grid_day
                    .runs
                    .first()
                    .with_context(|| format!("{} has no runs", grid_path.display()))?;
                lines.push(ComparisonLine {
                    day: day_result.day,
                    swarm_population: run.swarm_population,
                    row: compare(run.result.clone(), grid_run.result.clone()),
                });
            }
        }

        let comparison_path = report::comparison_path(out, horizon);
        report::write_comparison_csv(&comparison_path, &lines)?;
        let accuracy_path = report::plot_accuracy_path(out, horizon);
        report::write_plot_csv(&accuracy_path, "best_accuracy", &accuracy_plot)?;
        let configurations_path = report::plot_configurations_path(out, horizon);
        report::write_plot_csv(
            &configurations_path,
            "unique_configurations",
            &configurations_plot,
        )?;
        log::info!("wrote {} comparison line(s) for h{horizon}", lines.len());
        written.push(comparison_path);
        written.push(accuracy_path);
        written.push(configurations_path);
    }
    Ok(written)
}
