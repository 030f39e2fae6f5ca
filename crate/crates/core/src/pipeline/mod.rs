//! End-to-end orchestration: data, scenarios, backtests and reports, driven by a TOML config.

mod config;
mod manifest;
mod report;
mod svg;

use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

pub use config::{
    load_config, parse_config, DataConfig, DataSource, Overrides, RunConfig, SettingsConfig,
    SettingsPreset, REQUIRED_FIELDS,
};
pub use manifest::{
    sha256_hex, write_atomic, Artifact, OutputLock, RunManifest, SeedRecord, StageTiming,
    LOCK_FILE, MANIFEST_FILE,
};
pub use report::{
    evaluate, read_forecasts, Comparison, EvaluatedResult, SummaryRow, FORECASTS_FILE,
    METRICS_FILE, PER_HOUR_FILE, SIGNIFICANCE_FILE, SUMMARY_FILE,
};

use crate::data::{parse_profile_csv, synth_pv_unit_profile, write_profile_csv, HourlyTimeSeries};
use crate::eval::{backtest, BacktestResult};
use crate::forecast::EstimatorKind;
use crate::scenario::{
    replicate, run_scenario, synth_registry, Registry, ScenarioConfig, ScenarioPreset, ScenarioResult,
};
use crate::seed;
use manifest::io_err;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Data,
    Scenarios,
    Backtests,
    Reports,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Data => "data",
            Stage::Scenarios => "scenarios",
            Stage::Backtests => "backtests",
            Stage::Reports => "reports",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("output directory is in use (lock file {0} exists)")]
    Locked(PathBuf),
    #[error("report: {0}")]
    Report(String),
    #[error("[{stage}] {message}")]
    Stage { stage: Stage, message: String },
}

impl PipelineError {
    /// Process exit status: 1 for invalid input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            _ => 2,
        }
    }

    fn stage(stage: Stage) -> impl Fn(&dyn fmt::Display) -> PipelineError {
        move |e| PipelineError::Stage {
            stage,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Write the household registry and PV profiles as profile CSV.
    Generate,
    /// Replicated scenario simulation and summary statistics.
    Simulate,
    /// Backtest every estimator on every scenario and write the forecasts.
    Forecast,
    /// Metrics and significance tests from an existing forecasts file.
    Evaluate,
    /// All stages.
    Run,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Simulate => "simulate",
            Command::Forecast => "forecast",
            Command::Evaluate => "evaluate",
            Command::Run => "run",
        }
    }
}

const STREAM_SCENARIO: u64 = 0x5ce0;
const STREAM_ESTIMATOR: u64 = 0xe570;

/// Base seed of a scenario's replications; depends on the name, not the list position.
pub fn scenario_seed(master: u64, name: &str) -> u64 {
    let stream = name.bytes().fold(STREAM_SCENARIO, |acc, b| seed::mix(acc ^ b as u64));
    seed::derive(master, stream)
}

pub fn estimator_seed(master: u64, kind: EstimatorKind) -> u64 {
    let index = EstimatorKind::ALL.iter().position(|k| *k == kind).expect("listed kind");
    seed::derive(master, STREAM_ESTIMATOR + index as u64)
}

/// Whether `kind` is scheduled for `scenario`. Standard load profiles exist only for the
/// metered current state.
pub fn is_scheduled(kind: EstimatorKind, scenario: &str) -> bool {
    kind != EstimatorKind::Slp
        || ScenarioPreset::parse(scenario).is_some_and(ScenarioPreset::has_standard_profile)
}

pub fn build_registry(config: &RunConfig) -> Result<Registry, PipelineError> {
    let fail = PipelineError::stage(Stage::Data);
    match config.data.source {
        DataSource::Synthetic => synth_registry(&config.fleet()).map_err(|e| fail(&e)),
        DataSource::Csv => {
            let path = config
                .data
                .path
                .as_ref()
                .ok_or_else(|| PipelineError::Config("`data.path` is required for csv data".into()))?;
            let file = File::open(path).map_err(io_err(path))?;
            let mut profiles = parse_profile_csv(file).map_err(|e| fail(&e))?;
            if let Some(n) = config.households {
                profiles.truncate(n);
            }
            let first = profiles
                .first()
                .ok_or_else(|| fail(&"profile CSV has no households"))?
                .1
                .clone();
            if first.len() % 24 != 0 || !crate::data::is_midnight(&first.start()) {
                return Err(fail(&"profile CSV must cover whole days starting at midnight"));
            }
            let days = first.len() / 24;
            if config.split.total_days() > days {
                return Err(PipelineError::Config(format!(
                    "split needs {} days but the data has {days}",
                    config.split.total_days()
                )));
            }
            let mut fleet = config.fleet();
            fleet.start = first.start();
            let pv = (0..fleet.pv_profile_pool.max(1))
                .map(|k| synth_pv_unit_profile(&fleet.pv_params(k), days).map(Arc::new))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| fail(&e))?;
            Registry::from_profiles(profiles, pv).map_err(|e| fail(&e))
        }
    }
}

/// Simulated scenario: all replications (or only the first) and the run forecasts use.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub config: ScenarioConfig,
    pub base_seed: u64,
    pub runs: Vec<ScenarioResult>,
}

impl ScenarioOutcome {
    pub fn primary(&self) -> &ScenarioResult {
        &self.runs[0]
    }
}

pub fn simulate(
    config: &RunConfig,
    registry: &Registry,
    replications: usize,
) -> Result<Vec<ScenarioOutcome>, PipelineError> {
    let fail = PipelineError::stage(Stage::Scenarios);
    let mut out = Vec::new();
    for sc in config.scenario_configs(registry.len())? {
        let base_seed = scenario_seed(config.seed, &sc.name);
        log::info!("scenario {} ({} replications)", sc.name, replications);
        let runs = if replications == 1 {
            vec![run_scenario(registry, &sc, base_seed).map_err(|e| fail(&format!("{}: {e}", sc.name)))?]
        } else {
            replicate(registry, &sc, replications, base_seed)
                .map_err(|e| fail(&format!("{}: {e}", sc.name)))?
                .runs
        };
        out.push(ScenarioOutcome {
            config: sc,
            base_seed,
            runs,
        });
    }
    Ok(out)
}

/// Backtests every scheduled estimator on each scenario's residential demand.
pub fn run_backtests(
    config: &RunConfig,
    scenarios: &[ScenarioOutcome],
) -> Result<Vec<BacktestResult>, PipelineError> {
    let fail = PipelineError::stage(Stage::Backtests);
    let settings = config.settings.resolve();
    let kinds = config.estimator_kinds()?;
    let mut results = Vec::new();
    for outcome in scenarios {
        let name = &outcome.config.name;
        for &kind in &kinds {
            if !is_scheduled(kind, name) {
                continue;
            }
            let started = Instant::now();
            let mut forecaster = settings.build(kind, estimator_seed(config.seed, kind));
            let result = backtest(
                forecaster.as_mut(),
                &outcome.primary().residential_demand,
                &config.split,
                name,
            )
            .map_err(|e| fail(&format!("{name} / {}: {e}", kind.id())))?;
            log::info!("backtest {name} / {} done in {:.1?}", kind.id(), started.elapsed());
            results.push(result);
        }
    }
    Ok(results)
}

fn file_name_part(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Collects artifacts, timings and seeds while a command runs.
struct Recorder {
    dir: PathBuf,
    files: Vec<String>,
    timings: Vec<StageTiming>,
    clock: Instant,
}

impl Recorder {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            timings: Vec::new(),
            clock: Instant::now(),
        }
    }

    fn path(&mut self, name: String) -> PathBuf {
        let p = self.dir.join(&name);
        self.files.push(name);
        p
    }

    fn lap(&mut self, stage: Stage) {
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            millis: self.clock.elapsed().as_millis(),
        });
        self.clock = Instant::now();
    }
}

fn write_evaluation(
    config: &RunConfig,
    results: &[BacktestResult],
    rec: &mut Recorder,
) -> Result<(), PipelineError> {
    let (evaluated, comparisons) = evaluate(results)?;
    report::write_metrics(&rec.path(METRICS_FILE.into()), &evaluated)?;
    report::write_per_hour(&rec.path(PER_HOUR_FILE.into()), &evaluated)?;
    report::write_significance(&rec.path(SIGNIFICANCE_FILE.into()), &comparisons)?;
    if config.plots {
        let mut scenarios: Vec<&str> = Vec::new();
        for e in &evaluated {
            if !scenarios.contains(&e.scenario.as_str()) {
                scenarios.push(&e.scenario);
            }
        }
        for sc in scenarios {
            if let Some(svg) = svg::per_hour_chart(sc, &evaluated) {
                let path = rec.path(format!("per_hour_rmse_{}.svg", file_name_part(sc)));
                std::fs::write(&path, svg).map_err(io_err(&path))?;
            }
        }
    }
    Ok(())
}

fn write_scenario_outputs(
    outcomes: &[ScenarioOutcome],
    rec: &mut Recorder,
) -> Result<(), PipelineError> {
    let mut rows = Vec::new();
    for o in outcomes {
        for (k, run) in o.runs.iter().enumerate() {
            rows.push(SummaryRow {
                scenario: o.config.name.clone(),
                replication: k,
                median_kw: run.summary.median,
                std_kw: run.summary.std_dev,
                neg_hour_frac: run.summary.negative_hour_fraction,
            });
        }
        let p = o.primary();
        let path = rec.path(format!("series_{}.csv", file_name_part(&o.config.name)));
        report::write_series(&path, &p.grid_load, &p.residential_demand)?;
    }
    report::write_summary(&rec.path(SUMMARY_FILE.into()), &rows)
}

fn write_registry(registry: &Registry, rec: &mut Recorder) -> Result<(), PipelineError> {
    let fail = PipelineError::stage(Stage::Reports);
    let path = rec.path("households.csv".into());
    let file = File::create(&path).map_err(io_err(&path))?;
    let rows: Vec<(&str, &HourlyTimeSeries)> = registry
        .labels
        .iter()
        .zip(&registry.buildings)
        .map(|(l, b)| (l.as_str(), b.demand.as_ref()))
        .collect();
    write_profile_csv(std::io::BufWriter::new(file), &rows).map_err(|e| fail(&e))?;
    let path = rec.path("pv_profiles.csv".into());
    let file = File::create(&path).map_err(io_err(&path))?;
    let labels: Vec<String> = (0..registry.pv_profiles.len()).map(|k| format!("pv{k:03}")).collect();
    let rows: Vec<(&str, &HourlyTimeSeries)> = labels
        .iter()
        .zip(&registry.pv_profiles)
        .map(|(l, p)| (l.as_str(), p.as_ref()))
        .collect();
    write_profile_csv(std::io::BufWriter::new(file), &rows).map_err(|e| fail(&e))
}

/// Runs `command` and writes its artifacts plus `manifest.json` into `config.output_dir`.
pub fn execute(command: Command, config: &RunConfig) -> Result<RunManifest, PipelineError> {
    config.validate()?;
    let dir = config.output_dir.clone();
    let _lock = OutputLock::acquire(&dir)?;
    let mut rec = Recorder::new(&dir);
    let mut seeds = vec![SeedRecord {
        name: "master".into(),
        seed: config.seed,
    }];

    if command == Command::Evaluate {
        let results = read_forecasts(&dir.join(FORECASTS_FILE))?;
        rec.lap(Stage::Data);
        write_evaluation(config, &results, &mut rec)?;
        rec.lap(Stage::Reports);
    } else {
        let registry = build_registry(config)?;
        rec.lap(Stage::Data);
        if command == Command::Generate {
            write_registry(&registry, &mut rec)?;
            rec.lap(Stage::Reports);
        } else {
            let replications = match command {
                Command::Forecast => 1,
                _ => config.replications,
            };
            let outcomes = simulate(config, &registry, replications)?;
            rec.lap(Stage::Scenarios);
            for o in &outcomes {
                seeds.push(SeedRecord {
                    name: format!("scenario:{}", o.config.name),
                    seed: o.base_seed,
                });
            }
            if command != Command::Forecast {
                write_scenario_outputs(&outcomes, &mut rec)?;
            }
            if command != Command::Simulate {
                for kind in config.estimator_kinds()? {
                    seeds.push(SeedRecord {
                        name: format!("estimator:{}", kind.id()),
                        seed: estimator_seed(config.seed, kind),
                    });
                }
                let results = run_backtests(config, &outcomes)?;
                rec.lap(Stage::Backtests);
                let start = registry.start();
                report::write_forecasts(&rec.path(FORECASTS_FILE.into()), &results, start)?;
                if command == Command::Run {
                    write_evaluation(config, &results, &mut rec)?;
                }
            }
            rec.lap(Stage::Reports);
        }
    }

    let config_json = serde_json::to_vec(config).map_err(|e| PipelineError::Report(e.to_string()))?;
    let mut files = rec.files.clone();
    files.sort();
    let artifacts = files
        .iter()
        .map(|f| manifest::artifact(&dir, f))
        .collect::<Result<Vec<_>, _>>()?;
    let manifest = RunManifest {
        command: command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_hex(&config_json),
        seeds,
        timings: rec.timings,
        artifacts,
        finished_at: chrono::Utc::now().to_rfc3339(),
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| PipelineError::Report(e.to_string()))?;
    write_atomic(&dir.join(MANIFEST_FILE), &json)?;
    Ok(manifest)
}

/// All stages in order: data, scenarios, backtests, reports.
pub fn run_pipeline(config: &RunConfig) -> Result<RunManifest, PipelineError> {
    execute(Command::Run, config)
}
