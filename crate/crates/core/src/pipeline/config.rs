use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::data::SeasonCalendar;
use crate::eval::Split;
use crate::forecast::{
    ArimaOrder, CnnLstmSettings, EstimatorKind, EstimatorSettings, LstmSettings,
};
use crate::scenario::{FleetSpec, ScenarioConfig, ScenarioPreset};

/// Top-level keys every config file must set.
pub const REQUIRED_FIELDS: [&str; 2] = ["scenarios", "estimators"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    #[default]
    Synthetic,
    Csv,
}

/// Where household demand comes from. CSV households are read as demand-only buildings; PV
/// profiles are always synthesised from `fleet.weather`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    /// Profile CSV, relative paths resolve against the config file's directory.
    pub path: Option<PathBuf>,
    pub fleet: FleetSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SettingsPreset {
    #[default]
    Desk,
    Full,
}

/// Estimator hyperparameters: a preset, with whole sections optionally replaced.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SettingsConfig {
    pub preset: SettingsPreset,
    pub arima: Option<ArimaOrder>,
    pub lstm: Option<LstmSettings>,
    pub cnn_lstm: Option<CnnLstmSettings>,
    pub calendar: Option<SeasonCalendar>,
}

impl SettingsConfig {
    pub fn resolve(&self) -> EstimatorSettings {
        let mut s = match self.preset {
            SettingsPreset::Desk => EstimatorSettings::desk(),
            SettingsPreset::Full => EstimatorSettings::full(),
        };
        if let Some(a) = self.arima {
            s.arima = a;
        }
        if let Some(l) = self.lstm {
            s.lstm = l;
        }
        if let Some(c) = self.cnn_lstm {
            s.cnn_lstm = c;
        }
        if let Some(c) = &self.calendar {
            s.calendar = c.clone();
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Preset grid states to simulate (`CS`, `S1`, `S2`).
    pub scenarios: Vec<String>,
    /// Estimator ids, see [`EstimatorKind`].
    pub estimators: Vec<String>,
    /// Additional user-defined grid states.
    #[serde(default)]
    pub custom_scenarios: Vec<ScenarioConfig>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub settings: SettingsConfig,
    #[serde(default)]
    pub split: Split,
    /// Master seed. Overrides `data.fleet.seed`; every other seed is derived from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Restricts the registry to this many households (synthetic size or first CSV rows).
    #[serde(default)]
    pub households: Option<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Also render SVG charts from the CSV reports.
    #[serde(default)]
    pub plots: bool,
}

fn default_replications() -> usize {
    10
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line overrides applied after loading.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub households: Option<usize>,
    pub replications: Option<usize>,
}

impl RunConfig {
    /// Config with the given scenarios and estimators and defaults elsewhere.
    pub fn new(scenarios: &[&str], estimators: &[&str]) -> Self {
        Self {
            scenarios: scenarios.iter().map(|s| s.to_string()).collect(),
            estimators: estimators.iter().map(|s| s.to_string()).collect(),
            custom_scenarios: Vec::new(),
            data: DataConfig::default(),
            settings: SettingsConfig::default(),
            split: Split::default(),
            seed: 0,
            replications: default_replications(),
            households: None,
            output_dir: default_output_dir(),
            plots: false,
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(h) = o.households {
            self.households = Some(h);
        }
        if let Some(r) = o.replications {
            self.replications = r;
        }
    }

    pub fn estimator_kinds(&self) -> Result<Vec<EstimatorKind>, PipelineError> {
        let mut kinds = Vec::with_capacity(self.estimators.len());
        for name in &self.estimators {
            let kind = EstimatorKind::parse(name).map_err(|e| PipelineError::Config(e.to_string()))?;
            if kinds.contains(&kind) {
                return Err(PipelineError::Config(format!("estimator `{name}` listed twice")));
            }
            kinds.push(kind);
        }
        Ok(kinds)
    }

    /// Fleet spec with the master seed and household override applied.
    pub fn fleet(&self) -> FleetSpec {
        let mut fleet = self.data.fleet.clone();
        fleet.seed = self.seed;
        if let Some(h) = self.households {
            fleet.households = h;
        }
        fleet
    }

    /// Horizon of the data in days, when it is known without reading input files.
    fn known_horizon_days(&self) -> Option<usize> {
        match self.data.source {
            DataSource::Synthetic => Some(self.data.fleet.horizon_days),
            DataSource::Csv => None,
        }
    }

    /// Checks everything that can be checked before any compute.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.scenarios.is_empty() && self.custom_scenarios.is_empty() {
            return bad("`scenarios` must name at least one scenario".into());
        }
        if self.estimators.is_empty() {
            return bad("`estimators` must name at least one estimator".into());
        }
        let mut names = HashSet::new();
        for name in &self.scenarios {
            if ScenarioPreset::parse(name).is_none() {
                return bad(format!("unknown scenario preset `{name}`; valid: CS, S1, S2"));
            }
            if !names.insert(name.as_str()) {
                return bad(format!("scenario name `{name}` is not unique"));
            }
        }
        for c in &self.custom_scenarios {
            if !names.insert(c.name.as_str()) {
                return bad(format!("scenario name `{}` is not unique", c.name));
            }
        }
        self.estimator_kinds()?;
        self.split.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if let Some(days) = self.known_horizon_days() {
            if self.split.total_days() > days {
                return bad(format!(
                    "split needs {} days but the horizon has {days}",
                    self.split.total_days()
                ));
            }
        }
        if self.replications == 0 {
            return bad("`replications` must be >= 1".into());
        }
        if self.households == Some(0) {
            return bad("`households` must be >= 1".into());
        }
        match (self.data.source, &self.data.path) {
            (DataSource::Csv, None) => return bad("`data.path` is required for csv data".into()),
            (DataSource::Csv, Some(p)) if !p.exists() => {
                return bad(format!("data file {} does not exist", p.display()))
            }
            (DataSource::Synthetic, Some(_)) => {
                return bad("`data.path` is only used with `source = \"csv\"`".into())
            }
            _ => {}
        }
        self.settings
            .resolve()
            .arima
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    /// Preset and custom scenarios in run order. Presets scale with `households`.
    pub fn scenario_configs(&self, households: usize) -> Result<Vec<ScenarioConfig>, PipelineError> {
        let mut out = Vec::new();
        for name in &self.scenarios {
            let preset = ScenarioPreset::parse(name)
                .ok_or_else(|| PipelineError::Config(format!("unknown scenario `{name}`")))?;
            out.push(
                ScenarioConfig::preset(preset, households)
                    .map_err(|e| PipelineError::Config(format!("scenario {name}: {e}")))?,
            );
        }
        out.extend(self.custom_scenarios.iter().cloned());
        Ok(out)
    }
}

/// Parses and validates config text. Relative data paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig, PipelineError> {
    let value: toml::Value =
        toml::from_str(text).map_err(|e| PipelineError::Config(format!("invalid TOML: {e}")))?;
    let missing: Vec<&str> = REQUIRED_FIELDS
        .iter()
        .copied()
        .filter(|f| value.get(f).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(PipelineError::Config(format!(
            "missing required field(s): {}",
            missing.join(", ")
        )));
    }
    let mut config: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        PipelineError::Config(format!("at `{path}`: {}", e.into_inner()))
    })?;
    if let Some(p) = &config.data.path {
        if p.is_relative() {
            config.data.path = Some(base_dir.join(p));
        }
    }
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, PipelineError> {
        parse_config(text, Path::new("."))
    }

    #[test]
    fn empty_file_lists_required_fields() {
        let err = parse("").unwrap_err().to_string();
        assert!(err.contains("scenarios") && err.contains("estimators"), "{err}");
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse("scenarios = [\"CS\", \"S1\"]\nestimators = [\"day_before\"]").unwrap();
        assert_eq!(c.split, Split::default());
        assert_eq!(c.replications, 10);
        assert_eq!(c.settings.resolve(), EstimatorSettings::desk());
    }

    #[test]
    fn preset_s1_targets() {
        let c = parse("scenarios = [\"S1\"]\nestimators = [\"lstm\"]").unwrap();
        let s = &c.scenario_configs(3511).unwrap()[0];
        assert!((s.target.pv_power_target - 32_000.0).abs() < 1e-6);
        assert!((s.target.battery_power_target - 15_200.0).abs() < 1e-6);
    }

    #[test]
    fn unknown_estimator_names_choices() {
        let err = parse("scenarios = [\"CS\"]\nestimators = [\"prophet\"]").unwrap_err().to_string();
        assert!(err.contains("prophet") && err.contains("cnn_lstm") && err.contains("day_before"), "{err}");
    }

    #[test]
    fn zero_test_days_rejected() {
        let err = parse("scenarios = [\"CS\"]\nestimators = [\"slp\"]\n[split]\ntest_days = 0")
            .unwrap_err();
        assert!(matches!(err, PipelineError::Config(_)));
    }

    #[test]
    fn field_path_in_diagnostics() {
        let err = parse("scenarios = [\"CS\"]\nestimators = [\"slp\"]\n[split]\ntrain_days = \"x\"")
            .unwrap_err()
            .to_string();
        assert!(err.contains("split.train_days"), "{err}");
        let err = parse("scenarios = [\"CS\"]\nestimators = [\"slp\"]\n[data.fleet]\nhouse = 3")
            .unwrap_err()
            .to_string();
        assert!(err.contains("data.fleet"), "{err}");
    }

    #[test]
    fn duplicate_and_unknown_scenarios() {
        assert!(parse("scenarios = [\"CS\", \"CS\"]\nestimators = [\"slp\"]").is_err());
        assert!(parse("scenarios = [\"S3\"]\nestimators = [\"slp\"]").is_err());
    }

    #[test]
    fn split_longer_than_horizon() {
        let text = "scenarios = [\"CS\"]\nestimators = [\"slp\"]\n[data.fleet]\nhorizon_days = 100";
        assert!(parse(text).is_err());
    }

    #[test]
    fn full_preset_with_section_override() {
        let c = parse(
            "scenarios = [\"CS\"]\nestimators = [\"lstm\"]\n[settings]\npreset = \"full\"\n\
             [settings.arima]\np = 1\nq = 0",
        )
        .unwrap();
        let s = c.settings.resolve();
        assert_eq!(s.lstm, LstmSettings::full());
        assert_eq!((s.arima.p, s.arima.d, s.arima.q), (1, 1, 0));
    }
}
