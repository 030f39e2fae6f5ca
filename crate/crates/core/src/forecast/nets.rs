use std::collections::HashMap;
use std::io::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{check_train_range, make_windows, target_day, DayForecast, ForecastError, Forecaster, Scaler, HORIZON};
use crate::data::HourlyTimeSeries;
use crate::neural::{
    read_params, train, write_params, CnnLstmNet, CnnLstmShape, LstmNet, LstmShape, Network, TrainConfig,
    TrainReport,
};
use crate::seed;

const MODEL_MAGIC: &str = "gridtwin-model 1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LstmSettings {
    pub lookback: usize,
    pub units: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for LstmSettings {
    fn default() -> Self {
        Self::desk()
    }
}

impl LstmSettings {
    pub fn full() -> Self {
        Self {
            lookback: 168,
            units: 100,
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
        }
    }

    pub fn desk() -> Self {
        Self {
            lookback: 168,
            units: 16,
            epochs: 60,
            batch_size: 32,
            learning_rate: 3e-3,
        }
    }

    fn shape(&self) -> LstmShape {
        LstmShape {
            lookback: self.lookback,
            units: self.units,
            horizon: HORIZON,
        }
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnLstmSettings {
    pub lookback: usize,
    pub filters: usize,
    pub kernel: usize,
    pub pool: usize,
    pub units: usize,
    pub dense: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for CnnLstmSettings {
    fn default() -> Self {
        Self::desk()
    }
}

impl CnnLstmSettings {
    pub fn full() -> Self {
        Self {
            lookback: 168,
            filters: 32,
            kernel: 3,
            pool: 2,
            units: 200,
            dense: 100,
            epochs: 50,
            batch_size: 32,
            learning_rate: 1e-3,
        }
    }

    pub fn desk() -> Self {
        Self {
            lookback: 168,
            filters: 8,
            kernel: 3,
            pool: 2,
            units: 24,
            dense: 16,
            epochs: 30,
            batch_size: 32,
            learning_rate: 3e-3,
        }
    }

    fn shape(&self) -> CnnLstmShape {
        CnnLstmShape {
            lookback: self.lookback,
            filters: self.filters,
            kernel: self.kernel,
            pool: self.pool,
            units: self.units,
            dense: self.dense,
            horizon: HORIZON,
        }
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
        }
    }
}

/// A trained network of either architecture.
#[derive(Debug, Clone)]
pub enum NeuralModel {
    Lstm(LstmNet),
    CnnLstm(CnnLstmNet),
}

impl NeuralModel {
    pub fn predict(&self, window: &[f64]) -> Result<Vec<f64>, ForecastError> {
        Ok(match self {
            NeuralModel::Lstm(n) => n.predict(window)?,
            NeuralModel::CnnLstm(n) => n.predict(window)?,
        })
    }

    pub fn lookback(&self) -> usize {
        match self {
            NeuralModel::Lstm(n) => n.input_len(),
            NeuralModel::CnnLstm(n) => n.input_len(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            NeuralModel::Lstm(n) => n.describe(),
            NeuralModel::CnnLstm(n) => n.describe(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Spec {
    Lstm(LstmSettings),
    CnnLstm(CnnLstmSettings),
}

/// LSTM or CNN-LSTM trained on min-max scaled day windows of the training range.
#[derive(Debug, Clone)]
pub struct NeuralForecaster {
    spec: Spec,
    seed: u64,
    fitted: Option<(NeuralModel, Scaler)>,
    report: Option<TrainReport>,
}

impl NeuralForecaster {
    pub fn lstm(settings: LstmSettings, seed: u64) -> Self {
        Self {
            spec: Spec::Lstm(settings),
            seed,
            fitted: None,
            report: None,
        }
    }

    pub fn cnn_lstm(settings: CnnLstmSettings, seed: u64) -> Self {
        Self {
            spec: Spec::CnnLstm(settings),
            seed,
            fitted: None,
            report: None,
        }
    }

    pub fn model(&self) -> Option<&NeuralModel> {
        self.fitted.as_ref().map(|(m, _)| m)
    }

    pub fn scaler(&self) -> Option<Scaler> {
        self.fitted.as_ref().map(|(_, s)| *s)
    }

    pub fn train_report(&self) -> Option<&TrainReport> {
        self.report.as_ref()
    }

    fn lookback(&self) -> usize {
        match self.spec {
            Spec::Lstm(s) => s.lookback,
            Spec::CnnLstm(s) => s.lookback,
        }
    }

    /// Writes the fitted model: magic line, architecture line, scaler line, parameters.
    pub fn save<W: Write>(&self, out: &mut W) -> Result<(), ForecastError> {
        let (model, scaler) = self.fitted.as_ref().ok_or(ForecastError::NotFitted("network"))?;
        let io = |e: std::io::Error| ForecastError::Model(e.to_string());
        writeln!(out, "{MODEL_MAGIC}").map_err(io)?;
        writeln!(out, "{}", model.describe()).map_err(io)?;
        writeln!(out, "scaler {} {}", scaler.min, scaler.max).map_err(io)?;
        match model {
            NeuralModel::Lstm(n) => write_params(n, out)?,
            NeuralModel::CnnLstm(n) => write_params(n, out)?,
        }
        Ok(())
    }
}

fn model_error(line: usize, message: impl Into<String>) -> ForecastError {
    ForecastError::Model(format!("line {line}: {}", message.into()))
}

/// Restores a forecaster written by [`NeuralForecaster::save`]; it predicts without refitting.
pub fn load_model(text: &str) -> Result<NeuralForecaster, ForecastError> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() < 3 || lines[0].trim() != MODEL_MAGIC {
        return Err(model_error(1, format!("expected `{MODEL_MAGIC}`")));
    }
    let mut arch = lines[1].split_whitespace();
    let kind = arch.next().unwrap_or("");
    let fields: HashMap<&str, usize> = arch
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| model_error(2, format!("bad field `{kv}`")))?;
            let v = v.parse().map_err(|_| model_error(2, format!("bad value in `{kv}`")))?;
            Ok((k, v))
        })
        .collect::<Result<_, ForecastError>>()?;
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| model_error(2, format!("missing `{k}`")));
    if get("horizon")? != HORIZON {
        return Err(model_error(2, "horizon must be 24"));
    }
    let scaler_parts: Vec<&str> = lines[2].split_whitespace().collect();
    let scaler = match scaler_parts.as_slice() {
        ["scaler", min, max] => Scaler {
            min: min.parse().map_err(|_| model_error(3, "bad scaler min"))?,
            max: max.parse().map_err(|_| model_error(3, "bad scaler max"))?,
        },
        _ => return Err(model_error(3, "expected `scaler <min> <max>`")),
    };
    let rest = &lines[3..];
    let (spec, model) = match kind {
        "lstm" => {
            let settings = LstmSettings {
                lookback: get("lookback")?,
                units: get("units")?,
                ..LstmSettings::default()
            };
            let mut net = LstmNet::new(settings.shape(), 0);
            read_params(&mut net, rest, 4)?;
            (Spec::Lstm(settings), NeuralModel::Lstm(net))
        }
        "cnn_lstm" => {
            let settings = CnnLstmSettings {
                lookback: get("lookback")?,
                filters: get("filters")?,
                kernel: get("kernel")?,
                pool: get("pool")?,
                units: get("units")?,
                dense: get("dense")?,
                ..CnnLstmSettings::default()
            };
            let mut net = CnnLstmNet::new(settings.shape(), 0)?;
            read_params(&mut net, rest, 4)?;
            (Spec::CnnLstm(settings), NeuralModel::CnnLstm(net))
        }
        other => return Err(model_error(2, format!("unknown architecture `{other}`"))),
    };
    Ok(NeuralForecaster {
        spec,
        seed: 0,
        fitted: Some((model, scaler)),
        report: None,
    })
}

impl Forecaster for NeuralForecaster {
    fn id(&self) -> &'static str {
        match self.spec {
            Spec::Lstm(_) => "lstm",
            Spec::CnnLstm(_) => "cnn_lstm",
        }
    }

    fn fit(&mut self, series: &HourlyTimeSeries, train_days: Range<usize>) -> Result<(), ForecastError> {
        check_train_range(series, &train_days)?;
        let train_values = &series.values()[train_days.start * 24..train_days.end * 24];
        let scaler = Scaler::fit(train_values);
        let data = make_windows(series.values(), self.lookback(), HORIZON, train_days, &scaler)?;
        let init_seed = seed::derive(self.seed, 1);
        let order_seed = seed::derive(self.seed, 2);
        let (model, report) = match self.spec {
            Spec::Lstm(s) => {
                let mut net = LstmNet::new(s.shape(), init_seed);
                let report = train(&mut net, &data.inputs, &data.targets, &s.train_config(), order_seed)?;
                (NeuralModel::Lstm(net), report)
            }
            Spec::CnnLstm(s) => {
                let mut net = CnnLstmNet::new(s.shape(), init_seed)?;
                let report = train(&mut net, &data.inputs, &data.targets, &s.train_config(), order_seed)?;
                (NeuralModel::CnnLstm(net), report)
            }
        };
        self.fitted = Some((model, scaler));
        self.report = Some(report);
        Ok(())
    }

    fn predict(&self, history: &HourlyTimeSeries) -> Result<DayForecast, ForecastError> {
        let (model, scaler) = self.fitted.as_ref().ok_or(ForecastError::NotFitted(self.id()))?;
        target_day(history)?;
        let lookback = model.lookback();
        let n = history.len();
        if n < lookback {
            return Err(ForecastError::InsufficientHistory {
                needed: lookback,
                available: n,
            });
        }
        let window: Vec<f64> = history.values()[n - lookback..]
            .iter()
            .map(|v| scaler.apply(*v))
            .collect();
        let values = model
            .predict(&window)?
            .into_iter()
            .map(|y| scaler.invert(y).max(0.0))
            .collect();
        Ok(DayForecast {
            values,
            fallback: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::default_start;

    fn tiny_lstm() -> LstmSettings {
        LstmSettings {
            lookback: 48,
            units: 4,
            epochs: 30,
            batch_size: 8,
            learning_rate: 1e-2,
        }
    }

    fn tiny_cnn() -> CnnLstmSettings {
        CnnLstmSettings {
            lookback: 48,
            filters: 3,
            kernel: 3,
            pool: 2,
            units: 4,
            dense: 4,
            epochs: 30,
            batch_size: 8,
            learning_rate: 1e-2,
        }
    }

    #[test]
    fn constant_series_is_learned() {
        let s = HourlyTimeSeries::new(default_start(), vec![120.0; 40 * 24]).unwrap();
        for mut f in [NeuralForecaster::lstm(tiny_lstm(), 1), NeuralForecaster::cnn_lstm(tiny_cnn(), 1)] {
            f.fit(&s, 0..30).unwrap();
            let pred = f.predict(&s.slice(0, 35 * 24).unwrap()).unwrap();
            for v in pred.values {
                assert!((v - 120.0).abs() <= 1.2, "{} {v}", f.id());
            }
        }
    }

    #[test]
    fn save_load_round_trip() {
        let values: Vec<f64> = (0..20 * 24).map(|h| 10.0 + (h % 24) as f64).collect();
        let s = HourlyTimeSeries::new(default_start(), values).unwrap();
        let history = s.slice(0, 15 * 24).unwrap();
        for mut f in [
            NeuralForecaster::lstm(LstmSettings { epochs: 2, ..tiny_lstm() }, 3),
            NeuralForecaster::cnn_lstm(CnnLstmSettings { epochs: 2, ..tiny_cnn() }, 3),
        ] {
            f.fit(&s, 0..12).unwrap();
            let mut buf = Vec::new();
            f.save(&mut buf).unwrap();
            let loaded = load_model(std::str::from_utf8(&buf).unwrap()).unwrap();
            assert_eq!(loaded.predict(&history).unwrap(), f.predict(&history).unwrap());
        }
        assert!(load_model("nonsense").is_err());
    }

    #[test]
    fn predict_before_fit_fails() {
        let f = NeuralForecaster::lstm(tiny_lstm(), 0);
        let s = HourlyTimeSeries::new(default_start(), vec![1.0; 96]).unwrap();
        assert!(matches!(f.predict(&s), Err(ForecastError::NotFitted(_))));
    }
}
