//! Day-ahead estimators sharing one contract: fit on a training range, then predict the 24
//! hourly values of a target day from the observations strictly before its first hour.

mod arima;
mod linalg;
mod naive;
mod nets;
mod slp;
mod windows;

use std::ops::Range;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::data::{is_midnight, DataError, HourlyTimeSeries, SeasonCalendar};
use crate::neural::NeuralError;

pub use arima::{fit_arima, forecast_arima, ArimaFit, ArimaForecaster, ArimaOrder};
pub use linalg::{lstsq, Singular};
pub use naive::NaiveForecaster;
pub use nets::{load_model, CnnLstmSettings, LstmSettings, NeuralForecaster, NeuralModel};
pub use slp::{build_slp, SlpForecaster, SlpTable};
pub use windows::{make_windows, Scaler, WindowDataset};

pub const HORIZON: usize = 24;

#[derive(Debug, thiserror::Error)]
pub enum ForecastError {
    #[error("need {needed} hours of history, have {available}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("history must end at midnight, ends at {0}")]
    NotMidnight(DateTime<Utc>),
    #[error("{0} predicted before fit")]
    NotFitted(&'static str),
    #[error("no training day falls into the {season} / {day_type} cell")]
    EmptyCell { season: String, day_type: String },
    #[error("training range {from}..{to} (days) too short: {message}")]
    RangeTooShort { from: usize, to: usize, message: String },
    #[error("ARIMA regression is singular")]
    SingularRegression,
    #[error("invalid ARIMA setup: {0}")]
    InvalidOrder(String),
    #[error("unknown estimator `{name}`; valid: {valid}")]
    UnknownEstimator { name: String, valid: String },
    #[error("model file: {0}")]
    Model(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Prediction for one target day, kW.
#[derive(Debug, Clone, PartialEq)]
pub struct DayForecast {
    pub values: Vec<f64>,
    /// Set when the estimator fell back to a simpler rule (ARIMA drift fallback).
    pub fallback: bool,
}

pub trait Forecaster {
    fn id(&self) -> &'static str;

    /// `train_days` indexes days from the start of `series`, which must begin at midnight.
    fn fit(&mut self, series: &HourlyTimeSeries, train_days: Range<usize>) -> Result<(), ForecastError>;

    /// `history` holds the observations before the target day; its end is the target day's
    /// first hour. Implementations only look at `history`.
    fn predict(&self, history: &HourlyTimeSeries) -> Result<DayForecast, ForecastError>;

    /// Whether the estimator re-estimates from the trailing window for every prediction.
    fn refits_per_day(&self) -> bool {
        false
    }
}

/// First hour of the day `history` leads into.
pub fn target_day(history: &HourlyTimeSeries) -> Result<DateTime<Utc>, ForecastError> {
    let end = history.end();
    if !is_midnight(&end) {
        return Err(ForecastError::NotMidnight(end));
    }
    Ok(end)
}

pub(crate) fn check_train_range(series: &HourlyTimeSeries, days: &Range<usize>) -> Result<(), ForecastError> {
    if !is_midnight(&series.start()) {
        return Err(ForecastError::NotMidnight(series.start()));
    }
    if days.start >= days.end || days.end * 24 > series.len() {
        return Err(ForecastError::RangeTooShort {
            from: days.start,
            to: days.end,
            message: format!("series holds {} full days", series.len() / 24),
        });
    }
    Ok(())
}

/// The six estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    DayBefore,
    WeekBefore,
    Slp,
    Arima,
    Lstm,
    CnnLstm,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 6] = [
        EstimatorKind::DayBefore,
        EstimatorKind::WeekBefore,
        EstimatorKind::Slp,
        EstimatorKind::Arima,
        EstimatorKind::Lstm,
        EstimatorKind::CnnLstm,
    ];

    pub fn id(self) -> &'static str {
        match self {
            EstimatorKind::DayBefore => "day_before",
            EstimatorKind::WeekBefore => "week_before",
            EstimatorKind::Slp => "slp",
            EstimatorKind::Arima => "arima",
            EstimatorKind::Lstm => "lstm",
            EstimatorKind::CnnLstm => "cnn_lstm",
        }
    }

    pub fn parse(name: &str) -> Result<Self, ForecastError> {
        Self::ALL
            .into_iter()
            .find(|k| k.id() == name)
            .ok_or_else(|| ForecastError::UnknownEstimator {
                name: name.to_string(),
                valid: Self::ALL.map(|k| k.id()).join(", "),
            })
    }
}

/// Hyperparameters of all estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSettings {
    pub arima: ArimaOrder,
    pub lstm: LstmSettings,
    pub cnn_lstm: CnnLstmSettings,
    pub calendar: SeasonCalendar,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self::desk()
    }
}

impl EstimatorSettings {
    /// Large networks and long training.
    pub fn full() -> Self {
        Self {
            arima: ArimaOrder::default(),
            lstm: LstmSettings::full(),
            cnn_lstm: CnnLstmSettings::full(),
            calendar: SeasonCalendar::default(),
        }
    }

    /// Smaller networks and fewer epochs that train in seconds on one CPU core.
    pub fn desk() -> Self {
        Self {
            arima: ArimaOrder::default(),
            lstm: LstmSettings::desk(),
            cnn_lstm: CnnLstmSettings::desk(),
            calendar: SeasonCalendar::default(),
        }
    }

    pub fn build(&self, kind: EstimatorKind, seed: u64) -> Box<dyn Forecaster> {
        match kind {
            EstimatorKind::DayBefore => Box::new(NaiveForecaster::day_before()),
            EstimatorKind::WeekBefore => Box::new(NaiveForecaster::week_before()),
            EstimatorKind::Slp => Box::new(SlpForecaster::new(self.calendar.clone())),
            EstimatorKind::Arima => Box::new(ArimaForecaster::new(self.arima)),
            EstimatorKind::Lstm => Box::new(NeuralForecaster::lstm(self.lstm, seed)),
            EstimatorKind::CnnLstm => Box::new(NeuralForecaster::cnn_lstm(self.cnn_lstm, seed)),
        }
    }
}
