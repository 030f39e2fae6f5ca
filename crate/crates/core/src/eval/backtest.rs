use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::data::HourlyTimeSeries;
use crate::forecast::{Forecaster, HORIZON};

/// Chronological train/test split in whole days from the start of the series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Split {
    pub train_days: usize,
    pub test_days: usize,
}

impl Default for Split {
    fn default() -> Self {
        Self {
            train_days: 664,
            test_days: 365,
        }
    }
}

impl Split {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.train_days == 0 {
            return Err(EvalError::InvalidSplit("train_days must be > 0".into()));
        }
        if self.test_days == 0 {
            return Err(EvalError::InvalidSplit("test_days must be > 0".into()));
        }
        Ok(())
    }

    pub fn total_days(&self) -> usize {
        self.train_days + self.test_days
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayRecord {
    /// Day index from the start of the series.
    pub day: usize,
    pub predictions: Vec<f64>,
    pub actuals: Vec<f64>,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestResult {
    pub estimator: String,
    pub scenario: String,
    pub days: Vec<DayRecord>,
}

impl BacktestResult {
    /// Flattened `(predictions, actuals)` in chronological order.
    pub fn pairs(&self) -> (Vec<f64>, Vec<f64>) {
        let pred = self.days.iter().flat_map(|d| d.predictions.iter().copied()).collect();
        let actual = self.days.iter().flat_map(|d| d.actuals.iter().copied()).collect();
        (pred, actual)
    }

    pub fn squared_errors(&self) -> Vec<f64> {
        self.days
            .iter()
            .flat_map(|d| d.predictions.iter().zip(&d.actuals).map(|(p, a)| (p - a) * (p - a)))
            .collect()
    }

    pub fn fallback_days(&self) -> usize {
        self.days.iter().filter(|d| d.fallback).count()
    }
}

/// Fits once on the training days, then forecasts every test day from the history strictly
/// before its midnight.
pub fn backtest(
    forecaster: &mut dyn Forecaster,
    series: &HourlyTimeSeries,
    split: &Split,
    scenario: &str,
) -> Result<BacktestResult, EvalError> {
    split.validate()?;
    let available = series.len() / 24;
    if available < split.total_days() {
        return Err(EvalError::HorizonTooShort {
            train: split.train_days,
            test: split.test_days,
            available,
        });
    }
    forecaster.fit(series, 0..split.train_days).map_err(EvalError::Fit)?;
    let mut days = Vec::with_capacity(split.test_days);
    for day in split.train_days..split.total_days() {
        let history = series
            .slice(0, day * 24)
            .map_err(|e| EvalError::Forecast { day, source: e.into() })?;
        let forecast = forecaster
            .predict(&history)
            .map_err(|source| EvalError::Forecast { day, source })?;
        debug_assert_eq!(forecast.values.len(), HORIZON);
        days.push(DayRecord {
            day,
            predictions: forecast.values,
            actuals: series.values()[day * 24..(day + 1) * 24].to_vec(),
            fallback: forecast.fallback,
        });
    }
    Ok(BacktestResult {
        estimator: forecaster.id().to_string(),
        scenario: scenario.to_string(),
        days,
    })
}
