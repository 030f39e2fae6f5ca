use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::ForecastError;

/// Min-max scaling to `[0, 1]` with bounds taken from the training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: f64,
    pub max: f64,
}

impl Scaler {
    pub fn fit(values: &[f64]) -> Self {
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self { min, max }
    }

    /// Scale divisor; 1 for constant training data so scaling stays invertible.
    fn span(&self) -> f64 {
        let span = self.max - self.min;
        if span > 0.0 {
            span
        } else {
            1.0
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.min) / self.span()
    }

    pub fn invert(&self, y: f64) -> f64 {
        y * self.span() + self.min
    }
}

/// Scaled (lookback, next-horizon) pairs, one per day, targets starting at midnight.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowDataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    /// Day index (from the series start) of each target.
    pub target_days: Vec<usize>,
}

impl WindowDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Windows for every day `d` of `days` with a full lookback inside `days`, so inputs and
/// targets never leave the range.
pub fn make_windows(
    values: &[f64],
    lookback: usize,
    horizon: usize,
    days: Range<usize>,
    scaler: &Scaler,
) -> Result<WindowDataset, ForecastError> {
    let short = |message: String| ForecastError::RangeTooShort {
        from: days.start,
        to: days.end,
        message,
    };
    if lookback == 0 || lookback % 24 != 0 {
        return Err(short(format!("lookback {lookback} is not a positive multiple of 24")));
    }
    if horizon == 0 || horizon > 24 {
        return Err(short(format!("horizon {horizon} outside 1..=24")));
    }
    if days.end * 24 > values.len() {
        return Err(short(format!("series holds only {} values", values.len())));
    }
    let first = days.start + lookback / 24;
    if first >= days.end {
        return Err(short(format!("no day has a full {lookback} h lookback")));
    }
    let mut out = WindowDataset {
        inputs: Vec::new(),
        targets: Vec::new(),
        target_days: Vec::new(),
    };
    for d in first..days.end {
        let t0 = d * 24;
        out.inputs
            .push(values[t0 - lookback..t0].iter().map(|v| scaler.apply(*v)).collect());
        out.targets
            .push(values[t0..t0 + horizon].iter().map(|v| scaler.apply(*v)).collect());
        out.target_days.push(d);
    }
    Ok(out)
}
