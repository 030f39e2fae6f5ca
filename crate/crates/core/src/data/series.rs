use chrono::{DateTime, Duration, Timelike, Utc};

use super::DataError;

/// Uniformly sampled hourly power readings in kW.
///
/// Index `i` is the interval starting at `start + i hours`. The start is always aligned to a
/// full hour and the series is never empty. Values are finite but may be negative (net load);
/// use [`HourlyTimeSeries::new_nonnegative`] for demand and generation series.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyTimeSeries {
    start: DateTime<Utc>,
    values: Vec<f64>,
}

impl HourlyTimeSeries {
    pub fn new(start: DateTime<Utc>, values: Vec<f64>) -> Result<Self, DataError> {
        if !is_hour_aligned(&start) {
            return Err(DataError::UnalignedStart(start));
        }
        if values.is_empty() {
            return Err(DataError::EmptySeries);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite { index });
        }
        Ok(Self { start, values })
    }

    /// Like [`HourlyTimeSeries::new`] but additionally rejects negative values.
    pub fn new_nonnegative(start: DateTime<Utc>, values: Vec<f64>) -> Result<Self, DataError> {
        let series = Self::new(start, values)?;
        if let Some(index) = series.values.iter().position(|v| *v < 0.0) {
            return Err(DataError::NegativeValue {
                index,
                value: series.values[index],
            });
        }
        Ok(series)
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + Duration::hours(index as i64)
    }

    /// Exclusive end timestamp.
    pub fn end(&self) -> DateTime<Utc> {
        self.timestamp(self.values.len())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| *v >= 0.0)
    }

    /// True when both series cover exactly the same hours.
    pub fn same_horizon(&self, other: &HourlyTimeSeries) -> bool {
        self.start == other.start && self.values.len() == other.values.len()
    }

    /// Sum of the values, i.e. energy in kWh for a kW series.
    pub fn energy_kwh(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Sub-series `[from, to)` by hour index.
    pub fn slice(&self, from: usize, to: usize) -> Result<HourlyTimeSeries, DataError> {
        if from >= to || to > self.values.len() {
            return Err(DataError::OutOfRange {
                from,
                to,
                len: self.values.len(),
            });
        }
        Ok(Self {
            start: self.timestamp(from),
            values: self.values[from..to].to_vec(),
        })
    }

    /// Applies `f` elementwise, keeping the time axis.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<HourlyTimeSeries, DataError> {
        Self::new(self.start, self.values.iter().map(|v| f(*v)).collect())
    }
}

pub(crate) fn is_hour_aligned(t: &DateTime<Utc>) -> bool {
    t.minute() == 0 && t.second() == 0 && t.nanosecond() == 0
}

pub(crate) fn is_midnight(t: &DateTime<Utc>) -> bool {
    is_hour_aligned(t) && t.hour() == 0
}
