use std::ops::Range;

use super::{target_day, DayForecast, ForecastError, Forecaster, HORIZON};
use crate::data::HourlyTimeSeries;

/// Repeats the day `offset_days` before the target day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NaiveForecaster {
    pub offset_days: usize,
}

impl NaiveForecaster {
    pub fn day_before() -> Self {
        Self { offset_days: 1 }
    }

    pub fn week_before() -> Self {
        Self { offset_days: 7 }
    }
}

impl Forecaster for NaiveForecaster {
    fn id(&self) -> &'static str {
        match self.offset_days {
            7 => "week_before",
            _ => "day_before",
        }
    }

    fn fit(&mut self, _series: &HourlyTimeSeries, _train_days: Range<usize>) -> Result<(), ForecastError> {
        Ok(())
    }

    fn predict(&self, history: &HourlyTimeSeries) -> Result<DayForecast, ForecastError> {
        target_day(history)?;
        let needed = self.offset_days * 24;
        let n = history.len();
        if n < needed || self.offset_days == 0 {
            return Err(ForecastError::InsufficientHistory {
                needed,
                available: n,
            });
        }
        Ok(DayForecast {
            values: history.values()[n - needed..n - needed + HORIZON].to_vec(),
            fallback: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::default_start;

    fn day_valued(days: usize) -> HourlyTimeSeries {
        let v = (0..days * 24).map(|h| (h / 24) as f64).collect();
        HourlyTimeSeries::new(default_start(), v).unwrap()
    }

    #[test]
    fn copies_the_offset_day() {
        let s = day_valued(30);
        let history = s.slice(0, 10 * 24).unwrap();
        assert_eq!(NaiveForecaster::day_before().predict(&history).unwrap().values, vec![9.0; 24]);
        assert_eq!(NaiveForecaster::week_before().predict(&history).unwrap().values, vec![3.0; 24]);
    }

    #[test]
    fn needs_history_and_midnight() {
        let s = day_valued(30);
        assert!(matches!(
            NaiveForecaster::week_before().predict(&s.slice(0, 48).unwrap()),
            Err(ForecastError::InsufficientHistory { needed: 168, available: 48 })
        ));
        assert!(matches!(
            NaiveForecaster::day_before().predict(&s.slice(0, 50).unwrap()),
            Err(ForecastError::NotMidnight(_))
        ));
    }
}
