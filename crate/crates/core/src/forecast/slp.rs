use std::ops::Range;

use chrono::{DateTime, Utc};

use super::{check_train_range, target_day, DayForecast, ForecastError, Forecaster, HORIZON};
use crate::data::{DayType, HourlyTimeSeries, Season, SeasonCalendar};

/// Mean daily profile per (season, day type) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SlpTable {
    profiles: Vec<[f64; HORIZON]>,
    days: Vec<usize>,
    calendar: SeasonCalendar,
}

fn cell(season: Season, day_type: DayType) -> usize {
    season.index() * DayType::ALL.len() + day_type.index()
}

impl SlpTable {
    pub fn profile(&self, season: Season, day_type: DayType) -> &[f64; HORIZON] {
        &self.profiles[cell(season, day_type)]
    }

    /// Number of training days averaged into the cell.
    pub fn days_in(&self, season: Season, day_type: DayType) -> usize {
        self.days[cell(season, day_type)]
    }

    pub fn predict(&self, day: DateTime<Utc>) -> [f64; HORIZON] {
        let f = self.calendar.features(day);
        *self.profile(f.season, f.day_type)
    }
}

/// Averages every training day into its cell; every one of the nine cells must be populated.
pub fn build_slp(
    series: &HourlyTimeSeries,
    train_days: Range<usize>,
    calendar: &SeasonCalendar,
) -> Result<SlpTable, ForecastError> {
    check_train_range(series, &train_days)?;
    let n_cells = Season::ALL.len() * DayType::ALL.len();
    let mut sums = vec![[0.0; HORIZON]; n_cells];
    let mut days = vec![0usize; n_cells];
    for d in train_days {
        let f = calendar.features(series.timestamp(d * 24));
        let c = cell(f.season, f.day_type);
        for (s, v) in sums[c].iter_mut().zip(&series.values()[d * 24..d * 24 + HORIZON]) {
            *s += v;
        }
        days[c] += 1;
    }
    for season in Season::ALL {
        for day_type in DayType::ALL {
            if days[cell(season, day_type)] == 0 {
                return Err(ForecastError::EmptyCell {
                    season: format!("{season:?}"),
                    day_type: format!("{day_type:?}"),
                });
            }
        }
    }
    let profiles = sums
        .into_iter()
        .zip(&days)
        .map(|(s, n)| s.map(|v| v / *n as f64))
        .collect();
    Ok(SlpTable {
        profiles,
        days,
        calendar: calendar.clone(),
    })
}

#[derive(Debug, Clone)]
pub struct SlpForecaster {
    calendar: SeasonCalendar,
    table: Option<SlpTable>,
}

impl SlpForecaster {
    pub fn new(calendar: SeasonCalendar) -> Self {
        Self { calendar, table: None }
    }

    pub fn table(&self) -> Option<&SlpTable> {
        self.table.as_ref()
    }
}

impl Forecaster for SlpForecaster {
    fn id(&self) -> &'static str {
        "slp"
    }

    fn fit(&mut self, series: &HourlyTimeSeries, train_days: Range<usize>) -> Result<(), ForecastError> {
        self.table = Some(build_slp(series, train_days, &self.calendar)?);
        Ok(())
    }

    fn predict(&self, history: &HourlyTimeSeries) -> Result<DayForecast, ForecastError> {
        let table = self.table.as_ref().ok_or(ForecastError::NotFitted("slp"))?;
        Ok(DayForecast {
            values: table.predict(target_day(history)?).to_vec(),
            fallback: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn series(start: DateTime<Utc>, values: Vec<f64>) -> HourlyTimeSeries {
        HourlyTimeSeries::new(start, values).unwrap()
    }

    #[test]
    fn constant_series_gives_constant_table() {
        let s = series(Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap(), vec![2.5; 400 * 24]);
        let table = build_slp(&s, 0..400, &SeasonCalendar::default()).unwrap();
        for season in Season::ALL {
            for dt in DayType::ALL {
                assert_eq!(table.profile(season, dt), &[2.5; 24]);
            }
        }
    }

    #[test]
    fn cell_mean_of_one_and_three_is_two() {
        // winter weekdays alternate between a 1-profile and a 3-profile
        let start = Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap();
        let cal = SeasonCalendar::default();
        let mut values = vec![10.0; 365 * 24];
        let winter_weekdays: Vec<usize> = (0..365)
            .filter(|d| {
                let f = cal.features(start + chrono::Duration::days(*d as i64));
                f.season == Season::Winter && f.day_type == DayType::Weekday
            })
            .collect();
        for (k, d) in winter_weekdays.iter().enumerate() {
            let v = if k % 2 == 0 { 1.0 } else { 3.0 };
            values[d * 24..d * 24 + 24].fill(v);
        }
        if winter_weekdays.len() % 2 == 1 {
            let d = *winter_weekdays.last().unwrap();
            values[d * 24..d * 24 + 24].fill(2.0);
        }
        let table = build_slp(&series(start, values), 0..365, &cal).unwrap();
        assert_eq!(table.profile(Season::Winter, DayType::Weekday), &[2.0; 24]);
        assert_eq!(table.days_in(Season::Winter, DayType::Weekday), winter_weekdays.len());
        assert_eq!(table.profile(Season::Summer, DayType::Weekday), &[10.0; 24]);
    }

    #[test]
    fn prediction_reads_only_its_cell() {
        let start = Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap();
        let cal = SeasonCalendar::default();
        let values: Vec<f64> = (0..365 * 24)
            .map(|h| {
                let f = cal.features(start + chrono::Duration::hours(h as i64));
                (cell(f.season, f.day_type) * 100 + f.hour_of_day as usize) as f64
            })
            .collect();
        let s = series(start, values);
        let mut slp = SlpForecaster::new(cal.clone());
        slp.fit(&s, 0..365).unwrap();
        // 2019-07-07 is a summer Sunday
        let sunday = Utc.with_ymd_and_hms(2019, 7, 7, 0, 0, 0).unwrap();
        let history = s.slice(0, (sunday - start).num_hours() as usize).unwrap();
        let pred = slp.predict(&history).unwrap().values;
        let base = (cell(Season::Summer, DayType::Sunday) * 100) as f64;
        assert_eq!(pred, (0..24).map(|h| base + h as f64).collect::<Vec<_>>());
    }

    #[test]
    fn empty_cell_is_rejected() {
        let s = series(Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap(), vec![1.0; 60 * 24]);
        assert!(matches!(
            build_slp(&s, 0..60, &SeasonCalendar::default()),
            Err(ForecastError::EmptyCell { .. })
        ));
        assert!(matches!(
            SlpForecaster::new(SeasonCalendar::default()).predict(&s),
            Err(ForecastError::NotFitted(_))
        ));
    }
}
