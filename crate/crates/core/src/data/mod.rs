//! Hourly time series, calendar features, profile CSV I/O and synthetic data generation.

mod calendar;
mod csv_io;
mod series;
mod synth;

use chrono::{DateTime, Utc};

pub use calendar::{
    calendar_features, CalendarFeatures, DayType, MonthDay, Season, SeasonCalendar, SeasonRange,
};
pub use csv_io::{
    format_timestamp, parse_profile_csv, parse_signed_csv, parse_timestamp, write_profile_csv,
    PROFILE_HEADER,
};
pub use series::HourlyTimeSeries;
pub(crate) use series::is_midnight;
pub use synth::{
    clear_sky_output, default_start, synth_demand_profile, synth_pv_unit_profile,
    SynthDemandParams, SynthPvParams,
};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("series start {0} is not aligned to a full hour")]
    UnalignedStart(DateTime<Utc>),
    #[error("series must contain at least one value")]
    EmptySeries,
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("negative value {value} at index {index}")]
    NegativeValue { index: usize, value: f64 },
    #[error("range [{from}, {to}) outside series of length {len}")]
    OutOfRange { from: usize, to: usize, len: usize },
    #[error("row {row}: {message}")]
    Csv { row: u64, message: String },
    #[error("row {row}: negative demand value {value}")]
    CsvNegative { row: u64, value: f64 },
    #[error("row {row}: timestamps of household `{household}` are not increasing")]
    CsvNotMonotone { row: u64, household: String },
    #[error("row {row}: gap in household `{household}`, expected {expected}, found {found}")]
    CsvGap {
        row: u64,
        household: String,
        expected: DateTime<Utc>,
        found: DateTime<Utc>,
    },
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("i/o: {0}")]
    Io(String),
}
