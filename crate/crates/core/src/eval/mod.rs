//! Out-of-sample backtesting, error metrics, per-hour unfolding and paired significance tests.

mod backtest;
mod metrics;
mod ttest;

pub use backtest::{backtest, BacktestResult, DayRecord, Split};
pub use metrics::{improvement, mape, rmse, unfold_rmse_by_hour, MetricReport};
pub use ttest::{paired_t_test, regularized_incomplete_beta, student_t_cdf, TTestResult};

use crate::forecast::ForecastError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no prediction/actual pairs")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("every actual value is zero; MAPE undefined")]
    AllZeroActuals,
    #[error("baseline RMSE must be > 0")]
    ZeroBaseline,
    #[error("paired t-test needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("series of {available} days cannot hold {train} training + {test} test days")]
    HorizonTooShort { train: usize, test: usize, available: usize },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("day {day}: {source}")]
    Forecast { day: usize, source: ForecastError },
    #[error("fit: {0}")]
    Fit(#[source] ForecastError),
}
