//! Digital twin of a residential distribution grid with a day-ahead demand forecasting
//! benchmark.
//!
//! The crate is organised bottom-up: [`data`] provides hourly series and synthetic households,
//! [`twin`] simulates PV and battery dispatch per building, [`scenario`] builds and aggregates
//! fleets for current and future grid states, [`neural`] holds the from-scratch network layers,
//! [`forecast`] the estimators, [`eval`] the backtest and metrics, and [`pipeline`] ties the
//! stages together for the command-line tool.

pub mod data;
pub mod twin;
pub mod scenario;
pub mod seed;
pub mod neural;
pub mod forecast;
pub mod eval;
pub mod pipeline;
