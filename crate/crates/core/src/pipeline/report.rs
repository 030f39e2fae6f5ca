//! CSV report writers and the forecast CSV reader. Floats are written with six decimals.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDate, Utc};

use super::manifest::io_err;
use super::PipelineError;
use crate::data::{format_timestamp, HourlyTimeSeries};
use crate::eval::{
    improvement, paired_t_test, BacktestResult, DayRecord, MetricReport, TTestResult,
};

pub const METRICS_FILE: &str = "metrics.csv";
pub const PER_HOUR_FILE: &str = "per_hour_rmse.csv";
pub const SUMMARY_FILE: &str = "scenario_summary.csv";
pub const FORECASTS_FILE: &str = "forecasts.csv";
pub const SIGNIFICANCE_FILE: &str = "significance.csv";

pub const FORECASTS_HEADER: [&str; 6] =
    ["estimator", "scenario", "day", "hour", "prediction_kw", "actual_kw"];

/// Estimators every other estimator is tested against, when present.
pub const BASELINES: [&str; 2] = ["day_before", "slp"];

pub(crate) fn f6(v: f64) -> String {
    format!("{v:.6}")
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> PipelineError + '_ {
    move |e| PipelineError::Report(format!("{}: {e}", path.display()))
}

fn write_rows(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// One row of `scenario_summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub replication: usize,
    pub median_kw: f64,
    pub std_kw: f64,
    pub neg_hour_frac: f64,
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), PipelineError> {
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.scenario.clone(),
                r.replication.to_string(),
                f6(r.median_kw),
                f6(r.std_kw),
                f6(r.neg_hour_frac),
            ]
        })
        .collect();
    write_rows(
        path,
        &["scenario", "replication", "median_kw", "std_kw", "neg_hour_frac"],
        rows,
    )
}

/// Grid load and residential demand of one scenario run.
pub fn write_series(
    path: &Path,
    grid_load: &HourlyTimeSeries,
    residential_demand: &HourlyTimeSeries,
) -> Result<(), PipelineError> {
    let rows = (0..grid_load.len())
        .map(|i| {
            vec![
                format_timestamp(grid_load.timestamp(i)),
                f6(grid_load.values()[i]),
                f6(residential_demand.values()[i]),
            ]
        })
        .collect();
    write_rows(path, &["timestamp", "grid_load_kw", "residential_demand_kw"], rows)
}

/// Test-day forecasts. `series_start` maps day indices to dates.
pub fn write_forecasts(
    path: &Path,
    results: &[BacktestResult],
    series_start: DateTime<Utc>,
) -> Result<(), PipelineError> {
    let mut rows = Vec::new();
    for r in results {
        for d in &r.days {
            let date = (series_start + Duration::days(d.day as i64)).format("%Y-%m-%d").to_string();
            for h in 0..24 {
                rows.push(vec![
                    r.estimator.clone(),
                    r.scenario.clone(),
                    date.clone(),
                    h.to_string(),
                    // shortest round-trip form, so `evaluate` sees the exact values `run` scored
                    d.predictions[h].to_string(),
                    d.actuals[h].to_string(),
                ]);
            }
        }
    }
    write_rows(path, &FORECASTS_HEADER, rows)
}

/// Reads `forecasts.csv` back into backtest results, in first-appearance order. Day indices
/// count from the earliest date in the file; fallback flags are not stored and read as false.
pub fn read_forecasts(path: &Path) -> Result<Vec<BacktestResult>, PipelineError> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    if headers.iter().ne(FORECASTS_HEADER) {
        return Err(PipelineError::Report(format!(
            "{}: expected header {}",
            path.display(),
            FORECASTS_HEADER.join(",")
        )));
    }
    type Key = (String, String);
    let mut order: Vec<Key> = Vec::new();
    let mut cells: BTreeMap<Key, BTreeMap<NaiveDate, ([f64; 24], [f64; 24], u32)>> = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(csv_err(path))?;
        let bad = |m: &str| PipelineError::Report(format!("{} row {row}: {m}", path.display()));
        let date = NaiveDate::parse_from_str(&rec[2], "%Y-%m-%d").map_err(|_| bad("bad day"))?;
        let hour: usize = rec[3].parse().map_err(|_| bad("bad hour"))?;
        if hour >= 24 {
            return Err(bad("hour out of range"));
        }
        let pred: f64 = rec[4].parse().map_err(|_| bad("bad prediction"))?;
        let actual: f64 = rec[5].parse().map_err(|_| bad("bad actual"))?;
        let key = (rec[0].to_string(), rec[1].to_string());
        if !cells.contains_key(&key) {
            order.push(key.clone());
        }
        let day = cells.entry(key).or_default().entry(date).or_insert(([0.0; 24], [0.0; 24], 0));
        if day.2 & (1 << hour) != 0 {
            return Err(bad("duplicate hour"));
        }
        day.0[hour] = pred;
        day.1[hour] = actual;
        day.2 |= 1 << hour;
    }
    let first = cells.values().flat_map(|m| m.keys()).min().copied();
    let mut out = Vec::with_capacity(order.len());
    for key in order {
        let days = cells.remove(&key).expect("key recorded");
        let mut records = Vec::with_capacity(days.len());
        for (date, (pred, actual, mask)) in days {
            if mask != (1 << 24) - 1 {
                return Err(PipelineError::Report(format!(
                    "{}: {} / {} on {date} lacks some hours",
                    path.display(),
                    key.0,
                    key.1
                )));
            }
            records.push(DayRecord {
                day: (date - first.expect("nonempty")).num_days() as usize,
                predictions: pred.to_vec(),
                actuals: actual.to_vec(),
                fallback: false,
            });
        }
        out.push(BacktestResult {
            estimator: key.0,
            scenario: key.1,
            days: records,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EvaluatedResult {
    pub scenario: String,
    pub estimator: String,
    pub metrics: MetricReport,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub scenario: String,
    pub estimator: String,
    pub baseline: String,
    pub improvement_pct: f64,
    pub test: TTestResult,
}

/// Metrics for every result and paired tests of every estimator against each baseline that
/// ran on the same scenario.
pub fn evaluate(results: &[BacktestResult]) -> Result<(Vec<EvaluatedResult>, Vec<Comparison>), PipelineError> {
    let mut evaluated = Vec::with_capacity(results.len());
    for r in results {
        let metrics = MetricReport::from_result(r)
            .map_err(|e| PipelineError::Report(format!("{} / {}: {e}", r.scenario, r.estimator)))?;
        evaluated.push(EvaluatedResult {
            scenario: r.scenario.clone(),
            estimator: r.estimator.clone(),
            metrics,
        });
    }
    let mut comparisons = Vec::new();
    for (r, e) in results.iter().zip(&evaluated) {
        for baseline in BASELINES {
            if r.estimator == baseline {
                continue;
            }
            let Some((b, be)) = results
                .iter()
                .zip(&evaluated)
                .find(|(b, _)| b.scenario == r.scenario && b.estimator == baseline)
            else {
                continue;
            };
            let days: Vec<usize> = r.days.iter().map(|d| d.day).collect();
            if days != b.days.iter().map(|d| d.day).collect::<Vec<_>>() {
                return Err(PipelineError::Report(format!(
                    "{} and {baseline} cover different days in {}",
                    r.estimator, r.scenario
                )));
            }
            let tag = |e| PipelineError::Report(format!("{} vs {baseline}: {e}", r.estimator));
            comparisons.push(Comparison {
                scenario: r.scenario.clone(),
                estimator: r.estimator.clone(),
                baseline: baseline.to_string(),
                improvement_pct: improvement(be.metrics.rmse, e.metrics.rmse).map_err(tag)?,
                test: paired_t_test(&r.squared_errors(), &b.squared_errors()).map_err(tag)?,
            });
        }
    }
    Ok((evaluated, comparisons))
}

pub fn write_metrics(path: &Path, evaluated: &[EvaluatedResult]) -> Result<(), PipelineError> {
    let rows = evaluated
        .iter()
        .map(|e| {
            vec![
                e.scenario.clone(),
                e.estimator.clone(),
                f6(e.metrics.rmse),
                f6(e.metrics.mape),
                e.metrics.mape_excluded.to_string(),
            ]
        })
        .collect();
    write_rows(path, &["scenario", "estimator", "rmse_kw", "mape_pct", "mape_excluded"], rows)
}

pub fn write_per_hour(path: &Path, evaluated: &[EvaluatedResult]) -> Result<(), PipelineError> {
    let mut rows = Vec::new();
    for e in evaluated {
        for (h, v) in e.metrics.per_hour_rmse.iter().enumerate() {
            rows.push(vec![e.scenario.clone(), e.estimator.clone(), h.to_string(), f6(*v)]);
        }
    }
    write_rows(path, &["scenario", "estimator", "hour", "rmse_kw"], rows)
}

pub fn write_significance(path: &Path, comparisons: &[Comparison]) -> Result<(), PipelineError> {
    let rows = comparisons
        .iter()
        .map(|c| {
            vec![
                c.scenario.clone(),
                c.estimator.clone(),
                c.baseline.clone(),
                f6(c.improvement_pct),
                f6(c.test.t_statistic),
                c.test.degrees_of_freedom.to_string(),
                format!("{:.6e}", c.test.p_value),
                c.test.degenerate.to_string(),
            ]
        })
        .collect();
    write_rows(
        path,
        &[
            "scenario",
            "estimator",
            "baseline",
            "improvement_pct",
            "t_statistic",
            "df",
            "p_value",
            "degenerate",
        ],
        rows,
    )
}
