use std::ops::Range;

use chrono::{DateTime, Utc};
use serde::Serialize;

use super::ScenarioError;
use crate::data::HourlyTimeSeries;

/// Streaming sum of per-building net loads. Memory is proportional to the horizon only.
#[derive(Debug, Clone)]
pub struct LoadAccumulator {
    start: Option<DateTime<Utc>>,
    grid_load: Vec<f64>,
    residential_demand: Vec<f64>,
    buildings: usize,
}

impl Default for LoadAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl LoadAccumulator {
    pub fn new() -> Self {
        Self {
            start: None,
            grid_load: Vec::new(),
            residential_demand: Vec::new(),
            buildings: 0,
        }
    }

    pub fn add(&mut self, net_load: &HourlyTimeSeries) -> Result<(), ScenarioError> {
        match self.start {
            None => {
                self.start = Some(net_load.start());
                self.grid_load = vec![0.0; net_load.len()];
                self.residential_demand = vec![0.0; net_load.len()];
            }
            Some(start) => {
                if start != net_load.start() || self.grid_load.len() != net_load.len() {
                    return Err(ScenarioError::HorizonMismatch);
                }
            }
        }
        for ((g, r), l) in self
            .grid_load
            .iter_mut()
            .zip(self.residential_demand.iter_mut())
            .zip(net_load.values())
        {
            *g += l;
            // building-level feed-in is not netted against other buildings' demand
            *r += l.max(0.0);
        }
        self.buildings += 1;
        Ok(())
    }

    pub fn buildings(&self) -> usize {
        self.buildings
    }

    /// `(grid_load, residential_demand)`.
    pub fn finish(self) -> Result<(HourlyTimeSeries, HourlyTimeSeries), ScenarioError> {
        let start = self.start.ok_or(ScenarioError::Empty)?;
        Ok((
            HourlyTimeSeries::new(start, self.grid_load)?,
            HourlyTimeSeries::new_nonnegative(start, self.residential_demand)?,
        ))
    }
}

/// Grid load (signed sum) and residential demand (sum of positive parts) of a set of buildings.
pub fn accumulate<'a, I>(net_loads: I) -> Result<(HourlyTimeSeries, HourlyTimeSeries), ScenarioError>
where
    I: IntoIterator<Item = &'a HourlyTimeSeries>,
{
    let mut acc = LoadAccumulator::new();
    for l in net_loads {
        acc.add(l)?;
    }
    acc.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    /// Median residential demand, kW.
    pub median: f64,
    /// Population standard deviation of residential demand, kW.
    pub std_dev: f64,
    /// Share of hours with negative grid load.
    pub negative_hour_fraction: f64,
}

fn window_indices(series: &HourlyTimeSeries, window: &Range<DateTime<Utc>>) -> Option<Range<usize>> {
    if window.start < series.start() || window.end > series.end() || window.start >= window.end {
        return None;
    }
    let from = (window.start - series.start()).num_hours() as usize;
    let to = (window.end - series.start()).num_hours() as usize;
    (from < to).then_some(from..to)
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

pub(crate) fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Statistics over `window` (hours in `[start, end)`).
pub fn summarize(
    grid_load: &HourlyTimeSeries,
    residential_demand: &HourlyTimeSeries,
    window: Range<DateTime<Utc>>,
) -> Result<SummaryStats, ScenarioError> {
    if !grid_load.same_horizon(residential_demand) {
        return Err(ScenarioError::HorizonMismatch);
    }
    let idx = window_indices(grid_load, &window).ok_or(ScenarioError::EmptyWindow)?;
    let demand = &residential_demand.values()[idx.clone()];
    let grid = &grid_load.values()[idx];
    let negative = grid.iter().filter(|g| **g < 0.0).count();
    Ok(SummaryStats {
        median: median(demand),
        std_dev: population_std(demand),
        negative_hour_fraction: negative as f64 / grid.len() as f64,
    })
}
