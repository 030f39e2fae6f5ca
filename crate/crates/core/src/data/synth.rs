//! Seeded synthetic household demand and per-kWp PV generation.
//!
//! The synthetic clock is solar time: hour `h` of a UTC day is treated as local solar hour `h`.
//! Both generators use `ChaCha8Rng`, so output is stable across platforms for a given seed.

use std::f64::consts::PI;

use chrono::{DateTime, Datelike, Duration, TimeZone, Timelike, Utc, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DataError, HourlyTimeSeries};

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn default_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap()
}

/// Parameters of one synthetic household.
///
/// `weekday_amplitude` scales the intra-day shape (0 gives a flat day), `seasonal_amplitude`
/// the annual cosine peaking in mid-January. `noise_sigma` is the stationary standard deviation
/// of additive AR(1) noise. Households that share a `level_seed` share a day-to-day
/// multiplicative level factor (weather, holidays) of standard deviation `level_sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDemandParams {
    pub mean_daily_energy: f64,
    pub weekday_amplitude: f64,
    pub seasonal_amplitude: f64,
    pub noise_sigma: f64,
    pub noise_persistence: f64,
    pub level_sigma: f64,
    pub level_persistence: f64,
    pub level_seed: u64,
    pub seed: u64,
    pub start: DateTime<Utc>,
}

impl Default for SynthDemandParams {
    fn default() -> Self {
        Self {
            mean_daily_energy: 10.0,
            weekday_amplitude: 0.8,
            seasonal_amplitude: 0.25,
            noise_sigma: 0.05,
            noise_persistence: 0.7,
            level_sigma: 0.0,
            level_persistence: 0.85,
            level_seed: 0,
            seed: 0,
            start: default_start(),
        }
    }
}

impl SynthDemandParams {
    fn validate(&self) -> Result<(), DataError> {
        let bad = |what: &str| Err(DataError::InvalidParams(what.to_string()));
        if !(self.mean_daily_energy > 0.0) {
            return bad("mean_daily_energy must be > 0");
        }
        if !(self.noise_sigma >= 0.0) || !(self.level_sigma >= 0.0) {
            return bad("noise_sigma and level_sigma must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.weekday_amplitude) {
            return bad("weekday_amplitude must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.seasonal_amplitude) {
            return bad("seasonal_amplitude must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.noise_persistence)
            || !(0.0..1.0).contains(&self.level_persistence)
        {
            return bad("persistence must lie in [0, 1)");
        }
        if !super::series::is_midnight(&self.start) {
            return Err(DataError::InvalidParams("start must be at midnight".into()));
        }
        Ok(())
    }
}

fn bump(hour: f64, centre: f64, width: f64) -> f64 {
    let mut d = (hour - centre).abs();
    if d > 12.0 {
        d = 24.0 - d;
    }
    (-d * d / (2.0 * width * width)).exp()
}

fn raw_shape(hour: f64, weekend: bool) -> f64 {
    if weekend {
        0.4 + 0.45 * bump(hour, 9.5, 2.5) + 0.35 * bump(hour, 13.0, 2.5) + 1.0 * bump(hour, 19.5, 2.8)
    } else {
        0.4 + 0.45 * bump(hour, 7.5, 2.0) + 0.25 * bump(hour, 12.5, 2.5) + 1.0 * bump(hour, 19.5, 2.8)
    }
}

/// Daily shape with weekday mean 0.98 and weekend mean 1.05, so that a week averages to 1.
fn daily_shapes() -> ([f64; 24], [f64; 24]) {
    let build = |weekend: bool, target_mean: f64| {
        let mut s = [0.0; 24];
        for (h, v) in s.iter_mut().enumerate() {
            *v = raw_shape(h as f64 + 0.5, weekend);
        }
        let mean = s.iter().sum::<f64>() / 24.0;
        for v in s.iter_mut() {
            *v *= target_mean / mean;
        }
        s
    };
    (build(false, 0.98), build(true, 1.05))
}

/// Day-level multiplicative factor shared by households with the same `level_seed`.
fn level_factors(sigma: f64, persistence: f64, seed: u64, days: usize) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![1.0; days];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let innovation = sigma * (1.0 - persistence * persistence).sqrt();
    let mut z: f64 = sigma * gauss(&mut rng);
    let mut out = Vec::with_capacity(days);
    for _ in 0..days {
        out.push((1.0 + z).max(0.2));
        let eta: f64 = gauss(&mut rng);
        z = persistence * z + innovation * eta;
    }
    out
}

/// Hourly demand of one household in kW, nonnegative and deterministic for a fixed seed.
pub fn synth_demand_profile(
    params: &SynthDemandParams,
    horizon_days: usize,
) -> Result<HourlyTimeSeries, DataError> {
    params.validate()?;
    if horizon_days == 0 {
        return Err(DataError::InvalidParams("horizon_days must be >= 1".into()));
    }
    let (weekday_shape, weekend_shape) = daily_shapes();
    let levels = level_factors(
        params.level_sigma,
        params.level_persistence,
        params.level_seed,
        horizon_days,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let hourly_mean = params.mean_daily_energy / 24.0;
    let a = params.weekday_amplitude;
    let phi = params.noise_persistence;
    let innovation = params.noise_sigma * (1.0 - phi * phi).sqrt();
    let mut noise: f64 = if params.noise_sigma > 0.0 {
        params.noise_sigma * gauss(&mut rng)
    } else {
        0.0
    };

    let mut values = Vec::with_capacity(horizon_days * 24);
    for (day, level) in levels.iter().enumerate() {
        let date = params.start + Duration::days(day as i64);
        let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        let shape = if weekend { &weekend_shape } else { &weekday_shape };
        let doy = date.ordinal0() as f64;
        let seasonal = 1.0 + params.seasonal_amplitude * (2.0 * PI * (doy - 15.0) / 365.25).cos();
        for s in shape.iter() {
            let intraday = 1.0 + a * (s - 1.0);
            let value = hourly_mean * intraday * seasonal * level + noise;
            values.push(value.max(0.0));
            if innovation > 0.0 {
                let eta: f64 = gauss(&mut rng);
                noise = phi * noise + innovation * eta;
            }
        }
    }
    HourlyTimeSeries::new_nonnegative(params.start, values)
}

/// Tilt of the equator-facing module plane, degrees.
const MODULE_TILT_DEG: f64 = 30.0;
/// Combined inverter and system losses.
const SYSTEM_DERATE: f64 = 0.85;

/// Parameters of a per-kWp PV generation profile.
///
/// Weather has two layers. Each day draws a clearness index whose median moves between
/// `clearness_winter` and `clearness_summer` over the year and whose logit carries AR(1) noise
/// with standard deviation `day_sigma` and lag-one correlation `day_persistence`. Within the day,
/// an hourly AR(1) term (`cloud_persistence`, stationary deviation `cloud_sigma`) is added before
/// clipping the index to [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthPvParams {
    pub latitude: f64,
    pub clearness_summer: f64,
    pub clearness_winter: f64,
    pub day_sigma: f64,
    pub day_persistence: f64,
    pub cloud_persistence: f64,
    pub cloud_sigma: f64,
    pub seed: u64,
    pub start: DateTime<Utc>,
}

impl Default for SynthPvParams {
    fn default() -> Self {
        Self {
            latitude: 50.0,
            clearness_summer: 0.6,
            clearness_winter: 0.25,
            day_sigma: 2.5,
            day_persistence: 0.2,
            cloud_persistence: 0.9,
            cloud_sigma: 0.1,
            seed: 0,
            start: default_start(),
        }
    }
}

impl SynthPvParams {
    fn validate(&self) -> Result<(), DataError> {
        let bad = |what: &str| Err(DataError::InvalidParams(what.to_string()));
        if !(self.latitude.abs() < 66.0) {
            return bad("|latitude| must be < 66");
        }
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.clearness_summer) || !open_unit(self.clearness_winter) {
            return bad("clearness medians must lie in (0, 1)");
        }
        if !(self.day_sigma >= 0.0) || !(0.0..1.0).contains(&self.day_persistence) {
            return bad("day_sigma must be >= 0 and day_persistence in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.cloud_persistence) || !(0.0..=1.0).contains(&self.cloud_sigma) {
            return bad("cloud_persistence and cloud_sigma must lie in [0, 1]");
        }
        if !super::series::is_hour_aligned(&self.start) {
            return Err(DataError::UnalignedStart(self.start));
        }
        Ok(())
    }

    /// Median daily clearness on a day of year, highest in local midsummer.
    fn median_clearness(&self, day_of_year: f64) -> f64 {
        let midsummer = if self.latitude >= 0.0 { 196.0 } else { 14.0 };
        let summerness = 0.5 * (1.0 + (2.0 * PI * (day_of_year - midsummer) / 365.25).cos());
        self.clearness_winter + (self.clearness_summer - self.clearness_winter) * summerness
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Clear-sky output of a tilted, equator-facing module in kW per kWp at the given day of year
/// and solar hour. Zero whenever the sun is below the horizon or behind the module plane.
pub fn clear_sky_output(latitude_deg: f64, day_of_year: f64, solar_hour: f64) -> f64 {
    let lat = latitude_deg.to_radians();
    let declination = (23.45f64).to_radians() * (2.0 * PI * (284.0 + day_of_year) / 365.0).sin();
    let hour_angle = (15.0 * (solar_hour - 12.0)).to_radians();
    let sin_elevation =
        lat.sin() * declination.sin() + lat.cos() * declination.cos() * hour_angle.cos();
    if sin_elevation <= 0.0 {
        return 0.0;
    }
    // Southern hemisphere modules face north: mirror latitude and declination together.
    let (lat_abs, decl) = if latitude_deg >= 0.0 {
        (lat, declination)
    } else {
        (-lat, -declination)
    };
    let plane = lat_abs - MODULE_TILT_DEG.to_radians();
    let cos_incidence = decl.sin() * plane.sin() + decl.cos() * plane.cos() * hour_angle.cos();
    if cos_incidence <= 0.0 {
        return 0.0;
    }
    let air_mass = 1.0 / sin_elevation.max((1.0f64).to_radians().sin());
    let transmittance = 0.7f64.powf(air_mass.powf(0.678)) / 0.7;
    (SYSTEM_DERATE * cos_incidence * transmittance).clamp(0.0, 1.0)
}

/// Hourly PV output per kWp installed, in [0, 1]; each hour uses the sun position at its midpoint.
pub fn synth_pv_unit_profile(
    params: &SynthPvParams,
    horizon_days: usize,
) -> Result<HourlyTimeSeries, DataError> {
    if horizon_days == 0 {
        return Err(DataError::InvalidParams("horizon_days must be >= 1".into()));
    }
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let rho = params.day_persistence;
    let day_innovation = (1.0 - rho * rho).sqrt();
    let mut day_state: f64 = gauss(&mut rng);
    let phi = params.cloud_persistence;
    let innovation = params.cloud_sigma * (1.0 - phi * phi).sqrt();
    let mut cloud: f64 = params.cloud_sigma * gauss(&mut rng);

    let mut values = Vec::with_capacity(horizon_days * 24);
    let mut day_index = 0.0;
    for i in 0..horizon_days * 24 {
        let t = params.start + Duration::hours(i as i64);
        let doy = t.ordinal() as f64;
        if i % 24 == 0 {
            let median = params.median_clearness(doy);
            day_index = logistic(logit(median) + params.day_sigma * day_state);
            let eta: f64 = gauss(&mut rng);
            day_state = rho * day_state + day_innovation * eta;
        }
        let clear = clear_sky_output(params.latitude, doy, t.hour() as f64 + 0.5);
        let index = (day_index + cloud).clamp(0.0, 1.0);
        values.push(clear * index);
        let eta: f64 = gauss(&mut rng);
        cloud = phi * cloud + innovation * eta;
    }
    HourlyTimeSeries::new_nonnegative(params.start, values)
}
