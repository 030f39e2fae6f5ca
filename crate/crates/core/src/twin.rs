//! Per-building digital twin: PV sizing, greedy self-consumption battery dispatch and the
//! resulting grid exchange.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{DataError, HourlyTimeSeries};

#[derive(Debug, thiserror::Error)]
pub enum TwinError {
    #[error("invalid battery spec: {0}")]
    InvalidBattery(&'static str),
    #[error("invalid capacity model: {0}")]
    InvalidCapacityModel(&'static str),
    #[error("building {0} already has PV")]
    AlreadyHasPv(u32),
    #[error("building {0}: a battery requires a PV installation")]
    BatteryWithoutPv(u32),
    #[error("building {0}: demand and PV profile cover different horizons")]
    HorizonMismatch(u32),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Home battery with a symmetric power limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatterySpec {
    /// kW, charge and discharge
    pub power_limit: f64,
    /// kWh
    pub capacity: f64,
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
}

impl Default for BatterySpec {
    fn default() -> Self {
        Self {
            power_limit: 7.0,
            capacity: 10.5,
            charge_efficiency: 0.95,
            discharge_efficiency: 0.95,
        }
    }
}

impl BatterySpec {
    /// Default power and capacity with unit efficiencies.
    pub fn lossless() -> Self {
        Self {
            charge_efficiency: 1.0,
            discharge_efficiency: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TwinError> {
        if !(self.power_limit > 0.0) {
            return Err(TwinError::InvalidBattery("power_limit must be > 0"));
        }
        if !(self.capacity > 0.0) {
            return Err(TwinError::InvalidBattery("capacity must be > 0"));
        }
        let unit = |e: f64| e > 0.0 && e <= 1.0;
        if !unit(self.charge_efficiency) || !unit(self.discharge_efficiency) {
            return Err(TwinError::InvalidBattery("efficiencies must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Energy stored, kWh.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BatteryState {
    pub soc: f64,
}

/// Result of one dispatch step. `charge` and `discharge` are battery-side powers in kW at the
/// grid connection point; at most one of them is nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: BatteryState,
    pub grid_power: f64,
    pub charge: f64,
    pub discharge: f64,
}

/// One step of the self-consumption rule.
///
/// `residual` is demand minus PV in kW. A positive residual is covered from storage as far as
/// power and stored energy allow; a negative residual (PV surplus) is stored as far as power and
/// free capacity allow. The battery never exchanges energy with the grid.
pub fn battery_step(state: BatteryState, residual: f64, spec: &BatterySpec, dt: f64) -> StepOutcome {
    debug_assert!(dt > 0.0);
    let (charge, discharge) = if residual > 0.0 {
        let available = state.soc * spec.discharge_efficiency / dt;
        (0.0, spec.power_limit.min(residual).min(available))
    } else if residual < 0.0 {
        let room = (spec.capacity - state.soc) / (spec.charge_efficiency * dt);
        (spec.power_limit.min(-residual).min(room), 0.0)
    } else {
        (0.0, 0.0)
    };
    let soc = state.soc + spec.charge_efficiency * charge * dt - discharge * dt / spec.discharge_efficiency;
    StepOutcome {
        // rounding only; the limits above already keep soc inside the bounds
        state: BatteryState {
            soc: soc.clamp(0.0, spec.capacity),
        },
        grid_power: residual - discharge + charge,
        charge,
        discharge,
    }
}

/// Truncated lognormal distribution of installable rooftop PV capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityModel {
    pub median_kwp: f64,
    pub sigma_log: f64,
    pub min_kwp: f64,
    pub max_kwp: f64,
}

impl Default for CapacityModel {
    fn default() -> Self {
        Self {
            median_kwp: 9.0,
            sigma_log: 0.5,
            min_kwp: 2.0,
            max_kwp: 30.0,
        }
    }
}

impl CapacityModel {
    pub fn validate(&self) -> Result<(), TwinError> {
        if !(self.median_kwp > 0.0) || !(self.sigma_log >= 0.0) {
            return Err(TwinError::InvalidCapacityModel("median must be > 0 and sigma >= 0"));
        }
        if !(self.min_kwp > 0.0 && self.min_kwp <= self.max_kwp) {
            return Err(TwinError::InvalidCapacityModel("need 0 < min_kwp <= max_kwp"));
        }
        Ok(())
    }

    /// Draws by rejection from the lognormal restricted to `[min_kwp, max_kwp]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sigma_log == 0.0 {
            return self.median_kwp.clamp(self.min_kwp, self.max_kwp);
        }
        let ln_median = self.median_kwp.ln();
        for _ in 0..10_000 {
            let z: f64 = StandardNormal.sample(rng);
            let x = (ln_median + self.sigma_log * z).exp();
            if (self.min_kwp..=self.max_kwp).contains(&x) {
                return x;
            }
        }
        // bounds far in the tails; settle for the nearest bound
        self.median_kwp.clamp(self.min_kwp, self.max_kwp)
    }
}

/// One household of the registry.
///
/// When `pv_metered` is set, the PV (and battery) already operate behind the meter and `demand`
/// is the metered grid import; the twin passes it through unchanged.
#[derive(Debug, Clone)]
pub struct Building {
    pub id: u32,
    pub demand: Arc<HourlyTimeSeries>,
    pub pv_kwp: f64,
    pub battery: Option<BatterySpec>,
    pub pv_metered: bool,
}

impl Building {
    pub fn new(id: u32, demand: Arc<HourlyTimeSeries>) -> Self {
        Self {
            id,
            demand,
            pv_kwp: 0.0,
            battery: None,
            pv_metered: false,
        }
    }

    pub fn has_pv(&self) -> bool {
        self.pv_kwp > 0.0
    }

    pub fn has_battery(&self) -> bool {
        self.battery.is_some()
    }

    pub fn validate(&self) -> Result<(), TwinError> {
        if self.has_battery() && !self.has_pv() {
            return Err(TwinError::BatteryWithoutPv(self.id));
        }
        if let Some(spec) = &self.battery {
            spec.validate()?;
        }
        Ok(())
    }
}

/// Draws a PV capacity for a building that has none yet.
pub fn assign_pv_capacity<R: Rng + ?Sized>(
    building: &Building,
    model: &CapacityModel,
    rng: &mut R,
) -> Result<f64, TwinError> {
    if building.has_pv() {
        return Err(TwinError::AlreadyHasPv(building.id));
    }
    model.validate()?;
    Ok(model.sample(rng))
}

/// Hour-by-hour outcome of [`simulate_building`].
#[derive(Debug, Clone)]
pub struct DispatchTrace {
    /// Grid import positive, export negative, kW.
    pub net_load: HourlyTimeSeries,
    /// Stored energy at the end of each hour, kWh.
    pub soc: Vec<f64>,
    pub charge: Vec<f64>,
    pub discharge: Vec<f64>,
    /// Always zero: surplus that cannot be stored is exported.
    pub curtailed_kwh: f64,
}

/// Runs the twin over the full demand horizon, starting from an empty battery.
pub fn simulate_building(
    building: &Building,
    pv_unit_profile: &HourlyTimeSeries,
) -> Result<DispatchTrace, TwinError> {
    building.validate()?;
    let demand = building.demand.as_ref();
    let hours = demand.len();
    if building.pv_metered || !building.has_pv() {
        return Ok(DispatchTrace {
            net_load: demand.clone(),
            soc: vec![0.0; hours],
            charge: vec![0.0; hours],
            discharge: vec![0.0; hours],
            curtailed_kwh: 0.0,
        });
    }
    if !demand.same_horizon(pv_unit_profile) {
        return Err(TwinError::HorizonMismatch(building.id));
    }

    let mut net = Vec::with_capacity(hours);
    let mut soc = Vec::with_capacity(hours);
    let mut charge = Vec::with_capacity(hours);
    let mut discharge = Vec::with_capacity(hours);
    let mut state = BatteryState::default();
    for (d, unit) in demand.values().iter().zip(pv_unit_profile.values()) {
        let residual = d - building.pv_kwp * unit;
        match &building.battery {
            Some(spec) => {
                let out = battery_step(state, residual, spec, 1.0);
                state = out.state;
                net.push(out.grid_power);
                charge.push(out.charge);
                discharge.push(out.discharge);
            }
            None => {
                net.push(residual);
                charge.push(0.0);
                discharge.push(0.0);
            }
        }
        soc.push(state.soc);
    }
    Ok(DispatchTrace {
        net_load: HourlyTimeSeries::new(demand.start(), net)?,
        soc,
        charge,
        discharge,
        curtailed_kwh: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::default_start;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(values: Vec<f64>) -> Arc<HourlyTimeSeries> {
        Arc::new(HourlyTimeSeries::new(default_start(), values).unwrap())
    }

    #[test]
    fn discharge_covers_residual() {
        let out = battery_step(BatteryState { soc: 5.0 }, 3.0, &BatterySpec::lossless(), 1.0);
        assert_eq!(out.discharge, 3.0);
        assert_eq!(out.grid_power, 0.0);
        assert_eq!(out.state.soc, 2.0);
    }

    #[test]
    fn charge_limited_by_free_capacity() {
        let out = battery_step(BatteryState { soc: 9.0 }, -10.0, &BatterySpec::lossless(), 1.0);
        assert_eq!(out.charge, 1.5);
        assert_eq!(out.grid_power, -8.5);
        assert_eq!(out.state.soc, 10.5);
    }

    #[test]
    fn empty_battery_passes_demand() {
        let out = battery_step(BatteryState { soc: 0.0 }, 2.0, &BatterySpec::default(), 1.0);
        assert_eq!(out.grid_power, 2.0);
        assert_eq!(out.state.soc, 0.0);
    }

    #[test]
    fn power_limit_binds() {
        let spec = BatterySpec::lossless();
        let out = battery_step(BatteryState { soc: 10.0 }, 9.0, &spec, 1.0);
        assert_eq!(out.discharge, 7.0);
        assert_eq!(out.grid_power, 2.0);
        let out = battery_step(BatteryState { soc: 0.0 }, -9.0, &spec, 1.0);
        assert_eq!(out.charge, 7.0);
        assert_eq!(out.grid_power, -2.0);
    }

    #[test]
    fn lossy_step_respects_efficiencies() {
        let spec = BatterySpec::default();
        let out = battery_step(BatteryState { soc: 0.0 }, -2.0, &spec, 1.0);
        assert!((out.state.soc - 1.9).abs() < 1e-12);
        let out = battery_step(BatteryState { soc: 0.95 }, 5.0, &spec, 1.0);
        // all stored energy delivers 0.95 * 0.95 kWh
        assert!((out.discharge - 0.9025).abs() < 1e-12);
        assert!(out.state.soc.abs() < 1e-12);
    }

    #[test]
    fn capacity_model_degenerate_and_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fixed = CapacityModel {
            sigma_log: 0.0,
            ..Default::default()
        };
        for _ in 0..10 {
            assert_eq!(fixed.sample(&mut rng), 9.0);
        }
        let model = CapacityModel::default();
        let mut draws: Vec<f64> = (0..10_000).map(|_| model.sample(&mut rng)).collect();
        assert!(draws.iter().all(|x| (2.0..=30.0).contains(x)));
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = (draws[4999] + draws[5000]) / 2.0;
        assert!((median - 9.0).abs() / 9.0 < 0.05, "median {median}");
    }

    #[test]
    fn assign_refuses_existing_pv() {
        let mut b = Building::new(3, series(vec![1.0]));
        b.pv_kwp = 5.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            assign_pv_capacity(&b, &CapacityModel::default(), &mut rng),
            Err(TwinError::AlreadyHasPv(3))
        ));
    }

    #[test]
    fn no_pv_is_identity() {
        let demand = series(vec![0.4, 0.9, 1.3]);
        let b = Building::new(0, demand.clone());
        let unit = HourlyTimeSeries::new(default_start(), vec![0.0, 0.5, 0.9]).unwrap();
        let trace = simulate_building(&b, &unit).unwrap();
        assert_eq!(trace.net_load.values(), demand.values());
    }

    #[test]
    fn surplus_exports() {
        let mut b = Building::new(0, series(vec![0.5, 0.5]));
        b.pv_kwp = 10.0;
        let unit = HourlyTimeSeries::new(default_start(), vec![0.0, 0.6]).unwrap();
        let trace = simulate_building(&b, &unit).unwrap();
        assert_eq!(trace.net_load.values(), &[0.5, -5.5]);
    }

    #[test]
    fn horizon_mismatch_and_invalid_building() {
        let mut b = Building::new(1, series(vec![0.5, 0.5]));
        b.pv_kwp = 1.0;
        let unit = HourlyTimeSeries::new(default_start(), vec![0.0]).unwrap();
        assert!(matches!(
            simulate_building(&b, &unit),
            Err(TwinError::HorizonMismatch(1))
        ));
        let mut c = Building::new(2, series(vec![0.5]));
        c.battery = Some(BatterySpec::default());
        assert!(matches!(
            simulate_building(&c, &unit),
            Err(TwinError::BatteryWithoutPv(2))
        ));
    }

    /// 48-hour hand trace, lossless 7 kW / 10.5 kWh battery, 5 kWp plant.
    #[test]
    fn two_day_trace_matches_hand_table() {
        let mut demand = vec![0.5; 48];
        let mut unit = vec![0.0; 48];
        // day 1: sunny noon, evening peak
        for (h, u) in [(9, 0.4), (10, 0.8), (11, 1.0), (12, 1.0), (13, 0.8), (14, 0.4)] {
            unit[h] = u;
        }
        demand[18] = 3.0;
        demand[19] = 8.0;
        demand[20] = 2.0;
        // day 2: weak sun, same evening
        unit[24 + 12] = 0.3;
        demand[24 + 19] = 8.0;

        // Hand trace of day 1 (pv = 5 * unit):
        //  h9:  residual 0.5-2.0=-1.5 -> charge 1.5, grid 0,   soc 1.5
        //  h10: residual 0.5-4.0=-3.5 -> charge 3.5, grid 0,   soc 5.0
        //  h11: residual -4.5         -> charge 4.5, grid 0,   soc 9.5
        //  h12: residual -4.5         -> charge 1.0, grid -3.5, soc 10.5
        //  h13: residual -3.5         -> charge 0,   grid -3.5, soc 10.5
        //  h14: residual -1.5         -> charge 0,   grid -1.5, soc 10.5
        //  h15-17: residual 0.5       -> discharge 0.5 each, soc 9.0
        //  h18: residual 3.0          -> discharge 3.0, soc 6.0
        //  h19: residual 8.0          -> discharge 6.0 (energy-limited), grid 2.0, soc 0
        //  h20..: battery empty, grid = demand
        // Day 2:
        //  h36: residual 0.5-1.5=-1.0 -> charge 1.0, grid 0, soc 1.0
        //  h37: residual 0.5          -> discharge 0.5, soc 0.5
        //  h38: residual 0.5          -> discharge 0.5, soc 0
        let mut expected_grid = demand.clone();
        let mut expected_soc = vec![0.0; 48];
        let day1 = [
            (9, 0.0, 1.5),
            (10, 0.0, 5.0),
            (11, 0.0, 9.5),
            (12, -3.5, 10.5),
            (13, -3.5, 10.5),
            (14, -1.5, 10.5),
            (15, 0.0, 10.0),
            (16, 0.0, 9.5),
            (17, 0.0, 9.0),
            (18, 0.0, 6.0),
            (19, 2.0, 0.0),
            (36, 0.0, 1.0),
            (37, 0.0, 0.5),
            (38, 0.0, 0.0),
        ];
        for (h, grid, soc) in day1 {
            expected_grid[h] = grid;
            expected_soc[h] = soc;
        }

        let mut b = Building::new(0, series(demand));
        b.pv_kwp = 5.0;
        b.battery = Some(BatterySpec::lossless());
        let unit = HourlyTimeSeries::new(default_start(), unit).unwrap();
        let trace = simulate_building(&b, &unit).unwrap();
        for h in 0..48 {
            assert!(
                (trace.net_load.values()[h] - expected_grid[h]).abs() < 1e-12,
                "grid at {h}: {} vs {}",
                trace.net_load.values()[h],
                expected_grid[h]
            );
            assert!((trace.soc[h] - expected_soc[h]).abs() < 1e-12, "soc at {h}");
        }
    }

    proptest! {
        #[test]
        fn step_invariants(
            soc_frac in 0.0f64..=1.0,
            residual in -20.0f64..20.0,
            power in 0.5f64..15.0,
            capacity in 0.5f64..30.0,
            eta_c in 0.5f64..=1.0,
            eta_d in 0.5f64..=1.0,
            dt in 0.1f64..2.0,
        ) {
            let spec = BatterySpec {
                power_limit: power,
                capacity,
                charge_efficiency: eta_c,
                discharge_efficiency: eta_d,
            };
            let state = BatteryState { soc: soc_frac * capacity };
            let out = battery_step(state, residual, &spec, dt);
            prop_assert!(out.state.soc >= 0.0 && out.state.soc <= capacity);
            prop_assert!(out.charge >= 0.0 && out.charge <= power);
            prop_assert!(out.discharge >= 0.0 && out.discharge <= power);
            prop_assert!(out.charge * out.discharge == 0.0);
            prop_assert!((residual - (out.grid_power + out.discharge - out.charge)).abs() < 1e-9);
            // never charges from or discharges into the grid
            if residual >= 0.0 {
                prop_assert!(out.grid_power >= 0.0);
            } else {
                prop_assert!(out.grid_power <= 0.0);
            }
        }

        #[test]
        fn battery_never_increases_gross_import(
            demand in prop::collection::vec(0.0f64..6.0, 24..96),
            kwp in 0.5f64..20.0,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let unit: Vec<f64> = (0..demand.len()).map(|_| rng.random_range(0.0..1.0)).collect();
            let unit = HourlyTimeSeries::new(default_start(), unit).unwrap();
            let mut plain = Building::new(0, series(demand));
            plain.pv_kwp = kwp;
            let mut with_battery = plain.clone();
            with_battery.battery = Some(BatterySpec::default());
            let import = |t: &DispatchTrace| t.net_load.values().iter().map(|g| g.max(0.0)).sum::<f64>();
            let a = import(&simulate_building(&plain, &unit).unwrap());
            let b = import(&simulate_building(&with_battery, &unit).unwrap());
            prop_assert!(b <= a + 1e-9);
        }

        #[test]
        fn no_sun_means_no_charging(demand in prop::collection::vec(0.0f64..6.0, 1..96)) {
            let n = demand.len();
            let mut b = Building::new(0, series(demand.clone()));
            b.pv_kwp = 8.0;
            b.battery = Some(BatterySpec::default());
            let dark = HourlyTimeSeries::new(default_start(), vec![0.0; n]).unwrap();
            let trace = simulate_building(&b, &dark).unwrap();
            prop_assert!(trace.charge.iter().all(|c| *c == 0.0));
            prop_assert_eq!(trace.net_load.values(), demand.as_slice());
        }
    }
}
