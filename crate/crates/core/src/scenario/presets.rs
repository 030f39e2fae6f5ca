use serde::{Deserialize, Serialize};

use super::ScenarioError;

/// Number of households in the reference town.
pub const REFERENCE_REGISTRY_SIZE: usize = 3511;

/// National 2037 targets, kW.
const NATIONAL_PV_TARGET_KW: f64 = 345.4e6;
const NATIONAL_BATTERY_TARGET_KW: f64 = 67.4e6;
/// Local values these targets regionalise to, kW.
const LOCAL_PV_TARGET_KW: f64 = 32_000.0;
const LOCAL_BATTERY_TARGET_KW: f64 = 15_200.0;
/// Installed in the town in 2021, kW.
const CURRENT_PV_KW: f64 = 9_000.0;
const CURRENT_BATTERY_KW: f64 = 425.0;
/// Linear extrapolation of the additions to date, kW.
const LINEAR_PV_ADDITION_KW: f64 = 19_000.0;
const LINEAR_BATTERY_ADDITION_KW: f64 = 8_800.0;

/// Scales a national value to the local grid. Units are preserved.
pub fn regionalize_target(national_value: f64, scaling_ratio: f64) -> f64 {
    debug_assert!(scaling_ratio >= 0.0);
    national_value * scaling_ratio
}

/// National-to-local scaling ratios, one per technology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionalizationRatios {
    pub pv: f64,
    pub battery: f64,
}

impl Default for RegionalizationRatios {
    fn default() -> Self {
        Self {
            pv: LOCAL_PV_TARGET_KW / NATIONAL_PV_TARGET_KW,
            battery: LOCAL_BATTERY_TARGET_KW / NATIONAL_BATTERY_TARGET_KW,
        }
    }
}

impl RegionalizationRatios {
    pub fn national_2037_target(&self) -> ExpansionTarget {
        ExpansionTarget {
            pv_power_target: regionalize_target(NATIONAL_PV_TARGET_KW, self.pv),
            battery_power_target: regionalize_target(NATIONAL_BATTERY_TARGET_KW, self.battery),
        }
    }
}

/// Fleet totals to reach, kW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionTarget {
    pub pv_power_target: f64,
    pub battery_power_target: f64,
}

impl ExpansionTarget {
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            pv_power_target: self.pv_power_target * factor,
            battery_power_target: self.battery_power_target * factor,
        }
    }
}

/// Building-type counts of a fleet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Composition {
    pub no_pv: usize,
    pub pv_only: usize,
    pub pv_battery: usize,
}

impl Composition {
    pub const fn new(no_pv: usize, pv_only: usize, pv_battery: usize) -> Self {
        Self {
            no_pv,
            pv_only,
            pv_battery,
        }
    }

    pub fn total(&self) -> usize {
        self.no_pv + self.pv_only + self.pv_battery
    }

    /// Rescales to `households` buildings with the largest-remainder method, so the result sums
    /// exactly to `households`.
    pub fn scaled_to(&self, households: usize) -> Result<Composition, ScenarioError> {
        let total = self.total();
        if total == 0 {
            return Err(ScenarioError::InvalidComposition("empty composition".into()));
        }
        if households == total {
            return Ok(*self);
        }
        let parts = [self.no_pv, self.pv_only, self.pv_battery];
        let exact: Vec<f64> = parts
            .iter()
            .map(|p| *p as f64 * households as f64 / total as f64)
            .collect();
        let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let mut order: Vec<usize> = (0..3).collect();
        // ties go to the earlier category
        order.sort_by(|a, b| {
            let ra = exact[*a] - exact[*a].floor();
            let rb = exact[*b] - exact[*b].floor();
            rb.partial_cmp(&ra).unwrap().then(a.cmp(b))
        });
        let missing = households - counts.iter().sum::<usize>();
        for i in order.into_iter().take(missing) {
            counts[i] += 1;
        }
        Ok(Composition::new(counts[0], counts[1], counts[2]))
    }
}

/// The three grid states of the study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioPreset {
    /// Current state, as metered.
    #[serde(rename = "CS")]
    Cs,
    /// Regionalised national 2037 targets.
    S1,
    /// Linear extrapolation of the expansion to date.
    S2,
}

impl ScenarioPreset {
    pub const ALL: [ScenarioPreset; 3] = [ScenarioPreset::Cs, ScenarioPreset::S1, ScenarioPreset::S2];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioPreset::Cs => "CS",
            ScenarioPreset::S1 => "S1",
            ScenarioPreset::S2 => "S2",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Fleet composition of the reference town after the scenario's retrofits.
    pub fn composition(self) -> Composition {
        match self {
            ScenarioPreset::Cs => Composition::new(3017, 377, 117),
            ScenarioPreset::S1 => Composition::new(189, 1179, 2143),
            ScenarioPreset::S2 => Composition::new(1328, 888, 1295),
        }
    }

    /// Installed PV and battery power for the reference town, kW.
    pub fn target(self) -> ExpansionTarget {
        match self {
            ScenarioPreset::Cs => ExpansionTarget {
                pv_power_target: CURRENT_PV_KW,
                battery_power_target: CURRENT_BATTERY_KW,
            },
            ScenarioPreset::S1 => RegionalizationRatios::default().national_2037_target(),
            ScenarioPreset::S2 => ExpansionTarget {
                pv_power_target: CURRENT_PV_KW + LINEAR_PV_ADDITION_KW,
                battery_power_target: CURRENT_BATTERY_KW + LINEAR_BATTERY_ADDITION_KW,
            },
        }
    }

    /// Whether a standard load profile exists for this grid state (only the metered one).
    pub fn has_standard_profile(self) -> bool {
        matches!(self, ScenarioPreset::Cs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regionalized_targets() {
        let pv = regionalize_target(345.4e6, 9.264e-5);
        assert!((pv / 1000.0 - 32.0).abs() < 0.05, "{pv}");
        let battery = regionalize_target(67.4e6, 2.2552e-4);
        assert!((battery / 1000.0 - 15.2).abs() < 0.05, "{battery}");
        assert_eq!(regionalize_target(123.0, 0.0), 0.0);

        let target = RegionalizationRatios::default().national_2037_target();
        assert!((target.pv_power_target - 32_000.0).abs() < 1e-6);
        assert!((target.battery_power_target - 15_200.0).abs() < 1e-6);
    }

    #[test]
    fn presets_sum_to_registry() {
        for p in ScenarioPreset::ALL {
            assert_eq!(p.composition().total(), REFERENCE_REGISTRY_SIZE);
        }
        assert_eq!(ScenarioPreset::S1.target().pv_power_target, 32_000.0);
        assert_eq!(ScenarioPreset::S2.target().pv_power_target, 28_000.0);
        assert!((ScenarioPreset::S2.target().battery_power_target - 9_225.0).abs() < 1e-9);
    }

    #[test]
    fn scaling_uses_largest_remainder() {
        let cs = ScenarioPreset::Cs.composition().scaled_to(500).unwrap();
        assert_eq!(cs, Composition::new(429, 54, 17));
        let s1 = ScenarioPreset::S1.composition().scaled_to(500).unwrap();
        assert_eq!(s1, Composition::new(27, 168, 305));
        let s2 = ScenarioPreset::S2.composition().scaled_to(500).unwrap();
        assert_eq!(s2, Composition::new(189, 127, 184));
        for n in [1, 7, 100, 3511, 10_000] {
            assert_eq!(ScenarioPreset::S2.composition().scaled_to(n).unwrap().total(), n);
        }
    }
}
