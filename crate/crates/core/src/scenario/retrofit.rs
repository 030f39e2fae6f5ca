use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Composition, ExpansionTarget, ScenarioError};
use crate::twin::{assign_pv_capacity, BatterySpec, Building, CapacityModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Add plants until the fleet reaches the power targets.
    TargetPower,
    /// Reach the given final fleet composition exactly.
    TargetCount,
}

/// Concrete retrofits for one scenario run. Buildings are referenced by id.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrofitPlan {
    pub pv_only_additions: Vec<(u32, f64)>,
    pub pv_battery_additions: Vec<(u32, f64, BatterySpec)>,
    pub seed: u64,
}

impl RetrofitPlan {
    pub fn is_empty(&self) -> bool {
        self.pv_only_additions.is_empty() && self.pv_battery_additions.is_empty()
    }

    pub fn added_pv_kw(&self) -> f64 {
        self.pv_only_additions.iter().map(|(_, kwp)| kwp).sum::<f64>()
            + self.pv_battery_additions.iter().map(|(_, kwp, _)| kwp).sum::<f64>()
    }

    pub fn added_battery_kw(&self) -> f64 {
        self.pv_battery_additions.iter().map(|(_, _, b)| b.power_limit).sum()
    }
}

/// Counts of buildings without PV, with PV only and with PV and battery.
pub fn composition_of(fleet: &[Building]) -> Composition {
    let mut c = Composition::new(0, 0, 0);
    for b in fleet {
        match (b.has_pv(), b.has_battery()) {
            (false, _) => c.no_pv += 1,
            (true, false) => c.pv_only += 1,
            (true, true) => c.pv_battery += 1,
        }
    }
    c
}

/// Selects households for new PV and PV-battery systems at random.
///
/// Only buildings without PV are eligible. In `TargetCount` mode `counts` is the desired final
/// composition of the fleet; in `TargetPower` mode the plan stops as soon as each fleet total
/// reaches its target, so it overshoots by less than one plant or one battery.
#[allow(clippy::too_many_arguments)]
pub fn select_retrofits(
    registry: &[Building],
    target: &ExpansionTarget,
    mode: SelectionMode,
    counts: Option<Composition>,
    capacity_model: &CapacityModel,
    battery: &BatterySpec,
    seed: u64,
) -> Result<RetrofitPlan, ScenarioError> {
    battery.validate()?;
    capacity_model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eligible: Vec<&Building> = registry.iter().filter(|b| !b.has_pv()).collect();
    eligible.shuffle(&mut rng);

    let mut plan = RetrofitPlan {
        pv_only_additions: Vec::new(),
        pv_battery_additions: Vec::new(),
        seed,
    };

    match mode {
        SelectionMode::TargetCount => {
            let wanted = counts.ok_or(ScenarioError::MissingCounts)?;
            let existing = composition_of(registry);
            if wanted.total() != registry.len() {
                return Err(ScenarioError::InvalidComposition(format!(
                    "counts sum to {} but the registry has {} buildings",
                    wanted.total(),
                    registry.len()
                )));
            }
            if wanted.pv_only < existing.pv_only || wanted.pv_battery < existing.pv_battery {
                return Err(ScenarioError::InvalidComposition(
                    "counts below the existing installations".into(),
                ));
            }
            let new_battery = wanted.pv_battery - existing.pv_battery;
            let new_pv_only = wanted.pv_only - existing.pv_only;
            if new_battery + new_pv_only > eligible.len() {
                return Err(ScenarioError::Infeasible(format!(
                    "{} retrofits requested, {} buildings without PV",
                    new_battery + new_pv_only,
                    eligible.len()
                )));
            }
            for b in eligible.iter().take(new_battery) {
                let kwp = assign_pv_capacity(b, capacity_model, &mut rng)?;
                plan.pv_battery_additions.push((b.id, kwp, *battery));
            }
            for b in eligible.iter().skip(new_battery).take(new_pv_only) {
                let kwp = assign_pv_capacity(b, capacity_model, &mut rng)?;
                plan.pv_only_additions.push((b.id, kwp));
            }
        }
        SelectionMode::TargetPower => {
            let mut pv_total: f64 = registry.iter().map(|b| b.pv_kwp).sum();
            let mut battery_total: f64 = registry
                .iter()
                .filter_map(|b| b.battery.as_ref())
                .map(|s| s.power_limit)
                .sum();
            let mut new_pv: Vec<(u32, f64)> = Vec::new();
            let mut pool = eligible.iter();
            while pv_total < target.pv_power_target {
                let b = pool.next().ok_or_else(|| {
                    ScenarioError::Infeasible(format!(
                        "PV target {:.1} kW not reached, pool exhausted at {:.1} kW",
                        target.pv_power_target, pv_total
                    ))
                })?;
                let kwp = assign_pv_capacity(b, capacity_model, &mut rng)?;
                pv_total += kwp;
                new_pv.push((b.id, kwp));
            }

            let mut order: Vec<usize> = (0..new_pv.len()).collect();
            order.shuffle(&mut rng);
            let mut with_battery = vec![false; new_pv.len()];
            let mut candidates = order.into_iter();
            while battery_total < target.battery_power_target {
                let i = candidates.next().ok_or_else(|| {
                    ScenarioError::Infeasible(format!(
                        "battery target {:.1} kW not reached with {} new PV buildings",
                        target.battery_power_target,
                        new_pv.len()
                    ))
                })?;
                with_battery[i] = true;
                battery_total += battery.power_limit;
            }
            for ((id, kwp), battery_added) in new_pv.into_iter().zip(with_battery) {
                if battery_added {
                    plan.pv_battery_additions.push((id, kwp, *battery));
                } else {
                    plan.pv_only_additions.push((id, kwp));
                }
            }
        }
    }
    Ok(plan)
}

/// Fleet after the retrofits; added systems are simulated by the twin, not metered.
pub fn apply_plan(registry: &[Building], plan: &RetrofitPlan) -> Result<Vec<Building>, ScenarioError> {
    let mut fleet = registry.to_vec();
    let index: std::collections::HashMap<u32, usize> =
        fleet.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    let mut touched = std::collections::HashSet::new();
    let additions = plan
        .pv_only_additions
        .iter()
        .map(|(id, kwp)| (*id, *kwp, None))
        .chain(
            plan.pv_battery_additions
                .iter()
                .map(|(id, kwp, spec)| (*id, *kwp, Some(*spec))),
        );
    for (id, kwp, battery) in additions {
        if !touched.insert(id) {
            return Err(ScenarioError::InvalidComposition(format!(
                "building {id} appears twice in the plan"
            )));
        }
        let i = *index
            .get(&id)
            .ok_or_else(|| ScenarioError::InvalidComposition(format!("unknown building {id}")))?;
        if fleet[i].has_pv() {
            return Err(crate::twin::TwinError::AlreadyHasPv(id).into());
        }
        fleet[i].pv_kwp = kwp;
        fleet[i].battery = battery;
        fleet[i].pv_metered = false;
    }
    Ok(fleet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{default_start, HourlyTimeSeries};
    use std::sync::Arc;

    fn registry(composition: Composition) -> Vec<Building> {
        let demand = Arc::new(HourlyTimeSeries::new(default_start(), vec![1.0; 24]).unwrap());
        let mut out = Vec::new();
        let mut id = 0;
        for (count, pv, battery) in [
            (composition.no_pv, false, false),
            (composition.pv_only, true, false),
            (composition.pv_battery, true, true),
        ] {
            for _ in 0..count {
                let mut b = Building::new(id, demand.clone());
                if pv {
                    b.pv_kwp = 9.0;
                    b.pv_metered = true;
                }
                if battery {
                    b.battery = Some(BatterySpec::default());
                }
                out.push(b);
                id += 1;
            }
        }
        out
    }

    #[test]
    fn target_count_reproduces_table_counts() {
        let reg = registry(Composition::new(3017, 377, 117));
        for wanted in [
            Composition::new(189, 1179, 2143),
            Composition::new(1328, 888, 1295),
            Composition::new(3017, 377, 117),
        ] {
            let plan = select_retrofits(
                &reg,
                &ExpansionTarget {
                    pv_power_target: 0.0,
                    battery_power_target: 0.0,
                },
                SelectionMode::TargetCount,
                Some(wanted),
                &CapacityModel::default(),
                &BatterySpec::default(),
                11,
            )
            .unwrap();
            let fleet = apply_plan(&reg, &plan).unwrap();
            assert_eq!(composition_of(&fleet), wanted);
        }
    }

    #[test]
    fn target_count_needs_counts_and_feasibility() {
        let reg = registry(Composition::new(5, 1, 0));
        let t = ExpansionTarget {
            pv_power_target: 0.0,
            battery_power_target: 0.0,
        };
        let run = |counts| {
            select_retrofits(
                &reg,
                &t,
                SelectionMode::TargetCount,
                counts,
                &CapacityModel::default(),
                &BatterySpec::default(),
                0,
            )
        };
        assert!(matches!(run(None), Err(ScenarioError::MissingCounts)));
        assert!(matches!(
            run(Some(Composition::new(6, 0, 0))),
            Err(ScenarioError::InvalidComposition(_))
        ));
        assert!(matches!(
            run(Some(Composition::new(2, 2, 2))),
            Ok(plan) if plan.pv_only_additions.len() == 1 && plan.pv_battery_additions.len() == 2
        ));
    }

    #[test]
    fn target_power_overshoots_by_at_most_one_unit() {
        let reg = registry(Composition::new(3017, 377, 117));
        let target = ExpansionTarget {
            pv_power_target: 32_000.0,
            battery_power_target: 15_200.0,
        };
        let model = CapacityModel::default();
        let spec = BatterySpec::default();
        for seed in 0..5 {
            let plan = select_retrofits(&reg, &target, SelectionMode::TargetPower, None, &model, &spec, seed)
                .unwrap();
            let fleet = apply_plan(&reg, &plan).unwrap();
            let pv: f64 = fleet.iter().map(|b| b.pv_kwp).sum();
            let battery: f64 = fleet.iter().filter_map(|b| b.battery).map(|s| s.power_limit).sum();
            let last_plant = plan
                .pv_only_additions
                .iter()
                .map(|(_, k)| *k)
                .chain(plan.pv_battery_additions.iter().map(|(_, k, _)| *k))
                .fold(0.0, f64::max);
            assert!(pv >= 32_000.0 && pv - 32_000.0 < last_plant.max(model.max_kwp));
            assert!(battery >= 15_200.0 && battery - 15_200.0 < 7.0);
        }
    }

    #[test]
    fn target_at_current_totals_is_empty() {
        let reg = registry(Composition::new(10, 3, 2));
        let target = ExpansionTarget {
            pv_power_target: 45.0,
            battery_power_target: 14.0,
        };
        let plan = select_retrofits(
            &reg,
            &target,
            SelectionMode::TargetPower,
            None,
            &CapacityModel::default(),
            &BatterySpec::default(),
            3,
        )
        .unwrap();
        assert!(plan.is_empty());
    }

    #[test]
    fn target_power_reports_infeasible() {
        let reg = registry(Composition::new(3, 0, 0));
        let target = ExpansionTarget {
            pv_power_target: 1_000.0,
            battery_power_target: 0.0,
        };
        let r = select_retrofits(
            &reg,
            &target,
            SelectionMode::TargetPower,
            None,
            &CapacityModel::default(),
            &BatterySpec::default(),
            3,
        );
        assert!(matches!(r, Err(ScenarioError::Infeasible(_))));
    }

    #[test]
    fn plan_never_touches_existing_pv() {
        let reg = registry(Composition::new(50, 20, 5));
        let plan = select_retrofits(
            &reg,
            &ExpansionTarget {
                pv_power_target: 400.0,
                battery_power_target: 100.0,
            },
            SelectionMode::TargetPower,
            None,
            &CapacityModel::default(),
            &BatterySpec::default(),
            9,
        )
        .unwrap();
        let mut ids: Vec<u32> = plan
            .pv_only_additions
            .iter()
            .map(|(id, _)| *id)
            .chain(plan.pv_battery_additions.iter().map(|(id, _, _)| *id))
            .collect();
        let n = ids.len();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), n);
        assert!(ids.iter().all(|id| !reg[*id as usize].has_pv()));
    }
}
