//! Comparison policies: reactive on-demand charging, energy-neutral
//! allocation and an exact offline oracle.

use crate::energy::{next_energy, project, BatteryState, EnergyConfig, ENERGY_EPS};
use crate::error::{Error, Result};
use crate::plan::{min_intercharge_gap, Plan};
use crate::planner::{plan_horizon, PlanningProblem};
use crate::profile::EnergyAccuracyProfile;

/// Charges once the battery falls below `e_min_j` and keeps charging until
/// it reaches `e_target_j`; always consumes for the fixed accuracy.
/// Critical activities are ignored.
pub fn on_demand_decide(
    state: BatteryState,
    config: &EnergyConfig,
    currently_charging: bool,
    profile: &EnergyAccuracyProfile,
    a_fixed: f64,
) -> Result<(bool, f64)> {
    let consumption = profile.min_consumption_for(a_fixed)?;
    let e = state.energy_j;
    let charge = e < config.e_min_j || (currently_charging && e < config.e_target_j);
    Ok((charge, consumption))
}

/// Spreads a day's harvest evenly over the horizon, capped at the
/// highest-accuracy consumption. Never charges.
pub fn energy_neutral_allocate(
    daily_harvest_j: f64,
    horizon: usize,
    profile: &EnergyAccuracyProfile,
) -> Vec<f64> {
    if horizon == 0 {
        return Vec::new();
    }
    let per = (daily_harvest_j.max(0.0) / horizon as f64).min(profile.max_consumption());
    vec![per; horizon]
}

/// Result of the offline oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub plan: Plan,
    /// False when no charging assignment satisfies every constraint; the
    /// plan is then the planner's best effort under the same information.
    pub feasible: bool,
}

/// Does any charging assignment exist? Charging every allowed interval at
/// the lowest admissible consumption dominates every other choice, because
/// the clamped step is monotone in both.
pub fn instance_feasible(
    harvest_j: &[f64],
    initial: BatteryState,
    config: &EnergyConfig,
    min_consumption_j: f64,
    critical: &[bool],
) -> bool {
    let charge: Vec<bool> = critical.iter().map(|&c| !c).collect();
    let cons = vec![min_consumption_j; harvest_j.len()];
    levels_feasible(&project(initial.energy_j, config, harvest_j, &charge, &cons), config)
}

fn levels_feasible(levels: &[f64], config: &EnergyConfig) -> bool {
    levels.iter().all(|&e| e >= config.e_min_j - ENERGY_EPS)
        && levels
            .last()
            .is_none_or(|&e| e >= config.e_target_j - ENERGY_EPS)
}

struct Search<'a> {
    harvest: &'a [f64],
    critical: &'a [bool],
    config: &'a EnergyConfig,
    min_c: f64,
    /// Suffix sums of delivered harvest, for the optimistic bound.
    harvest_suffix: Vec<f64>,
    /// Count of allowed charging slots from each index on.
    free_suffix: Vec<usize>,
    flags: Vec<bool>,
    best: Option<(usize, Vec<bool>)>,
}

impl Search<'_> {
    /// Visits every `k`-subset of allowed intervals in lexicographic order of
    /// the sorted index list; keeps the first one with the largest gap.
    fn dfs(&mut self, i: usize, level: f64, remaining: usize) {
        let n = self.harvest.len();
        if i == n {
            if remaining == 0 && level >= self.config.e_target_j - ENERGY_EPS {
                let gap = min_intercharge_gap(&self.flags);
                if self.best.as_ref().is_none_or(|(g, _)| gap > *g) {
                    self.best = Some((gap, self.flags.clone()));
                }
            }
            return;
        }
        if self.free_suffix[i] < remaining {
            return;
        }
        // clamping only lowers levels, so this bounds every completion
        let optimistic = level
            + self.harvest_suffix[i]
            + remaining as f64 * self.config.e_charge_per_interval_j
            - self.min_c * (n - i) as f64;
        if optimistic < self.config.e_target_j - ENERGY_EPS {
            return;
        }
        if remaining > 0 && !self.critical[i] {
            let next = next_energy(level, self.config, self.harvest[i], true, self.min_c);
            if next >= self.config.e_min_j - ENERGY_EPS {
                self.flags[i] = true;
                self.dfs(i + 1, next, remaining - 1);
                self.flags[i] = false;
            }
        }
        let next = next_energy(level, self.config, self.harvest[i], false, self.min_c);
        if next >= self.config.e_min_j - ENERGY_EPS {
            self.dfs(i + 1, next, remaining);
        }
    }
}

/// Raises consumption breakpoint by breakpoint, earliest interval first,
/// as long as the whole trajectory stays feasible.
fn raise_consumption(
    harvest: &[f64],
    initial: f64,
    config: &EnergyConfig,
    profile: &EnergyAccuracyProfile,
    flags: &[bool],
    consumption: &mut [f64],
) {
    for t in 0..consumption.len() {
        while let Some(up) = profile.next_higher(consumption[t]) {
            let keep = consumption[t];
            consumption[t] = up;
            if !levels_feasible(&project(initial, config, harvest, flags, consumption), config) {
                consumption[t] = keep;
                break;
            }
        }
    }
}

/// Exact offline plan under known harvest: the fewest charging intervals,
/// then the largest minimum inter-charge gap, then the lexicographically
/// earliest charging indices; consumption is raised afterwards wherever the
/// slack allows.
pub fn optimal_oracle(
    actual_harvest_j: &[f64],
    initial: BatteryState,
    config: &EnergyConfig,
    profile: &EnergyAccuracyProfile,
    a_min: f64,
    critical: &[bool],
) -> Result<OracleOutcome> {
    let n = actual_harvest_j.len();
    if n == 0 || critical.len() != n {
        return Err(Error::argument("harvest and critical mask must be non-empty and aligned"));
    }
    if let Some(h) = actual_harvest_j.iter().find(|h| !(**h >= 0.0)) {
        return Err(Error::argument(format!("harvest must be >= 0, got {h}")));
    }
    let min_c = profile.min_consumption_for(a_min)?;

    if !instance_feasible(actual_harvest_j, initial, config, min_c, critical) {
        let problem = PlanningProblem {
            predictions_j: actual_harvest_j,
            initial,
            config,
            profile,
            a_min,
            critical,
        };
        return Ok(OracleOutcome {
            plan: plan_horizon(&problem)?.plan,
            feasible: false,
        });
    }

    let mut harvest_suffix = vec![0.0; n + 1];
    let mut free_suffix = vec![0usize; n + 1];
    for i in (0..n).rev() {
        harvest_suffix[i] = harvest_suffix[i + 1] + config.harvest_efficiency * actual_harvest_j[i];
        free_suffix[i] = free_suffix[i + 1] + usize::from(!critical[i]);
    }
    let mut search = Search {
        harvest: actual_harvest_j,
        critical,
        config,
        min_c,
        harvest_suffix,
        free_suffix,
        flags: vec![false; n],
        best: None,
    };
    let mut chosen = None;
    for k in 0..=search.free_suffix[0] {
        search.dfs(0, initial.energy_j, k);
        if let Some((_, flags)) = search.best.take() {
            chosen = Some(flags);
            break;
        }
    }
    let flags = chosen.expect("a feasible instance has a feasible assignment");

    let mut consumption = vec![min_c; n];
    raise_consumption(actual_harvest_j, initial.energy_j, config, profile, &flags, &mut consumption);
    let levels = project(initial.energy_j, config, actual_harvest_j, &flags, &consumption);
    Ok(OracleOutcome {
        plan: Plan {
            charge_flags: flags,
            consumption_j: consumption,
            projected_battery_j: levels,
            first_interval_index: initial.interval_index,
        },
        feasible: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn on_demand_thresholds() {
        let cfg = EnergyConfig::default();
        let prof = EnergyAccuracyProfile::default();
        let d = |e: f64, charging: bool| {
            on_demand_decide(BatteryState::new(e), &cfg, charging, &prof, 0.9).unwrap()
        };
        assert_eq!(d(15.9, false), (true, 3.0));
        assert_eq!(d(80.0, true), (true, 3.0));
        assert_eq!(d(96.0, true), (false, 3.0));
        assert_eq!(d(50.0, false), (false, 3.0));
    }

    #[test]
    fn energy_neutral_examples() {
        let prof = EnergyAccuracyProfile::default();
        assert_eq!(energy_neutral_allocate(48.0, 24, &prof), vec![2.0; 24]);
        let zero = energy_neutral_allocate(0.0, 24, &prof);
        assert_eq!(zero, vec![0.0; 24]);
        assert_eq!(prof.accuracy_of(zero[0]), prof.floor_accuracy());
        let capped = energy_neutral_allocate(240.0, 24, &prof);
        assert_eq!(capped, vec![4.0; 24]);
        assert_eq!(240.0 - capped.iter().sum::<f64>(), 144.0);
    }

    #[test]
    fn oracle_without_charging() {
        let cfg = EnergyConfig::default();
        let prof = EnergyAccuracyProfile::default();
        let harvest = vec![5.0; 24];
        let out = optimal_oracle(&harvest, BatteryState::new(96.0), &cfg, &prof, 0.9, &[false; 24]).unwrap();
        assert!(out.feasible);
        assert_eq!(out.plan.charging_intervals(), 0);
        assert!(out.plan.consumption_j.iter().all(|&c| c == 4.0));
    }

    #[test]
    fn oracle_infeasible_instance() {
        let cfg = EnergyConfig::default();
        let prof = EnergyAccuracyProfile::default();
        let out = optimal_oracle(&[0.0; 4], BatteryState::new(20.0), &cfg, &prof, 0.9, &[true; 4]).unwrap();
        assert!(!out.feasible);
        assert_eq!(out.plan.charging_intervals(), 0);
    }
}
