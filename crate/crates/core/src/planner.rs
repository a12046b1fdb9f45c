//! Receding-horizon charging and consumption planner.
//!
//! [`plan_horizon`] starts from "never charge, consume for maximum
//! accuracy" and repairs projected battery violations under worst-case
//! harvest: first by lowering consumption on the intervals that spend the
//! most (never below the accuracy floor), then by scheduling charging
//! intervals sized to the terminal energy deficit. [`replan`] re-runs it on
//! the shrinking horizon as actual harvest is observed.

use crate::activity::ActivityLabel;
use crate::energy::{project, BatteryState, EnergyConfig, ENERGY_EPS};
use crate::error::{Error, Result};
use crate::harvest::ActivitySchedule;
use crate::plan::{report_for_mask, Plan, ViolationReport};
use crate::profile::EnergyAccuracyProfile;

/// Inputs of one planning call over the remaining horizon.
#[derive(Debug, Clone)]
pub struct PlanningProblem<'a> {
    /// Worst-case harvest for each remaining interval.
    pub predictions_j: &'a [f64],
    pub initial: BatteryState,
    pub config: &'a EnergyConfig,
    pub profile: &'a EnergyAccuracyProfile,
    pub a_min: f64,
    /// `true` where charging is forbidden.
    pub critical: &'a [bool],
}

impl PlanningProblem<'_> {
    pub fn len(&self) -> usize {
        self.predictions_j.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions_j.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.predictions_j.is_empty() {
            return Err(Error::argument("planning horizon is empty"));
        }
        if self.critical.len() != self.predictions_j.len() {
            return Err(Error::argument(format!(
                "critical mask has {} entries for a horizon of {}",
                self.critical.len(),
                self.predictions_j.len()
            )));
        }
        if let Some(p) = self.predictions_j.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::argument(format!("predicted harvest must be >= 0, got {p}")));
        }
        Ok(())
    }
}

/// A plan and whether it satisfies every constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub plan: Plan,
    /// Violations left in the best-effort plan of an infeasible instance.
    pub infeasibility: Option<ViolationReport>,
    /// Repair-loop iterations used.
    pub iterations: usize,
}

impl PlanOutcome {
    pub fn is_feasible(&self) -> bool {
        self.infeasibility.is_none()
    }
}

/// First interval whose end-of-interval level breaks the floor, else the
/// last interval if the terminal target is missed.
fn first_violation(levels: &[f64], config: &EnergyConfig) -> Option<usize> {
    levels
        .iter()
        .position(|&e| e < config.e_min_j - ENERGY_EPS)
        .or_else(|| {
            let last = levels.len() - 1;
            (levels[last] < config.e_target_j - ENERGY_EPS).then_some(last)
        })
}

/// Terminal level without the lower clamp, so a deep shortfall shows up in
/// full when sizing the charging deficit.
fn terminal_without_floor(problem: &PlanningProblem<'_>, charge: &[bool], consumption: &[f64]) -> f64 {
    let config = problem.config;
    let mut level = problem.initial.energy_j;
    for t in 0..charge.len() {
        let raw = crate::energy::raw_balance(level, config, problem.predictions_j[t], charge[t], consumption[t]);
        level = raw.min(config.e_max_j);
    }
    level
}

/// Non-critical, not yet charging intervals: from `from` forward, then
/// backward from `from - 1`. A floor breach at `from` cannot be lifted by
/// charging later, so the nearest interval at or before it goes first.
fn charge_candidates(from: usize, floor_breach: bool, charge: &[bool], critical: &[bool]) -> Vec<usize> {
    let free = |t: &usize| !charge[*t] && !critical[*t];
    let mut out: Vec<usize> = (from..charge.len())
        .filter(free)
        .chain((0..from).rev().filter(free))
        .collect();
    if floor_breach {
        if let Some(i) = out.iter().position(|&t| t <= from) {
            let t = out.remove(i);
            out.insert(0, t);
        }
    }
    out
}

/// Lowers consumption one profile breakpoint at a time, always on the
/// highest-consuming interval in `0..=v` (earliest first on ties), until
/// the violation at `v` clears or nothing in `0..=v` is above `floor`.
/// Returns false when there was nothing to lower.
fn reduce_pass(
    problem: &PlanningProblem<'_>,
    charge: &[bool],
    consumption: &mut [f64],
    v: usize,
    floor: f64,
) -> bool {
    let mut changed = false;
    loop {
        let pick = (0..=v)
            .filter(|&t| consumption[t] > floor + ENERGY_EPS)
            .fold(None, |best: Option<usize>, t| match best {
                Some(b) if consumption[b] >= consumption[t] - ENERGY_EPS => Some(b),
                _ => Some(t),
            });
        let Some(t) = pick else {
            return changed;
        };
        consumption[t] = problem.profile.next_lower(consumption[t]).unwrap_or(floor).max(floor);
        changed = true;
        let levels = project(
            problem.initial.energy_j,
            problem.config,
            problem.predictions_j,
            charge,
            consumption,
        );
        if first_violation(&levels, problem.config).is_none_or(|w| w > v) {
            return true;
        }
    }
}

pub fn plan_horizon(problem: &PlanningProblem<'_>) -> Result<PlanOutcome> {
    problem.validate()?;
    let config = problem.config;
    let profile = problem.profile;
    let n = problem.len();

    let min_c = profile.min_consumption_for(problem.a_min)?;
    let mut charge = vec![false; n];
    let mut consumption = vec![profile.max_consumption(); n];
    // once charging options run out, accuracy is given up before the battery
    let mut sacrificing = false;
    let mut iterations = 0;

    let levels = loop {
        let levels = project(
            problem.initial.energy_j,
            config,
            problem.predictions_j,
            &charge,
            &consumption,
        );
        let Some(v) = first_violation(&levels, config) else {
            break levels;
        };
        iterations += 1;

        let floor = if sacrificing { profile.min_consumption() } else { min_c };
        let reduced = reduce_pass(problem, &charge, &mut consumption, v, floor);
        if sacrificing {
            if reduced {
                continue;
            }
            break levels;
        }
        // lowering consumption never moves the first violation earlier
        let levels = if reduced {
            let after = project(
                problem.initial.energy_j,
                config,
                problem.predictions_j,
                &charge,
                &consumption,
            );
            if first_violation(&after, config).is_none_or(|w| w > v) {
                continue;
            }
            after
        } else {
            levels
        };

        let deficit = config.e_target_j - terminal_without_floor(problem, &charge, &consumption);
        let needed = ((deficit / config.e_charge_per_interval_j).ceil().max(1.0)) as usize;
        let floor_breach = levels[v] < config.e_min_j - ENERGY_EPS;
        let candidates = charge_candidates(v, floor_breach, &charge, problem.critical);
        if candidates.is_empty() {
            sacrificing = true;
            continue;
        }
        for &t in candidates.iter().take(needed) {
            charge[t] = true;
        }
    };

    let report = report_for_mask(
        &charge,
        &consumption,
        &levels,
        problem.critical,
        profile,
        problem.a_min,
        config,
    );
    Ok(PlanOutcome {
        plan: Plan {
            charge_flags: charge,
            consumption_j: consumption,
            projected_battery_j: levels,
            first_interval_index: problem.initial.interval_index,
        },
        infeasibility: (!report.is_clean()).then_some(report),
        iterations,
    })
}

/// Re-plans the rest of the horizon from the battery state reached after
/// observing the previous interval's actual harvest.
pub fn replan(
    previous: &Plan,
    observed_harvest_j: f64,
    new_state: BatteryState,
    problem_rest: &PlanningProblem<'_>,
) -> Result<PlanOutcome> {
    if !(observed_harvest_j >= 0.0) {
        return Err(Error::argument("observed harvest must be >= 0"));
    }
    if problem_rest.len() + 1 != previous.len() {
        return Err(Error::argument(format!(
            "remaining horizon {} does not follow a plan of length {}",
            problem_rest.len(),
            previous.len()
        )));
    }
    let problem = PlanningProblem {
        initial: BatteryState {
            energy_j: new_state.energy_j,
            interval_index: previous.first_interval_index + 1,
        },
        ..problem_rest.clone()
    };
    plan_horizon(&problem)
}

/// Expected critical intervals derived from past days.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalMask {
    pub mask: Vec<bool>,
    /// No usable history; the mask is all false.
    pub cold_start: bool,
}

/// Marks interval `i` of the horizon critical when a critical activity was
/// seen at its interval-of-day on at least `threshold` of the whole days in
/// `history`. The horizon begins at interval-of-day `start_slot`.
pub fn expected_activity_mask(
    history: &ActivitySchedule,
    critical_set: &[ActivityLabel],
    start_slot: usize,
    horizon: usize,
    threshold: f64,
) -> CriticalMask {
    let ipd = history.intervals_per_day;
    let days = history.len() / ipd;
    if days == 0 {
        return CriticalMask {
            mask: vec![false; horizon],
            cold_start: true,
        };
    }
    let freq: Vec<f64> = (0..ipd)
        .map(|slot| {
            let hits = (0..days)
                .filter(|d| critical_set.contains(&history.labels[d * ipd + slot]))
                .count();
            hits as f64 / days as f64
        })
        .collect();
    CriticalMask {
        mask: (0..horizon)
            .map(|i| freq[(start_slot + i) % ipd] >= threshold)
            .collect(),
        cold_start: false,
    }
}

/// Replaces the expectation for an interval with what was actually observed.
pub fn apply_runtime_override(
    mask: &mut [bool],
    index: usize,
    observed: ActivityLabel,
    critical_set: &[ActivityLabel],
) {
    if let Some(m) = mask.get_mut(index) {
        *m = critical_set.contains(&observed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem<'a>(
        predictions: &'a [f64],
        critical: &'a [bool],
        e0: f64,
        config: &'a EnergyConfig,
        profile: &'a EnergyAccuracyProfile,
    ) -> PlanningProblem<'a> {
        PlanningProblem {
            predictions_j: predictions,
            initial: BatteryState::new(e0),
            config,
            profile,
            a_min: 0.9,
            critical,
        }
    }

    #[test]
    fn abundant_harvest_needs_nothing() {
        let cfg = EnergyConfig::default();
        let prof = EnergyAccuracyProfile::default();
        let pred = vec![5.0; 24];
        let crit = vec![false; 24];
        let out = plan_horizon(&problem(&pred, &crit, 96.0, &cfg, &prof)).unwrap();
        assert!(out.is_feasible());
        assert_eq!(out.iterations, 0);
        assert!(out.plan.charge_flags.iter().all(|&b| !b));
        assert!(out.plan.consumption_j.iter().all(|&c| c == 4.0));
    }

    #[test]
    fn zero_harvest_reduces_then_charges() {
        let cfg = EnergyConfig::default();
        let prof = EnergyAccuracyProfile::default();
        let pred = vec![0.0; 24];
        let crit = vec![false; 24];
        let out = plan_horizon(&problem(&pred, &crit, 96.0, &cfg, &prof)).unwrap();
        assert!(out.is_feasible());
        assert!(out.plan.consumption_j.iter().all(|&c| c == 3.0));
        // 96 - 72 = 24 J left, 72 J short of the target: three charging intervals
        assert_eq!(out.plan.charging_intervals(), 3);
        assert_eq!(out.plan.charge_flags[21..], [true, true, true]);
        assert!(*out.plan.projected_battery_j.last().unwrap() >= 96.0);
    }

    #[test]
    fn charging_avoids_critical_window() {
        let cfg = EnergyConfig::default();
        let prof = EnergyAccuracyProfile::default();
        let pred = vec![0.0; 24];
        let mut crit = vec![false; 24];
        for c in &mut crit[8..14] {
            *c = true;
        }
        // low start forces charging around interval 10
        let out = plan_horizon(&problem(&pred, &crit, 45.0, &cfg, &prof)).unwrap();
        assert!(out.is_feasible(), "{:?}", out.infeasibility);
        for t in 8..14 {
            assert!(!out.plan.charge_flags[t]);
        }
        assert!(out.plan.charging_intervals() > 0);
    }

    #[test]
    fn infeasible_instance_returns_best_effort() {
        let cfg = EnergyConfig::default();
        let prof = EnergyAccuracyProfile::default();
        let pred = vec![0.0; 6];
        let crit = vec![true; 6];
        let out = plan_horizon(&problem(&pred, &crit, 30.0, &cfg, &prof)).unwrap();
        let report = out.infeasibility.expect("cannot reach the target without charging");
        assert!(report.terminal_violation);
        assert_eq!(report.critical_charging_violations, 0);
        // accuracy was given up to protect the battery
        assert!(out.plan.consumption_j.iter().all(|&c| c == 1.0));
        assert!(report.accuracy_violations > 0);
    }

    #[test]
    fn misaligned_problem_rejected() {
        let cfg = EnergyConfig::default();
        let prof = EnergyAccuracyProfile::default();
        let pred = vec![0.0; 6];
        let crit = vec![false; 5];
        assert!(plan_horizon(&problem(&pred, &crit, 30.0, &cfg, &prof)).is_err());
        let crit = vec![false; 6];
        let mut p = problem(&pred, &crit, 30.0, &cfg, &prof);
        p.a_min = 0.99;
        assert!(matches!(plan_horizon(&p), Err(Error::Infeasible(_))));
    }

    #[test]
    fn replan_requires_shorter_horizon() {
        let cfg = EnergyConfig::default();
        let prof = EnergyAccuracyProfile::default();
        let pred = vec![1.0; 24];
        let crit = vec![false; 24];
        let first = plan_horizon(&problem(&pred, &crit, 96.0, &cfg, &prof)).unwrap();
        let p = problem(&pred, &crit, 96.0, &cfg, &prof);
        assert!(replan(&first.plan, 1.0, BatteryState::new(96.0), &p).is_err());
        let rest = problem(&pred[1..], &crit[1..], 96.0, &cfg, &prof);
        let out = replan(&first.plan, 1.0, BatteryState::new(93.0), &rest).unwrap();
        assert_eq!(out.plan.first_interval_index, 1);
        assert_eq!(out.plan.len(), 23);
    }

    fn history(days: usize, exercise_days: &[(usize, usize)]) -> ActivitySchedule {
        // exercise_days: (slot, number of days with exercise at that slot)
        let mut labels = vec![ActivityLabel::Leisure; days * 24];
        for &(slot, count) in exercise_days {
            for d in 0..count {
                labels[d * 24 + slot] = ActivityLabel::Exercise;
            }
        }
        ActivitySchedule {
            start: chrono::NaiveDate::from_ymd_opt(2021, 1, 1)
                .unwrap()
                .and_hms_opt(0, 0, 0)
                .unwrap(),
            interval_seconds: 3600.0,
            intervals_per_day: 24,
            outdoor: vec![false; labels.len()],
            labels,
            weekend: vec![false; days],
        }
    }

    #[test]
    fn mask_thresholds() {
        let h = history(30, &[(18, 25), (19, 25), (7, 10)]);
        let m = expected_activity_mask(&h, &[ActivityLabel::Exercise], 0, 24, 0.5);
        assert!(!m.cold_start);
        assert!(m.mask[18] && m.mask[19]);
        assert!(!m.mask[7]);
        assert_eq!(m.mask.iter().filter(|&&b| b).count(), 2);

        // horizon starting mid-day is aligned by interval-of-day
        let m = expected_activity_mask(&h, &[ActivityLabel::Exercise], 10, 14, 0.5);
        assert!(m.mask[8] && m.mask[9]);
    }

    #[test]
    fn empty_history_is_cold_start() {
        let h = history(0, &[]);
        let m = expected_activity_mask(&h, &[ActivityLabel::Exercise], 0, 24, 0.5);
        assert!(m.cold_start);
        assert!(m.mask.iter().all(|&b| !b));
    }

    #[test]
    fn runtime_exercise_blocks_charging() {
        let cfg = EnergyConfig::default();
        let prof = EnergyAccuracyProfile::default();
        let h = history(30, &[(18, 25)]);
        let mut mask = expected_activity_mask(&h, &[ActivityLabel::Exercise], 21, 3, 0.5).mask;
        assert!(mask.iter().all(|&b| !b));
        // exercise observed at 21, which the history never marked
        apply_runtime_override(&mut mask, 0, ActivityLabel::Exercise, &[ActivityLabel::Exercise]);
        let pred = vec![0.0; 3];
        let out = plan_horizon(&problem(&pred, &mask, 60.0, &cfg, &prof)).unwrap();
        assert!(!out.plan.charge_flags[0]);
        assert!(out.plan.charge_flags[1] && out.plan.charge_flags[2]);
    }
}
