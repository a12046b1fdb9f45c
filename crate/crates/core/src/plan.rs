//! Plans, constraint checking and the inter-charge gap objective.

use std::io::{Read, Write};

use crate::activity::ActivityLabel;
use crate::energy::{EnergyConfig, ENERGY_EPS};
use crate::error::{Error, Result};
use crate::profile::EnergyAccuracyProfile;

/// Charging and consumption decisions over the remaining horizon, with the
/// battery levels they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub charge_flags: Vec<bool>,
    pub consumption_j: Vec<f64>,
    /// `E_{t+1}` after each interval.
    pub projected_battery_j: Vec<f64>,
    pub first_interval_index: usize,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.charge_flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charge_flags.is_empty()
    }

    pub fn charging_intervals(&self) -> usize {
        self.charge_flags.iter().filter(|&&b| b).count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["interval", "charge", "consumption_j", "projected_battery_j"])?;
        for i in 0..self.len() {
            out.write_record([
                (self.first_interval_index + i).to_string(),
                u8::from(self.charge_flags[i]).to_string(),
                self.consumption_j[i].to_string(),
                self.projected_battery_j[i].to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Plan> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>()
            != ["interval", "charge", "consumption_j", "projected_battery_j"]
        {
            return Err(Error::argument(format!("unexpected plan header {headers:?}")));
        }
        let mut plan = Plan {
            charge_flags: Vec::new(),
            consumption_j: Vec::new(),
            projected_battery_j: Vec::new(),
            first_interval_index: 0,
        };
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |k: usize| -> Result<&str> {
                rec.get(k)
                    .ok_or_else(|| Error::argument(format!("plan row {} is short", i + 2)))
            };
            let bad = |what: &str| Error::argument(format!("plan row {}: bad {what}", i + 2));
            let idx: usize = field(0)?.parse().map_err(|_| bad("interval"))?;
            if i == 0 {
                plan.first_interval_index = idx;
            }
            plan.charge_flags.push(match field(1)? {
                "0" => false,
                "1" => true,
                _ => return Err(bad("charge")),
            });
            plan.consumption_j
                .push(field(2)?.parse().map_err(|_| bad("consumption_j"))?);
            plan.projected_battery_j
                .push(field(3)?.parse().map_err(|_| bad("projected_battery_j"))?);
        }
        Ok(plan)
    }
}

/// Constraint violations counted over a plan or a realized day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ViolationReport {
    pub energy_floor_violations: usize,
    pub accuracy_violations: usize,
    pub critical_charging_violations: usize,
    pub terminal_violation: bool,
}

impl ViolationReport {
    /// Sum over all categories, the terminal flag counting as one.
    pub fn total(&self) -> usize {
        self.energy_floor_violations
            + self.accuracy_violations
            + self.critical_charging_violations
            + usize::from(self.terminal_violation)
    }

    pub fn is_clean(&self) -> bool {
        self.total() == 0
    }
}

/// Minimum spacing between the start times of consecutive charging sessions.
///
/// Consecutive `true` flags form one session. With fewer than two sessions
/// the full horizon length is returned.
pub fn min_intercharge_gap(charge_flags: &[bool]) -> usize {
    let starts: Vec<usize> = charge_flags
        .iter()
        .enumerate()
        .filter(|&(i, &b)| b && (i == 0 || !charge_flags[i - 1]))
        .map(|(i, _)| i)
        .collect();
    starts
        .windows(2)
        .map(|w| w[1] - w[0])
        .min()
        .unwrap_or(charge_flags.len())
}

pub(crate) fn report_for_mask(
    charge_flags: &[bool],
    consumption_j: &[f64],
    projected_battery_j: &[f64],
    critical: &[bool],
    profile: &EnergyAccuracyProfile,
    a_min: f64,
    config: &EnergyConfig,
) -> ViolationReport {
    let mut report = ViolationReport::default();
    for t in 0..charge_flags.len() {
        if projected_battery_j[t] < config.e_min_j - ENERGY_EPS {
            report.energy_floor_violations += 1;
        }
        if profile.accuracy_of(consumption_j[t]) < a_min - ENERGY_EPS {
            report.accuracy_violations += 1;
        }
        if charge_flags[t] && critical[t] {
            report.critical_charging_violations += 1;
        }
    }
    if let Some(&last) = projected_battery_j.last() {
        report.terminal_violation = last < config.e_target_j - ENERGY_EPS;
    }
    report
}

pub fn check_constraints(
    plan: &Plan,
    activities: &[ActivityLabel],
    profile: &EnergyAccuracyProfile,
    a_min: f64,
    critical_set: &[ActivityLabel],
    config: &EnergyConfig,
) -> Result<ViolationReport> {
    if activities.len() != plan.len()
        || plan.consumption_j.len() != plan.len()
        || plan.projected_battery_j.len() != plan.len()
    {
        return Err(Error::argument("plan and activity vectors must be length-aligned"));
    }
    let critical: Vec<bool> = activities.iter().map(|a| critical_set.contains(a)).collect();
    Ok(report_for_mask(
        &plan.charge_flags,
        &plan.consumption_j,
        &plan.projected_battery_j,
        &critical,
        profile,
        a_min,
        config,
    ))
}
