use std::collections::BTreeMap;
use std::io::Write;

use chrono::Datelike;

use super::{DayResult, ExperimentResult, Policy};
use crate::error::Result;

/// Min, lower quartile, median, upper quartile and max, with linear
/// interpolation between order statistics.
pub fn quantiles(values: &[f64]) -> [f64; 5] {
    if values.is_empty() {
        return [f64::NAN; 5];
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let pos = q * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    };
    [v[0], at(0.25), at(0.5), at(0.75), v[v.len() - 1]]
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyRow {
    pub policy: Policy,
    /// User id, or `None` for all users pooled.
    pub user: Option<usize>,
    /// `YYYY-MM`
    pub month: String,
    pub metric: &'static str,
    pub stats: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistRow {
    pub policy: Policy,
    pub violations_per_day: usize,
    pub day_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyRow {
    pub policy: Policy,
    pub user: usize,
    pub date: String,
    pub charging_j: f64,
    pub savings_j: f64,
    pub mean_accuracy: f64,
    pub min_gap: usize,
    pub violations: usize,
    pub infeasible: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricTables {
    pub monthly: Vec<MonthlyRow>,
    pub hist: Vec<HistRow>,
    pub daily: Vec<DailyRow>,
}

pub const METRICS: [&str; 5] = ["charging_j", "savings_j", "mean_accuracy", "min_gap", "violations"];

fn metric_value(day: &DayResult, metric: &str) -> f64 {
    match metric {
        "charging_j" => day.charging_energy_j,
        "savings_j" => day.savings_j(),
        "mean_accuracy" => day.mean_accuracy(),
        "min_gap" => day.min_gap as f64,
        "violations" => day.violations() as f64,
        _ => unreachable!("unknown metric {metric}"),
    }
}

fn month_of(day: &DayResult) -> String {
    format!("{:04}-{:02}", day.date.year(), day.date.month())
}

pub fn compute_metrics(result: &ExperimentResult) -> MetricTables {
    let mut tables = MetricTables::default();
    let mut policies: Vec<Policy> = result.runs.iter().map(|r| r.policy).collect();
    policies.sort();
    policies.dedup();

    for &policy in &policies {
        let mut groups: BTreeMap<(Option<usize>, String), Vec<&DayResult>> = BTreeMap::new();
        let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
        for run in result.runs.iter().filter(|r| r.policy == policy) {
            for d in &run.days {
                groups.entry((Some(run.user), month_of(d))).or_default().push(d);
                groups.entry((None, month_of(d))).or_default().push(d);
                *hist.entry(d.violations()).or_default() += 1;
                tables.daily.push(DailyRow {
                    policy,
                    user: run.user,
                    date: d.date.to_string(),
                    charging_j: d.charging_energy_j,
                    savings_j: d.savings_j(),
                    mean_accuracy: d.mean_accuracy(),
                    min_gap: d.min_gap,
                    violations: d.violations(),
                    infeasible: !d.feasible,
                });
            }
        }
        // pooled rows sort after the per-user ones
        let mut keys: Vec<_> = groups.keys().cloned().collect();
        keys.sort_by(|a, b| (a.0.is_none(), a.0, &a.1).cmp(&(b.0.is_none(), b.0, &b.1)));
        for key in keys {
            let days = &groups[&key];
            for metric in METRICS {
                let values: Vec<f64> = days.iter().map(|d| metric_value(d, metric)).collect();
                tables.monthly.push(MonthlyRow {
                    policy,
                    user: key.0,
                    month: key.1.clone(),
                    metric,
                    stats: quantiles(&values),
                });
            }
        }
        tables.hist.extend(hist.into_iter().map(|(v, c)| HistRow {
            policy,
            violations_per_day: v,
            day_count: c,
        }));
    }
    tables
}

impl MetricTables {
    /// Pooled monthly statistics of one metric for one policy.
    pub fn pooled(&self, policy: Policy, metric: &str) -> Vec<&MonthlyRow> {
        self.monthly
            .iter()
            .filter(|r| r.policy == policy && r.user.is_none() && r.metric == metric)
            .collect()
    }

    pub fn write_monthly<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "policy,user,month,metric,min,q1,median,q3,max")?;
        for r in &self.monthly {
            let user = r.user.map_or_else(|| "all".to_string(), |u| u.to_string());
            let [a, b, c, d, e] = r.stats;
            writeln!(
                w,
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                r.policy, user, r.month, r.metric, a, b, c, d, e
            )?;
        }
        Ok(())
    }

    pub fn write_hist<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "policy,violations_per_day,day_count")?;
        for r in &self.hist {
            writeln!(w, "{},{},{}", r.policy, r.violations_per_day, r.day_count)?;
        }
        Ok(())
    }

    pub fn write_daily<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "policy,user,day,charging_j,savings_j,mean_accuracy,min_gap,violations,infeasible"
        )?;
        for r in &self.daily {
            writeln!(
                w,
                "{},{},{},{:.6},{:.6},{:.6},{},{},{}",
                r.policy,
                r.user,
                r.date,
                r.charging_j,
                r.savings_j,
                r.mean_accuracy,
                r.min_gap,
                r.violations,
                u8::from(r.infeasible)
            )?;
        }
        Ok(())
    }
}
