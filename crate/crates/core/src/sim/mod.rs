//! Day-by-day simulation of charging policies over user traces, and the
//! metric tables derived from it.

mod data;
mod metrics;

pub use data::{generate_user, generate_users, train_pooled, training_range, DataSpec, UserTrace};
pub use metrics::{compute_metrics, quantiles, DailyRow, HistRow, MetricTables, MonthlyRow};

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::activity::ActivityLabel;
use crate::baselines::{energy_neutral_allocate, instance_feasible, on_demand_decide, optimal_oracle};
use crate::energy::{step_detailed, BatteryState, EnergyConfig};
use crate::error::{Error, Result};
use crate::plan::{min_intercharge_gap, report_for_mask, Plan, ViolationReport};
use crate::planner::{apply_runtime_override, expected_activity_mask, plan_horizon, replan, PlanningProblem};
use crate::predictor::{worst_case, ExpectedPattern, Forecaster, SideInfo};
use crate::profile::EnergyAccuracyProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    AdaEm,
    OnDemand,
    EnergyNeutral,
    Oracle,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::AdaEm, Policy::OnDemand, Policy::EnergyNeutral, Policy::Oracle];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::AdaEm => "adaem",
            Policy::OnDemand => "on-demand",
            Policy::EnergyNeutral => "energy-neutral",
            Policy::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.as_str() == s.trim())
            .ok_or_else(|| Error::argument(format!("unknown policy '{s}'")))
    }
}

/// Comma-separated policy list.
pub fn parse_policies(s: &str) -> Result<Vec<Policy>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

/// Where AdaEM gets its harvest predictions and critical mask from.
#[derive(Debug, Clone, Copy)]
pub enum PredictionSource<'a> {
    /// Actual harvest and the actual activity schedule.
    Ideal,
    /// Worst-case forecasts and the expected activity pattern.
    Forecast { forecaster: &'a Forecaster, k: f64 },
}

/// Policy-independent simulation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub config: EnergyConfig,
    pub profile: EnergyAccuracyProfile,
    pub a_min: f64,
    pub critical_set: Vec<ActivityLabel>,
    /// Fixed accuracy the on-demand policy consumes for.
    pub on_demand_accuracy: f64,
    /// Past days used for the expected activity pattern.
    pub pattern_days: usize,
    pub mask_threshold: f64,
    pub initial_energy_j: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        let config = EnergyConfig::default();
        Self {
            initial_energy_j: config.e_target_j,
            config,
            profile: EnergyAccuracyProfile::default(),
            a_min: 0.9,
            critical_set: vec![ActivityLabel::Exercise],
            on_demand_accuracy: 0.9,
            pattern_days: 30,
            mask_threshold: 0.5,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.profile
            .min_consumption_for(self.a_min)
            .map_err(|e| Error::config("a_min", e.to_string()))?;
        self.profile
            .min_consumption_for(self.on_demand_accuracy)
            .map_err(|e| Error::config("on_demand_accuracy", e.to_string()))?;
        if !(0.0..=1.0).contains(&self.mask_threshold) {
            return Err(Error::config("mask_threshold", "must lie in [0, 1]"));
        }
        if !(self.initial_energy_j >= 0.0 && self.initial_energy_j <= self.config.e_max_j) {
            return Err(Error::config("initial_energy_j", "must lie in [0, e_max_j]"));
        }
        Ok(())
    }
}

/// Realized outcome of one policy over one day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayResult {
    pub user: usize,
    /// Index of the day inside the evaluation period.
    pub day: usize,
    pub date: NaiveDate,
    /// Battery level at every interval boundary, `horizon + 1` entries.
    pub battery_j: Vec<f64>,
    pub charge_flags: Vec<bool>,
    /// Consumption actually delivered; less than requested when the battery ran dry.
    pub consumption_j: Vec<f64>,
    pub accuracy: Vec<f64>,
    /// Harvest reaching the battery, `η·Σξ`.
    pub harvest_j: f64,
    pub overflow_j: f64,
    /// Requested consumption that an empty battery could not deliver.
    pub shortfall_j: f64,
    pub charging_energy_j: f64,
    pub report: ViolationReport,
    pub min_gap: usize,
    /// Whether any charging assignment could satisfy every constraint,
    /// judged from the realized starting level and actual harvest.
    pub feasible: bool,
}

impl DayResult {
    /// Harvest that was stored or used rather than lost to overflow.
    pub fn savings_j(&self) -> f64 {
        self.harvest_j - self.overflow_j
    }

    pub fn charging_intervals(&self) -> usize {
        self.charge_flags.iter().filter(|&&b| b).count()
    }

    pub fn mean_accuracy(&self) -> f64 {
        self.accuracy.iter().sum::<f64>() / self.accuracy.len().max(1) as f64
    }

    pub fn violations(&self) -> usize {
        self.report.total()
    }
}

/// One policy simulated over the evaluation days of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRun {
    pub policy: Policy,
    pub user: usize,
    /// Hash of the trace this run consumed.
    pub trace_hash: String,
    pub days: Vec<DayResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub runs: Vec<PolicyRun>,
    pub ideal_predictions: bool,
}

impl ExperimentResult {
    pub fn days_of(&self, policy: Policy) -> impl Iterator<Item = &DayResult> + '_ {
        self.runs
            .iter()
            .filter(move |r| r.policy == policy)
            .flat_map(|r| r.days.iter())
    }

    pub fn run(&self, policy: Policy, user: usize) -> Option<&PolicyRun> {
        self.runs.iter().find(|r| r.policy == policy && r.user == user)
    }

    /// Every policy of a user saw the same trace.
    pub fn traces_identical(&self) -> bool {
        self.runs.iter().all(|r| {
            self.runs
                .iter()
                .filter(|o| o.user == r.user)
                .all(|o| o.trace_hash == r.trace_hash)
        })
    }
}

/// State a policy carries from one day to the next besides the battery.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PolicyCarry {
    pub on_demand_charging: bool,
}

/// A day of one user's trace.
#[derive(Debug, Clone, Copy)]
pub struct DayContext<'a> {
    pub trace: &'a UserTrace,
    /// Interval index of the day's first interval in the trace.
    pub start: usize,
    pub day: usize,
}

struct Decision {
    charge: bool,
    consumption_j: f64,
}

/// Forecast-mode inputs fixed for the whole day.
struct Expectation {
    pattern: Option<ExpectedPattern>,
    mask: Vec<bool>,
}

impl Expectation {
    fn build(ctx: &DayContext<'_>, horizon: usize, params: &SimParams) -> Self {
        let schedule = &ctx.trace.schedule;
        let ipd = schedule.intervals_per_day;
        let from = ctx.start.saturating_sub(params.pattern_days * ipd);
        let history = schedule.slice(from, ctx.start - from);
        let mask = expected_activity_mask(&history, &params.critical_set, ctx.start % ipd, horizon, params.mask_threshold);
        Self {
            pattern: ExpectedPattern::from_history(schedule, from..ctx.start),
            mask: mask.mask,
        }
    }
}

fn adaem_predictions(
    ctx: &DayContext<'_>,
    t: usize,
    horizon: usize,
    source: PredictionSource<'_>,
    expectation: Option<&Expectation>,
) -> Result<Vec<f64>> {
    let actual = &ctx.trace.harvest.values_j;
    let now = ctx.start + t;
    match source {
        PredictionSource::Ideal => Ok(actual[now..ctx.start + horizon].to_vec()),
        PredictionSource::Forecast { forecaster, k } => {
            let schedule = &ctx.trace.schedule;
            let ipd = schedule.intervals_per_day;
            let lookback = (forecaster.params.prev_days * ipd).max(forecaster.params.recent);
            let from = now.saturating_sub(lookback);
            let pattern = expectation.and_then(|e| e.pattern.as_ref());
            let side = |rel: usize| {
                let abs = from + rel;
                match pattern {
                    Some(p) if abs != now => p.side(abs % ipd, schedule.is_weekend_at(abs)),
                    _ => SideInfo::from_schedule(schedule, abs.min(schedule.len() - 1)),
                }
            };
            let forecasts = forecaster.forecast(&actual[from..now], horizon - t, side)?;
            Ok(forecasts.into_iter().map(|f| worst_case(f, k)).collect())
        }
    }
}

/// Simulates one policy over one day, applying actual harvest.
pub fn run_day(
    policy: Policy,
    ctx: &DayContext<'_>,
    initial: BatteryState,
    carry: &mut PolicyCarry,
    params: &SimParams,
    source: PredictionSource<'_>,
) -> Result<DayResult> {
    let config = &params.config;
    let profile = &params.profile;
    let horizon = config.horizon_intervals;
    let trace = ctx.trace;
    if ctx.start + horizon > trace.harvest.len() || ctx.start + horizon > trace.schedule.len() {
        return Err(Error::argument(format!(
            "trace of {} intervals does not cover the day starting at {}",
            trace.harvest.len(),
            ctx.start
        )));
    }
    let harvest = &trace.harvest.values_j[ctx.start..ctx.start + horizon];
    let labels = &trace.schedule.labels[ctx.start..ctx.start + horizon];
    let critical: Vec<bool> = labels.iter().map(|l| params.critical_set.contains(l)).collect();
    let min_c = profile.min_consumption_for(params.a_min)?;
    let feasible = instance_feasible(harvest, initial, config, min_c, &critical);

    let expectation = match (policy, source) {
        (Policy::AdaEm, PredictionSource::Forecast { .. }) => Some(Expectation::build(ctx, horizon, params)),
        _ => None,
    };
    let fixed: Option<Plan> = match policy {
        Policy::Oracle => {
            Some(optimal_oracle(harvest, initial, config, profile, params.a_min, &critical)?.plan)
        }
        _ => None,
    };
    let neutral = match policy {
        Policy::EnergyNeutral => {
            let total = config.harvest_efficiency * harvest.iter().sum::<f64>();
            energy_neutral_allocate(total, horizon, profile)
        }
        _ => Vec::new(),
    };

    let mut state = initial;
    let mut battery = Vec::with_capacity(horizon + 1);
    battery.push(state.energy_j);
    let mut flags = Vec::with_capacity(horizon);
    let mut delivered = Vec::with_capacity(horizon);
    let (mut overflow, mut shortfall) = (0.0, 0.0);
    let mut previous: Option<Plan> = None;

    for t in 0..horizon {
        let decision = match policy {
            Policy::AdaEm => {
                let predictions = adaem_predictions(ctx, t, horizon, source, expectation.as_ref())?;
                let mask = match &expectation {
                    Some(e) => {
                        let mut m = e.mask[t..].to_vec();
                        apply_runtime_override(&mut m, 0, labels[t], &params.critical_set);
                        m
                    }
                    None => critical[t..].to_vec(),
                };
                let problem = PlanningProblem {
                    predictions_j: &predictions,
                    initial: state,
                    config,
                    profile,
                    a_min: params.a_min,
                    critical: &mask,
                };
                let outcome = match &previous {
                    Some(prev) => replan(prev, harvest[t - 1], state, &problem)?,
                    None => plan_horizon(&problem)?,
                };
                let d = Decision {
                    charge: outcome.plan.charge_flags[0],
                    consumption_j: outcome.plan.consumption_j[0],
                };
                previous = Some(outcome.plan);
                d
            }
            Policy::OnDemand => {
                let (charge, consumption_j) =
                    on_demand_decide(state, config, carry.on_demand_charging, profile, params.on_demand_accuracy)?;
                carry.on_demand_charging = charge;
                Decision { charge, consumption_j }
            }
            Policy::EnergyNeutral => Decision {
                charge: false,
                consumption_j: neutral[t],
            },
            Policy::Oracle => {
                let plan = fixed.as_ref().expect("oracle plan computed");
                Decision {
                    charge: plan.charge_flags[t],
                    consumption_j: plan.consumption_j[t],
                }
            }
        };
        let out = step_detailed(state, config, harvest[t], decision.charge, decision.consumption_j)?;
        overflow += out.overflow_j;
        shortfall += out.shortfall_j;
        flags.push(decision.charge);
        delivered.push(decision.consumption_j - out.shortfall_j);
        state = out.state;
        battery.push(state.energy_j);
    }

    let accuracy: Vec<f64> = delivered.iter().map(|&c| profile.accuracy_of(c)).collect();
    let report = report_for_mask(&flags, &delivered, &battery[1..], &critical, profile, params.a_min, config);
    let charging = flags.iter().filter(|&&b| b).count();
    Ok(DayResult {
        user: trace.user,
        day: ctx.day,
        date: trace.schedule.timestamp(ctx.start).date(),
        battery_j: battery,
        min_gap: min_intercharge_gap(&flags),
        charge_flags: flags,
        consumption_j: delivered,
        accuracy,
        harvest_j: config.harvest_efficiency * harvest.iter().sum::<f64>(),
        overflow_j: overflow,
        shortfall_j: shortfall,
        charging_energy_j: config.e_charge_per_interval_j * charging as f64,
        report,
        feasible,
    })
}

/// Runs `policy` over `days` consecutive days of `trace` starting at day
/// `first_day`, carrying the battery across days.
pub fn run_policy(
    policy: Policy,
    trace: &UserTrace,
    first_day: usize,
    days: usize,
    params: &SimParams,
    source: PredictionSource<'_>,
) -> Result<PolicyRun> {
    params.validate()?;
    let horizon = params.config.horizon_intervals;
    if horizon != trace.intervals_per_day() {
        return Err(Error::config(
            "horizon_intervals",
            format!("must equal the {} intervals of a trace day", trace.intervals_per_day()),
        ));
    }
    let mut state = BatteryState::new(params.initial_energy_j);
    let mut carry = PolicyCarry::default();
    let mut out = Vec::with_capacity(days);
    for day in 0..days {
        let ctx = DayContext {
            trace,
            start: (first_day + day) * horizon,
            day,
        };
        state.interval_index = ctx.start;
        let result = run_day(policy, &ctx, state, &mut carry, params, source)?;
        state.energy_j = *result.battery_j.last().expect("non-empty trajectory");
        out.push(result);
    }
    Ok(PolicyRun {
        policy,
        user: trace.user,
        trace_hash: trace.hash(),
        days: out,
    })
}

/// Which part of the traces to simulate and how.
#[derive(Debug, Clone)]
pub struct ExperimentSpec<'a> {
    pub policies: Vec<Policy>,
    pub first_day: usize,
    pub days: usize,
    pub params: SimParams,
    pub source: PredictionSource<'a>,
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
}

/// Simulates every policy on every user with identical traces.
pub fn run_experiment(users: &[UserTrace], spec: &ExperimentSpec<'_>) -> Result<ExperimentResult> {
    if spec.policies.is_empty() {
        return Err(Error::argument("no policies to simulate"));
    }
    let jobs: Vec<(Policy, &UserTrace)> = spec
        .policies
        .iter()
        .flat_map(|&p| users.iter().map(move |u| (p, u)))
        .collect();
    let run = |&(p, u): &(Policy, &UserTrace)| run_policy(p, u, spec.first_day, spec.days, &spec.params, spec.source);
    let runs = if spec.jobs <= 1 {
        jobs.iter().map(run).collect::<Result<Vec<_>>>()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.jobs)
            .build()
            .map_err(|e| Error::argument(format!("thread pool: {e}")))?
            .install(|| jobs.par_iter().map(run).collect::<Result<Vec<_>>>())?
    };
    Ok(ExperimentResult {
        runs,
        ideal_predictions: matches!(spec.source, PredictionSource::Ideal),
    })
}
