//! Per-user synthetic traces and pooled predictor training.

use std::ops::Range;

use chrono::NaiveDate;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harvest::{
    combine_harvest, generate_activity_schedule, generate_irradiance, ActivitySchedule, ClimateParams,
    DailyTemplate, HarvestTrace, IrradianceSeries, MotionHarvester, PvPanelConfig,
};
use crate::predictor::{training_set, EnsembleParams, FeatureParams, Forecaster, TreeEnsemble};

/// Everything simulated for one user, from the first training day on.
#[derive(Debug, Clone, PartialEq)]
pub struct UserTrace {
    pub user: usize,
    pub irradiance: IrradianceSeries,
    pub harvest: HarvestTrace,
    pub schedule: ActivitySchedule,
}

impl UserTrace {
    pub fn intervals_per_day(&self) -> usize {
        self.schedule.intervals_per_day
    }

    pub fn days(&self) -> usize {
        self.harvest.len() / self.intervals_per_day()
    }

    /// SHA-256 over the harvest values and the activity schedule.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.harvest.values_j {
            h.update(v.to_le_bytes());
        }
        for (l, o) in self.schedule.labels.iter().zip(&self.schedule.outdoor) {
            h.update([l.index() as u8, u8::from(*o)]);
        }
        for w in &self.schedule.weekend {
            h.update([u8::from(*w)]);
        }
        hex::encode(h.finalize())
    }
}

/// Parameters of the synthetic user population.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSpec {
    pub seed: u64,
    pub users: usize,
    pub start: NaiveDate,
    pub days: usize,
    pub climate: ClimateParams,
    pub template: DailyTemplate,
    /// Exercise block length per user, cycled when there are more users.
    pub exercise_lens: Vec<usize>,
    pub panel: PvPanelConfig,
    pub motion: MotionHarvester,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            users: 5,
            start: NaiveDate::from_ymd_opt(2020, 11, 2).expect("valid date"),
            days: 60 + 365,
            climate: ClimateParams::default(),
            template: DailyTemplate::default(),
            exercise_lens: vec![6, 5, 4, 3, 2],
            panel: PvPanelConfig::default(),
            motion: MotionHarvester::default(),
        }
    }
}

fn user_seed(seed: u64, user: usize, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((user as u64) << 8)
        .wrapping_add(stream)
}

pub fn generate_user(spec: &DataSpec, user: usize) -> Result<UserTrace> {
    spec.panel.validate()?;
    let mut template = spec.template;
    if !spec.exercise_lens.is_empty() {
        template.exercise_len = spec.exercise_lens[user % spec.exercise_lens.len()];
    }
    let irradiance = generate_irradiance(
        user_seed(spec.seed, user, 1),
        spec.start,
        spec.days,
        &spec.climate,
        template.intervals_per_day,
    )?;
    let schedule = generate_activity_schedule(user_seed(spec.seed, user, 2), spec.start, spec.days, &template)?;
    let pv = HarvestTrace::from_irradiance(&irradiance, &spec.panel)?;
    let motion = HarvestTrace::from_motion(&schedule, &spec.motion)?;
    Ok(UserTrace {
        user,
        irradiance,
        harvest: combine_harvest(&pv, &motion)?,
        schedule,
    })
}

pub fn generate_users(spec: &DataSpec) -> Result<Vec<UserTrace>> {
    if spec.users == 0 {
        return Err(Error::config("users", "must be at least 1"));
    }
    (0..spec.users).map(|u| generate_user(spec, u)).collect()
}

/// Fits one model on the leading `train_days` of every user.
pub fn train_pooled(
    users: &[UserTrace],
    train_days: usize,
    features: &FeatureParams,
    ensemble: &EnsembleParams,
) -> Result<Forecaster> {
    let ipd = features.intervals_per_day;
    let range = training_range(features, train_days);
    if range.is_empty() {
        return Err(Error::Training(format!(
            "{train_days} training days leave no samples after the {}-day lookback",
            features.prev_days
        )));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for u in users {
        if u.intervals_per_day() != ipd || u.harvest.len() < range.end {
            return Err(Error::Training(format!("user {} trace is too short for training", u.user)));
        }
        total += u.harvest.values_j[..range.end].iter().sum::<f64>();
        count += range.end;
    }
    let fill = if count == 0 { 0.0 } else { total / count as f64 };
    let mut dataset = Vec::new();
    for u in users {
        dataset.extend(training_set(&u.harvest.values_j, &u.schedule, range.clone(), features, fill));
    }
    let model = TreeEnsemble::fit(&dataset, ensemble)?;
    Forecaster::new(model, *features, fill)
}

/// Training intervals: whole lookback available, inside the training days.
pub fn training_range(features: &FeatureParams, train_days: usize) -> Range<usize> {
    let ipd = features.intervals_per_day;
    let lookback = (features.prev_days * ipd).max(features.recent);
    lookback.min(train_days * ipd)..train_days * ipd
}
