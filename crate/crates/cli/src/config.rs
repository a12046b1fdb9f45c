//! Flat `key = value` run configuration.
//!
//! Values come from built-in defaults, then the config file, then
//! `EHPLAN_<KEY>` environment variables, then command-line flags. An empty
//! file reproduces the default scenario.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDate;

use ehplan_core::activity::parse_label_set;
use ehplan_core::harvest::{ClimateParams, DailyTemplate, MotionHarvester, PvPanelConfig};
use ehplan_core::predictor::{EnsembleParams, FeatureParams};
use ehplan_core::sim::{DataSpec, SimParams};
use ehplan_core::{ActivityLabel, EnergyAccuracyProfile, EnergyConfig};

pub const ENV_PREFIX: &str = "EHPLAN_";

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub users: usize,
    pub start_date: NaiveDate,
    pub train_days: usize,
    pub eval_days: usize,
    pub exercise_lens: Vec<usize>,
    pub template: DailyTemplate,
    pub climate: ClimateParams,
    pub panel: PvPanelConfig,
    pub motion: MotionHarvester,
    pub energy: EnergyConfig,
    pub profile: EnergyAccuracyProfile,
    pub a_min: f64,
    pub on_demand_accuracy: f64,
    pub critical_activities: Vec<ActivityLabel>,
    pub pattern_days: usize,
    pub mask_threshold: f64,
    pub initial_energy_j: f64,
    pub k: f64,
    pub ensemble: EnsembleParams,
    pub recent_intervals: usize,
    pub prev_days: usize,
}

impl Default for Settings {
    fn default() -> Self {
        let data = DataSpec::default();
        let sim = SimParams::default();
        let features = FeatureParams::default();
        Self {
            seed: data.seed,
            users: data.users,
            start_date: data.start,
            train_days: 60,
            eval_days: 365,
            exercise_lens: data.exercise_lens,
            template: data.template,
            climate: data.climate,
            panel: data.panel,
            motion: data.motion,
            energy: sim.config,
            profile: sim.profile,
            a_min: sim.a_min,
            on_demand_accuracy: sim.on_demand_accuracy,
            critical_activities: sim.critical_set,
            pattern_days: sim.pattern_days,
            mask_threshold: sim.mask_threshold,
            initial_energy_j: sim.initial_energy_j,
            k: 1.0,
            ensemble: EnsembleParams::default(),
            recent_intervals: features.recent,
            prev_days: features.prev_days,
        }
    }
}

/// Every recognised key, in snapshot order.
pub const KEYS: &[&str] = &[
    "seed",
    "users",
    "start_date",
    "train_days",
    "eval_days",
    "exercise_lens",
    "exercise_start",
    "work_start",
    "work_len",
    "sleep_min",
    "sleep_max",
    "jitter",
    "outdoor_leisure_prob",
    "peak_summer_w_m2",
    "peak_winter_w_m2",
    "day_length_summer_h",
    "day_length_winter_h",
    "summer_solstice_doy",
    "cloud_min",
    "cloud_max",
    "pv_area_m2",
    "pv_efficiency",
    "motion_baseline_w",
    "motion_harvesters",
    "capacity_j",
    "e_min_j",
    "e_max_j",
    "e_target_j",
    "e_charge_per_interval_j",
    "harvest_efficiency",
    "horizon_intervals",
    "interval_seconds",
    "profile",
    "a_min",
    "on_demand_accuracy",
    "critical_activities",
    "pattern_days",
    "mask_threshold",
    "initial_energy_j",
    "k",
    "trees",
    "max_depth",
    "min_samples_leaf",
    "model_seed",
    "recent_intervals",
    "prev_days",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| anyhow!("config key `{key}`: cannot parse '{value}'"))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "seed" => self.seed = parse(key, v)?,
            "users" => self.users = parse(key, v)?,
            "start_date" => self.start_date = parse(key, v)?,
            "train_days" => self.train_days = parse(key, v)?,
            "eval_days" => self.eval_days = parse(key, v)?,
            "exercise_lens" => {
                self.exercise_lens = v
                    .split(',')
                    .map(|s| parse(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "exercise_start" => self.template.exercise_start = parse(key, v)?,
            "work_start" => self.template.work_start = parse(key, v)?,
            "work_len" => self.template.work_len = parse(key, v)?,
            "sleep_min" => self.template.sleep_min = parse(key, v)?,
            "sleep_max" => self.template.sleep_max = parse(key, v)?,
            "jitter" => self.template.jitter = parse(key, v)?,
            "outdoor_leisure_prob" => self.template.outdoor_leisure_prob = parse(key, v)?,
            "peak_summer_w_m2" => self.climate.peak_summer_w_m2 = parse(key, v)?,
            "peak_winter_w_m2" => self.climate.peak_winter_w_m2 = parse(key, v)?,
            "day_length_summer_h" => self.climate.day_length_summer_h = parse(key, v)?,
            "day_length_winter_h" => self.climate.day_length_winter_h = parse(key, v)?,
            "summer_solstice_doy" => self.climate.summer_solstice_doy = parse(key, v)?,
            "cloud_min" => self.climate.cloud_min = parse(key, v)?,
            "cloud_max" => self.climate.cloud_max = parse(key, v)?,
            "pv_area_m2" => self.panel.area_m2 = parse(key, v)?,
            "pv_efficiency" => self.panel.efficiency = parse(key, v)?,
            "motion_baseline_w" => self.motion.baseline_w = parse(key, v)?,
            "motion_harvesters" => self.motion.harvesters = parse(key, v)?,
            "capacity_j" => self.energy.capacity_j = parse(key, v)?,
            "e_min_j" => self.energy.e_min_j = parse(key, v)?,
            "e_max_j" => self.energy.e_max_j = parse(key, v)?,
            "e_target_j" => self.energy.e_target_j = parse(key, v)?,
            "e_charge_per_interval_j" => self.energy.e_charge_per_interval_j = parse(key, v)?,
            "harvest_efficiency" => self.energy.harvest_efficiency = parse(key, v)?,
            "horizon_intervals" => self.energy.horizon_intervals = parse(key, v)?,
            "interval_seconds" => self.energy.interval_seconds = parse(key, v)?,
            "profile" => {
                self.profile = v
                    .parse()
                    .map_err(|e| anyhow!("config key `profile`: {e}"))?
            }
            "a_min" => self.a_min = parse(key, v)?,
            "on_demand_accuracy" => self.on_demand_accuracy = parse(key, v)?,
            "critical_activities" => {
                self.critical_activities =
                    parse_label_set(v).map_err(|e| anyhow!("config key `critical_activities`: {e}"))?
            }
            "pattern_days" => self.pattern_days = parse(key, v)?,
            "mask_threshold" => self.mask_threshold = parse(key, v)?,
            "initial_energy_j" => self.initial_energy_j = parse(key, v)?,
            "k" => self.k = parse(key, v)?,
            "trees" => self.ensemble.trees = parse(key, v)?,
            "max_depth" => self.ensemble.max_depth = parse(key, v)?,
            "min_samples_leaf" => self.ensemble.min_samples_leaf = parse(key, v)?,
            "model_seed" => self.ensemble.seed = parse(key, v)?,
            "recent_intervals" => self.recent_intervals = parse(key, v)?,
            "prev_days" => self.prev_days = parse(key, v)?,
            _ => bail!("unknown config key `{key}`"),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let s = match key {
            "seed" => self.seed.to_string(),
            "users" => self.users.to_string(),
            "start_date" => self.start_date.to_string(),
            "train_days" => self.train_days.to_string(),
            "eval_days" => self.eval_days.to_string(),
            "exercise_lens" => join(&self.exercise_lens),
            "exercise_start" => self.template.exercise_start.to_string(),
            "work_start" => self.template.work_start.to_string(),
            "work_len" => self.template.work_len.to_string(),
            "sleep_min" => self.template.sleep_min.to_string(),
            "sleep_max" => self.template.sleep_max.to_string(),
            "jitter" => self.template.jitter.to_string(),
            "outdoor_leisure_prob" => self.template.outdoor_leisure_prob.to_string(),
            "peak_summer_w_m2" => self.climate.peak_summer_w_m2.to_string(),
            "peak_winter_w_m2" => self.climate.peak_winter_w_m2.to_string(),
            "day_length_summer_h" => self.climate.day_length_summer_h.to_string(),
            "day_length_winter_h" => self.climate.day_length_winter_h.to_string(),
            "summer_solstice_doy" => self.climate.summer_solstice_doy.to_string(),
            "cloud_min" => self.climate.cloud_min.to_string(),
            "cloud_max" => self.climate.cloud_max.to_string(),
            "pv_area_m2" => self.panel.area_m2.to_string(),
            "pv_efficiency" => self.panel.efficiency.to_string(),
            "motion_baseline_w" => self.motion.baseline_w.to_string(),
            "motion_harvesters" => self.motion.harvesters.to_string(),
            "capacity_j" => self.energy.capacity_j.to_string(),
            "e_min_j" => self.energy.e_min_j.to_string(),
            "e_max_j" => self.energy.e_max_j.to_string(),
            "e_target_j" => self.energy.e_target_j.to_string(),
            "e_charge_per_interval_j" => self.energy.e_charge_per_interval_j.to_string(),
            "harvest_efficiency" => self.energy.harvest_efficiency.to_string(),
            "horizon_intervals" => self.energy.horizon_intervals.to_string(),
            "interval_seconds" => self.energy.interval_seconds.to_string(),
            "profile" => self.profile.to_string(),
            "a_min" => self.a_min.to_string(),
            "on_demand_accuracy" => self.on_demand_accuracy.to_string(),
            "critical_activities" => join(
                &self
                    .critical_activities
                    .iter()
                    .map(|l| l.as_str())
                    .collect::<Vec<_>>(),
            ),
            "pattern_days" => self.pattern_days.to_string(),
            "mask_threshold" => self.mask_threshold.to_string(),
            "initial_energy_j" => self.initial_energy_j.to_string(),
            "k" => self.k.to_string(),
            "trees" => self.ensemble.trees.to_string(),
            "max_depth" => self.ensemble.max_depth.to_string(),
            "min_samples_leaf" => self.ensemble.min_samples_leaf.to_string(),
            "model_seed" => self.ensemble.seed.to_string(),
            "recent_intervals" => self.recent_intervals.to_string(),
            "prev_days" => self.prev_days.to_string(),
            _ => return None,
        };
        Some(s)
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{origin}:{}: expected `key = value`", i + 1))?;
            self.set(key.trim(), value)
                .with_context(|| format!("{origin}:{}", i + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Applies `EHPLAN_<KEY>` variables supplied by `lookup`.
    pub fn apply_env<F: Fn(&str) -> Option<String>>(&mut self, lookup: F) -> Result<()> {
        for key in KEYS {
            let var = format!("{ENV_PREFIX}{}", key.to_ascii_uppercase());
            if let Some(v) = lookup(&var) {
                self.set(key, &v).with_context(|| format!("environment variable {var}"))?;
            }
        }
        Ok(())
    }

    /// Defaults, then `file`, then the process environment.
    pub fn load(file: Option<&Path>) -> Result<Self> {
        let mut s = Settings::default();
        if let Some(f) = file {
            s.apply_file(f)?;
        }
        s.apply_env(|k| std::env::var(k).ok())?;
        Ok(s)
    }

    pub fn intervals_per_day(&self) -> Result<usize> {
        let ipd = 86_400.0 / self.energy.interval_seconds;
        if !(ipd >= 1.0 && ipd.fract() == 0.0) {
            bail!("config key `interval_seconds`: must divide a day into whole intervals");
        }
        Ok(ipd as usize)
    }

    pub fn data_spec(&self, days: usize) -> Result<DataSpec> {
        let ipd = self.intervals_per_day()?;
        Ok(DataSpec {
            seed: self.seed,
            users: self.users,
            start: self.start_date,
            days,
            climate: self.climate,
            template: DailyTemplate {
                intervals_per_day: ipd,
                ..self.template
            },
            exercise_lens: self.exercise_lens.clone(),
            panel: self.panel,
            motion: self.motion,
        })
    }

    pub fn sim_params(&self) -> Result<SimParams> {
        let p = SimParams {
            config: self.energy.clone(),
            profile: self.profile.clone(),
            a_min: self.a_min,
            critical_set: self.critical_activities.clone(),
            on_demand_accuracy: self.on_demand_accuracy,
            pattern_days: self.pattern_days,
            mask_threshold: self.mask_threshold,
            initial_energy_j: self.initial_energy_j,
        };
        p.validate().map_err(|e| anyhow!("{e}"))?;
        if !(self.k >= 0.0) {
            bail!("config key `k`: must be non-negative");
        }
        Ok(p)
    }

    pub fn features(&self) -> Result<FeatureParams> {
        Ok(FeatureParams {
            recent: self.recent_intervals,
            prev_days: self.prev_days,
            intervals_per_day: self.intervals_per_day()?,
        })
    }

    /// Every key with its resolved value.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("listed key"));
        }
        out
    }
}
