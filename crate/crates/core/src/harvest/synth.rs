//! Seeded synthetic stand-ins for irradiance records and time-use surveys.

use std::f64::consts::PI;

use chrono::{Datelike, Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{is_weekend, ActivitySchedule, IrradianceSeries};
use crate::activity::ActivityLabel;
use crate::error::{Error, Result};

/// Seasonal clear-sky envelope and day-level cloudiness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClimateParams {
    pub peak_summer_w_m2: f64,
    pub peak_winter_w_m2: f64,
    pub day_length_summer_h: f64,
    pub day_length_winter_h: f64,
    pub summer_solstice_doy: u32,
    /// Per-day multiplicative factor drawn uniformly from this range.
    pub cloud_min: f64,
    pub cloud_max: f64,
}

impl Default for ClimateParams {
    fn default() -> Self {
        Self {
            peak_summer_w_m2: 1000.0,
            peak_winter_w_m2: 400.0,
            day_length_summer_h: 15.0,
            day_length_winter_h: 9.5,
            summer_solstice_doy: 172,
            cloud_min: 0.3,
            cloud_max: 1.0,
        }
    }
}

impl ClimateParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cloud_min >= 0.0 && self.cloud_min <= self.cloud_max) {
            return Err(Error::config("cloud_min", "must satisfy 0 <= cloud_min <= cloud_max"));
        }
        if self.peak_winter_w_m2 < 0.0 || self.peak_summer_w_m2 < 0.0 {
            return Err(Error::config("peak_summer_w_m2", "peaks must be non-negative"));
        }
        for (k, v) in [
            ("day_length_summer_h", self.day_length_summer_h),
            ("day_length_winter_h", self.day_length_winter_h),
        ] {
            if !(v > 0.0 && v <= 24.0) {
                return Err(Error::config(k, "must lie in (0, 24]"));
            }
        }
        Ok(())
    }

    /// 1 at the summer solstice, 0 half a year away.
    fn season(&self, doy: u32) -> f64 {
        let phase = 2.0 * PI * (doy as f64 - self.summer_solstice_doy as f64) / 365.25;
        0.5 * (1.0 + phase.cos())
    }
}

/// Clear-sky noon irradiance for a day of year.
pub fn seasonal_scale(doy: u32, climate: &ClimateParams) -> f64 {
    let s = climate.season(doy);
    climate.peak_winter_w_m2 + s * (climate.peak_summer_w_m2 - climate.peak_winter_w_m2)
}

fn day_length_h(doy: u32, climate: &ClimateParams) -> f64 {
    let s = climate.season(doy);
    climate.day_length_winter_h + s * (climate.day_length_summer_h - climate.day_length_winter_h)
}

/// Half-sine clear-sky day centred on solar noon, scaled per season and
/// multiplied by one cloudiness draw per day. Each value is the irradiance
/// at the interval midpoint.
pub fn generate_irradiance(
    seed: u64,
    start: NaiveDate,
    days: usize,
    climate: &ClimateParams,
    intervals_per_day: usize,
) -> Result<IrradianceSeries> {
    if days == 0 {
        return Err(Error::argument("days must be at least 1"));
    }
    if intervals_per_day == 0 {
        return Err(Error::argument("intervals_per_day must be at least 1"));
    }
    climate.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hours_per_interval = 24.0 / intervals_per_day as f64;
    let mut values = Vec::with_capacity(days * intervals_per_day);
    for d in 0..days {
        let date = start + Duration::days(d as i64);
        let doy = date.ordinal();
        let peak = seasonal_scale(doy, climate);
        let length = day_length_h(doy, climate);
        let sunrise = 12.0 - length / 2.0;
        let cloud = if climate.cloud_max > climate.cloud_min {
            rng.gen_range(climate.cloud_min..=climate.cloud_max)
        } else {
            climate.cloud_min
        };
        for i in 0..intervals_per_day {
            let hour = (i as f64 + 0.5) * hours_per_interval;
            let x = (hour - sunrise) / length;
            let g = if (0.0..=1.0).contains(&x) {
                peak * (PI * x).sin() * cloud
            } else {
                0.0
            };
            values.push(g.max(0.0));
        }
    }
    Ok(IrradianceSeries {
        start: start.and_hms_opt(0, 0, 0).expect("midnight exists"),
        interval_seconds: 86_400.0 / intervals_per_day as f64,
        values_w_m2: values,
    })
}

/// Daily routine used to synthesize activity schedules. Hours are interval
/// indices within the day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyTemplate {
    pub intervals_per_day: usize,
    /// Sleep occupies `[0, wake)`, with the wake interval drawn from this range.
    pub sleep_min: usize,
    pub sleep_max: usize,
    pub work_start: usize,
    pub work_len: usize,
    pub exercise_start: usize,
    pub exercise_len: usize,
    /// Maximum shift, in intervals, applied to block starts.
    pub jitter: usize,
    pub outdoor_leisure_prob: f64,
}

impl Default for DailyTemplate {
    fn default() -> Self {
        Self {
            intervals_per_day: 24,
            sleep_min: 7,
            sleep_max: 9,
            work_start: 9,
            work_len: 8,
            exercise_start: 18,
            exercise_len: 2,
            jitter: 1,
            outdoor_leisure_prob: 0.3,
        }
    }
}

impl DailyTemplate {
    pub fn validate(&self) -> Result<()> {
        if self.sleep_min > self.sleep_max {
            return Err(Error::config("sleep_min", "must not exceed sleep_max"));
        }
        if self.sleep_max + self.work_len + self.exercise_len > self.intervals_per_day {
            return Err(Error::config(
                "exercise_len",
                format!(
                    "sleep, work and exercise blocks exceed {} intervals",
                    self.intervals_per_day
                ),
            ));
        }
        if !(0.0..=1.0).contains(&self.outdoor_leisure_prob) {
            return Err(Error::config("outdoor_leisure_prob", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

fn jittered(rng: &mut ChaCha8Rng, base: usize, jitter: usize) -> usize {
    if jitter == 0 {
        return base;
    }
    let j = rng.gen_range(-(jitter as i64)..=jitter as i64);
    (base as i64 + j).max(0) as usize
}

pub fn generate_activity_schedule(
    seed: u64,
    start: NaiveDate,
    days: usize,
    template: &DailyTemplate,
) -> Result<ActivitySchedule> {
    if days == 0 {
        return Err(Error::argument("days must be at least 1"));
    }
    template.validate()?;
    let n = template.intervals_per_day;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::with_capacity(days * n);
    let mut outdoor = Vec::with_capacity(days * n);
    let mut weekend = Vec::with_capacity(days);
    for d in 0..days {
        let date = start + Duration::days(d as i64);
        let is_we = is_weekend(date);
        weekend.push(is_we);

        let wake = rng.gen_range(template.sleep_min..=template.sleep_max);
        let mut day = vec![None; n];
        for slot in day.iter_mut().take(wake) {
            *slot = Some(ActivityLabel::Sleep);
        }

        // exercise after waking, kept inside the day
        let ex_len = template.exercise_len;
        // wake + ex_len <= n holds by validation
        let ex_start = jittered(&mut rng, template.exercise_start, template.jitter)
            .max(wake)
            .min(n - ex_len);
        for slot in day.iter_mut().skip(ex_start).take(ex_len) {
            *slot = Some(ActivityLabel::Exercise);
        }

        if !is_we {
            let ws = jittered(&mut rng, template.work_start, template.jitter).max(wake);
            for slot in day.iter_mut().skip(ws).take(template.work_len) {
                if slot.is_none() {
                    *slot = Some(ActivityLabel::Work);
                }
            }
        }

        for slot in day.iter_mut() {
            let label = slot.unwrap_or_else(|| {
                if rng.gen_bool(0.5) {
                    ActivityLabel::Leisure
                } else {
                    ActivityLabel::Other
                }
            });
            let out = match label {
                ActivityLabel::Exercise => true,
                ActivityLabel::Leisure | ActivityLabel::Other => {
                    rng.gen_bool(template.outdoor_leisure_prob)
                }
                ActivityLabel::Sleep | ActivityLabel::Work => false,
            };
            labels.push(label);
            outdoor.push(out);
        }
    }
    Ok(ActivitySchedule {
        start: start.and_hms_opt(0, 0, 0).expect("midnight exists"),
        interval_seconds: 86_400.0 / n as f64,
        intervals_per_day: n,
        labels,
        outdoor,
        weekend,
    })
}
