//! Energy sources, harvest traces and activity schedules.

mod io;
mod synth;

pub use io::{
    load_irradiance_csv, parse_timestamp, read_activity_csv, read_harvest_csv,
    write_activity_csv, write_harvest_csv, write_irradiance_csv, TIMESTAMP_FORMAT,
};
pub use synth::{
    generate_activity_schedule, generate_irradiance, seasonal_scale, ClimateParams,
    DailyTemplate,
};

use chrono::{Datelike, Duration, NaiveDateTime, Weekday};

use crate::activity::{ActivityLabel, MotionIntensities};
use crate::error::{Error, Result};

/// Linear PV cell model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvPanelConfig {
    pub area_m2: f64,
    pub efficiency: f64,
}

impl Default for PvPanelConfig {
    /// Effective 1 cm² aperture at 3.5 %: keeps daily harvest on the order of
    /// the daily application budget for a 160 J battery.
    fn default() -> Self {
        Self {
            area_m2: 1.0e-4,
            efficiency: 0.035,
        }
    }
}

impl PvPanelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.area_m2 > 0.0 && self.area_m2.is_finite()) {
            return Err(Error::config("pv_area_m2", "must be positive"));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::config("pv_efficiency", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Piezoelectric harvester parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionHarvester {
    /// Power at unit intensity, per harvester.
    pub baseline_w: f64,
    pub harvesters: usize,
    pub intensities: MotionIntensities,
}

impl Default for MotionHarvester {
    fn default() -> Self {
        Self {
            baseline_w: 13e-6,
            harvesters: 1,
            intensities: MotionIntensities::default(),
        }
    }
}

pub fn pv_energy(irradiance_w_m2: f64, panel: &PvPanelConfig, interval_seconds: f64) -> Result<f64> {
    if !(irradiance_w_m2 >= 0.0) {
        return Err(Error::argument(format!(
            "irradiance must be non-negative, got {irradiance_w_m2}"
        )));
    }
    Ok(irradiance_w_m2 * panel.area_m2 * panel.efficiency * interval_seconds)
}

pub fn motion_energy(
    label: ActivityLabel,
    intensities: &MotionIntensities,
    interval_seconds: f64,
    baseline_w: f64,
) -> f64 {
    intensities.of(label) * baseline_w * interval_seconds
}

/// Irradiance averaged per interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IrradianceSeries {
    pub start: NaiveDateTime,
    pub interval_seconds: f64,
    pub values_w_m2: Vec<f64>,
}

/// Harvested energy per interval.
#[derive(Debug, Clone, PartialEq)]
pub struct HarvestTrace {
    pub values_j: Vec<f64>,
    pub interval_seconds: f64,
    pub start: NaiveDateTime,
}

impl HarvestTrace {
    pub fn new(values_j: Vec<f64>, interval_seconds: f64, start: NaiveDateTime) -> Result<Self> {
        if values_j.is_empty() {
            return Err(Error::argument("harvest trace must not be empty"));
        }
        if let Some(v) = values_j.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::argument(format!("harvest values must be >= 0, got {v}")));
        }
        Ok(Self {
            values_j,
            interval_seconds,
            start,
        })
    }

    pub fn len(&self) -> usize {
        self.values_j.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values_j.is_empty()
    }

    pub fn from_irradiance(series: &IrradianceSeries, panel: &PvPanelConfig) -> Result<Self> {
        let values = series
            .values_w_m2
            .iter()
            .map(|&g| pv_energy(g, panel, series.interval_seconds))
            .collect::<Result<Vec<_>>>()?;
        Self::new(values, series.interval_seconds, series.start)
    }

    pub fn from_motion(schedule: &ActivitySchedule, motion: &MotionHarvester) -> Result<Self> {
        let per = motion.baseline_w * motion.harvesters as f64;
        let values = schedule
            .labels
            .iter()
            .map(|&l| motion_energy(l, &motion.intensities, schedule.interval_seconds, per))
            .collect();
        Self::new(values, schedule.interval_seconds, schedule.start)
    }
}

pub fn combine_harvest(pv: &HarvestTrace, motion: &HarvestTrace) -> Result<HarvestTrace> {
    if pv.len() != motion.len() {
        return Err(Error::argument(format!(
            "trace lengths differ: {} vs {}",
            pv.len(),
            motion.len()
        )));
    }
    if pv.interval_seconds != motion.interval_seconds {
        return Err(Error::argument("trace interval durations differ"));
    }
    let values = pv
        .values_j
        .iter()
        .zip(&motion.values_j)
        .map(|(a, b)| a + b)
        .collect();
    HarvestTrace::new(values, pv.interval_seconds, pv.start)
}

/// Per-interval activity with location, plus the day type of each day.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivitySchedule {
    pub start: NaiveDateTime,
    pub interval_seconds: f64,
    pub intervals_per_day: usize,
    pub labels: Vec<ActivityLabel>,
    pub outdoor: Vec<bool>,
    /// One entry per (possibly partial) day.
    pub weekend: Vec<bool>,
}

impl ActivitySchedule {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_weekend_at(&self, t: usize) -> bool {
        self.weekend
            .get(t / self.intervals_per_day)
            .copied()
            .unwrap_or(false)
    }

    pub fn timestamp(&self, t: usize) -> NaiveDateTime {
        self.start + Duration::milliseconds((t as f64 * self.interval_seconds * 1000.0) as i64)
    }

    /// Contiguous sub-range `[from, from + len)` as a new schedule.
    pub fn slice(&self, from: usize, len: usize) -> ActivitySchedule {
        let start = self.timestamp(from);
        let days = len.div_ceil(self.intervals_per_day);
        let first_day = from / self.intervals_per_day;
        ActivitySchedule {
            start,
            interval_seconds: self.interval_seconds,
            intervals_per_day: self.intervals_per_day,
            labels: self.labels[from..from + len].to_vec(),
            outdoor: self.outdoor[from..from + len].to_vec(),
            weekend: (first_day..first_day + days)
                .map(|d| self.weekend.get(d).copied().unwrap_or(false))
                .collect(),
        }
    }
}

pub(crate) fn is_weekend(date: chrono::NaiveDate) -> bool {
    matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}
