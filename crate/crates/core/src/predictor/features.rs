use crate::activity::ActivityLabel;
use crate::harvest::ActivitySchedule;

/// Layout of the harvest feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureParams {
    /// Most recent interval harvests.
    pub recent: usize,
    /// Same-interval harvests from previous days.
    pub prev_days: usize,
    pub intervals_per_day: usize,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            recent: 3,
            prev_days: 2,
            intervals_per_day: 24,
        }
    }
}

impl FeatureParams {
    pub fn dim(&self) -> usize {
        self.recent + self.prev_days + 1 + ActivityLabel::ALL.len() + 2
    }
}

/// Side information for the interval being predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SideInfo {
    pub label: ActivityLabel,
    pub outdoor: bool,
    pub weekend: bool,
}

impl SideInfo {
    pub fn from_schedule(schedule: &ActivitySchedule, t: usize) -> Self {
        Self {
            label: schedule.labels[t],
            outdoor: schedule.outdoor[t],
            weekend: schedule.is_weekend_at(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    /// `[recent.., prev_days.., derivative, one-hot(5), outdoor, weekend]`
    pub values: Vec<f64>,
    /// Set when some history slot was unavailable and filled in.
    pub cold_start: bool,
}

/// Features for interval `t` from the harvest history `history[..t]`.
/// Missing history reads as zero.
pub fn build_features(history: &[f64], schedule: &ActivitySchedule, t: usize) -> FeatureVector {
    let params = FeatureParams {
        intervals_per_day: schedule.intervals_per_day,
        ..FeatureParams::default()
    };
    build_features_with(history, t, SideInfo::from_schedule(schedule, t), &params, 0.0)
}

/// As [`build_features`], with an explicit layout and a fill value for
/// unavailable history slots.
pub fn build_features_with(
    history: &[f64],
    t: usize,
    side: SideInfo,
    params: &FeatureParams,
    fill: f64,
) -> FeatureVector {
    let mut cold_start = false;
    let mut read = |back: usize| -> f64 {
        match t.checked_sub(back) {
            Some(i) if i < history.len() => history[i],
            _ => {
                cold_start = true;
                fill
            }
        }
    };
    let mut values = Vec::with_capacity(params.dim());
    for k in 1..=params.recent {
        values.push(read(k));
    }
    for d in 1..=params.prev_days {
        values.push(read(d * params.intervals_per_day));
    }
    let derivative = read(1) - read(2);
    values.push(derivative);
    for l in ActivityLabel::ALL {
        values.push(if l == side.label { 1.0 } else { 0.0 });
    }
    values.push(f64::from(u8::from(side.outdoor)));
    values.push(f64::from(u8::from(side.weekend)));
    FeatureVector { values, cold_start }
}
