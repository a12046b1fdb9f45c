use std::io::{BufRead, Write};
use std::ops::Range;

use super::{build_features_with, FeatureParams, FeatureVector, Forecast, SideInfo, TreeEnsemble};
use crate::activity::ActivityLabel;
use crate::error::{Error, Result};
use crate::harvest::ActivitySchedule;

/// `(features, target)` pairs for every interval in `range`.
pub fn training_set(
    harvest_j: &[f64],
    schedule: &ActivitySchedule,
    range: Range<usize>,
    params: &FeatureParams,
    fill_j: f64,
) -> Vec<(FeatureVector, f64)> {
    range
        .map(|t| {
            let side = SideInfo::from_schedule(schedule, t);
            (build_features_with(harvest_j, t, side, params, fill_j), harvest_j[t])
        })
        .collect()
}

/// Mean absolute error of predicting each interval by the same interval of
/// the previous day.
pub fn persistence_mae(harvest_j: &[f64], range: Range<usize>, intervals_per_day: usize) -> f64 {
    let n = range.len().max(1) as f64;
    range
        .map(|t| {
            let prev = t.checked_sub(intervals_per_day).map_or(0.0, |i| harvest_j[i]);
            (harvest_j[t] - prev).abs()
        })
        .sum::<f64>()
        / n
}

/// Most frequent activity and location per interval-of-day over past days.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedPattern {
    labels: Vec<ActivityLabel>,
    outdoor: Vec<bool>,
}

impl ExpectedPattern {
    /// Builds the pattern from whole days inside `range`; `None` when the
    /// range holds less than one day.
    pub fn from_history(schedule: &ActivitySchedule, range: Range<usize>) -> Option<Self> {
        let ipd = schedule.intervals_per_day;
        let first_day = range.start.div_ceil(ipd);
        let end_day = range.end / ipd;
        if end_day <= first_day {
            return None;
        }
        let mut labels = Vec::with_capacity(ipd);
        let mut outdoor = Vec::with_capacity(ipd);
        for slot in 0..ipd {
            let mut counts = [0usize; 5];
            let mut out = 0usize;
            for d in first_day..end_day {
                let t = d * ipd + slot;
                counts[schedule.labels[t].index()] += 1;
                out += usize::from(schedule.outdoor[t]);
            }
            // first maximum wins, giving a fixed order on ties
            let best = (0..5).fold(0, |b, i| if counts[i] > counts[b] { i } else { b });
            labels.push(ActivityLabel::ALL[best]);
            outdoor.push(2 * out > end_day - first_day);
        }
        Some(Self { labels, outdoor })
    }

    pub fn side(&self, slot_of_day: usize, weekend: bool) -> SideInfo {
        SideInfo {
            label: self.labels[slot_of_day],
            outdoor: self.outdoor[slot_of_day],
            weekend,
        }
    }
}

/// Multi-step harvest forecaster wrapping a fitted ensemble.
///
/// Intervals beyond the observed history are forecast recursively: the
/// predicted mean of each step stands in for its unobserved harvest when
/// building the next step's features.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecaster {
    pub model: TreeEnsemble,
    pub params: FeatureParams,
    /// Climatological mean used for history slots that predate the data.
    pub fill_j: f64,
}

impl Forecaster {
    pub fn new(model: TreeEnsemble, params: FeatureParams, fill_j: f64) -> Result<Self> {
        if model.dim() != params.dim() {
            return Err(Error::argument(format!(
                "model dimension {} does not match feature layout {}",
                model.dim(),
                params.dim()
            )));
        }
        Ok(Self { model, params, fill_j })
    }

    /// Forecasts `count` intervals following `history`.
    pub fn forecast<F>(&self, history: &[f64], count: usize, side: F) -> Result<Vec<Forecast>>
    where
        F: Fn(usize) -> SideInfo,
    {
        let mut buf = Vec::with_capacity(history.len() + count);
        buf.extend_from_slice(history);
        let mut out = Vec::with_capacity(count);
        for t in history.len()..history.len() + count {
            let f = build_features_with(&buf, t, side(t), &self.params, self.fill_j);
            let fc = self.model.predict(&f)?;
            buf.push(fc.mean_j);
            out.push(fc);
        }
        Ok(out)
    }

    /// Writes the feature layout and fill value ahead of the ensemble:
    ///
    /// ```text
    /// ehplan-forecaster 1
    /// fill_j 3.25
    /// recent 3
    /// prev_days 2
    /// intervals_per_day 24
    /// ehplan-trees 1
    /// ...
    /// ```
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "ehplan-forecaster 1")?;
        writeln!(w, "fill_j {}", self.fill_j)?;
        writeln!(w, "recent {}", self.params.recent)?;
        writeln!(w, "prev_days {}", self.params.prev_days)?;
        writeln!(w, "intervals_per_day {}", self.params.intervals_per_day)?;
        self.model.write_to(w)
    }

    pub fn read_from<R: BufRead>(mut r: R) -> Result<Self> {
        let mut head = Vec::with_capacity(5);
        for _ in 0..5 {
            let mut line = String::new();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::argument("forecaster file truncated"));
            }
            head.push(line.trim().to_string());
        }
        if head[0] != "ehplan-forecaster 1" {
            return Err(Error::argument("forecaster line 1: bad header"));
        }
        let field = |i: usize, key: &str| -> Result<&str> {
            head[i]
                .strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .ok_or_else(|| Error::argument(format!("forecaster line {}: expected {key}", i + 1)))
        };
        let num = |i: usize, key: &str| -> Result<usize> {
            field(i, key)?
                .parse()
                .map_err(|_| Error::argument(format!("forecaster line {}: bad {key}", i + 1)))
        };
        let fill_j: f64 = field(1, "fill_j")?
            .parse()
            .map_err(|_| Error::argument("forecaster line 2: bad fill_j"))?;
        let params = FeatureParams {
            recent: num(2, "recent")?,
            prev_days: num(3, "prev_days")?,
            intervals_per_day: num(4, "intervals_per_day")?,
        };
        Self::new(TreeEnsemble::read_from(r)?, params, fill_j)
    }

    /// One-step-ahead mean absolute error over `range` with true history.
    pub fn one_step_mae(
        &self,
        harvest_j: &[f64],
        schedule: &ActivitySchedule,
        range: Range<usize>,
    ) -> Result<f64> {
        let n = range.len().max(1) as f64;
        let mut total = 0.0;
        for t in range {
            let f = build_features_with(
                harvest_j,
                t,
                SideInfo::from_schedule(schedule, t),
                &self.params,
                self.fill_j,
            );
            total += (self.model.predict(&f)?.mean_j - harvest_j[t]).abs();
        }
        Ok(total / n)
    }
}
