use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The five activity categories tracked by the device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActivityLabel {
    Sleep,
    Work,
    Exercise,
    Leisure,
    Other,
}

impl ActivityLabel {
    pub const ALL: [ActivityLabel; 5] = [
        ActivityLabel::Sleep,
        ActivityLabel::Work,
        ActivityLabel::Exercise,
        ActivityLabel::Leisure,
        ActivityLabel::Other,
    ];

    /// Slot in one-hot encodings.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActivityLabel::Sleep => "sleep",
            ActivityLabel::Work => "work",
            ActivityLabel::Exercise => "exercise",
            ActivityLabel::Leisure => "leisure",
            ActivityLabel::Other => "other",
        }
    }
}

impl fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActivityLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sleep" => Ok(ActivityLabel::Sleep),
            "work" => Ok(ActivityLabel::Work),
            "exercise" => Ok(ActivityLabel::Exercise),
            "leisure" => Ok(ActivityLabel::Leisure),
            "other" | "active" => Ok(ActivityLabel::Other),
            other => Err(Error::argument(format!("unknown activity `{other}`"))),
        }
    }
}

/// Relative motion intensity per activity, scaling the piezo baseline power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionIntensities {
    pub work: f64,
    pub leisure: f64,
}

impl Default for MotionIntensities {
    fn default() -> Self {
        Self {
            work: 0.3,
            leisure: 0.2,
        }
    }
}

impl MotionIntensities {
    pub fn of(&self, label: ActivityLabel) -> f64 {
        match label {
            ActivityLabel::Exercise => 1.0,
            ActivityLabel::Other => 0.5,
            ActivityLabel::Sleep => 0.0,
            ActivityLabel::Work => self.work,
            ActivityLabel::Leisure => self.leisure,
        }
    }
}

/// Parses a comma separated label list such as `exercise,work`.
pub fn parse_label_set(s: &str) -> Result<Vec<ActivityLabel>> {
    let mut out: Vec<ActivityLabel> = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}
