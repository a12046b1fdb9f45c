//! Piecewise-linear map between per-interval consumption and accuracy.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub consumption_j: f64,
    pub accuracy: f64,
}

/// Monotone energy/accuracy characterization of the application.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyAccuracyProfile {
    points: Vec<Breakpoint>,
}

impl Default for EnergyAccuracyProfile {
    fn default() -> Self {
        Self::new(vec![(1.0, 0.80), (2.0, 0.85), (3.0, 0.90), (4.0, 0.95)])
            .expect("default profile is well formed")
    }
}

impl EnergyAccuracyProfile {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::config("profile", "needs at least one breakpoint"));
        }
        let points: Vec<Breakpoint> = points
            .into_iter()
            .map(|(consumption_j, accuracy)| Breakpoint {
                consumption_j,
                accuracy,
            })
            .collect();
        for p in &points {
            if !(p.consumption_j.is_finite() && p.consumption_j >= 0.0) {
                return Err(Error::config("profile", "consumption must be finite and >= 0"));
            }
            if !(0.0..=1.0).contains(&p.accuracy) {
                return Err(Error::config("profile", "accuracy must lie in [0, 1]"));
            }
        }
        for w in points.windows(2) {
            if w[1].consumption_j <= w[0].consumption_j {
                return Err(Error::config(
                    "profile",
                    "consumption must be strictly increasing",
                ));
            }
            if w[1].accuracy < w[0].accuracy {
                return Err(Error::config("profile", "accuracy must be non-decreasing"));
            }
        }
        Ok(Self { points })
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.points
    }

    /// Consumption of the highest-accuracy breakpoint.
    pub fn max_consumption(&self) -> f64 {
        self.points[self.points.len() - 1].consumption_j
    }

    pub fn min_consumption(&self) -> f64 {
        self.points[0].consumption_j
    }

    pub fn floor_accuracy(&self) -> f64 {
        self.points[0].accuracy
    }

    pub fn max_accuracy(&self) -> f64 {
        self.points[self.points.len() - 1].accuracy
    }

    pub fn accuracy_of(&self, consumption_j: f64) -> f64 {
        let pts = &self.points;
        if consumption_j <= pts[0].consumption_j {
            return pts[0].accuracy;
        }
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if consumption_j <= b.consumption_j {
                let frac = (consumption_j - a.consumption_j) / (b.consumption_j - a.consumption_j);
                return a.accuracy + frac * (b.accuracy - a.accuracy);
            }
        }
        pts[pts.len() - 1].accuracy
    }

    /// Smallest consumption whose interpolated accuracy reaches `a_min`.
    pub fn min_consumption_for(&self, a_min: f64) -> Result<f64> {
        if a_min > self.max_accuracy() {
            return Err(Error::Infeasible(format!(
                "accuracy {a_min} exceeds the profile maximum {}",
                self.max_accuracy()
            )));
        }
        let pts = &self.points;
        if a_min <= pts[0].accuracy {
            return Ok(pts[0].consumption_j);
        }
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a_min == b.accuracy {
                return Ok(b.consumption_j);
            }
            if a_min < b.accuracy {
                // a.accuracy < a_min < b.accuracy, so the segment is not flat
                let frac = (a_min - a.accuracy) / (b.accuracy - a.accuracy);
                let c = a.consumption_j + frac * (b.consumption_j - a.consumption_j);
                return Ok(c.min(b.consumption_j));
            }
        }
        Ok(self.max_consumption())
    }

    /// Largest breakpoint consumption strictly below `consumption_j`, if any.
    pub fn next_lower(&self, consumption_j: f64) -> Option<f64> {
        self.points
            .iter()
            .rev()
            .map(|p| p.consumption_j)
            .find(|&c| c < consumption_j)
    }

    /// Smallest breakpoint consumption strictly above `consumption_j`, if any.
    pub fn next_higher(&self, consumption_j: f64) -> Option<f64> {
        self.points
            .iter()
            .map(|p| p.consumption_j)
            .find(|&c| c > consumption_j)
    }
}

/// `c:a,c:a,...`, e.g. `1:0.80,2:0.85,3:0.90,4:0.95`.
impl FromStr for EnergyAccuracyProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut points = Vec::new();
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (c, a) = item
                .split_once(':')
                .ok_or_else(|| Error::config("profile", format!("expected `c:a`, got `{item}`")))?;
            let c: f64 = c
                .trim()
                .parse()
                .map_err(|_| Error::config("profile", format!("bad consumption `{c}`")))?;
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| Error::config("profile", format!("bad accuracy `{a}`")))?;
            points.push((c, a));
        }
        Self::new(points)
    }
}

impl fmt::Display for EnergyAccuracyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.points.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", p.consumption_j, p.accuracy)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_point() -> EnergyAccuracyProfile {
        EnergyAccuracyProfile::new(vec![(1.0, 0.80), (4.0, 0.95)]).unwrap()
    }

    #[test]
    fn interpolation() {
        let p = two_point();
        assert!((p.accuracy_of(2.5) - 0.875).abs() < 1e-12);
        assert_eq!(p.accuracy_of(4.0), 0.95);
        assert_eq!(p.accuracy_of(0.5), 0.80);
        assert_eq!(p.accuracy_of(10.0), 0.95);
    }

    #[test]
    fn inverse_interpolation() {
        let p = two_point();
        assert!((p.min_consumption_for(0.90).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(p.min_consumption_for(0.80).unwrap(), 1.0);
        assert!(matches!(p.min_consumption_for(0.99), Err(Error::Infeasible(_))));
    }

    #[test]
    fn breakpoint_accuracies_invert_exactly() {
        let p = EnergyAccuracyProfile::default();
        assert_eq!(p.min_consumption_for(0.90).unwrap(), 3.0);
        assert_eq!(p.min_consumption_for(0.85).unwrap(), 2.0);
        assert_eq!(p.accuracy_of(3.0), 0.90);
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(EnergyAccuracyProfile::new(vec![]).is_err());
        assert!(EnergyAccuracyProfile::new(vec![(2.0, 0.8), (1.0, 0.9)]).is_err());
        assert!(EnergyAccuracyProfile::new(vec![(1.0, 0.9), (2.0, 0.8)]).is_err());
        assert!(EnergyAccuracyProfile::new(vec![(1.0, 1.2)]).is_err());
    }

    #[test]
    fn parse_and_display() {
        let p: EnergyAccuracyProfile = "1:0.8, 2:0.85,3:0.9,4:0.95".parse().unwrap();
        assert_eq!(p, EnergyAccuracyProfile::default());
        let again: EnergyAccuracyProfile = p.to_string().parse().unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn breakpoint_stepping() {
        let p = EnergyAccuracyProfile::default();
        assert_eq!(p.next_lower(4.0), Some(3.0));
        assert_eq!(p.next_lower(2.5), Some(2.0));
        assert_eq!(p.next_lower(1.0), None);
        assert_eq!(p.next_higher(2.5), Some(3.0));
        assert_eq!(p.next_higher(4.0), None);
    }

    proptest! {
        #[test]
        fn inverse_reaches_target(a in 0.80f64..=0.95) {
            let p = EnergyAccuracyProfile::default();
            let c = p.min_consumption_for(a).unwrap();
            prop_assert!(p.accuracy_of(c) >= a - 1e-9);
            // and nothing meaningfully smaller would do
            if c > p.min_consumption() + 1e-6 {
                prop_assert!(p.accuracy_of(c - 1e-6) < a);
            }
        }
    }
}
