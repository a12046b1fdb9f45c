//! Battery parameters and the per-interval energy balance.

use crate::error::{Error, Result};

/// Slack used when comparing energies against thresholds.
pub const ENERGY_EPS: f64 = 1e-9;

/// Physical parameters of the device battery and charger.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyConfig {
    pub capacity_j: f64,
    pub e_min_j: f64,
    pub e_max_j: f64,
    pub e_target_j: f64,
    /// Energy added by one interval of manual charging.
    pub e_charge_per_interval_j: f64,
    /// Fraction of harvested energy that reaches the battery.
    pub harvest_efficiency: f64,
    pub horizon_intervals: usize,
    pub interval_seconds: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        let capacity_j = 160.0;
        Self {
            capacity_j,
            e_min_j: 0.10 * capacity_j,
            e_max_j: capacity_j,
            e_target_j: 0.60 * capacity_j,
            e_charge_per_interval_j: 30.0,
            harvest_efficiency: 1.0,
            horizon_intervals: 24,
            interval_seconds: 3600.0,
        }
    }
}

impl EnergyConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("capacity_j", self.capacity_j),
            ("e_min_j", self.e_min_j),
            ("e_max_j", self.e_max_j),
            ("e_target_j", self.e_target_j),
            ("e_charge_per_interval_j", self.e_charge_per_interval_j),
            ("harvest_efficiency", self.harvest_efficiency),
            ("interval_seconds", self.interval_seconds),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(Error::config(key, "must be finite"));
            }
        }
        if self.e_min_j < 0.0 {
            return Err(Error::config("e_min_j", "must be non-negative"));
        }
        if self.e_min_j >= self.e_target_j {
            return Err(Error::config("e_min_j", "must be below e_target_j"));
        }
        if self.e_target_j > self.e_max_j {
            return Err(Error::config("e_target_j", "must not exceed e_max_j"));
        }
        if self.e_max_j > self.capacity_j {
            return Err(Error::config("e_max_j", "must not exceed capacity_j"));
        }
        if self.e_charge_per_interval_j <= 0.0 {
            return Err(Error::config("e_charge_per_interval_j", "must be positive"));
        }
        if !(self.harvest_efficiency > 0.0 && self.harvest_efficiency <= 1.0) {
            return Err(Error::config("harvest_efficiency", "must lie in (0, 1]"));
        }
        if self.horizon_intervals == 0 {
            return Err(Error::config("horizon_intervals", "must be at least 1"));
        }
        if self.interval_seconds <= 0.0 {
            return Err(Error::config("interval_seconds", "must be positive"));
        }
        Ok(())
    }
}

/// Stored energy at the start of an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryState {
    pub energy_j: f64,
    pub interval_index: usize,
}

impl BatteryState {
    pub fn new(energy_j: f64) -> Self {
        Self {
            energy_j,
            interval_index: 0,
        }
    }
}

/// Full accounting of one interval, including what clamping discarded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: BatteryState,
    /// Energy above `e_max_j` that could not be stored.
    pub overflow_j: f64,
    /// Demand that the battery could not supply because it hit zero.
    pub shortfall_j: f64,
}

/// Unclamped balance of one interval.
#[inline]
pub(crate) fn raw_balance(
    energy_j: f64,
    config: &EnergyConfig,
    harvest_j: f64,
    charging: bool,
    consumption_j: f64,
) -> f64 {
    let charge = if charging {
        config.e_charge_per_interval_j
    } else {
        0.0
    };
    energy_j + config.harvest_efficiency * harvest_j + charge - consumption_j
}

/// Clamped next energy level, without argument checks. Used in hot loops.
#[inline]
pub(crate) fn next_energy(
    energy_j: f64,
    config: &EnergyConfig,
    harvest_j: f64,
    charging: bool,
    consumption_j: f64,
) -> f64 {
    raw_balance(energy_j, config, harvest_j, charging, consumption_j).clamp(0.0, config.e_max_j)
}

pub fn step_detailed(
    state: BatteryState,
    config: &EnergyConfig,
    harvest_j: f64,
    charging: bool,
    consumption_j: f64,
) -> Result<StepOutcome> {
    if !(harvest_j >= 0.0) {
        return Err(Error::argument(format!(
            "harvest must be non-negative, got {harvest_j}"
        )));
    }
    if !(consumption_j >= 0.0) {
        return Err(Error::argument(format!(
            "consumption must be non-negative, got {consumption_j}"
        )));
    }
    let raw = raw_balance(state.energy_j, config, harvest_j, charging, consumption_j);
    Ok(StepOutcome {
        state: BatteryState {
            energy_j: raw.clamp(0.0, config.e_max_j),
            interval_index: state.interval_index + 1,
        },
        overflow_j: (raw - config.e_max_j).max(0.0),
        shortfall_j: (-raw).max(0.0),
    })
}

/// Advances the battery by one interval.
///
/// The level is clamped to `[0, e_max_j]`; energy above `e_max_j` is
/// returned as overflow. Dropping below the floor is not reported here,
/// constraint checking is responsible for that.
pub fn battery_step(
    state: BatteryState,
    config: &EnergyConfig,
    harvest_j: f64,
    charging: bool,
    consumption_j: f64,
) -> Result<(BatteryState, f64)> {
    let out = step_detailed(state, config, harvest_j, charging, consumption_j)?;
    Ok((out.state, out.overflow_j))
}

/// Projects `E_{t+1}` for every interval of a decision vector.
pub(crate) fn project(
    initial_j: f64,
    config: &EnergyConfig,
    harvest_j: &[f64],
    charge: &[bool],
    consumption_j: &[f64],
) -> Vec<f64> {
    let mut level = initial_j;
    harvest_j
        .iter()
        .zip(charge)
        .zip(consumption_j)
        .map(|((&h, &b), &c)| {
            level = next_energy(level, config, h, b, c);
            level
        })
        .collect()
}
