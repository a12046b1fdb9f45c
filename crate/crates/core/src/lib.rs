//! Planning manual recharges and application energy budgets for
//! energy-harvesting wearables.
//!
//! The crate covers battery dynamics and constraint checking ([`energy`],
//! [`plan`]), harvest models and synthetic traces ([`harvest`]), a bagged
//! regression-tree forecaster ([`predictor`]), the receding-horizon charging
//! planner ([`planner`]), comparison policies ([`baselines`]) and the
//! simulation and metrics pipeline ([`sim`]).

pub mod activity;
pub mod baselines;
pub mod energy;
pub mod error;
pub mod harvest;
pub mod plan;
pub mod planner;
pub mod predictor;
pub mod profile;
pub mod sim;

pub use activity::{ActivityLabel, MotionIntensities};
pub use energy::{battery_step, BatteryState, EnergyConfig, StepOutcome};
pub use error::{Error, Result};
pub use harvest::{ActivitySchedule, HarvestTrace, PvPanelConfig};
pub use plan::{check_constraints, min_intercharge_gap, Plan, ViolationReport};
pub use predictor::{worst_case, Forecast, TreeEnsemble};
pub use profile::EnergyAccuracyProfile;
