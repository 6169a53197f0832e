//! Altitude-axis MAV plant under PD thrust control.
//!
//! One flight tracks the 8 s altitude primitive from rest; the tracking
//! cost is the sum of absolute true-altitude errors sampled every step.

mod cost;
mod dynamics;
mod gains;
mod reference;
mod surface;

pub use cost::{accumulate, CostAccumulator};
pub use dynamics::{
    fly_primitive, pd_thrust, step_dynamics, FlightOutcome, NoiseSource, PlantParams, PlantState,
    DIVERGED_COST,
};
pub use gains::{map_gains, GainMap, PhysicalGains};
pub use reference::{reference_primitive, Reference, PRIMITIVE_DURATION_S};
pub use surface::{
    surface_registry, synthetic_cost, Constant, CostSurface, FlatLogBowl, QuadraticBowl,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlantError {
    #[error("time {0} s outside the primitive's [0, 8] s window")]
    OutOfRange(f64),
    #[error("invalid plant parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("invalid gain map: {0}")]
    InvalidGainMap(String),
    #[error("negative cost increment {0}")]
    NegativeIncrement(f64),
    #[error(transparent)]
    UnknownSurface(#[from] crate::registry::UnknownName),
}
