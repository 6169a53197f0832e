//! Zero-order tuning: equal-division interval reduction, coordinate-wise
//! bootstrap and the deterministic evaluation schedule.
//!
//! Everything here is pure. Costs come from a caller-supplied oracle that
//! receives whole probe batches, so the caller may evaluate a batch in
//! parallel (that is what the swarm coordinator does).

mod bootstrap;
mod eql;
mod interval;
mod schedule;

pub use bootstrap::{
    bootstrap, BootstrapFailure, BootstrapRound, BootstrapTrace, GainOracle, Termination,
};
pub use eql::{
    eql_minimize, estimate, interior_points, reduce, Branch, CostOracle, EqlFailure, EqlOptions,
    EqlStep, EqlTrace, DEGENERATE_WIDTH,
};
pub use interval::{GainPoint, Interval};
pub use schedule::{compute_schedule, SchedulePlan, SlotTiming, REDUCTION_FACTOR, TUNED_PARAMS};

/// Error returned by a cost oracle; boxed so callers can carry their own
/// error types through the optimizer and downcast afterwards.
pub type OracleError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum TunerError {
    #[error("invalid tolerance {0}: must lie strictly between 0 and 1")]
    InvalidTolerance(f64),
    #[error("bootstrap count must be at least 1")]
    InvalidBootstraps,
    #[error("reduction step count must be at least 1")]
    InvalidSteps,
    #[error("invalid interval [{lo}, {hi}]: need 0 <= lo < hi <= 1")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("normalized gain {0} outside [0, 1]")]
    InvalidGain(f64),
    #[error("non-finite cost {cost} at probe {probe}")]
    NonFiniteCost { probe: f64, cost: f64 },
    #[error("oracle returned {got} costs for {expected} probes")]
    BatchSize { expected: usize, got: usize },
    #[error("cost oracle failed: {0}")]
    Oracle(#[source] OracleError),
}
