//! Master/slave coordination over a simulated clock.
//!
//! The coordinator is a single control loop: it turns each probe batch
//! from the tuner into evaluation slots, publishes gains, waits at the
//! report barrier, aggregates and hands one cost per probe back.

mod agent;
mod clock;
mod experiment;
mod state;
mod strategy;

use serde::{Deserialize, Serialize};

pub use agent::{MavAgent, FINAL_CHECK_SEQ};
pub use clock::{EvalSlot, SimClock};
pub use experiment::{run_experiment, simulated_duration, ExperimentResult, ExperimentSetup};
pub use state::{
    transition, Event, MavRole, MavState, ProtocolEvent, ReportBarrier, SwarmProtocol, MASTER,
};
pub use strategy::{
    aggregate, assign_evaluations, strategy, strategy_registry, Avg, Dist, DistributionStrategy,
    SlotPlan,
};

use crate::registry::UnknownName;
use crate::transport::TransportError;
use crate::tuner::TunerError;
use crate::MavId;

/// One MAV's accumulated cost for one evaluation slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub seq: u64,
    pub mav_id: MavId,
    pub cost: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum SwarmError {
    #[error("protocol violation: {role:?} in state {state} cannot take event {event}")]
    ProtocolViolation {
        role: MavRole,
        state: MavState,
        event: Event,
    },
    #[error("barrier timeout at seq {seq}: no report from MAVs {missing:?} by t = {deadline_s} s (simulated)")]
    BarrierTimeout {
        seq: u64,
        missing: Vec<MavId>,
        deadline_s: f64,
    },
    #[error("barrier for seq {seq} incomplete: missing MAVs {missing:?}")]
    BarrierIncomplete { seq: u64, missing: Vec<MavId> },
    #[error("report from MAV {mav} carries seq {got}, expected {want}")]
    StaleReport { mav: MavId, got: u64, want: u64 },
    #[error("unexpected report from MAV {mav} for seq {seq}")]
    UnexpectedReport { mav: MavId, seq: u64 },
    #[error("duplicate report from MAV {mav} for seq {seq}")]
    DuplicateReport { mav: MavId, seq: u64 },
    #[error("unexpected {kind} message from MAV {mav}")]
    UnexpectedMessage { kind: &'static str, mav: MavId },
    #[error("slot seq {got} does not follow {last}")]
    SeqNotIncreasing { got: u64, last: u64 },
    #[error("slot {0} does not include the master")]
    MasterNotAssigned(u64),
    #[error("unknown MAV {0}")]
    UnknownMav(MavId),
    #[error("probe {0} was never assigned")]
    UnassignedProbe(usize),
    #[error("empty probe batch")]
    EmptyBatch,
    #[error("swarm of {n} MAVs is too small, need at least {need}")]
    SwarmTooSmall { n: usize, need: usize },
    #[error("invalid experiment setup: {0}")]
    InvalidSetup(String),
    #[error(transparent)]
    Unknown(#[from] UnknownName),
    #[error("transport: {0}")]
    Transport(#[from] TransportError),
    #[error("tuner: {0}")]
    Tuner(#[from] TunerError),
}
