//! Parallel, model-free tuning of MAV altitude controller gains.
//!
//! The crate is split by responsibility:
//!
//! * [`tuner`]: the equal-division interval-reduction optimizer, the
//!   coordinate-wise bootstrap driver and the evaluation schedule.
//! * [`plant`]: the altitude-axis plant under PD thrust control, the
//!   reference primitive and the tracking cost; synthetic test surfaces.
//! * [`swarm`]: master/slave state machines, the report barrier, the
//!   AVG and DIST distribution strategies and the simulated clock.
//! * [`transport`]: the JSON-lines message schema and the in-process and
//!   TCP delivery mechanisms.
//! * [`harness`]: experiment configuration and the `run`, `sweep` and
//!   `verify` commands.
//!
//! Interchangeable algorithm families (distribution strategies,
//! transports, cost surfaces) each sit behind a trait and are selected by
//! name through a [`registry::Registry`].

/// Identifier of one swarm member; the master is MAV 1.
pub type MavId = u32;

pub mod harness;
pub mod plant;
pub mod registry;
pub mod seed;
pub mod swarm;
pub mod transport;
pub mod tuner;

pub use plant::{GainMap, PlantParams};
pub use swarm::{ExperimentResult, ExperimentSetup, MavRole, MavState};
pub use tuner::{GainPoint, Interval, SchedulePlan, SlotTiming};
