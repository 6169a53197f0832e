use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::tuner::{GainPoint, SlotTiming};
use crate::MavId;

/// Simulated wall clock advanced one evaluation slot at a time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    now: f64,
    timing: SlotTiming,
}

impl SimClock {
    pub fn new(timing: SlotTiming) -> Self {
        Self { now: 0.0, timing }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Reserves the next slot and returns its `[start, end]`.
    pub fn advance(&mut self) -> (f64, f64) {
        let start = self.now;
        self.now += self.timing.slot_s();
        (start, self.now)
    }
}

/// One synchronized flight period and everything recorded in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSlot {
    pub seq: u64,
    pub t_start: f64,
    pub t_end: f64,
    pub assignments: BTreeMap<MavId, GainPoint>,
    /// Per-MAV cost increments, ascending MAV id.
    pub reports: BTreeMap<MavId, f64>,
    /// Aggregated cost per distinct probe flown in this slot.
    pub aggregated: Vec<(GainPoint, f64)>,
}
