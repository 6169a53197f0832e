use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CostReport, SwarmError};
use crate::MavId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MavRole {
    Master,
    Slave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MavState {
    Idle,
    Flying,
    Optimize,
}

impl MavState {
    pub fn as_str(&self) -> &'static str {
        match self {
            MavState::Idle => "IDLE",
            MavState::Flying => "FLYING",
            MavState::Optimize => "OPTIMIZE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "IDLE" => MavState::Idle,
            "FLYING" => MavState::Flying,
            "OPTIMIZE" => MavState::Optimize,
            _ => return None,
        })
    }
}

impl fmt::Display for MavState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Event {
    GainsPublished,
    FlightDone,
    AllReportsIn,
    ExperimentIdle,
}

impl Event {
    pub fn as_str(&self) -> &'static str {
        match self {
            Event::GainsPublished => "gains-published",
            Event::FlightDone => "flight-done",
            Event::AllReportsIn => "all-reports-in",
            Event::ExperimentIdle => "experiment-idle",
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-MAV state machine. Slaves only ever see IDLE and FLYING.
pub fn transition(role: MavRole, state: MavState, event: Event) -> Result<MavState, SwarmError> {
    use Event::*;
    use MavState::*;
    let next = match (role, state, event) {
        (_, Idle, GainsPublished) => Flying,
        (MavRole::Master, Optimize, GainsPublished) => Flying,
        (_, Flying, FlightDone) => Idle,
        (MavRole::Master, Idle, AllReportsIn) => Optimize,
        (MavRole::Master, Optimize, ExperimentIdle) => Idle,
        (_, Idle, ExperimentIdle) => Idle,
        _ => return Err(SwarmError::ProtocolViolation { role, state, event }),
    };
    Ok(next)
}

/// Collects the cost reports of one evaluation slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBarrier {
    seq: u64,
    expected: BTreeSet<MavId>,
    received: BTreeMap<MavId, f64>,
}

impl ReportBarrier {
    pub fn new(seq: u64, expected: BTreeSet<MavId>) -> Self {
        Self {
            seq,
            expected,
            received: BTreeMap::new(),
        }
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn offer(&mut self, report: CostReport) -> Result<(), SwarmError> {
        if report.seq != self.seq {
            return Err(SwarmError::StaleReport {
                mav: report.mav_id,
                got: report.seq,
                want: self.seq,
            });
        }
        if !self.expected.contains(&report.mav_id) {
            return Err(SwarmError::UnexpectedReport {
                mav: report.mav_id,
                seq: report.seq,
            });
        }
        if self.received.insert(report.mav_id, report.cost).is_some() {
            return Err(SwarmError::DuplicateReport {
                mav: report.mav_id,
                seq: report.seq,
            });
        }
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.received.len() == self.expected.len()
    }

    pub fn missing(&self) -> Vec<MavId> {
        self.expected
            .iter()
            .filter(|m| !self.received.contains_key(m))
            .copied()
            .collect()
    }

    /// Reports in ascending MAV order.
    pub fn reports(&self) -> Vec<CostReport> {
        self.received
            .iter()
            .map(|(&mav_id, &cost)| CostReport {
                seq: self.seq,
                mav_id,
                cost,
            })
            .collect()
    }
}

/// Protocol-level events seen by the coordinator.
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolEvent {
    /// The master publishes gains for slot `seq` to `assigned`.
    Publish {
        seq: u64,
        assigned: BTreeSet<MavId>,
    },
    FlightDone(MavId),
    Report(CostReport),
    AllReportsIn,
    ExperimentIdle,
}

/// Coordinator view of the whole swarm: every MAV's state plus the report
/// barrier of the current slot. MAV 1 is the master.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmProtocol {
    states: Vec<MavState>,
    barrier: Option<ReportBarrier>,
    last_seq: u64,
}

pub const MASTER: MavId = 1;

impl SwarmProtocol {
    pub fn new(n: usize) -> Self {
        Self {
            states: vec![MavState::Idle; n],
            barrier: None,
            last_seq: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn role(mav: MavId) -> MavRole {
        if mav == MASTER {
            MavRole::Master
        } else {
            MavRole::Slave
        }
    }

    fn index(&self, mav: MavId) -> Result<usize, SwarmError> {
        let i = (mav as usize).wrapping_sub(1);
        if i < self.states.len() {
            Ok(i)
        } else {
            Err(SwarmError::UnknownMav(mav))
        }
    }

    pub fn state(&self, mav: MavId) -> Option<MavState> {
        self.index(mav).ok().map(|i| self.states[i])
    }

    pub fn states(&self) -> impl Iterator<Item = (MavId, MavRole, MavState)> + '_ {
        self.states
            .iter()
            .enumerate()
            .map(|(i, &s)| ((i + 1) as MavId, Self::role((i + 1) as MavId), s))
    }

    pub fn barrier(&self) -> Option<&ReportBarrier> {
        self.barrier.as_ref()
    }

    fn step(&mut self, mav: MavId, event: Event) -> Result<(), SwarmError> {
        let i = self.index(mav)?;
        self.states[i] = transition(Self::role(mav), self.states[i], event)?;
        Ok(())
    }

    /// Applies `event`, or leaves the protocol untouched and errors.
    pub fn apply(&mut self, event: ProtocolEvent) -> Result<(), SwarmError> {
        let mut next = self.clone();
        next.apply_in_place(event)?;
        *self = next;
        Ok(())
    }

    fn apply_in_place(&mut self, event: ProtocolEvent) -> Result<(), SwarmError> {
        match event {
            ProtocolEvent::Publish { seq, assigned } => {
                if seq <= self.last_seq {
                    return Err(SwarmError::SeqNotIncreasing {
                        got: seq,
                        last: self.last_seq,
                    });
                }
                if !assigned.contains(&MASTER) {
                    return Err(SwarmError::MasterNotAssigned(seq));
                }
                let master = self.states[0];
                let first_slot = self.barrier.is_none() && master == MavState::Idle;
                if master != MavState::Optimize && !first_slot {
                    return Err(SwarmError::ProtocolViolation {
                        role: MavRole::Master,
                        state: master,
                        event: Event::GainsPublished,
                    });
                }
                for &mav in &assigned {
                    self.step(mav, Event::GainsPublished)?;
                }
                self.last_seq = seq;
                self.barrier = Some(ReportBarrier::new(seq, assigned));
            }
            ProtocolEvent::FlightDone(mav) => self.step(mav, Event::FlightDone)?,
            ProtocolEvent::Report(report) => {
                self.index(report.mav_id)?;
                match &mut self.barrier {
                    Some(b) => b.offer(report)?,
                    None => {
                        return Err(SwarmError::UnexpectedReport {
                            mav: report.mav_id,
                            seq: report.seq,
                        })
                    }
                }
            }
            ProtocolEvent::AllReportsIn => {
                let barrier = self.barrier.as_ref().ok_or(SwarmError::BarrierIncomplete {
                    seq: 0,
                    missing: Vec::new(),
                })?;
                if !barrier.is_complete() {
                    return Err(SwarmError::BarrierIncomplete {
                        seq: barrier.seq,
                        missing: barrier.missing(),
                    });
                }
                if let Some(i) = self.states.iter().position(|&s| s != MavState::Idle) {
                    return Err(SwarmError::ProtocolViolation {
                        role: Self::role((i + 1) as MavId),
                        state: self.states[i],
                        event: Event::AllReportsIn,
                    });
                }
                self.step(MASTER, Event::AllReportsIn)?;
            }
            ProtocolEvent::ExperimentIdle => {
                for mav in 1..=self.states.len() as MavId {
                    self.step(mav, Event::ExperimentIdle)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legal_transitions() {
        use Event::*;
        use MavState::*;
        assert_eq!(
            transition(MavRole::Slave, Idle, GainsPublished).unwrap(),
            Flying
        );
        assert_eq!(
            transition(MavRole::Slave, Flying, FlightDone).unwrap(),
            Idle
        );
        assert_eq!(
            transition(MavRole::Master, Idle, AllReportsIn).unwrap(),
            Optimize
        );
        assert_eq!(
            transition(MavRole::Master, Optimize, GainsPublished).unwrap(),
            Flying
        );
        assert_eq!(
            transition(MavRole::Master, Optimize, ExperimentIdle).unwrap(),
            Idle
        );
    }

    #[test]
    fn slave_cannot_optimize() {
        let err = transition(MavRole::Slave, MavState::Idle, Event::AllReportsIn).unwrap_err();
        let text = err.to_string();
        assert!(
            text.contains("IDLE") && text.contains("all-reports-in"),
            "{text}"
        );
        assert!(transition(MavRole::Master, MavState::Flying, Event::AllReportsIn).is_err());
        assert!(transition(MavRole::Slave, MavState::Flying, Event::GainsPublished).is_err());
    }

    #[test]
    fn barrier_rejects_strays() {
        let mut b = ReportBarrier::new(4, [1, 2].into());
        assert!(b
            .offer(CostReport {
                seq: 3,
                mav_id: 1,
                cost: 1.0
            })
            .is_err());
        assert!(b
            .offer(CostReport {
                seq: 4,
                mav_id: 3,
                cost: 1.0
            })
            .is_err());
        b.offer(CostReport {
            seq: 4,
            mav_id: 2,
            cost: 1.0,
        })
        .unwrap();
        assert!(b
            .offer(CostReport {
                seq: 4,
                mav_id: 2,
                cost: 1.0
            })
            .is_err());
        assert_eq!(b.missing(), vec![1]);
        b.offer(CostReport {
            seq: 4,
            mav_id: 1,
            cost: 2.0,
        })
        .unwrap();
        assert!(b.is_complete());
        assert_eq!(b.reports()[0].mav_id, 1);
    }

    #[test]
    fn one_slot_cycle() {
        let mut p = SwarmProtocol::new(2);
        p.apply(ProtocolEvent::Publish {
            seq: 1,
            assigned: [1, 2].into(),
        })
        .unwrap();
        assert!(p.apply(ProtocolEvent::AllReportsIn).is_err());
        p.apply(ProtocolEvent::FlightDone(2)).unwrap();
        p.apply(ProtocolEvent::Report(CostReport {
            seq: 1,
            mav_id: 2,
            cost: 1.0,
        }))
        .unwrap();
        p.apply(ProtocolEvent::FlightDone(1)).unwrap();
        assert!(p.apply(ProtocolEvent::AllReportsIn).is_err());
        p.apply(ProtocolEvent::Report(CostReport {
            seq: 1,
            mav_id: 1,
            cost: 1.0,
        }))
        .unwrap();
        p.apply(ProtocolEvent::AllReportsIn).unwrap();
        assert_eq!(p.state(1), Some(MavState::Optimize));
        p.apply(ProtocolEvent::Publish {
            seq: 2,
            assigned: [1].into(),
        })
        .unwrap();
        assert_eq!(p.state(2), Some(MavState::Idle));
    }

    #[test]
    fn failed_event_leaves_state_untouched() {
        let mut p = SwarmProtocol::new(2);
        let before = p.clone();
        assert!(p
            .apply(ProtocolEvent::Publish {
                seq: 1,
                assigned: [2, 9].into()
            })
            .is_err());
        assert_eq!(p, before);
    }
}
