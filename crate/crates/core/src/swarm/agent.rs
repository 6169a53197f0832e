use crate::plant::{fly_primitive, GainMap, PlantParams};
use crate::seed::flight_seed;
use crate::transport::{Endpoint, Message, Payload};
use crate::tuner::GainPoint;
use crate::MavId;

use super::{transition, Event, MavRole, MavState, SwarmProtocol};

/// Slot number reserved for the post-tuning check flight.
pub const FINAL_CHECK_SEQ: u64 = u64::MAX;

/// On-board side of one MAV: holds the published gains and flies the
/// primitive on START_FLIGHT, reporting its cost.
pub struct MavAgent {
    id: MavId,
    role: MavRole,
    state: MavState,
    plant: PlantParams,
    gain_map: GainMap,
    experiment_seed: u64,
    gains: Option<GainPoint>,
}

impl MavAgent {
    pub fn new(id: MavId, plant: PlantParams, gain_map: GainMap, experiment_seed: u64) -> Self {
        Self {
            id,
            role: SwarmProtocol::role(id),
            state: MavState::Idle,
            plant,
            gain_map,
            experiment_seed,
            gains: None,
        }
    }

    pub fn state(&self) -> MavState {
        self.state
    }

    /// Cost of one flight with `gains` in slot `seq`; pure.
    pub fn flight_cost(&self, gains: GainPoint, seq: u64) -> f64 {
        fly_primitive(
            gains,
            &self.plant,
            &self.gain_map,
            flight_seed(self.experiment_seed, self.id, seq),
        )
        .cost
    }
}

impl Endpoint for MavAgent {
    fn mav_id(&self) -> MavId {
        self.id
    }

    fn handle(&mut self, msg: Message) -> Vec<Message> {
        match msg.payload {
            Payload::GainUpdate { k_p, k_d } => {
                self.gains = Some(GainPoint { k_p, k_d });
                Vec::new()
            }
            Payload::StartFlight { .. } => {
                let Some(gains) = self.gains else {
                    log::warn!("MAV {} asked to fly before any gains arrived", self.id);
                    return Vec::new();
                };
                match transition(self.role, self.state, Event::GainsPublished) {
                    Ok(s) => self.state = s,
                    Err(e) => {
                        log::warn!("MAV {}: {e}", self.id);
                        return Vec::new();
                    }
                }
                let flying = Message::state_notify(msg.seq, self.id, self.state);
                let cost = self.flight_cost(gains, msg.seq);
                self.state = transition(self.role, self.state, Event::FlightDone)
                    .expect("FLYING always accepts flight-done");
                vec![
                    flying,
                    Message::cost_report(msg.seq, self.id, cost),
                    Message::state_notify(msg.seq, self.id, self.state),
                ]
            }
            Payload::CostReport { .. } | Payload::StateNotify { .. } => {
                log::warn!("MAV {} ignoring {}", self.id, msg.kind().as_str());
                Vec::new()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::Kind;

    #[test]
    fn flies_on_start_and_reports() {
        let mut a = MavAgent::new(2, PlantParams::default(), GainMap::default(), 5);
        assert!(a.handle(Message::gain_update(1, 2, 0.5, 0.5)).is_empty());
        let out = a.handle(Message::start_flight(1, 2, 0));
        let kinds: Vec<Kind> = out.iter().map(|m| m.kind()).collect();
        assert_eq!(
            kinds,
            vec![Kind::StateNotify, Kind::CostReport, Kind::StateNotify]
        );
        assert_eq!(
            out[0].payload,
            Payload::StateNotify {
                state: MavState::Flying
            }
        );
        assert_eq!(a.state(), MavState::Idle);
        let Payload::CostReport { j } = out[1].payload else {
            unreachable!()
        };
        assert_eq!(j, a.flight_cost(GainPoint { k_p: 0.5, k_d: 0.5 }, 1));
    }

    #[test]
    fn no_gains_no_flight() {
        let mut a = MavAgent::new(1, PlantParams::default(), GainMap::default(), 5);
        assert!(a.handle(Message::start_flight(1, 1, 0)).is_empty());
    }
}
