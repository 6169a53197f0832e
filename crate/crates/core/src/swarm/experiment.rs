use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{
    strategy, CostReport, DistributionStrategy, EvalSlot, MavAgent, ProtocolEvent, SimClock,
    SlotPlan, SwarmError, SwarmProtocol, FINAL_CHECK_SEQ,
};
use crate::plant::{GainMap, PlantParams};
use crate::transport::{Endpoint, Link, Message, Payload, Transport, TransportError};
use crate::tuner::{
    bootstrap, BootstrapTrace, EqlOptions, GainPoint, OracleError, SchedulePlan, TUNED_PARAMS,
};
use crate::MavId;

/// Simulated barrier bound, in slot durations.
const BARRIER_SLOTS: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct ExperimentSetup {
    pub n: usize,
    pub strategy: String,
    pub plan: SchedulePlan,
    pub k_d_init: f64,
    /// One entry per MAV, MAV 1 first.
    pub plants: Vec<PlantParams>,
    pub gain_map: GainMap,
    pub seed: u64,
    pub options: EqlOptions,
    /// Accept an odd swarm size (with a warning).
    pub allow_odd: bool,
    /// Real time the coordinator waits at a barrier before giving up.
    pub barrier_timeout: Duration,
}

impl ExperimentSetup {
    /// `n` identical MAVs flying `plant`.
    pub fn uniform(
        n: usize,
        strategy: &str,
        plan: SchedulePlan,
        plant: PlantParams,
        seed: u64,
    ) -> Self {
        Self {
            n,
            strategy: strategy.to_owned(),
            plan,
            k_d_init: 0.2,
            plants: vec![plant; n],
            gain_map: GainMap::default(),
            seed,
            options: EqlOptions::default(),
            allow_odd: false,
            barrier_timeout: Duration::from_secs(30),
        }
    }

    pub fn validate(&self) -> Result<(), SwarmError> {
        if self.n < 2 {
            return Err(SwarmError::SwarmTooSmall { n: self.n, need: 2 });
        }
        if self.n % 2 == 1 {
            if !self.allow_odd {
                return Err(SwarmError::InvalidSetup(format!(
                    "n = {} is odd; set allow_odd to run anyway",
                    self.n
                )));
            }
            log::warn!("running an odd swarm of {} MAVs", self.n);
        }
        if self.plants.len() != self.n {
            return Err(SwarmError::InvalidSetup(format!(
                "{} plant parameter sets for {} MAVs",
                self.plants.len(),
                self.n
            )));
        }
        for (i, p) in self.plants.iter().enumerate() {
            p.validate()
                .map_err(|e| SwarmError::InvalidSetup(format!("plant of MAV {}: {e}", i + 1)))?;
        }
        self.gain_map
            .validate()
            .map_err(|e| SwarmError::InvalidSetup(e.to_string()))?;
        strategy(&self.strategy)?;
        Ok(())
    }

    pub fn agents(&self) -> Vec<MavAgent> {
        self.plants
            .iter()
            .enumerate()
            .map(|(i, p)| MavAgent::new((i + 1) as MavId, *p, self.gain_map, self.seed))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub final_gains: GainPoint,
    pub bootstrap_trace: BootstrapTrace,
    pub slots: Vec<EvalSlot>,
    pub simulated_duration_s: f64,
    pub total_evals: usize,
    /// Mean cost of one check flight per MAV with the final gains.
    pub final_cost: f64,
}

impl ExperimentResult {
    /// `(seq, cost)` for every flight `mav` flew.
    pub fn cost_history(&self, mav: MavId) -> Vec<(u64, f64)> {
        self.slots
            .iter()
            .filter_map(|s| s.reports.get(&mav).map(|&c| (s.seq, c)))
            .collect()
    }
}

/// Planned length of a full experiment, assuming no early stop and the
/// reuse flag off.
pub fn simulated_duration(
    plan: &SchedulePlan,
    strategy: &dyn DistributionStrategy,
    n: usize,
) -> Result<f64, SwarmError> {
    // Endpoints, then one pair per reduction step, both batches of two.
    let per_search = strategy.slots_for_batch(2, n)? * (plan.steps + 1);
    let slots = per_search * TUNED_PARAMS * plan.bootstraps;
    Ok(slots as f64 * plan.timing.slot_s())
}

struct Coordinator<'a> {
    setup: &'a ExperimentSetup,
    strategy: Box<dyn DistributionStrategy>,
    link: &'a mut Link,
    protocol: SwarmProtocol,
    clock: SimClock,
    seq: u64,
    slots: Vec<EvalSlot>,
}

impl Coordinator<'_> {
    fn evaluate(&mut self, probes: &[GainPoint]) -> Result<Vec<f64>, SwarmError> {
        let plans = self.strategy.plan(probes.len(), self.setup.n)?;
        let first = self.slots.len();
        let mut reports = Vec::with_capacity(plans.len());
        for plan in &plans {
            reports.push(self.fly_slot(probes, plan)?);
        }
        let costs = self.strategy.aggregate(probes.len(), &plans, &reports)?;
        for (slot, plan) in self.slots[first..].iter_mut().zip(&plans) {
            let flown: BTreeSet<usize> = plan.mavs.values().copied().collect();
            slot.aggregated = flown.into_iter().map(|i| (probes[i], costs[i])).collect();
        }
        Ok(costs)
    }

    fn fly_slot(
        &mut self,
        probes: &[GainPoint],
        plan: &SlotPlan,
    ) -> Result<Vec<CostReport>, SwarmError> {
        self.seq += 1;
        let seq = self.seq;
        let (t_start, t_end) = self.clock.advance();
        let assigned: BTreeSet<MavId> = plan.mavs.keys().copied().collect();
        self.protocol.apply(ProtocolEvent::Publish {
            seq,
            assigned: assigned.clone(),
        })?;
        for (&mav, &probe) in &plan.mavs {
            let g = probes[probe];
            self.link
                .publisher
                .publish(Message::gain_update(seq, mav, g.k_p, g.k_d))?;
        }
        for &mav in &assigned {
            self.link
                .publisher
                .publish(Message::start_flight(seq, mav, 0))?;
        }

        // Wait for every report and for every flyer to be back in IDLE.
        let deadline = Instant::now() + self.setup.barrier_timeout;
        let mut flying = assigned.clone();
        let barrier_done = |p: &SwarmProtocol| p.barrier().is_some_and(|b| b.is_complete());
        while !(flying.is_empty() && barrier_done(&self.protocol)) {
            let left = deadline.saturating_duration_since(Instant::now());
            let msg = match self.link.collector.recv_timeout(left) {
                Ok(m) => m,
                Err(TransportError::Timeout { .. }) => {
                    let mut missing: BTreeSet<MavId> = flying.clone();
                    if let Some(b) = self.protocol.barrier() {
                        missing.extend(b.missing());
                    }
                    return Err(SwarmError::BarrierTimeout {
                        seq,
                        missing: missing.into_iter().collect(),
                        deadline_s: t_start + BARRIER_SLOTS * self.setup.plan.timing.slot_s(),
                    });
                }
                Err(e) => return Err(e.into()),
            };
            match msg.payload {
                Payload::CostReport { j } => {
                    self.protocol.apply(ProtocolEvent::Report(CostReport {
                        seq: msg.seq,
                        mav_id: msg.mav_id,
                        cost: j,
                    }))?
                }
                Payload::StateNotify { state } => match state {
                    super::MavState::Flying => {}
                    super::MavState::Idle if msg.seq == seq && flying.remove(&msg.mav_id) => {
                        self.protocol.apply(ProtocolEvent::FlightDone(msg.mav_id))?
                    }
                    _ => {
                        return Err(SwarmError::UnexpectedMessage {
                            kind: "STATE_NOTIFY",
                            mav: msg.mav_id,
                        })
                    }
                },
                Payload::GainUpdate { .. } | Payload::StartFlight { .. } => {
                    return Err(SwarmError::UnexpectedMessage {
                        kind: msg.kind().as_str(),
                        mav: msg.mav_id,
                    })
                }
            }
        }
        let reports = self
            .protocol
            .barrier()
            .map(|b| b.reports())
            .unwrap_or_default();
        self.protocol.apply(ProtocolEvent::AllReportsIn)?;
        self.slots.push(EvalSlot {
            seq,
            t_start,
            t_end,
            assignments: plan.mavs.iter().map(|(&m, &i)| (m, probes[i])).collect(),
            reports: reports
                .iter()
                .map(|r| (r.mav_id, r.cost))
                .collect::<BTreeMap<_, _>>(),
            aggregated: Vec::new(),
        });
        Ok(reports)
    }
}

#[derive(Debug)]
struct Stashed;

impl std::fmt::Display for Stashed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("swarm evaluation failed")
    }
}

impl std::error::Error for Stashed {}

/// Tunes the gains with the swarm over `transport`.
pub fn run_experiment(
    setup: &ExperimentSetup,
    transport: &dyn Transport,
) -> Result<ExperimentResult, SwarmError> {
    setup.validate()?;
    let agents = setup.agents();
    let final_cost_of = |g: GainPoint| {
        agents
            .iter()
            .map(|a| a.flight_cost(g, FINAL_CHECK_SEQ))
            .sum::<f64>()
            / agents.len() as f64
    };
    let endpoints: Vec<Box<dyn Endpoint>> = setup
        .agents()
        .into_iter()
        .map(|a| Box::new(a) as Box<dyn Endpoint>)
        .collect();
    let mut link = transport.open(endpoints)?;

    let outcome = {
        let mut coord = Coordinator {
            setup,
            strategy: strategy(&setup.strategy)?,
            link: &mut link,
            protocol: SwarmProtocol::new(setup.n),
            clock: SimClock::new(setup.plan.timing),
            seq: 0,
            slots: Vec::new(),
        };
        let mut stash: Option<SwarmError> = None;
        let mut oracle = |probes: &[GainPoint]| -> Result<Vec<f64>, OracleError> {
            coord.evaluate(probes).map_err(|e| {
                stash = Some(e);
                Box::new(Stashed) as OracleError
            })
        };
        let tuned = bootstrap(&mut oracle, setup.k_d_init, &setup.plan, setup.options);
        match tuned {
            Ok((gains, trace)) => coord
                .protocol
                .apply(ProtocolEvent::ExperimentIdle)
                .map(|_| (gains, trace, coord.slots, coord.clock.now())),
            Err(failure) => Err(stash.take().unwrap_or(SwarmError::Tuner(failure.error))),
        }
    };
    link.shutdown();
    let (final_gains, bootstrap_trace, slots, simulated_duration_s) = outcome?;

    Ok(ExperimentResult {
        final_gains,
        total_evals: bootstrap_trace.evaluations,
        bootstrap_trace,
        slots,
        simulated_duration_s,
        final_cost: final_cost_of(final_gains),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::InProcess;
    use crate::tuner::{compute_schedule, SlotTiming};

    fn plan(timing: SlotTiming) -> SchedulePlan {
        compute_schedule(0.125, 2, timing).unwrap()
    }

    #[test]
    fn planned_durations() {
        let p = plan(SlotTiming::default());
        assert_eq!(
            simulated_duration(&p, &super::super::Avg, 2).unwrap(),
            560.0
        );
        assert_eq!(
            simulated_duration(&p, &super::super::Dist, 2).unwrap(),
            280.0
        );
        let p0 = plan(SlotTiming {
            overhead_s: 0.0,
            ..SlotTiming::default()
        });
        assert_eq!(
            simulated_duration(&p0, &super::super::Avg, 2).unwrap(),
            504.0
        );
    }

    #[test]
    fn avg_default_run() {
        let setup = ExperimentSetup::uniform(
            2,
            "avg",
            plan(SlotTiming::default()),
            PlantParams::default(),
            3,
        );
        let r = run_experiment(&setup, &InProcess).unwrap();
        assert_eq!(r.total_evals, 56);
        assert_eq!(r.slots.len(), 56);
        assert_eq!(r.simulated_duration_s, 560.0);
        for w in r.slots.windows(2) {
            assert!(w[1].seq > w[0].seq);
            assert_eq!(w[1].t_start, w[0].t_end);
        }
        assert_eq!(r.cost_history(2).len(), 56);
    }

    #[test]
    fn dist_halves_the_slots() {
        let setup = ExperimentSetup::uniform(
            2,
            "dist",
            plan(SlotTiming::default()),
            PlantParams::default(),
            3,
        );
        let r = run_experiment(&setup, &InProcess).unwrap();
        assert_eq!(r.total_evals, 56);
        assert_eq!(r.slots.len(), 28);
        assert_eq!(r.simulated_duration_s, 280.0);
    }

    #[test]
    fn strategies_agree_without_noise() {
        let quiet = PlantParams {
            noise_sigma: 0.0,
            disturb_amp: 0.0,
            ..PlantParams::default()
        };
        let a = run_experiment(
            &ExperimentSetup::uniform(2, "avg", plan(SlotTiming::default()), quiet, 1),
            &InProcess,
        )
        .unwrap();
        let d = run_experiment(
            &ExperimentSetup::uniform(2, "dist", plan(SlotTiming::default()), quiet, 1),
            &InProcess,
        )
        .unwrap();
        assert!(a.final_gains.same_bits(&d.final_gains));
        assert_eq!(a.bootstrap_trace, d.bootstrap_trace);
    }

    #[test]
    fn odd_swarm_needs_override() {
        let mut setup = ExperimentSetup::uniform(
            3,
            "dist",
            plan(SlotTiming::default()),
            PlantParams::default(),
            1,
        );
        assert!(matches!(
            run_experiment(&setup, &InProcess),
            Err(SwarmError::InvalidSetup(_))
        ));
        setup.allow_odd = true;
        assert_eq!(run_experiment(&setup, &InProcess).unwrap().total_evals, 56);
    }
}
