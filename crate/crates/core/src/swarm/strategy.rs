//! How a batch of probes is spread over the swarm, and how the reports
//! are folded back into one cost per probe.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{CostReport, SwarmError};
use crate::registry::Registry;
use crate::tuner::GainPoint;
use crate::MavId;

/// MAV -> index of the probe it flies, for one evaluation slot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotPlan {
    pub mavs: BTreeMap<MavId, usize>,
}

pub trait DistributionStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Slots (in order) covering a batch of `batch` probes with `n` MAVs.
    fn plan(&self, batch: usize, n: usize) -> Result<Vec<SlotPlan>, SwarmError>;

    fn slots_for_batch(&self, batch: usize, n: usize) -> Result<usize, SwarmError> {
        Ok(self.plan(batch, n)?.len())
    }

    /// One cost per probe: the mean over every MAV that flew it.
    ///
    /// `reports[s]` holds the reports of slot `s`; sums run in ascending
    /// MAV order so arrival order never changes the result.
    fn aggregate(
        &self,
        batch: usize,
        slots: &[SlotPlan],
        reports: &[Vec<CostReport>],
    ) -> Result<Vec<f64>, SwarmError> {
        let mut sums = vec![(0.0, 0u32); batch];
        for (slot, got) in slots.iter().zip(reports) {
            let by_mav: BTreeMap<MavId, &CostReport> = got.iter().map(|r| (r.mav_id, r)).collect();
            for &mav in by_mav.keys() {
                if !slot.mavs.contains_key(&mav) {
                    return Err(SwarmError::UnexpectedReport {
                        mav,
                        seq: by_mav[&mav].seq,
                    });
                }
            }
            let missing: Vec<MavId> = slot
                .mavs
                .keys()
                .filter(|m| !by_mav.contains_key(m))
                .copied()
                .collect();
            if !missing.is_empty() {
                let seq = got.first().map(|r| r.seq).unwrap_or(0);
                return Err(SwarmError::BarrierIncomplete { seq, missing });
            }
            for (mav, &probe) in &slot.mavs {
                let s = &mut sums[probe];
                s.0 += by_mav[mav].cost;
                s.1 += 1;
            }
        }
        sums.into_iter()
            .enumerate()
            .map(|(probe, (sum, count))| {
                if count == 0 {
                    Err(SwarmError::UnassignedProbe(probe))
                } else {
                    Ok(sum / f64::from(count))
                }
            })
            .collect()
    }
}

/// Every MAV flies the same probe; one slot per probe.
pub struct Avg;

impl DistributionStrategy for Avg {
    fn name(&self) -> &'static str {
        "avg"
    }

    fn plan(&self, batch: usize, n: usize) -> Result<Vec<SlotPlan>, SwarmError> {
        if batch == 0 {
            return Err(SwarmError::EmptyBatch);
        }
        if n == 0 {
            return Err(SwarmError::SwarmTooSmall { n, need: 1 });
        }
        Ok((0..batch)
            .map(|probe| SlotPlan {
                mavs: (1..=n as MavId).map(|m| (m, probe)).collect(),
            })
            .collect())
    }
}

/// Different probes on different MAVs within a slot.
///
/// A batch that fits at least twice into the swarm is replicated
/// round-robin over the spare MAVs so duplicates can be averaged;
/// otherwise probes are packed `n` per slot.
pub struct Dist;

impl DistributionStrategy for Dist {
    fn name(&self) -> &'static str {
        "dist"
    }

    fn plan(&self, batch: usize, n: usize) -> Result<Vec<SlotPlan>, SwarmError> {
        if batch == 0 {
            return Err(SwarmError::EmptyBatch);
        }
        if n < 2 {
            return Err(SwarmError::SwarmTooSmall { n, need: 2 });
        }
        if n >= 2 * batch {
            let copies = n / batch;
            return Ok(vec![SlotPlan {
                mavs: (0..copies * batch)
                    .map(|i| ((i + 1) as MavId, i % batch))
                    .collect(),
            }]);
        }
        Ok((0..batch)
            .collect::<Vec<_>>()
            .chunks(n)
            .map(|chunk| SlotPlan {
                mavs: chunk
                    .iter()
                    .enumerate()
                    .map(|(i, &probe)| ((i + 1) as MavId, probe))
                    .collect(),
            })
            .collect())
    }
}

pub fn strategy_registry() -> &'static Registry<(), dyn DistributionStrategy> {
    static REG: OnceLock<Registry<(), dyn DistributionStrategy>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<(), dyn DistributionStrategy> = Registry::new("strategy");
        reg.register("avg", |_| Box::new(Avg))
            .register("dist", |_| Box::new(Dist));
        reg
    })
}

pub fn strategy(name: &str) -> Result<Box<dyn DistributionStrategy>, SwarmError> {
    Ok(strategy_registry().build(name, ())?)
}

/// Per-slot MAV -> probe assignments for a concrete batch.
pub fn assign_evaluations(
    strategy: &dyn DistributionStrategy,
    probes: &[GainPoint],
    n: usize,
) -> Result<Vec<BTreeMap<MavId, GainPoint>>, SwarmError> {
    Ok(strategy
        .plan(probes.len(), n)?
        .into_iter()
        .map(|slot| slot.mavs.into_iter().map(|(m, i)| (m, probes[i])).collect())
        .collect())
}

/// Aggregated `(probe, cost)` pairs in probe order.
pub fn aggregate(
    strategy: &dyn DistributionStrategy,
    probes: &[GainPoint],
    slots: &[SlotPlan],
    reports: &[Vec<CostReport>],
) -> Result<Vec<(GainPoint, f64)>, SwarmError> {
    let costs = strategy.aggregate(probes.len(), slots, reports)?;
    Ok(probes.iter().copied().zip(costs).collect())
}
