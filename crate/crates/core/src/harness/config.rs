use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::plant::{GainMap, PlantError, PlantParams};
use crate::swarm::{strategy_registry, ExperimentSetup};
use crate::transport::transport_registry;
use crate::tuner::{compute_schedule, EqlOptions, SchedulePlan, SlotTiming};

/// Grid-oracle settings shared by `sweep` and `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Nodes per axis.
    pub grid: usize,
    /// Flights averaged per node.
    pub reps: usize,
    pub base_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid: 25,
            reps: 20,
            base_seed: 0,
        }
    }
}

impl SweepConfig {
    /// Noise seed of repetition `r`.
    pub fn rep_seed(&self, r: usize) -> u64 {
        self.base_seed.wrapping_add(1000 + r as u64)
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.reps).map(|r| self.rep_seed(r))
    }
}

/// One JSON file drives `run`, `sweep` and `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n: usize,
    pub strategy: String,
    pub epsilon: f64,
    pub kd_init: f64,
    pub bootstraps: usize,
    pub plant: PlantParams,
    /// Per-MAV `m_payload` overrides, MAV 1 first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payloads: Option<Vec<f64>>,
    pub gain_map: GainMap,
    pub timing: SlotTiming,
    pub transport: String,
    pub seeds: Vec<u64>,
    pub reuse: bool,
    pub allow_odd: bool,
    pub sweep: SweepConfig,
    pub delta: f64,
    pub barrier_timeout_s: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 2,
            strategy: "avg".into(),
            epsilon: 0.125,
            kd_init: 0.2,
            bootstraps: 2,
            plant: PlantParams::default(),
            payloads: None,
            gain_map: GainMap::default(),
            timing: SlotTiming::default(),
            transport: "inproc".into(),
            seeds: (1..=10).collect(),
            reuse: false,
            allow_odd: false,
            sweep: SweepConfig::default(),
            delta: 0.10,
            barrier_timeout_s: 30.0,
        }
    }
}

fn bad(field: impl Into<String>, reason: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| HarnessError::Json {
            path: path.to_owned(),
            source: e,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n < 2 {
            return Err(bad("n", format!("{} MAVs; need at least 2", self.n)));
        }
        if self.n % 2 == 1 && !self.allow_odd {
            return Err(bad(
                "n",
                format!("{} is odd; set allow_odd to run anyway", self.n),
            ));
        }
        if !strategy_registry().contains(&self.strategy) {
            let known: Vec<&str> = strategy_registry().names().collect();
            return Err(bad(
                "strategy",
                format!("unknown `{}` (known: {})", self.strategy, known.join(", ")),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(bad(
                "epsilon",
                format!("{} is outside (0, 1)", self.epsilon),
            ));
        }
        if !(0.0..=1.0).contains(&self.kd_init) {
            return Err(bad(
                "kd_init",
                format!("{} is outside [0, 1]", self.kd_init),
            ));
        }
        if self.bootstraps == 0 {
            return Err(bad("bootstraps", "must be at least 1"));
        }
        self.plant.validate().map_err(|e| match e {
            PlantError::InvalidParam { field, reason } => bad(format!("plant.{field}"), reason),
            other => bad("plant", other.to_string()),
        })?;
        if let Some(p) = &self.payloads {
            if p.len() != self.n {
                return Err(bad(
                    "payloads",
                    format!("{} entries for {} MAVs", p.len(), self.n),
                ));
            }
            if let Some(m) = p.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
                return Err(bad("payloads", format!("{m} is not a mass")));
            }
        }
        self.gain_map
            .validate()
            .map_err(|e| bad("gain_map", e.to_string()))?;
        for (name, v) in [
            ("timing.fly_s", self.timing.fly_s),
            ("timing.decay_s", self.timing.decay_s),
            ("timing.overhead_s", self.timing.overhead_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(bad(name, format!("{v} must be finite and >= 0")));
            }
        }
        if self.timing.slot_s() <= 0.0 {
            return Err(bad("timing", "slot duration must be positive"));
        }
        if !transport_registry().contains(&self.transport) {
            return Err(bad(
                "transport",
                format!("unknown `{}` (known: inproc, tcp)", self.transport),
            ));
        }
        if self.seeds.is_empty() {
            return Err(bad("seeds", "at least one seed is required"));
        }
        if self.sweep.grid < 2 {
            return Err(bad("sweep.grid", format!("{} < 2", self.sweep.grid)));
        }
        if self.sweep.reps == 0 {
            return Err(bad("sweep.reps", "must be at least 1"));
        }
        if self.delta.is_nan() || self.delta < 0.0 {
            return Err(bad("delta", format!("{} must be >= 0", self.delta)));
        }
        if !(self.barrier_timeout_s.is_finite() && self.barrier_timeout_s > 0.0) {
            return Err(bad(
                "barrier_timeout_s",
                format!("{} must be positive", self.barrier_timeout_s),
            ));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<SchedulePlan, HarnessError> {
        compute_schedule(self.epsilon, self.bootstraps, self.timing)
            .map_err(|e| bad("epsilon", e.to_string()))
    }

    /// Plant of every MAV, payload overrides applied.
    pub fn plants(&self) -> Vec<PlantParams> {
        (0..self.n)
            .map(|i| PlantParams {
                m_payload: self
                    .payloads
                    .as_ref()
                    .map_or(self.plant.m_payload, |p| p[i]),
                ..self.plant
            })
            .collect()
    }

    pub fn setup(&self, seed: u64) -> Result<ExperimentSetup, HarnessError> {
        Ok(ExperimentSetup {
            n: self.n,
            strategy: self.strategy.clone(),
            plan: self.schedule()?,
            k_d_init: self.kd_init,
            plants: self.plants(),
            gain_map: self.gain_map,
            seed,
            options: EqlOptions { reuse: self.reuse },
            allow_odd: self.allow_odd,
            barrier_timeout: Duration::from_secs_f64(self.barrier_timeout_s),
        })
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        digest_json(self)
    }

    /// Digest of everything the grid oracle depends on.
    pub fn oracle_digest(&self) -> String {
        digest_json(&(&self.plant, &self.gain_map, &self.sweep))
    }
}

pub(crate) fn digest_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config types always serialize");
    hex::encode(Sha256::digest(&bytes))
}
