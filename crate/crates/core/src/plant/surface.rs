//! Synthetic cost surfaces standing in for flights in optimizer-only tests.

use std::sync::OnceLock;

use super::PlantError;
use crate::registry::Registry;
use crate::tuner::GainPoint;

pub trait CostSurface: Send + Sync {
    fn name(&self) -> &'static str;
    fn cost(&self, p: GainPoint) -> f64;
}

fn dist2(a: GainPoint, b: GainPoint) -> f64 {
    (a.k_p - b.k_p).powi(2) + (a.k_d - b.k_d).powi(2)
}

/// `|p - p*|^2`.
pub struct QuadraticBowl {
    pub center: GainPoint,
}

impl CostSurface for QuadraticBowl {
    fn name(&self) -> &'static str {
        "quadratic-bowl"
    }

    fn cost(&self, p: GainPoint) -> f64 {
        dist2(p, self.center)
    }
}

/// `exp(|p - p*|^2) - 1`, scaled so the whole unit box stays below 0.01.
pub struct FlatLogBowl {
    pub center: GainPoint,
}

impl FlatLogBowl {
    pub const CEILING: f64 = 0.01;
}

impl CostSurface for FlatLogBowl {
    fn name(&self) -> &'static str {
        "flat-log-bowl"
    }

    fn cost(&self, p: GainPoint) -> f64 {
        // |p - p*|^2 <= 2 anywhere in the box.
        let scale = Self::CEILING / (2.0f64.exp() - 1.0);
        scale * dist2(p, self.center).exp_m1()
    }
}

pub struct Constant;

impl CostSurface for Constant {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn cost(&self, _: GainPoint) -> f64 {
        1.0
    }
}

/// Surfaces by name; the argument is the minimizer `p*`.
pub fn surface_registry() -> &'static Registry<GainPoint, dyn CostSurface> {
    static REG: OnceLock<Registry<GainPoint, dyn CostSurface>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<GainPoint, dyn CostSurface> = Registry::new("cost surface");
        reg.register("quadratic-bowl", |center| {
            Box::new(QuadraticBowl { center })
        })
        .register("flat-log-bowl", |center| Box::new(FlatLogBowl { center }))
        .register("constant", |_| Box::new(Constant));
        reg
    })
}

pub fn synthetic_cost(surface: &str, center: GainPoint, p: GainPoint) -> Result<f64, PlantError> {
    Ok(surface_registry().build(surface, center)?.cost(p))
}
