use serde::{Deserialize, Serialize};

use super::PlantError;
use crate::tuner::GainPoint;

/// Affine map from the normalized box to physical gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainMap {
    /// Proportional range, s^-2.
    pub kp_range: (f64, f64),
    /// Derivative range, s^-1.
    pub kd_range: (f64, f64),
}

impl Default for GainMap {
    fn default() -> Self {
        Self {
            kp_range: (1.0, 400.0),
            kd_range: (0.5, 40.0),
        }
    }
}

impl GainMap {
    pub fn new(kp_range: (f64, f64), kd_range: (f64, f64)) -> Result<Self, PlantError> {
        let gm = Self { kp_range, kd_range };
        gm.validate()?;
        Ok(gm)
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        for (name, (lo, hi)) in [("kp_range", self.kp_range), ("kd_range", self.kd_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(PlantError::InvalidGainMap(format!(
                    "{name} [{lo}, {hi}] must satisfy lo < hi"
                )));
            }
        }
        Ok(())
    }
}

/// Gains in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalGains {
    pub kp: f64,
    pub kd: f64,
}

pub fn map_gains(p: GainPoint, gm: &GainMap) -> PhysicalGains {
    let lerp = |(lo, hi): (f64, f64), x: f64| lo + x * (hi - lo);
    PhysicalGains {
        kp: lerp(gm.kp_range, p.k_p),
        kd: lerp(gm.kd_range, p.k_d),
    }
}
