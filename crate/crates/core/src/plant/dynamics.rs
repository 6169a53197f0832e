use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    accumulate, map_gains, reference_primitive, CostAccumulator, GainMap, PhysicalGains,
    PlantError, PRIMITIVE_DURATION_S,
};
use crate::tuner::GainPoint;

/// Cost reported for a flight whose state stopped being finite.
pub const DIVERGED_COST: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantParams {
    /// Mass the controller assumes, kg.
    pub m_nominal: f64,
    /// Extra carried mass the controller does not know about, kg.
    pub m_payload: f64,
    pub g: f64,
    /// Amplitude of the lateral-motion disturbance, m/s^2.
    pub disturb_amp: f64,
    /// Altitude measurement noise std, m.
    pub noise_sigma: f64,
    /// First-order low-pass coefficient on the altitude measurement.
    pub filter_alpha: f64,
    /// Integration step, s.
    pub dt: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            m_nominal: 2.3,
            m_payload: 0.0,
            g: 9.81,
            disturb_amp: 0.3,
            noise_sigma: 0.01,
            filter_alpha: 0.2,
            dt: 0.01,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<(), PlantError> {
        let bad = |field: &'static str, reason: &str| {
            Err(PlantError::InvalidParam {
                field,
                reason: reason.to_string(),
            })
        };
        let all = [
            self.m_nominal,
            self.m_payload,
            self.g,
            self.disturb_amp,
            self.noise_sigma,
            self.filter_alpha,
            self.dt,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return bad("plant", "all parameters must be finite");
        }
        if self.m_nominal <= 0.0 {
            return bad("m_nominal", "must be > 0");
        }
        if self.m_payload < 0.0 {
            return bad("m_payload", "must be >= 0");
        }
        if self.dt <= 0.0 || self.dt > PRIMITIVE_DURATION_S {
            return bad("dt", "must lie in (0, 8]");
        }
        if !(self.filter_alpha > 0.0 && self.filter_alpha <= 1.0) {
            return bad("filter_alpha", "must lie in (0, 1]");
        }
        if self.noise_sigma < 0.0 {
            return bad("noise_sigma", "must be >= 0");
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.m_nominal + self.m_payload
    }

    /// Integration steps (and cost samples) per primitive.
    pub fn steps(&self) -> usize {
        (PRIMITIVE_DURATION_S / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlantState {
    pub z: f64,
    pub v: f64,
    pub z_meas_filtered: f64,
    pub t: f64,
}

impl PlantState {
    fn is_finite(&self) -> bool {
        self.z.is_finite() && self.v.is_finite() && self.z_meas_filtered.is_finite()
    }
}

/// Seeded Gaussian measurement noise.
pub struct NoiseSource {
    rng: ChaCha8Rng,
    normal: Option<Normal<f64>>,
}

impl NoiseSource {
    pub fn new(sigma: f64, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            normal: (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("sigma is finite")),
        }
    }

    pub fn sample(&mut self) -> f64 {
        match &self.normal {
            Some(n) => n.sample(&mut self.rng),
            None => 0.0,
        }
    }
}

/// Altitude projection of the thrust law: gravity and feedforward
/// acceleration plus PD feedback, clamped to `[0, 2 m g]`.
pub fn pd_thrust(
    gains: PhysicalGains,
    e_z: f64,
    e_v: f64,
    a_ref: f64,
    m_nominal: f64,
    g: f64,
) -> f64 {
    let u = m_nominal * (g + a_ref + gains.kp * e_z + gains.kd * e_v);
    u.clamp(0.0, 2.0 * m_nominal * g)
}

fn disturbance(params: &PlantParams, t: f64) -> f64 {
    params.disturb_amp * (2.0 * PI * t / PRIMITIVE_DURATION_S).sin()
}

/// One semi-implicit Euler step followed by a noisy, low-passed altitude
/// measurement.
pub fn step_dynamics(
    s: PlantState,
    u: f64,
    params: &PlantParams,
    noise: &mut NoiseSource,
) -> PlantState {
    let a = u / params.total_mass() - params.g + disturbance(params, s.t);
    let v = s.v + a * params.dt;
    let z = s.z + v * params.dt;
    let z_noisy = z + noise.sample();
    PlantState {
        z,
        v,
        z_meas_filtered: s.z_meas_filtered + params.filter_alpha * (z_noisy - s.z_meas_filtered),
        t: s.t + params.dt,
    }
}

/// Result of one tracked primitive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightOutcome {
    pub cost: f64,
    pub diverged: bool,
    pub samples: u64,
    /// Largest |v| seen during the flight.
    pub peak_speed: f64,
}

/// Flies the primitive from rest at `z = 0` and returns the summed
/// absolute true-altitude tracking error.
///
/// The D term acts on the backward difference of the filtered altitude.
pub fn fly_primitive(p: GainPoint, params: &PlantParams, gm: &GainMap, seed: u64) -> FlightOutcome {
    let gains = map_gains(p, gm);
    let mut noise = NoiseSource::new(params.noise_sigma, seed);
    let mut state = PlantState::default();
    let mut prev_filtered = state.z_meas_filtered;
    let mut acc = CostAccumulator::default();
    let mut peak_speed: f64 = 0.0;
    let steps = params.steps();

    for n in 0..steps {
        let t = n as f64 * params.dt;
        let r = reference_primitive(t).expect("t within the primitive");
        let v_est = (state.z_meas_filtered - prev_filtered) / params.dt;
        let u = pd_thrust(
            gains,
            r.z - state.z_meas_filtered,
            r.v - v_est,
            r.a,
            params.m_nominal,
            params.g,
        );
        prev_filtered = state.z_meas_filtered;
        state = step_dynamics(state, u, params, &mut noise);
        let t_next = ((n + 1) as f64 * params.dt).min(PRIMITIVE_DURATION_S);
        state.t = t_next;

        if !state.is_finite() {
            return FlightOutcome {
                cost: DIVERGED_COST,
                diverged: true,
                samples: acc.samples,
                peak_speed: f64::INFINITY,
            };
        }
        peak_speed = peak_speed.max(state.v.abs());
        let z_ref = reference_primitive(t_next)
            .expect("t within the primitive")
            .z;
        acc = accumulate(acc, (z_ref - state.z).abs()).expect("absolute error is non-negative");
    }

    if !acc.j.is_finite() {
        return FlightOutcome {
            cost: DIVERGED_COST,
            diverged: true,
            samples: acc.samples,
            peak_speed,
        };
    }
    FlightOutcome {
        cost: acc.j,
        diverged: false,
        samples: acc.samples,
        peak_speed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> PlantParams {
        PlantParams {
            disturb_amp: 0.0,
            noise_sigma: 0.0,
            ..PlantParams::default()
        }
    }

    #[test]
    fn hover_thrust_is_weight() {
        let g = PhysicalGains { kp: 7.0, kd: 3.0 };
        assert_eq!(pd_thrust(g, 0.0, 0.0, 0.0, 2.3, 9.81), 2.3 * 9.81);
    }

    #[test]
    fn proportional_term() {
        let g = PhysicalGains { kp: 10.0, kd: 0.0 };
        let u = pd_thrust(g, 0.1, 0.0, 0.0, 2.3, 9.81);
        assert!((u - 24.863).abs() < 1e-9);
    }

    #[test]
    fn thrust_saturates() {
        let g = PhysicalGains { kp: 10.0, kd: 1.0 };
        assert_eq!(pd_thrust(g, -100.0, 0.0, 0.0, 2.3, 9.81), 0.0);
        assert_eq!(pd_thrust(g, 100.0, 0.0, 0.0, 2.3, 9.81), 2.0 * 2.3 * 9.81);
    }

    #[test]
    fn balanced_thrust_keeps_state() {
        let params = quiet();
        let s = PlantState {
            z: 0.4,
            v: 0.2,
            z_meas_filtered: 0.4,
            t: 1.0,
        };
        let mut noise = NoiseSource::new(0.0, 1);
        let next = step_dynamics(s, params.total_mass() * params.g, &params, &mut noise);
        assert_eq!(next.v, s.v);
        assert!((next.z - (s.z + s.v * params.dt)).abs() < 1e-15);
    }

    #[test]
    fn payload_sinks_on_nominal_thrust() {
        let params = PlantParams {
            m_payload: 0.9,
            ..quiet()
        };
        let s = PlantState::default();
        let mut noise = NoiseSource::new(0.0, 1);
        let next = step_dynamics(s, params.m_nominal * params.g, &params, &mut noise);
        let a = params.g * (params.m_nominal / (params.m_nominal + 0.9) - 1.0);
        assert!(a < 0.0);
        assert!((next.v - a * params.dt).abs() < 1e-12);
    }

    #[test]
    fn unit_alpha_passes_measurement_through() {
        let params = PlantParams {
            filter_alpha: 1.0,
            ..quiet()
        };
        let mut s = PlantState::default();
        let mut noise = NoiseSource::new(0.0, 1);
        for _ in 0..50 {
            s = step_dynamics(s, 30.0, &params, &mut noise);
            assert_eq!(s.z_meas_filtered, s.z);
        }
        // With noise the filter output equals the noisy sample.
        let noisy = PlantParams {
            noise_sigma: 0.05,
            ..params
        };
        let mut a = NoiseSource::new(0.05, 9);
        let mut b = NoiseSource::new(0.05, 9);
        let s0 = PlantState::default();
        let s1 = step_dynamics(s0, 20.0, &noisy, &mut a);
        let expected_z = s1.z + b.sample();
        assert_eq!(s1.z_meas_filtered, expected_z);
    }

    #[test]
    fn flight_is_deterministic_per_seed() {
        let params = PlantParams::default();
        let gm = GainMap::default();
        let p = GainPoint { k_p: 0.4, k_d: 0.3 };
        let a = fly_primitive(p, &params, &gm, 11);
        let b = fly_primitive(p, &params, &gm, 11);
        let c = fly_primitive(p, &params, &gm, 12);
        assert_eq!(a.cost.to_bits(), b.cost.to_bits());
        assert_ne!(a.cost, c.cost);
        assert_eq!(a.samples, 800);
    }

    #[test]
    fn weak_gains_track_worse_than_moderate() {
        let params = PlantParams {
            noise_sigma: 0.0,
            ..PlantParams::default()
        };
        let gm = GainMap::default();
        let weak = fly_primitive(GainPoint { k_p: 0.0, k_d: 0.0 }, &params, &gm, 0);
        let good = fly_primitive(GainPoint { k_p: 0.5, k_d: 0.5 }, &params, &gm, 0);
        assert!(weak.cost > good.cost);
    }

    #[test]
    fn non_finite_dynamics_report_sentinel() {
        let params = PlantParams {
            m_nominal: 1e308,
            g: 1e308,
            noise_sigma: 0.0,
            ..PlantParams::default()
        };
        let out = fly_primitive(
            GainPoint { k_p: 1.0, k_d: 1.0 },
            &params,
            &GainMap::default(),
            0,
        );
        assert!(out.diverged);
        assert_eq!(out.cost, DIVERGED_COST);
    }

    #[test]
    fn validation_names_the_field() {
        let p = PlantParams {
            filter_alpha: 0.0,
            ..PlantParams::default()
        };
        match p.validate() {
            Err(PlantError::InvalidParam { field, .. }) => assert_eq!(field, "filter_alpha"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(PlantParams {
            m_payload: -1.0,
            ..PlantParams::default()
        }
        .validate()
        .is_err());
    }
}
