use serde::{Deserialize, Serialize};

use super::TunerError;

/// Fraction of the interval kept by one equal-division step.
pub const REDUCTION_FACTOR: f64 = 2.0 / 3.0;

/// Gains tuned per bootstrap round: `k_P` then `k_D`.
pub const TUNED_PARAMS: usize = 2;

/// Durations making up one evaluation slot, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlotTiming {
    pub fly_s: f64,
    pub decay_s: f64,
    pub overhead_s: f64,
}

impl Default for SlotTiming {
    fn default() -> Self {
        Self {
            fly_s: 8.0,
            decay_s: 1.0,
            overhead_s: 1.0,
        }
    }
}

impl SlotTiming {
    pub fn slot_s(&self) -> f64 {
        self.fly_s + self.decay_s + self.overhead_s
    }
}

/// Evaluation and time budget derived from the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulePlan {
    pub epsilon: f64,
    /// Reduction steps per parameter.
    pub steps: usize,
    pub evals_per_param: usize,
    pub params: usize,
    pub bootstraps: usize,
    pub timing: SlotTiming,
}

impl SchedulePlan {
    pub fn total_evals(&self) -> usize {
        self.evals_per_param * self.params * self.bootstraps
    }

    /// Worst-case width of the final interval relative to the initial one.
    pub fn final_width_ratio(&self) -> f64 {
        width_after(self.steps)
    }
}

fn width_after(steps: usize) -> f64 {
    (0..steps).fold(1.0, |w, _| w * REDUCTION_FACTOR)
}

/// Smallest step count whose guaranteed width reduction meets `epsilon`.
pub fn compute_schedule(
    epsilon: f64,
    bootstraps: usize,
    timing: SlotTiming,
) -> Result<SchedulePlan, TunerError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(TunerError::InvalidTolerance(epsilon));
    }
    if bootstraps == 0 {
        return Err(TunerError::InvalidBootstraps);
    }
    let mut steps = 0;
    let mut width = 1.0;
    while width > epsilon {
        width *= REDUCTION_FACTOR;
        steps += 1;
    }
    Ok(SchedulePlan {
        epsilon,
        steps,
        evals_per_param: 2 * steps + 2,
        params: TUNED_PARAMS,
        bootstraps,
        timing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(eps: f64) -> SchedulePlan {
        compute_schedule(eps, 2, SlotTiming::default()).unwrap()
    }

    #[test]
    fn fourteen_evaluations_at_one_eighth() {
        let p = plan(0.125);
        assert_eq!(p.steps, 6);
        assert_eq!(p.evals_per_param, 14);
        assert_eq!(p.total_evals(), 56);
    }

    #[test]
    fn single_step_at_the_factor_itself() {
        let p = plan(2.0 / 3.0);
        assert_eq!((p.steps, p.evals_per_param), (1, 4));
    }

    #[test]
    fn seven_steps_below_point_oh_eight() {
        // Oracle: shrink a unit width by 2/3 until it drops to 0.08.
        let mut w: f64 = 1.0;
        let mut k = 0;
        while w > 0.08 {
            w *= 2.0 / 3.0;
            k += 1;
        }
        assert_eq!(k, 7);
        let p = plan(0.08);
        assert_eq!((p.steps, p.evals_per_param), (7, 16));
    }

    #[test]
    fn bracket_invariant() {
        for eps in [0.01, 0.05, 0.1, 0.125, 0.3, 0.5, 0.9, 0.999] {
            let p = plan(eps);
            let k = p.steps as i32;
            assert!(REDUCTION_FACTOR.powi(k) <= eps * (1.0 + 1e-12), "eps {eps}");
            assert!(eps < REDUCTION_FACTOR.powi(k - 1), "eps {eps}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        for eps in [0.0, 1.0, -0.5, 2.0, f64::NAN] {
            assert!(matches!(
                compute_schedule(eps, 2, SlotTiming::default()),
                Err(TunerError::InvalidTolerance(_))
            ));
        }
        assert!(matches!(
            compute_schedule(0.1, 0, SlotTiming::default()),
            Err(TunerError::InvalidBootstraps)
        ));
    }

    #[test]
    fn default_slot_is_ten_seconds() {
        assert_eq!(SlotTiming::default().slot_s(), 10.0);
    }
}
