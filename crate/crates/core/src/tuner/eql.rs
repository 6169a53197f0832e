use serde::{Deserialize, Serialize};

use super::{Interval, OracleError, TunerError, REDUCTION_FACTOR};

/// Intervals narrower than this are not reduced any further.
pub const DEGENERATE_WIDTH: f64 = 1e-12;

/// Scalar cost oracle over batches of normalized probe values.
pub trait CostOracle {
    fn evaluate(&mut self, probes: &[f64]) -> Result<Vec<f64>, OracleError>;
}

impl<F> CostOracle for F
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, OracleError>,
{
    fn evaluate(&mut self, probes: &[f64]) -> Result<Vec<f64>, OracleError> {
        self(probes)
    }
}

/// Which part of the interval survives a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// `J- < J+`: keep `[lo, p+]`.
    #[serde(rename = "a")]
    KeepLower,
    /// `J- >= J+`: keep `[p-, hi]`.
    #[serde(rename = "b")]
    KeepUpper,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EqlOptions {
    /// Reuse the interior point that survives a step instead of probing
    /// the nearest third afresh.
    pub reuse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqlStep {
    /// 1-based step index.
    pub k: usize,
    pub before: Interval,
    pub probes: (f64, f64),
    pub costs: (f64, f64),
    pub branch: Branch,
    /// Whether one of the two probes was carried over from the previous step.
    pub reused: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqlTrace {
    pub initial: Interval,
    /// Baseline costs at the two initial endpoints, once evaluated.
    pub endpoint_costs: Option<(f64, f64)>,
    pub steps: Vec<EqlStep>,
    /// Interval the estimate is taken from.
    pub last: Interval,
    /// Scalar cost evaluations requested from the oracle.
    pub evaluations: usize,
}

impl EqlTrace {
    fn new(initial: Interval) -> Self {
        Self {
            initial,
            endpoint_costs: None,
            steps: Vec::new(),
            last: initial,
            evaluations: 0,
        }
    }

    /// Sequence of intervals `R(0), R(1), ..., R(steps)`.
    pub fn intervals(&self) -> Vec<Interval> {
        let mut out: Vec<Interval> = self.steps.iter().map(|s| s.before).collect();
        out.push(self.last);
        out
    }
}

/// Optimizer failure carrying everything recorded before it.
#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct EqlFailure {
    #[source]
    pub error: TunerError,
    pub partial: EqlTrace,
}

/// Equal trisection points of `iv`.
pub fn interior_points(iv: &Interval) -> (f64, f64) {
    iv.thirds()
}

/// One reduction step on the trisection points of `iv`.
pub fn reduce(iv: &Interval, j_minus: f64, j_plus: f64) -> Result<Interval, TunerError> {
    reduce_at(iv, interior_points(iv), (j_minus, j_plus)).map(|(next, _)| next)
}

fn reduce_at(
    iv: &Interval,
    probes: (f64, f64),
    costs: (f64, f64),
) -> Result<(Interval, Branch), TunerError> {
    for (probe, cost) in [(probes.0, costs.0), (probes.1, costs.1)] {
        if !cost.is_finite() {
            return Err(TunerError::NonFiniteCost { probe, cost });
        }
    }
    let trisected = probes == iv.thirds();
    if costs.0 < costs.1 {
        let next = if trisected {
            iv.keep_lower()
        } else {
            Interval::new(iv.lo(), probes.1)?
        };
        Ok((next, Branch::KeepLower))
    } else {
        let next = if trisected {
            iv.keep_upper()
        } else {
            Interval::new(probes.0, iv.hi())?
        };
        Ok((next, Branch::KeepUpper))
    }
}

/// Final estimate: the interval midpoint.
pub fn estimate(iv: &Interval) -> f64 {
    iv.midpoint()
}

struct Carry {
    point: f64,
    cost: f64,
    from: Branch,
}

/// Minimizes a 1-D cost over `initial` with `steps` equal-division steps.
///
/// The two endpoints are evaluated once first, then every step sends its
/// pair of interior probes to the oracle as a single batch. With the
/// default options this costs exactly `2 + 2 * steps` evaluations.
#[allow(clippy::result_large_err)]
pub fn eql_minimize<O: CostOracle + ?Sized>(
    oracle: &mut O,
    initial: Interval,
    steps: usize,
    options: EqlOptions,
) -> Result<(f64, EqlTrace), EqlFailure> {
    let mut trace = EqlTrace::new(initial);
    match run(oracle, initial, steps, options, &mut trace) {
        Ok(()) => Ok((estimate(&trace.last), trace)),
        Err(error) => Err(EqlFailure {
            error,
            partial: trace,
        }),
    }
}

fn query<O: CostOracle + ?Sized>(
    oracle: &mut O,
    probes: &[f64],
    trace: &mut EqlTrace,
) -> Result<Vec<f64>, TunerError> {
    let costs = oracle.evaluate(probes).map_err(TunerError::Oracle)?;
    if costs.len() != probes.len() {
        return Err(TunerError::BatchSize {
            expected: probes.len(),
            got: costs.len(),
        });
    }
    trace.evaluations += probes.len();
    for (&probe, &cost) in probes.iter().zip(&costs) {
        if !cost.is_finite() {
            return Err(TunerError::NonFiniteCost { probe, cost });
        }
    }
    Ok(costs)
}

fn run<O: CostOracle + ?Sized>(
    oracle: &mut O,
    initial: Interval,
    steps: usize,
    options: EqlOptions,
    trace: &mut EqlTrace,
) -> Result<(), TunerError> {
    if steps == 0 {
        return Err(TunerError::InvalidSteps);
    }
    let ends = query(oracle, &[initial.lo(), initial.hi()], trace)?;
    trace.endpoint_costs = Some((ends[0], ends[1]));

    // With reuse the probes are no longer exact thirds, so the loop runs
    // until the guaranteed width is reached rather than a fixed count.
    let target = initial.width() * (0..steps).fold(1.0, |w, _| w * REDUCTION_FACTOR);
    let max_steps = if options.reuse { 8 * steps } else { steps };

    let mut iv = initial;
    let mut carry: Option<Carry> = None;
    let mut k = 0;
    while k < max_steps {
        if iv.width() < DEGENERATE_WIDTH {
            break;
        }
        if options.reuse && k > 0 && iv.width() <= target * (1.0 + 1e-9) {
            break;
        }
        k += 1;

        let thirds = interior_points(&iv);
        let (probes, costs, reused) = match carry
            .take()
            .filter(|c| options.reuse && c.point > iv.lo() && c.point < iv.hi())
        {
            Some(c) => {
                let d_lo = (c.point - thirds.0).abs();
                let d_hi = (c.point - thirds.1).abs();
                let as_lower = if d_lo == d_hi {
                    c.from == Branch::KeepUpper
                } else {
                    d_lo < d_hi
                };
                if as_lower && c.point < thirds.1 {
                    let fresh = query(oracle, &[thirds.1], trace)?[0];
                    ((c.point, thirds.1), (c.cost, fresh), true)
                } else if !as_lower && c.point > thirds.0 {
                    let fresh = query(oracle, &[thirds.0], trace)?[0];
                    ((thirds.0, c.point), (fresh, c.cost), true)
                } else {
                    let j = query(oracle, &[thirds.0, thirds.1], trace)?;
                    (thirds, (j[0], j[1]), false)
                }
            }
            None => {
                let j = query(oracle, &[thirds.0, thirds.1], trace)?;
                (thirds, (j[0], j[1]), false)
            }
        };

        let (next, branch) = reduce_at(&iv, probes, costs)?;
        trace.steps.push(EqlStep {
            k,
            before: iv,
            probes,
            costs,
            branch,
            reused,
        });
        carry = Some(match branch {
            Branch::KeepLower => Carry {
                point: probes.0,
                cost: costs.0,
                from: branch,
            },
            Branch::KeepUpper => Carry {
                point: probes.1,
                cost: costs.1,
                from: branch,
            },
        });
        iv = next;
        trace.last = iv;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    fn scalar<F: Fn(f64) -> f64>(f: F) -> impl FnMut(&[f64]) -> Result<Vec<f64>, OracleError> {
        move |ps: &[f64]| Ok(ps.iter().map(|&p| f(p)).collect())
    }

    #[test]
    fn trisects_unit_interval() {
        let (a, b) = interior_points(&Interval::UNIT);
        assert!(close(a, 1.0 / 3.0) && close(b, 2.0 / 3.0));
        let (a, b) = interior_points(&Interval::new(0.5, 1.0).unwrap());
        assert!(close(a, 0.5 + 1.0 / 6.0) && close(b, 0.5 + 2.0 / 6.0));
    }

    #[test]
    fn tiny_interval_still_has_distinct_points() {
        let iv = Interval::new(0.2, 0.2 + 3e-9).unwrap();
        let (a, b) = interior_points(&iv);
        assert!(iv.lo() < a && a < b && b < iv.hi());
        assert!(((b - a) - 1e-9).abs() < 1e-15);
    }

    #[test]
    fn reduce_branches() {
        // J(p) = (p - 0.3)^2 at the thirds: 0.0011.. and 0.1344..
        let j = |p: f64| (p - 0.3) * (p - 0.3);
        let r = reduce(&Interval::UNIT, j(1.0 / 3.0), j(2.0 / 3.0)).unwrap();
        assert!(close(r.lo(), 0.0) && close(r.hi(), 2.0 / 3.0));

        let r = reduce(&Interval::UNIT, 5.0, 5.0).unwrap();
        assert!(close(r.lo(), 1.0 / 3.0) && close(r.hi(), 1.0));

        let r = reduce(&Interval::new(0.3, 0.9).unwrap(), 2.0, 1.0).unwrap();
        assert!(close(r.lo(), 0.5) && close(r.hi(), 0.9));
    }

    #[test]
    fn reduce_rejects_non_finite() {
        assert!(matches!(
            reduce(&Interval::UNIT, f64::NAN, 1.0),
            Err(TunerError::NonFiniteCost { .. })
        ));
        assert!(reduce(&Interval::UNIT, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn estimate_is_midpoint() {
        assert_eq!(estimate(&Interval::new(0.4, 0.5).unwrap()), 0.45);
        assert_eq!(estimate(&Interval::UNIT), 0.5);
    }

    #[test]
    fn quadratic_six_steps() {
        let mut f = scalar(|p| (p - 0.3) * (p - 0.3));
        let (p, trace) = eql_minimize(&mut f, Interval::UNIT, 6, EqlOptions::default()).unwrap();
        assert!((p - 0.3).abs() <= 0.0878);
        assert_eq!(trace.steps.len(), 6);
        assert_eq!(trace.evaluations, 14);
        assert!(trace.last.contains(0.3));
    }

    #[test]
    fn constant_cost_walks_up() {
        let mut f = scalar(|_| 1.0);
        let (p, trace) = eql_minimize(&mut f, Interval::UNIT, 3, EqlOptions::default()).unwrap();
        assert!(trace.steps.iter().all(|s| s.branch == Branch::KeepUpper));
        let lo = 1.0 - (2.0f64 / 3.0).powi(3);
        assert!((trace.last.lo() - lo).abs() < 1e-12);
        assert!((p - (lo + 1.0) / 2.0).abs() < 1e-12);
        assert!((p - 0.8519).abs() < 1e-4);
    }

    #[test]
    fn batches_are_pairs_after_endpoints() {
        let mut sizes = Vec::new();
        let mut f = |ps: &[f64]| -> Result<Vec<f64>, OracleError> {
            sizes.push(ps.len());
            Ok(ps.iter().map(|p| (p - 0.7).abs()).collect())
        };
        eql_minimize(&mut f, Interval::UNIT, 4, EqlOptions::default()).unwrap();
        assert_eq!(sizes, vec![2, 2, 2, 2, 2]);
    }

    #[test]
    fn oracle_failure_keeps_partial_trace() {
        let mut calls = 0;
        let mut f = |ps: &[f64]| -> Result<Vec<f64>, OracleError> {
            calls += 1;
            if calls == 3 {
                return Err("link down".into());
            }
            Ok(ps.iter().map(|p| p * p).collect())
        };
        let err = eql_minimize(&mut f, Interval::UNIT, 6, EqlOptions::default()).unwrap_err();
        assert!(matches!(err.error, TunerError::Oracle(_)));
        assert_eq!(err.partial.steps.len(), 1);
        assert_eq!(err.partial.evaluations, 4);
    }

    #[test]
    fn non_finite_cost_aborts() {
        let mut f = scalar(|p| if p > 0.5 { f64::NAN } else { p });
        let err = eql_minimize(&mut f, Interval::UNIT, 6, EqlOptions::default()).unwrap_err();
        assert!(matches!(err.error, TunerError::NonFiniteCost { .. }));
    }

    #[test]
    fn wrong_batch_size_is_reported() {
        let mut f = |_: &[f64]| -> Result<Vec<f64>, OracleError> { Ok(vec![1.0]) };
        let err = eql_minimize(&mut f, Interval::UNIT, 2, EqlOptions::default()).unwrap_err();
        assert!(matches!(
            err.error,
            TunerError::BatchSize {
                expected: 2,
                got: 1
            }
        ));
    }

    #[test]
    fn degenerate_interval_stops_early() {
        let iv = Interval::new(0.5, 0.5 + 5e-13).unwrap();
        let mut f = scalar(|p| p);
        let (p, trace) = eql_minimize(&mut f, iv, 6, EqlOptions::default()).unwrap();
        assert!(trace.steps.is_empty());
        assert_eq!(trace.evaluations, 2);
        assert_eq!(p, iv.midpoint());
    }

    #[test]
    fn reuse_saves_evaluations_and_keeps_tolerance() {
        let reuse = EqlOptions { reuse: true };
        for target in [0.0, 0.05, 0.3, 0.5, 0.72, 0.99, 1.0] {
            let mut f = scalar(move |p| (p - target).abs());
            let (p, trace) = eql_minimize(&mut f, Interval::UNIT, 6, reuse).unwrap();
            assert!(trace.last.width() <= (2.0f64 / 3.0).powi(6) * (1.0 + 1e-9));
            assert!((p - target).abs() <= 0.125, "target {target} got {p}");
            assert!(
                trace.evaluations < 14,
                "target {target}: {}",
                trace.evaluations
            );
            assert!(trace.steps.iter().skip(1).all(|s| s.reused));
        }
    }
}
