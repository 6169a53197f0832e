use serde::{Deserialize, Serialize};

use super::{
    eql_minimize, CostOracle, EqlFailure, EqlOptions, EqlTrace, GainPoint, Interval, OracleError,
    SchedulePlan, TunerError,
};

/// Cost oracle over batches of gain pairs.
pub trait GainOracle {
    fn evaluate(&mut self, probes: &[GainPoint]) -> Result<Vec<f64>, OracleError>;
}

impl<F> GainOracle for F
where
    F: FnMut(&[GainPoint]) -> Result<Vec<f64>, OracleError>,
{
    fn evaluate(&mut self, probes: &[GainPoint]) -> Result<Vec<f64>, OracleError> {
        self(probes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// The round produced a pair already found in an earlier round.
    RepeatPoint,
    /// All configured rounds ran.
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRound {
    /// 1-based round index.
    pub index: usize,
    pub k_p: f64,
    pub k_d: f64,
    pub k_p_search: EqlTrace,
    pub k_d_search: EqlTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapTrace {
    pub k_d_init: f64,
    pub rounds: Vec<BootstrapRound>,
    pub termination: Option<Termination>,
    pub evaluations: usize,
}

#[derive(Debug, thiserror::Error)]
#[error("bootstrap round {round} failed: {error}")]
pub struct BootstrapFailure {
    pub round: usize,
    #[source]
    pub error: TunerError,
    pub partial: BootstrapTrace,
    /// Trace of the interrupted line search.
    pub search: Option<EqlTrace>,
}

/// Adapts a 2-D oracle to one axis with the other gain held fixed.
struct Axis<'a, O: ?Sized> {
    inner: &'a mut O,
    tune_k_p: bool,
    fixed: f64,
}

impl<O: GainOracle + ?Sized> CostOracle for Axis<'_, O> {
    fn evaluate(&mut self, probes: &[f64]) -> Result<Vec<f64>, OracleError> {
        let points: Vec<GainPoint> = probes
            .iter()
            .map(|&p| {
                if self.tune_k_p {
                    GainPoint {
                        k_p: p,
                        k_d: self.fixed,
                    }
                } else {
                    GainPoint {
                        k_p: self.fixed,
                        k_d: p,
                    }
                }
            })
            .collect();
        self.inner.evaluate(&points)
    }
}

/// Coordinate-wise tuning: `k_P` over the full range with `k_D` fixed,
/// then `k_D` with the fresh `k_P`, repeated until the pair repeats or
/// `plan.bootstraps` rounds have run.
#[allow(clippy::result_large_err)]
pub fn bootstrap<O: GainOracle + ?Sized>(
    oracle: &mut O,
    k_d_init: f64,
    plan: &SchedulePlan,
    options: EqlOptions,
) -> Result<(GainPoint, BootstrapTrace), BootstrapFailure> {
    let mut trace = BootstrapTrace {
        k_d_init,
        rounds: Vec::new(),
        termination: None,
        evaluations: 0,
    };
    if !(0.0..=1.0).contains(&k_d_init) {
        return Err(BootstrapFailure {
            round: 0,
            error: TunerError::InvalidGain(k_d_init),
            partial: trace,
            search: None,
        });
    }
    if plan.bootstraps == 0 {
        return Err(BootstrapFailure {
            round: 0,
            error: TunerError::InvalidBootstraps,
            partial: trace,
            search: None,
        });
    }

    let mut k_d = k_d_init;
    let mut found: Vec<GainPoint> = Vec::new();
    for index in 1..=plan.bootstraps {
        let fail = |f: EqlFailure, trace: &mut BootstrapTrace| BootstrapFailure {
            round: index,
            error: f.error,
            partial: std::mem::replace(
                trace,
                BootstrapTrace {
                    k_d_init,
                    rounds: Vec::new(),
                    termination: None,
                    evaluations: 0,
                },
            ),
            search: Some(f.partial),
        };

        let mut axis = Axis {
            inner: &mut *oracle,
            tune_k_p: true,
            fixed: k_d,
        };
        let (k_p, k_p_search) = match eql_minimize(&mut axis, Interval::UNIT, plan.steps, options) {
            Ok(r) => r,
            Err(f) => {
                trace.evaluations += f.partial.evaluations;
                return Err(fail(f, &mut trace));
            }
        };
        trace.evaluations += k_p_search.evaluations;

        let mut axis = Axis {
            inner: &mut *oracle,
            tune_k_p: false,
            fixed: k_p,
        };
        let (next_k_d, k_d_search) =
            match eql_minimize(&mut axis, Interval::UNIT, plan.steps, options) {
                Ok(r) => r,
                Err(f) => {
                    trace.evaluations += f.partial.evaluations;
                    return Err(fail(f, &mut trace));
                }
            };
        trace.evaluations += k_d_search.evaluations;
        k_d = next_k_d;

        trace.rounds.push(BootstrapRound {
            index,
            k_p,
            k_d,
            k_p_search,
            k_d_search,
        });
        let point = GainPoint { k_p, k_d };
        if found.iter().any(|f| f.same_bits(&point)) {
            trace.termination = Some(Termination::RepeatPoint);
            return Ok((point, trace));
        }
        found.push(point);
    }
    trace.termination = Some(Termination::BudgetExhausted);
    let last = trace.rounds.last().expect("at least one round");
    Ok((
        GainPoint {
            k_p: last.k_p,
            k_d: last.k_d,
        },
        trace,
    ))
}
