//! The steepest-exchange greedy method for M-convex minimization.
//!
//! Starting from a feasible point, repeatedly move one unit from `i` to `j`
//! along the best exchange direction until no exchange improves the value.
//! From a start `x0` this takes exactly `||x* - x0||_1 / 2` steps when the
//! minimizer `x*` is unique.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::IntSolution;

/// The move `x <- x - e_from + e_to` and its change in objective value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exchange {
    pub from: usize,
    pub to: usize,
    pub delta: f64,
}

/// An objective over `Z^N` that is `+inf` (here `None`) off its domain.
pub trait ExchangeObjective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[i64]) -> Result<Option<f64>>;
}

impl ExchangeObjective for crate::instance::Instance {
    fn dim(&self) -> usize {
        self.n()
    }

    fn value(&self, x: &[i64]) -> Result<Option<f64>> {
        crate::instance::Instance::value(self, x)
    }
}

/// Finds a steepest feasible exchange at the current point.
pub trait DirectionOracle {
    /// Best exchange with `from != to`, or `None` when no exchange is feasible.
    /// Ties go to the lexicographically smallest `(from, to)`.
    fn steepest(&mut self, x: &IntSolution) -> Result<Option<Exchange>>;

    /// Called after `step` has been applied; `x` is the new point.
    fn applied(&mut self, _x: &IntSolution, _step: &Exchange) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GreedyOptions {
    /// An exchange is taken only when `delta < -tolerance`.
    pub tolerance: f64,
    pub record_trace: bool,
    /// Re-evaluate the objective after every move and compare with the
    /// oracle's `delta`.
    pub verify: bool,
    pub max_iterations: Option<usize>,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        GreedyOptions {
            tolerance: 1e-9,
            record_trace: false,
            verify: false,
            max_iterations: None,
        }
    }
}

impl GreedyOptions {
    pub fn verified() -> Self {
        GreedyOptions {
            verify: true,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub minimizer: IntSolution,
    pub iterations: usize,
    pub objective: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<Exchange>>,
}

/// Tolerance for comparing a reported `delta` with a recomputed one.
pub(crate) fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

pub fn greedy_minimize<F, O>(
    f: &F,
    start: IntSolution,
    oracle: &mut O,
    opts: &GreedyOptions,
) -> Result<SolveReport>
where
    F: ExchangeObjective + ?Sized,
    O: DirectionOracle + ?Sized,
{
    if start.len() != f.dim() {
        return Err(Error::Input(format!(
            "start has {} entries, expected {}",
            start.len(),
            f.dim()
        )));
    }
    let mut current = f
        .value(&start)?
        .ok_or_else(|| Error::Input(format!("start point {start} is infeasible")))?;
    let mut x = start;
    let mut iterations = 0usize;
    let mut trace = opts.record_trace.then(Vec::new);

    while let Some(step) = oracle.steepest(&x)? {
        if step.delta >= -opts.tolerance {
            break;
        }
        if step.from == step.to {
            return Err(Error::Consistency(format!(
                "oracle proposed the empty exchange at element {}",
                step.from
            )));
        }
        if let Some(limit) = opts.max_iterations {
            if iterations >= limit {
                return Err(Error::Consistency(format!(
                    "no convergence within {limit} iterations"
                )));
            }
        }
        x[step.from] -= 1;
        x[step.to] += 1;
        if opts.verify {
            let next = f.value(&x)?.ok_or_else(|| {
                Error::Consistency(format!(
                    "oracle proposed infeasible exchange {} -> {}",
                    step.from, step.to
                ))
            })?;
            if !close(next - current, step.delta) {
                return Err(Error::Consistency(format!(
                    "oracle delta {} differs from recomputed {}",
                    step.delta,
                    next - current
                )));
            }
            current = next;
        }
        oracle.applied(&x, &step)?;
        iterations += 1;
        if let Some(t) = trace.as_mut() {
            t.push(step);
        }
    }

    if iterations > 0 {
        current = f
            .value(&x)?
            .ok_or_else(|| Error::Consistency("greedy left the feasible region".into()))?;
    }
    Ok(SolveReport {
        minimizer: x,
        iterations,
        objective: current,
        trace,
    })
}
