//! Quantitative and Boolean semantics of [`Formula`] over a [`Signal`].
//!
//! Temporal windows are absolute offsets from the evaluation time. Conjunction
//! weights are annotations only and do not change robustness. Boolean
//! constants evaluate to `±∞`.

use crate::error::StlError;
use crate::formula::Formula;
use crate::signal::Signal;

/// Finite stand-in for the robustness of Boolean constants in reports and
/// impurity masses.
pub const ROBUSTNESS_CAP: f64 = 1e12;

/// Checks that `formula` can be evaluated on `signal` at time `t`.
pub fn check_compatible(formula: &Formula, signal: &Signal, t: usize) -> Result<(), StlError> {
    if let Some(j) = formula.max_variable() {
        if j >= signal.dimension() {
            return Err(StlError::VariableOutOfRange {
                variable: j,
                dimension: signal.dimension(),
            });
        }
    }
    let needed = t + formula.horizon();
    if needed > signal.horizon() {
        return Err(StlError::OutOfHorizon {
            time: t,
            needed,
            horizon: signal.horizon(),
        });
    }
    Ok(())
}

/// Robustness degree `ρ(φ, s, t)`.
pub fn robustness(formula: &Formula, signal: &Signal, t: usize) -> Result<f64, StlError> {
    check_compatible(formula, signal, t)?;
    Ok(eval(formula, signal.rows(), t))
}

/// Boolean satisfaction at time 0; `ρ = 0` counts as satisfaction.
pub fn satisfies(formula: &Formula, signal: &Signal) -> Result<bool, StlError> {
    Ok(robustness(formula, signal, 0)? >= 0.0)
}

/// Robustness clamped to `±ROBUSTNESS_CAP`.
pub fn capped(rho: f64) -> f64 {
    rho.clamp(-ROBUSTNESS_CAP, ROBUSTNESS_CAP)
}

/// Unchecked evaluation; callers guarantee compatibility.
pub(crate) fn eval(formula: &Formula, rows: &[Vec<f64>], t: usize) -> f64 {
    match formula {
        Formula::Const(true) => f64::INFINITY,
        Formula::Const(false) => f64::NEG_INFINITY,
        Formula::Pred(b) => b.margin_at(rows, t),
        Formula::Not(c) => -eval(c, rows, t),
        Formula::And { children, .. } => children
            .iter()
            .map(|c| eval(c, rows, t))
            .fold(f64::INFINITY, f64::min),
        Formula::Or(children) => children
            .iter()
            .map(|c| eval(c, rows, t))
            .fold(f64::NEG_INFINITY, f64::max),
        Formula::Always(i, c) => (t + i.start..=t + i.end)
            .map(|tau| eval(c, rows, tau))
            .fold(f64::INFINITY, f64::min),
        Formula::Eventually(i, c) => (t + i.start..=t + i.end)
            .map(|tau| eval(c, rows, tau))
            .fold(f64::NEG_INFINITY, f64::max),
    }
}
