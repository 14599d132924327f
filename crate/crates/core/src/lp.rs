//! Thin wrapper over `microlp` for `max cᵀx  s.t.  Ax ≤ b, x ≥ 0`.

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};

use crate::error::{Error, Result};

/// Optimal solution of a [`solve`] call.
#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Solves `max c·x` subject to `a[i]·x ≤ b[i]`, `x ≥ 0`.
///
/// Returns `LpInfeasible` for infeasible or unbounded problems and for
/// malformed input.
pub fn solve(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    if b.len() != a.len() || a.iter().any(|r| r.len() != n) {
        return Err(Error::LpInfeasible);
    }
    if a.iter().flatten().chain(b).chain(c).any(|v| !v.is_finite()) {
        return Err(Error::LpInfeasible);
    }
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = c.iter().map(|&cj| p.add_var(cj, (0.0, f64::INFINITY))).collect();
    for (row, &bi) in a.iter().zip(b) {
        let terms: Vec<_> = vars.iter().zip(row).filter(|(_, &v)| v != 0.0).map(|(&x, &v)| (x, v)).collect();
        p.add_constraint(terms.as_slice(), ComparisonOp::Le, bi);
    }
    // no limits are set, so the outcome is an optimal solution or an error
    let sol = match p.solve() {
        Ok(out) if out.is_optimal() => match out {
            SolveOutcome::Solution(s) => s,
            SolveOutcome::Interrupted(_) => unreachable!("optimal outcomes carry a solution"),
        },
        Ok(_) => return Err(Error::BudgetExhausted("LP solve stopped before optimality".into())),
        Err(_) => return Err(Error::LpInfeasible),
    };
    Ok(LpSolution {
        x: vars.iter().map(|&v| sol.var_value(v)).collect(),
        objective: sol.objective(),
    })
}
