use super::simplex::standardize;
use super::{dot, LinearProgram, LpSolution, Sense};
use crate::error::{Error, Result};
use crate::scalar::{Mode, Scalar, DEFAULT_TOLERANCE};

/// Dual multipliers for an optimal solve, recomputed from the final basis by
/// a separate linear solve and checked against the original program.
///
/// Multipliers refer to the maximization form `max s·c·x` with `s = ±1`
/// chosen by the program's sense; `ineq` multipliers must be non-negative.
#[derive(Clone, Debug)]
pub struct DualCertificate<S> {
    pub eq: Vec<S>,
    pub ineq: Vec<S>,
}

impl<S: Scalar> DualCertificate<S> {
    pub fn compute(lp: &LinearProgram<S>, sol: &LpSolution<S>) -> Result<Self> {
        let basis = sol
            .basis
            .as_ref()
            .ok_or_else(|| Error::Solver("no optimal basis to certify".into()))?;
        let std = standardize(lp);
        let n = basis.kept_rows.len();
        // Row k of the system is the dual equation of basic column k.
        let mut m: Vec<Vec<S>> = basis
            .basic_cols
            .iter()
            .map(|&c| {
                basis
                    .kept_rows
                    .iter()
                    .map(|&r| std.rows[r][c].clone())
                    .collect()
            })
            .collect();
        let mut rhs: Vec<S> = basis
            .basic_cols
            .iter()
            .map(|&c| std.cost[c].clone())
            .collect();
        let y = gauss_solve(&mut m, &mut rhs)?;

        let mut eq = vec![S::zero(); lp.eq_rows.len()];
        let mut ineq = vec![S::zero(); lp.ineq_rows.len()];
        for (k, &r) in basis.kept_rows.iter().enumerate().take(n) {
            let v = if std.negated[r] {
                -y[k].clone()
            } else {
                y[k].clone()
            };
            if r < eq.len() {
                eq[r] = v;
            } else {
                ineq[r - eq.len()] = v;
            }
        }
        Ok(Self { eq, ineq })
    }

    /// Checks dual feasibility and returns the dual bound in the program's
    /// own sense. For an optimal solve it must equal the objective value.
    pub fn verify(&self, lp: &LinearProgram<S>) -> Result<S> {
        let tol = match S::MODE {
            Mode::Rational => 0.0,
            Mode::Float => DEFAULT_TOLERANCE,
        };
        if let Some(z) = self.ineq.iter().find(|z| z.is_negative(tol)) {
            return Err(Error::Solver(format!("negative inequality multiplier {z}")));
        }
        let sign = if lp.sense == Sense::Maximize {
            S::one()
        } else {
            -S::one()
        };
        let mut bound = dot(&self.eq, &lp.eq_rhs) + dot(&self.ineq, &lp.ineq_rhs);
        for j in 0..lp.variable_count() {
            let mut reduced = -(sign.clone() * lp.objective[j].clone());
            for (y, row) in self.eq.iter().zip(&lp.eq_rows) {
                if !y.is_exact_zero() && !row[j].is_exact_zero() {
                    reduced = reduced + y.clone() * row[j].clone();
                }
            }
            for (z, row) in self.ineq.iter().zip(&lp.ineq_rows) {
                if !z.is_exact_zero() && !row[j].is_exact_zero() {
                    reduced = reduced + z.clone() * row[j].clone();
                }
            }
            match &lp.lower_bounds[j] {
                None if !reduced.is_zero_tol(tol) => {
                    return Err(Error::Solver(format!(
                        "free variable {j} has reduced cost {reduced}"
                    )));
                }
                Some(_) if reduced.is_negative(tol) => {
                    return Err(Error::Solver(format!(
                        "dual constraint {j} violated by {reduced}"
                    )));
                }
                Some(l) => bound = bound - reduced * l.clone(),
                None => {}
            }
        }
        Ok(sign * bound)
    }
}

/// Solves the square system `m·x = rhs` by Gaussian elimination.
pub(crate) fn gauss_solve<S: Scalar>(m: &mut [Vec<S>], rhs: &mut [S]) -> Result<Vec<S>> {
    let n = m.len();
    let tol = match S::MODE {
        Mode::Rational => 0.0,
        Mode::Float => 1e-12,
    };
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !m[r][col].is_zero_tol(tol))
            .max_by(|&a, &b| m[a][col].abs().cmp_tol(&m[b][col].abs(), 0.0))
            .ok_or_else(|| Error::Solver("singular basis".into()))?;
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let p = m[col][col].clone();
        for r in 0..n {
            if r == col || m[r][col].is_exact_zero() {
                continue;
            }
            let f = m[r][col].clone() / p.clone();
            let (src, dst) = if r < col {
                let (a, b) = m.split_at_mut(col);
                (&b[0], &mut a[r])
            } else {
                let (a, b) = m.split_at_mut(r);
                (&a[col], &mut b[0])
            };
            for (d, s) in dst.iter_mut().zip(src.iter()).skip(col) {
                if !s.is_exact_zero() {
                    d.sub_mul_assign(&f, s);
                }
            }
            let rc = rhs[col].clone();
            rhs[r].sub_mul_assign(&f, &rc);
        }
    }
    Ok((0..n).map(|i| rhs[i].clone() / m[i][i].clone()).collect())
}
