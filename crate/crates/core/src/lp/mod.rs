//! Dense linear programs and a two-phase primal simplex solver generic over
//! [`Scalar`](crate::scalar::Scalar).
//!
//! Programs are stated as
//!
//! ```text
//! max/min  c·x   s.t.  A·x = b,  G·x ≤ h,  x ≥ l
//! ```
//!
//! where each lower bound `l_j` may be absent (free variable). In rational
//! mode results are exact; in float mode every sign decision uses the
//! configured tolerance.

mod certificate;
mod dump;
mod simplex;

pub use certificate::DualCertificate;
pub use dump::to_text;

use crate::error::{Error, Result};
use crate::scalar::{Mode, Rational, Scalar, DEFAULT_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug)]
pub struct LinearProgram<S> {
    pub sense: Sense,
    pub objective: Vec<S>,
    pub eq_rows: Vec<Vec<S>>,
    pub eq_rhs: Vec<S>,
    pub ineq_rows: Vec<Vec<S>>,
    pub ineq_rhs: Vec<S>,
    /// `None` marks a free variable.
    pub lower_bounds: Vec<Option<S>>,
    variable_count: usize,
}

impl<S: Scalar> LinearProgram<S> {
    /// Empty program over `variable_count` non-negative variables with a
    /// zero objective.
    pub fn new(variable_count: usize, sense: Sense) -> Self {
        Self {
            sense,
            objective: vec![S::zero(); variable_count],
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            ineq_rows: Vec::new(),
            ineq_rhs: Vec::new(),
            lower_bounds: vec![Some(S::zero()); variable_count],
            variable_count,
        }
    }

    pub fn variable_count(&self) -> usize {
        self.variable_count
    }

    pub fn constraint_count(&self) -> usize {
        self.eq_rows.len() + self.ineq_rows.len()
    }

    pub fn set_objective(&mut self, sense: Sense, coeffs: Vec<S>) {
        self.sense = sense;
        self.objective = coeffs;
    }

    /// `row · x = rhs`
    pub fn add_eq(&mut self, row: Vec<S>, rhs: S) {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
    }

    /// `row · x ≤ rhs`
    pub fn add_le(&mut self, row: Vec<S>, rhs: S) {
        self.ineq_rows.push(row);
        self.ineq_rhs.push(rhs);
    }

    /// `row · x ≥ rhs`, stored as `-row · x ≤ -rhs`.
    pub fn add_ge(&mut self, row: Vec<S>, rhs: S) {
        self.add_le(row.into_iter().map(|v| -v).collect(), -rhs);
    }

    pub fn set_lower_bound(&mut self, var: usize, bound: Option<S>) {
        self.lower_bounds[var] = bound;
    }

    /// Appends a fresh variable with the given lower bound and objective
    /// coefficient, extending every existing row with a zero. Returns its index.
    pub fn push_variable(&mut self, lower: Option<S>, objective: S) -> usize {
        for row in self.eq_rows.iter_mut().chain(self.ineq_rows.iter_mut()) {
            row.push(S::zero());
        }
        self.objective.push(objective);
        self.lower_bounds.push(lower);
        self.variable_count += 1;
        self.variable_count - 1
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.variable_count;
        if n == 0 {
            return Err(Error::MalformedProgram("no variables".into()));
        }
        if self.eq_rows.is_empty() && self.ineq_rows.is_empty() {
            return Err(Error::MalformedProgram("no constraints".into()));
        }
        if self.objective.len() != n {
            return Err(Error::MalformedProgram(format!(
                "objective has {} coefficients, expected {n}",
                self.objective.len()
            )));
        }
        if self.lower_bounds.len() != n {
            return Err(Error::MalformedProgram(format!(
                "{} lower bounds for {n} variables",
                self.lower_bounds.len()
            )));
        }
        if self.eq_rows.len() != self.eq_rhs.len() || self.ineq_rows.len() != self.ineq_rhs.len() {
            return Err(Error::MalformedProgram("row/rhs count mismatch".into()));
        }
        for (kind, rows) in [("equality", &self.eq_rows), ("inequality", &self.ineq_rows)] {
            if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
                return Err(Error::MalformedProgram(format!(
                    "{kind} row {i} has width {}, expected {n}",
                    row.len()
                )));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[S]) -> S {
        let mut worst = S::zero();
        let mut bump = |v: S| {
            if v.cmp_tol(&worst, 0.0).is_gt() {
                worst = v;
            }
        };
        for (row, rhs) in self.eq_rows.iter().zip(&self.eq_rhs) {
            bump((dot(row, x) - rhs.clone()).abs());
        }
        for (row, rhs) in self.ineq_rows.iter().zip(&self.ineq_rhs) {
            bump(dot(row, x) - rhs.clone());
        }
        for (xj, lb) in x.iter().zip(&self.lower_bounds) {
            if let Some(l) = lb {
                bump(l.clone() - xj.clone());
            }
        }
        worst
    }

    pub fn objective_at(&self, x: &[S]) -> S {
        dot(&self.objective, x)
    }
}

pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        if x.is_exact_zero() || y.is_exact_zero() {
            continue;
        }
        acc = acc + x.clone() * y.clone();
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution<S> {
    pub status: LpStatus,
    pub objective_value: Option<S>,
    pub primal_point: Option<Vec<S>>,
    pub pivots: usize,
    /// Float solve that was redone in exact arithmetic (see [`solve_with`]).
    pub exact_rescue: bool,
    basis: Option<simplex::FinalBasis>,
}

impl<S: Scalar> LpSolution<S> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Objective value, or an error naming the actual status.
    pub fn value(&self) -> Result<&S> {
        self.objective_value.as_ref().ok_or_else(|| {
            Error::Solver(format!(
                "expected an optimum, solver reported {:?}",
                self.status
            ))
        })
    }

    pub fn point(&self) -> Result<&[S]> {
        self.primal_point.as_deref().ok_or_else(|| {
            Error::Solver(format!(
                "expected an optimum, solver reported {:?}",
                self.status
            ))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Feasibility {
    Feasible,
    Infeasible,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Zero tolerance for float mode; ignored by exact scalars.
    pub tolerance: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_limit: usize,
    pub max_pivots: usize,
    /// Float mode only: redo a failed or inconclusive solve in exact
    /// arithmetic on the data rounded to a `2^-40` grid.
    pub exact_rescue: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            degenerate_limit: 5000,
            max_pivots: 5_000_000,
            exact_rescue: true,
        }
    }
}

impl SolverOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    /// Effective tolerance for scalar type `S` (zero for exact types).
    pub(crate) fn tol<S: Scalar>(&self) -> f64 {
        match S::MODE {
            crate::scalar::Mode::Rational => 0.0,
            crate::scalar::Mode::Float => self.tolerance,
        }
    }
}

/// Global optimum of `lp` with default options.
pub fn solve<S: Scalar>(lp: &LinearProgram<S>) -> Result<LpSolution<S>> {
    solve_with(lp, &SolverOptions::default())
}

/// Solves `lp`. In float mode the float simplex runs first under a pivot
/// budget; unless `opts.exact_rescue` is off, any outcome other than a
/// verified optimum (an error, a claimed infeasible or unbounded status, or
/// an exhausted budget) is rechecked by an exact solve of the rounded data.
pub fn solve_with<S: Scalar>(lp: &LinearProgram<S>, opts: &SolverOptions) -> Result<LpSolution<S>> {
    lp.validate()?;
    if S::MODE == Mode::Rational || !opts.exact_rescue {
        return simplex::solve(lp, opts, false);
    }
    let budget = SolverOptions {
        max_pivots: opts.max_pivots.min(float_pivot_budget(lp)),
        ..*opts
    };
    match simplex::solve(lp, &budget, false) {
        Ok(sol) if sol.status == LpStatus::Optimal => Ok(sol),
        _ => {
            let exact = simplex::solve(&to_grid(lp), opts, false)?;
            Ok(from_exact(exact))
        }
    }
}

fn float_pivot_budget<S: Scalar>(lp: &LinearProgram<S>) -> usize {
    3 * (lp.variable_count() + lp.constraint_count()) + 1000
}

const GRID_BITS: u32 = 40;

fn grid<S: Scalar>(v: &S) -> Rational {
    let f = v.to_f64();
    if f.fract() == 0.0 && f.abs() < 9.0e15 {
        return Rational::integer(f as i64);
    }
    let scale = (1u64 << GRID_BITS) as f64;
    Rational::new((f * scale).round() as i64, 1i64 << GRID_BITS)
}

fn to_grid<S: Scalar>(lp: &LinearProgram<S>) -> LinearProgram<Rational> {
    let rows = |rs: &[Vec<S>]| rs.iter().map(|r| r.iter().map(grid).collect()).collect();
    LinearProgram {
        sense: lp.sense,
        objective: lp.objective.iter().map(grid).collect(),
        eq_rows: rows(&lp.eq_rows),
        eq_rhs: lp.eq_rhs.iter().map(grid).collect(),
        ineq_rows: rows(&lp.ineq_rows),
        ineq_rhs: lp.ineq_rhs.iter().map(grid).collect(),
        lower_bounds: lp
            .lower_bounds
            .iter()
            .map(|l| l.as_ref().map(grid))
            .collect(),
        variable_count: lp.variable_count,
    }
}

fn from_exact<S: Scalar>(sol: LpSolution<Rational>) -> LpSolution<S> {
    LpSolution {
        status: sol.status,
        objective_value: sol.objective_value.as_ref().map(S::from_rational),
        primal_point: sol
            .primal_point
            .map(|x| x.iter().map(S::from_rational).collect()),
        pivots: sol.pivots,
        exact_rescue: true,
        basis: sol.basis,
    }
}

/// Phase-one feasibility test; the objective is ignored.
pub fn check_feasible<S: Scalar>(lp: &LinearProgram<S>) -> Result<Feasibility> {
    check_feasible_with(lp, &SolverOptions::default())
}

pub fn check_feasible_with<S: Scalar>(
    lp: &LinearProgram<S>,
    opts: &SolverOptions,
) -> Result<Feasibility> {
    lp.validate()?;
    let sol = if S::MODE == Mode::Float && opts.exact_rescue {
        let budget = SolverOptions {
            max_pivots: opts.max_pivots.min(float_pivot_budget(lp)),
            ..*opts
        };
        match simplex::solve(lp, &budget, true) {
            Ok(sol) if sol.status == LpStatus::Optimal => sol,
            _ => from_exact(simplex::solve(&to_grid(lp), opts, true)?),
        }
    } else {
        simplex::solve(lp, opts, true)?
    };
    Ok(match sol.status {
        LpStatus::Infeasible => Feasibility::Infeasible,
        _ => Feasibility::Feasible,
    })
}
