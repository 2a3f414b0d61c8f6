//! Dense tableau implementation of the two-phase primal simplex method.
//!
//! Entering columns are priced by Devex reference weights; after a run of
//! `degenerate_limit` consecutive degenerate pivots the solver switches to
//! Bland's smallest-index rule until the objective moves again, which rules
//! out cycling. Artificial columns are never materialised: a row whose basic
//! variable is artificial is simply tagged, and an artificial that leaves the
//! basis is gone for good.

use std::cmp::Ordering;

use super::certificate::gauss_solve;
use super::{LinearProgram, LpSolution, LpStatus, Sense, SolverOptions};
use crate::error::{Error, Result};
use crate::scalar::{Mode, Scalar};

/// Relative size below which a tied pivot candidate is passed over.
const PIVOT_FLOOR: f64 = 0.1;

/// Where a column of the standard form comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Column {
    /// `x_var = l_var + col` (or `-col` for the negative half of a free variable).
    Var {
        var: usize,
        negated: bool,
    },
    Slack {
        ineq_row: usize,
    },
}

/// `max cost·y  s.t.  rows·y = rhs, y ≥ 0` with `rhs ≥ 0`.
pub(crate) struct Standard<S> {
    pub rows: Vec<Vec<S>>,
    pub rhs: Vec<S>,
    pub cost: Vec<S>,
    pub columns: Vec<Column>,
    /// Row was multiplied by -1 to make its right-hand side non-negative.
    pub negated: Vec<bool>,
    /// Rows whose slack can start in the basis.
    pub slack_basic: Vec<Option<usize>>,
}

pub(crate) fn standardize<S: Scalar>(lp: &LinearProgram<S>) -> Standard<S> {
    let n = lp.variable_count();
    let mut columns = Vec::with_capacity(n + lp.ineq_rows.len());
    for (var, lb) in lp.lower_bounds.iter().enumerate() {
        columns.push(Column::Var {
            var,
            negated: false,
        });
        if lb.is_none() {
            columns.push(Column::Var { var, negated: true });
        }
    }
    let structural = columns.len();
    for ineq_row in 0..lp.ineq_rows.len() {
        columns.push(Column::Slack { ineq_row });
    }
    let ncols = columns.len();

    let sign = if lp.sense == Sense::Maximize {
        S::one()
    } else {
        -S::one()
    };
    let cost: Vec<S> = columns
        .iter()
        .map(|c| match *c {
            Column::Var { var, negated } => {
                let v = sign.clone() * lp.objective[var].clone();
                if negated {
                    -v
                } else {
                    v
                }
            }
            Column::Slack { .. } => S::zero(),
        })
        .collect();

    let shift = |row: &[S], rhs: &S| -> S {
        let mut b = rhs.clone();
        for (a, lb) in row.iter().zip(&lp.lower_bounds) {
            if let Some(l) = lb {
                if !a.is_exact_zero() && !l.is_exact_zero() {
                    b.sub_mul_assign(a, l);
                }
            }
        }
        b
    };

    let total = lp.eq_rows.len() + lp.ineq_rows.len();
    let mut rows = Vec::with_capacity(total);
    let mut rhs = Vec::with_capacity(total);
    let mut negated = Vec::with_capacity(total);
    let mut slack_basic = Vec::with_capacity(total);

    let all_rows = lp
        .eq_rows
        .iter()
        .zip(&lp.eq_rhs)
        .map(|(r, b)| (r, b, None))
        .chain(
            lp.ineq_rows
                .iter()
                .zip(&lp.ineq_rhs)
                .enumerate()
                .map(|(i, (r, b))| (r, b, Some(structural + i))),
        );
    for (row, b, slack) in all_rows {
        let mut out = vec![S::zero(); ncols];
        for (c, col) in columns[..structural].iter().enumerate() {
            if let Column::Var { var, negated } = *col {
                let a = &row[var];
                if !a.is_exact_zero() {
                    out[c] = if negated { -a.clone() } else { a.clone() };
                }
            }
        }
        if let Some(s) = slack {
            out[s] = S::one();
        }
        let mut b = shift(row, b);
        let flip = b.sign(0.0) == Ordering::Less;
        if flip {
            for v in out.iter_mut().filter(|v| !v.is_exact_zero()) {
                *v = -v.clone();
            }
            b = -b;
        }
        rows.push(out);
        rhs.push(b);
        negated.push(flip);
        slack_basic.push(if flip { None } else { slack });
    }

    Standard {
        rows,
        rhs,
        cost,
        columns,
        negated,
        slack_basic,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Basic {
    Col(usize),
    Artificial(usize),
}

/// Optimal basis in terms of the standard form, kept for dual certificates.
#[derive(Clone, Debug)]
pub(crate) struct FinalBasis {
    /// Standard-form row indices that survived redundancy removal.
    pub kept_rows: Vec<usize>,
    /// Basic column for each kept row.
    pub basic_cols: Vec<usize>,
}

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    rhs: Vec<S>,
    basis: Vec<Basic>,
    /// Original standard-form index of each tableau row.
    row_ids: Vec<usize>,
    is_basic: Vec<bool>,
    ncols: usize,
    tol: f64,
    pivots: usize,
}

/// Objective row: reduced profits and current objective value.
struct Objective<S> {
    profit: Vec<S>,
    value: S,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl<S: Scalar> Tableau<S> {
    fn order_key(&self, b: Basic) -> usize {
        match b {
            Basic::Col(j) => j,
            Basic::Artificial(i) => self.ncols + i,
        }
    }

    fn pivot(&mut self, r: usize, e: usize, obj: &mut Objective<S>) {
        let float = S::MODE == Mode::Float;
        let mut prow = std::mem::take(&mut self.rows[r]);
        let piv = prow[e].clone();
        if piv != S::one() {
            for v in prow.iter_mut() {
                if !v.is_exact_zero() {
                    *v = v.clone() / piv.clone();
                }
            }
            self.rhs[r] = self.rhs[r].clone() / piv;
        }
        prow[e] = S::one();
        let nz: Vec<usize> = (0..self.ncols)
            .filter(|&j| !prow[j].is_exact_zero())
            .collect();
        let rhs_r = self.rhs[r].clone();

        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][e].clone();
            if f.is_exact_zero() {
                continue;
            }
            let row = &mut self.rows[i];
            for &j in &nz {
                row[j].sub_mul_assign(&f, &prow[j]);
            }
            row[e] = S::zero();
            if !rhs_r.is_exact_zero() {
                self.rhs[i].sub_mul_assign(&f, &rhs_r);
            }
            if float {
                for &j in &nz {
                    row[j].flush_tiny();
                }
                self.rhs[i].flush_tiny();
            }
        }

        let f = obj.profit[e].clone();
        if !f.is_exact_zero() {
            for &j in &nz {
                obj.profit[j].sub_mul_assign(&f, &prow[j]);
            }
            if float {
                for &j in &nz {
                    obj.profit[j].flush_tiny();
                }
            }
            obj.value = obj.value.clone() + f * rhs_r;
        }
        obj.profit[e] = S::zero();

        if let Basic::Col(old) = self.basis[r] {
            self.is_basic[old] = false;
        }
        self.basis[r] = Basic::Col(e);
        self.is_basic[e] = true;
        self.rows[r] = prow;
        self.pivots += 1;
    }

    /// Entering column: largest `profit² / weight` (Devex pricing), or the
    /// first improving column under Bland's rule.
    fn choose_entering(&self, obj: &Objective<S>, weights: &[f64], bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (j, w) in weights.iter().enumerate().take(self.ncols) {
            if self.is_basic[j] || !obj.profit[j].is_positive(self.tol) {
                continue;
            }
            if bland {
                return Some(j);
            }
            let d = obj.profit[j].to_f64();
            let score = d * d / w;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Devex reference-weight update for a pivot on `(r, e)`, read off the
    /// pivot row before it is scaled.
    fn update_weights(&self, r: usize, e: usize, weights: &mut [f64]) {
        let row = &self.rows[r];
        let pe = row[e].to_f64();
        let we = weights[e];
        for (j, a) in row.iter().enumerate() {
            if j == e || self.is_basic[j] || a.is_exact_zero() {
                continue;
            }
            let ratio = a.to_f64() / pe;
            weights[j] = weights[j].max(ratio * ratio * we);
        }
        if let Basic::Col(old) = self.basis[r] {
            weights[old] = (we / (pe * pe)).max(1.0);
        }
    }

    /// Minimum-ratio row for entering column `e`; `None` means unbounded.
    ///
    /// Among rows tied on the ratio, pivots smaller than a tenth of the
    /// largest tied pivot are skipped, and the rest go by smallest order key.
    fn choose_leaving(&self, e: usize) -> Option<usize> {
        // Round-off may leave a basic value slightly below zero; it counts
        // as degenerate without being rewritten.
        let ratio_of = |i: usize| {
            let b = if self.rhs[i].is_negative(0.0) {
                S::zero()
            } else {
                self.rhs[i].clone()
            };
            b / self.rows[i][e].clone()
        };
        let candidates: Vec<usize> = (0..self.rows.len())
            .filter(|&i| self.rows[i][e].is_positive(self.tol))
            .collect();
        let mut min_ratio: Option<S> = None;
        for &i in &candidates {
            let ratio = ratio_of(i);
            if min_ratio
                .as_ref()
                .is_none_or(|m| ratio.cmp_tol(m, self.tol) == Ordering::Less)
            {
                min_ratio = Some(ratio);
            }
        }
        let min_ratio = min_ratio?;
        let tied: Vec<usize> = candidates
            .into_iter()
            .filter(|&i| ratio_of(i).cmp_tol(&min_ratio, self.tol) != Ordering::Greater)
            .collect();
        let biggest = tied
            .iter()
            .map(|&i| self.rows[i][e].to_f64())
            .fold(0.0, f64::max);
        tied.into_iter()
            .filter(|&i| self.rows[i][e].to_f64() >= PIVOT_FLOOR * biggest)
            .min_by_key(|&i| self.order_key(self.basis[i]))
    }

    fn optimize(&mut self, obj: &mut Objective<S>, opts: &SolverOptions) -> Result<Outcome> {
        let mut degenerate_run = 0usize;
        let mut weights = vec![1.0; self.ncols];
        loop {
            if self.pivots >= opts.max_pivots {
                return Err(Error::Solver(format!(
                    "pivot limit {} reached",
                    opts.max_pivots
                )));
            }
            let bland = degenerate_run >= opts.degenerate_limit;
            let Some(e) = self.choose_entering(obj, &weights, bland) else {
                return Ok(Outcome::Optimal);
            };
            let Some(r) = self.choose_leaving(e) else {
                return Ok(Outcome::Unbounded);
            };
            if self.rhs[r].is_zero_tol(self.tol) {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.update_weights(r, e, &mut weights);
            self.pivot(r, e, obj);
        }
    }
}

pub(crate) fn solve<S: Scalar>(
    lp: &LinearProgram<S>,
    opts: &SolverOptions,
    feasibility_only: bool,
) -> Result<LpSolution<S>> {
    let tol = opts.tol::<S>();
    let std = standardize(lp);
    let ncols = std.columns.len();
    let nrows = std.rows.len();

    let basis: Vec<Basic> = (0..nrows)
        .map(|i| match std.slack_basic[i] {
            Some(c) => Basic::Col(c),
            None => Basic::Artificial(i),
        })
        .collect();
    let mut is_basic = vec![false; ncols];
    for b in &basis {
        if let Basic::Col(c) = b {
            is_basic[*c] = true;
        }
    }
    let cost = std.cost.clone();
    let (std_rows, std_rhs) = if S::MODE == Mode::Float {
        (std.rows.clone(), std.rhs.clone())
    } else {
        (Vec::new(), Vec::new())
    };
    let mut tab = Tableau {
        rows: std.rows,
        rhs: std.rhs,
        basis,
        row_ids: (0..nrows).collect(),
        is_basic,
        ncols,
        tol,
        pivots: 0,
    };

    // Phase one: maximize -(sum of artificials).
    if tab.basis.iter().any(|b| matches!(b, Basic::Artificial(_))) {
        let mut obj = Objective {
            profit: vec![S::zero(); ncols],
            value: S::zero(),
        };
        for i in 0..nrows {
            if let Basic::Artificial(_) = tab.basis[i] {
                for (p, a) in obj.profit.iter_mut().zip(&tab.rows[i]) {
                    if !a.is_exact_zero() {
                        *p = p.clone() + a.clone();
                    }
                }
                obj.value = obj.value.clone() - tab.rhs[i].clone();
            }
        }
        tab.optimize(&mut obj, opts)?;
        let infeasibility_tol =
            tol * (1.0 + tab.rhs.iter().map(|b| b.to_f64().abs()).fold(0.0, f64::max));
        let stuck =
            tab.basis.iter().zip(&tab.rhs).any(|(b, v)| {
                matches!(b, Basic::Artificial(_)) && v.is_positive(infeasibility_tol)
            });
        if stuck {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective_value: None,
                primal_point: None,
                pivots: tab.pivots,
                exact_rescue: false,
                basis: None,
            });
        }
        drive_out_artificials(&mut tab, &mut obj);
    }

    if feasibility_only {
        return Ok(LpSolution {
            status: LpStatus::Optimal,
            objective_value: None,
            primal_point: None,
            pivots: tab.pivots,
            exact_rescue: false,
            basis: None,
        });
    }

    // Phase two.
    let mut obj = Objective {
        profit: cost.clone(),
        value: S::zero(),
    };
    for i in 0..tab.rows.len() {
        let Basic::Col(c) = tab.basis[i] else {
            unreachable!("artificials removed after phase one")
        };
        let cb = cost[c].clone();
        if cb.is_exact_zero() {
            continue;
        }
        for (p, a) in obj.profit.iter_mut().zip(&tab.rows[i]) {
            if !a.is_exact_zero() {
                p.sub_mul_assign(&cb, a);
            }
        }
        obj.value = obj.value.clone() + cb * tab.rhs[i].clone();
    }
    for i in 0..tab.rows.len() {
        if let Basic::Col(c) = tab.basis[i] {
            obj.profit[c] = S::zero();
        }
    }
    if let Outcome::Unbounded = tab.optimize(&mut obj, opts)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective_value: None,
            primal_point: None,
            pivots: tab.pivots,
            exact_rescue: false,
            basis: None,
        });
    }

    let basic_cols: Vec<usize> = tab
        .basis
        .iter()
        .map(|b| match *b {
            Basic::Col(c) => c,
            Basic::Artificial(_) => unreachable!(),
        })
        .collect();
    let mut x = primal_point(lp, &std.columns, &basic_cols, &tab.rhs, tol);
    let scale = |x: &[S]| 1.0 + x.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
    let mut violation = lp.max_violation(&x);
    if S::MODE == Mode::Float && violation.is_positive(tol * scale(&x)) {
        // Accumulated round-off: recompute the basic values from the
        // original rows on the final basis.
        let mut m: Vec<Vec<S>> = tab
            .row_ids
            .iter()
            .map(|&r| basic_cols.iter().map(|&c| std_rows[r][c].clone()).collect())
            .collect();
        let mut b: Vec<S> = tab.row_ids.iter().map(|&r| std_rhs[r].clone()).collect();
        let values = gauss_solve(&mut m, &mut b)?;
        x = primal_point(lp, &std.columns, &basic_cols, &values, tol);
        violation = lp.max_violation(&x);
    }
    if violation.is_positive(tol * scale(&x)) {
        return Err(Error::Solver(format!(
            "optimal point violates constraints by {violation}"
        )));
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective_value: Some(lp.objective_at(&x)),
        primal_point: Some(x),
        pivots: tab.pivots,
        exact_rescue: false,
        basis: Some(FinalBasis {
            kept_rows: tab.row_ids.clone(),
            basic_cols,
        }),
    })
}

/// Original-space point for basic values `values[i]` of columns `basic_cols[i]`.
fn primal_point<S: Scalar>(
    lp: &LinearProgram<S>,
    columns: &[Column],
    basic_cols: &[usize],
    values: &[S],
    tol: f64,
) -> Vec<S> {
    let mut x: Vec<S> = lp
        .lower_bounds
        .iter()
        .map(|l| l.clone().unwrap_or_else(S::zero))
        .collect();
    for (&c, v) in basic_cols.iter().zip(values) {
        if v.is_exact_zero() || (v.is_negative(0.0) && !v.is_negative(tol)) {
            continue;
        }
        if let Column::Var { var, negated } = columns[c] {
            x[var] = if negated {
                x[var].clone() - v.clone()
            } else {
                x[var].clone() + v.clone()
            };
        }
    }
    x
}

/// Pivots every zero-level artificial out of the basis; rows where that is
/// impossible are linearly dependent on the others and are dropped.
fn drive_out_artificials<S: Scalar>(tab: &mut Tableau<S>, obj: &mut Objective<S>) {
    let mut redundant = Vec::new();
    for i in 0..tab.rows.len() {
        if !matches!(tab.basis[i], Basic::Artificial(_)) {
            continue;
        }
        let mut best: Option<usize> = None;
        for j in 0..tab.ncols {
            if tab.is_basic[j] || !tab.rows[i][j].abs().is_positive(tab.tol) {
                continue;
            }
            if S::MODE == Mode::Rational {
                best = Some(j);
                break;
            }
            match best {
                Some(b)
                    if tab.rows[i][j].abs().cmp_tol(&tab.rows[i][b].abs(), 0.0)
                        != Ordering::Greater => {}
                _ => best = Some(j),
            }
        }
        match best {
            Some(j) => {
                tab.rhs[i] = S::zero();
                tab.pivot(i, j, obj);
            }
            None => redundant.push(i),
        }
    }
    for &i in redundant.iter().rev() {
        tab.rows.remove(i);
        tab.rhs.remove(i);
        tab.basis.remove(i);
        tab.row_ids.remove(i);
    }
}
