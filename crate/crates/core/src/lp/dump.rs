use std::fmt::Write;

use super::{LinearProgram, Sense};
use crate::scalar::Scalar;

/// Plain-text rendering, one line per constraint. Exact rationals print as
/// `p/q`.
///
/// ```text
/// maximize: 1 1 0
/// eq 0: 1 1 1 = 1
/// le 0: 0 1 -1 <= 1/2
/// lower: 0 0 free
/// ```
pub fn to_text<S: Scalar>(lp: &LinearProgram<S>) -> String {
    let join = |v: &[S]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = String::new();
    let sense = match lp.sense {
        Sense::Maximize => "maximize",
        Sense::Minimize => "minimize",
    };
    let _ = writeln!(out, "{sense}: {}", join(&lp.objective));
    for (i, (row, rhs)) in lp.eq_rows.iter().zip(&lp.eq_rhs).enumerate() {
        let _ = writeln!(out, "eq {i}: {} = {rhs}", join(row));
    }
    for (i, (row, rhs)) in lp.ineq_rows.iter().zip(&lp.ineq_rhs).enumerate() {
        let _ = writeln!(out, "le {i}: {} <= {rhs}", join(row));
    }
    let lower: Vec<String> = lp
        .lower_bounds
        .iter()
        .map(|b| {
            b.as_ref()
                .map_or_else(|| "free".to_string(), |v| v.to_string())
        })
        .collect();
    let _ = writeln!(out, "lower: {}", lower.join(" "));
    out
}
