//! Non-absoluteness fraction `A_f` (smallest non-LF weight in a convex
//! decomposition into an LF part and a no-signalling part) and
//! non-absoluteness coefficient `A_c` (twice the smallest relaxation ε
//! admitting the behavior).

use serde::Serialize;
use serde_json::{json, Value};

use crate::behavior::{Behavior, JointModel};
use crate::constraints::{
    build_rlf_lp, expect_optimal, signalling_tolerance, Block, Epsilon, Objective, RlfProgramSpec,
    Scale,
};
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, Sense};
use crate::scalar::{Mode, Scalar, DEFAULT_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    NonAbsolutenessFraction,
    NonAbsolutenessCoefficient,
}

#[derive(Clone, Debug)]
pub enum Witness<S> {
    /// `p = q·p_LF + (1 − q)·p_NS`; a part is absent when its weight is zero.
    Decomposition {
        lf_weight: S,
        lf_joint: Option<JointModel<S>>,
        ns_part: Option<Behavior<S>>,
    },
    /// Joint model admitting the behavior at relaxation `epsilon_star`.
    Relaxation {
        epsilon_star: S,
        joint: JointModel<S>,
    },
}

#[derive(Clone, Debug)]
pub struct MeasureResult<S> {
    pub kind: MeasureKind,
    pub value: S,
    pub witness: Witness<S>,
    /// Whether the LP had to be redone in exact arithmetic (float mode only).
    pub exact_rescue: bool,
}

impl<S: Scalar> MeasureResult<S> {
    pub fn mode(&self) -> Mode {
        S::MODE
    }

    pub fn tolerance(&self) -> f64 {
        signalling_tolerance::<S>()
    }

    pub fn to_json(&self) -> Value {
        let mut doc = json!({
            "measure": self.kind,
            "value": self.value.to_json(),
            "mode": S::MODE,
            "tolerance": self.tolerance(),
        });
        match &self.witness {
            Witness::Decomposition { lf_weight, .. } => {
                doc["weights"] = json!({
                    "lf": lf_weight.to_json(),
                    "ns": (S::one() - lf_weight.clone()).to_json(),
                });
            }
            Witness::Relaxation { epsilon_star, .. } => {
                doc["epsilon_star"] = epsilon_star.to_json()
            }
        }
        doc
    }
}

fn witness_tolerance<S: Scalar>() -> f64 {
    match S::MODE {
        Mode::Rational => 0.0,
        Mode::Float => 1e-7,
    }
}

fn clamp<S: Scalar>(v: &S) -> S {
    if v.is_negative(0.0) {
        S::zero()
    } else {
        v.clone()
    }
}

/// `A_f = 1 − q*`, with `q*` the largest LF weight over all decompositions
/// `p = q·p_LF + (1 − q)·p_NS`.
///
/// Solved as one LP over a sub-normalized LF joint block `Q` (total weight
/// `q` per context, agreement rows homogenized at ε = 0) and a
/// sub-normalized no-signalling behavior `R`, with `Σ_f Q + R = p`.
pub fn non_absoluteness_fraction<S: Scalar>(behavior: &Behavior<S>) -> Result<MeasureResult<S>> {
    behavior.require_no_signalling(signalling_tolerance::<S>())?;
    let sc = behavior.scenario();
    let lf = Block::new(sc.clone(), 0);
    let ns = Block::behavior(sc, lf.len());
    let weight = lf.len() + ns.len();
    let n = weight + 1;

    let mut lp = LinearProgram::new(n, Sense::Maximize);
    lp.objective[weight] = S::one();
    lf.add_normalization(&mut lp, Scale::Var(weight));
    lf.add_marginal_independence(&mut lp);
    lf.add_agreement(
        &mut lp,
        &Epsilon::Fixed(S::zero()),
        Scale::Var(weight),
        None,
    );
    ns.add_marginal_independence(&mut lp);
    let mut rows = vec![vec![S::zero(); n]; sc.behavior_len()];
    lf.accumulate_marginal(&mut rows, &S::one());
    ns.accumulate_marginal(&mut rows, &S::one());
    for (row, p) in rows.into_iter().zip(behavior.table()) {
        lp.add_eq(row, p.clone());
    }

    let sol = expect_optimal(lp::solve(&lp)?, "non-absoluteness fraction")?;
    let x = sol.point()?;
    let mut q = clamp(&x[weight]);
    if q.cmp_tol(&S::one(), 0.0).is_gt() {
        q = S::one();
    }
    let tol = witness_tolerance::<S>();

    let lf_joint = if q.is_positive(tol) {
        let table = x[..lf.len()].iter().map(|v| clamp(v) / q.clone()).collect();
        Some(JointModel::with_tolerance(sc.clone(), table, tol)?)
    } else {
        None
    };
    let rest = S::one() - q.clone();
    let ns_part = if rest.is_positive(tol) {
        let table = x[lf.len()..weight]
            .iter()
            .map(|v| clamp(v) / rest.clone())
            .collect();
        Some(Behavior::with_tolerance(sc.clone(), table, tol)?)
    } else {
        None
    };
    Ok(MeasureResult {
        kind: MeasureKind::NonAbsolutenessFraction,
        value: rest,
        witness: Witness::Decomposition {
            lf_weight: q,
            lf_joint,
            ns_part,
        },
        exact_rescue: sol.exact_rescue,
    })
}

/// `A_c = min 2ε` such that the behavior lies in the relaxed LF set,
/// solved with ε as an LP variable.
pub fn non_absoluteness_coefficient<S: Scalar>(behavior: &Behavior<S>) -> Result<MeasureResult<S>> {
    behavior.require_no_signalling(signalling_tolerance::<S>())?;
    let spec = RlfProgramSpec {
        scenario: behavior.scenario().clone(),
        epsilon: Epsilon::Free,
        objective: Objective::MinimizeRelaxation,
        observed: Some(behavior.clone()),
    };
    let program = build_rlf_lp(&spec)?;
    let sol = expect_optimal(lp::solve(&program.lp)?, "non-absoluteness coefficient")?;
    let x = sol.point()?;
    let eps = clamp(&x[program.epsilon_var.expect("free ε")]);
    let joint = program.joint_model(x)?;
    Ok(MeasureResult {
        kind: MeasureKind::NonAbsolutenessCoefficient,
        value: S::from_i64(2) * eps.clone(),
        witness: Witness::Relaxation {
            epsilon_star: eps,
            joint,
        },
        exact_rescue: sol.exact_rescue,
    })
}

/// Lower bound on `A_f` from one inequality:
/// `max(0, 1 − (Ω_NS − Ω_Q)/(Ω_NS − Ω_LF))`.
pub fn af_lower_bound<S: Scalar>(omega_q: &S, omega_lf: &S, omega_ns: &S) -> Result<S> {
    let tol = match S::MODE {
        Mode::Rational => 0.0,
        Mode::Float => DEFAULT_TOLERANCE,
    };
    let gap = omega_ns.clone() - omega_lf.clone();
    if !gap.is_positive(tol) {
        return Err(Error::OutOfRange(format!(
            "LF bound {omega_lf} must lie strictly below the NS bound {omega_ns}"
        )));
    }
    if omega_q.cmp_tol(omega_ns, tol).is_gt() {
        return Err(Error::OutOfRange(format!(
            "value {omega_q} exceeds the NS bound {omega_ns}"
        )));
    }
    let bound = S::one() - (omega_ns.clone() - omega_q.clone()) / gap;
    Ok(if bound.is_negative(0.0) {
        S::zero()
    } else {
        bound
    })
}

/// Both measures of a tripartite behavior, returned as `(A_c, A_f)`.
pub fn mermin_measures<S: Scalar>(
    behavior: &Behavior<S>,
) -> Result<(MeasureResult<S>, MeasureResult<S>)> {
    if behavior.scenario().parties != 3 {
        return Err(Error::ScenarioMismatch(
            "Mermin measures need a tripartite behavior".into(),
        ));
    }
    Ok((
        non_absoluteness_coefficient(behavior)?,
        non_absoluteness_fraction(behavior)?,
    ))
}
