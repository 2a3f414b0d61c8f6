//! Linear programs over joint models `P(outcomes, friend outcomes | inputs)`
//! describing the relaxed local-friendliness set, and over behaviors
//! describing the no-signalling polytope.
//!
//! Constraint families for a joint block:
//!
//! * normalization per context;
//! * marginal independence: for every party `i`, the marginal obtained by
//!   summing out `i`'s super-observer outcome (keeping the friend outcomes)
//!   does not depend on `i`'s input. Bipartite, these are
//!   `p(a,c,d|x,y) = p(a,c,d|x)` and `p(b,c,d|x,y) = p(b,c,d|y)`;
//! * relaxed agreement: in every context where party `i` uses its friend
//!   input, `p(o_i = f_i) ≥ 1 − ε`.
//!
//! A block with `k = 1` has no friend outcomes, so the same rows describe the
//! no-signalling polytope in behavior space.

use crate::behavior::{Behavior, JointModel, ScenarioSpec};
use crate::error::{Error, Result};
use crate::inequalities::InequalityExpr;
use crate::lp::{self, LinearProgram, LpSolution, LpStatus, Sense};
use crate::scalar::{Mode, Rational, Scalar, DEFAULT_TOLERANCE};

/// Relaxation parameter of the agreement rows.
#[derive(Clone, Debug, PartialEq)]
pub enum Epsilon<S> {
    Fixed(S),
    /// ε is an LP variable; only valid with [`Objective::MinimizeRelaxation`].
    Free,
}

#[derive(Clone, Debug)]
pub enum Objective {
    Feasibility,
    Maximize(InequalityExpr),
    /// Minimize `2ε`.
    MinimizeRelaxation,
}

#[derive(Clone, Debug)]
pub struct RlfProgramSpec<S> {
    pub scenario: ScenarioSpec,
    pub epsilon: Epsilon<S>,
    pub objective: Objective,
    pub observed: Option<Behavior<S>>,
}

impl<S: Scalar> RlfProgramSpec<S> {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        match (&self.epsilon, &self.objective) {
            (Epsilon::Free, Objective::MinimizeRelaxation) => {}
            (Epsilon::Free, _) => {
                return Err(Error::OutOfRange(
                    "a free ε requires the minimize-relaxation objective".into(),
                ))
            }
            (Epsilon::Fixed(_), Objective::MinimizeRelaxation) => {
                return Err(Error::OutOfRange(
                    "minimizing ε requires ε to be free".into(),
                ))
            }
            (Epsilon::Fixed(e), _) => check_epsilon(e)?,
        }
        if let Objective::Maximize(ineq) = &self.objective {
            if ineq.scenario.parties != self.scenario.parties || ineq.scenario.m != self.scenario.m
            {
                return Err(Error::ScenarioMismatch(format!(
                    "{} does not fit a {}-party scenario with m = {}",
                    ineq.label, self.scenario.parties, self.scenario.m
                )));
            }
        }
        if let Some(b) = &self.observed {
            let sc = b.scenario();
            if sc.parties != self.scenario.parties || sc.m != self.scenario.m {
                return Err(Error::ScenarioMismatch(
                    "observed behavior does not fit the scenario".into(),
                ));
            }
        }
        Ok(())
    }
}

fn check_epsilon<S: Scalar>(e: &S) -> Result<()> {
    let half = S::one() / S::from_i64(2);
    if e.is_negative(0.0) || e.cmp_tol(&half, 0.0).is_gt() {
        return Err(Error::OutOfRange(format!("ε = {e} outside [0, 1/2]")));
    }
    Ok(())
}

/// Where each constraint family of a built program lives.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstraintBundle {
    pub normalization: std::ops::Range<usize>,
    pub marginal_independence: std::ops::Range<usize>,
    pub marginal_match: std::ops::Range<usize>,
    /// Indices into the inequality rows.
    pub agreement: std::ops::Range<usize>,
}

#[derive(Clone, Debug)]
pub struct RlfProgram<S> {
    pub lp: LinearProgram<S>,
    pub scenario: ScenarioSpec,
    /// Joint-model entries occupy variables `0..joint_len`.
    pub joint_len: usize,
    pub epsilon_var: Option<usize>,
    pub rows: ConstraintBundle,
}

impl<S: Scalar> RlfProgram<S> {
    pub fn joint_model(&self, x: &[S]) -> Result<JointModel<S>> {
        let tol = match S::MODE {
            Mode::Rational => 0.0,
            Mode::Float => 1e-7,
        };
        let table = x[..self.joint_len]
            .iter()
            .map(|v| {
                if v.is_negative(0.0) {
                    S::zero()
                } else {
                    v.clone()
                }
            })
            .collect();
        JointModel::with_tolerance(self.scenario.clone(), table, tol)
    }
}

/// Variables `offset..offset + sc.joint_len()` of an LP holding a joint
/// block (or a behavior block when `sc.k == 1`).
#[derive(Clone, Debug)]
pub(crate) struct Block {
    pub sc: ScenarioSpec,
    pub offset: usize,
}

/// Right-hand side of normalization rows: 1, or a weight variable for
/// sub-normalized (homogenized) blocks.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Scale {
    Unit,
    Var(usize),
}

impl Block {
    pub fn new(sc: ScenarioSpec, offset: usize) -> Self {
        Self { sc, offset }
    }

    pub fn behavior(sc: &ScenarioSpec, offset: usize) -> Self {
        let mut sc = sc.clone();
        sc.k = 1;
        Self { sc, offset }
    }

    pub fn len(&self) -> usize {
        self.sc.joint_len()
    }

    fn var(&self, outcomes: &[usize], friends: &[usize], inputs: &[usize]) -> usize {
        self.offset + self.sc.joint_index(outcomes, friends, inputs)
    }

    pub fn add_normalization<S: Scalar>(&self, lp: &mut LinearProgram<S>, scale: Scale) {
        let n = lp.variable_count();
        let block = self.sc.joint_block();
        for ctx in 0..self.sc.contexts() {
            let mut row = vec![S::zero(); n];
            for v in &mut row[self.offset + ctx * block..self.offset + (ctx + 1) * block] {
                *v = S::one();
            }
            match scale {
                Scale::Unit => lp.add_eq(row, S::one()),
                Scale::Var(w) => {
                    row[w] = -S::one();
                    lp.add_eq(row, S::zero());
                }
            }
        }
    }

    /// For each party, the marginal with that party's outcome summed out is
    /// the same as in the context where the party uses input 0.
    pub fn add_marginal_independence<S: Scalar>(&self, lp: &mut LinearProgram<S>) {
        let sc = &self.sc;
        let n = lp.variable_count();
        for party in 0..sc.parties {
            for ctx in 0..sc.contexts() {
                let inputs = sc.context_inputs(ctx);
                if inputs[party] == 0 {
                    continue;
                }
                let mut reference = inputs.clone();
                reference[party] = 0;
                for out in 0..sc.outcomes() {
                    let bits = sc.outcome_bits(out);
                    if bits[party] != 0 {
                        continue;
                    }
                    for f in 0..sc.friend_tuples() {
                        let friends = sc.friend_outcomes(f);
                        let mut row = vec![S::zero(); n];
                        for o in 0..2 {
                            let mut b = bits.clone();
                            b[party] = o;
                            row[self.var(&b, &friends, &inputs)] = S::one();
                            row[self.var(&b, &friends, &reference)] = -S::one();
                        }
                        lp.add_eq(row, S::zero());
                    }
                }
            }
        }
    }

    /// `Σ_{o_i = f_i} P(·|x) + ε ≥ 1` (free), `≥ 1 − ε` (fixed), or
    /// `≥ (1 − ε)·w` (scaled by a weight variable), in every context where
    /// party `i` uses its friend input.
    pub fn add_agreement<S: Scalar>(
        &self,
        lp: &mut LinearProgram<S>,
        epsilon: &Epsilon<S>,
        scale: Scale,
        eps_var: Option<usize>,
    ) {
        let sc = &self.sc;
        let n = lp.variable_count();
        for party in 0..sc.parties {
            for ctx in 0..sc.contexts() {
                let inputs = sc.context_inputs(ctx);
                if inputs[party] != sc.friend_inputs[party] {
                    continue;
                }
                let mut row = vec![S::zero(); n];
                for out in 0..sc.outcomes() {
                    let bits = sc.outcome_bits(out);
                    for f in 0..sc.friend_tuples() {
                        let friends = sc.friend_outcomes(f);
                        if friends[party] == bits[party] {
                            row[self.var(&bits, &friends, &inputs)] = S::one();
                        }
                    }
                }
                match (epsilon, scale) {
                    (Epsilon::Free, _) => {
                        row[eps_var.expect("free ε needs a variable")] = S::one();
                        lp.add_ge(row, S::one());
                    }
                    (Epsilon::Fixed(e), Scale::Unit) => lp.add_ge(row, S::one() - e.clone()),
                    (Epsilon::Fixed(e), Scale::Var(w)) => {
                        row[w] = -(S::one() - e.clone());
                        lp.add_ge(row, S::zero());
                    }
                }
            }
        }
    }

    /// Adds the friend-summed marginal of this block (times `sign`) into
    /// `rows`, one row per behavior entry.
    pub fn accumulate_marginal<S: Scalar>(&self, rows: &mut [Vec<S>], sign: &S) {
        let sc = &self.sc;
        let nf = sc.friend_tuples();
        for (i, row) in rows.iter_mut().enumerate() {
            for f in 0..nf {
                row[self.offset + i * nf + f] = sign.clone();
            }
        }
    }

    /// Objective coefficients for a functional on the friend-summed marginal.
    pub fn objective_from_weights<S: Scalar>(
        &self,
        lp: &mut LinearProgram<S>,
        weights: &[Rational],
    ) {
        let nf = self.sc.friend_tuples();
        for (i, w) in weights.iter().enumerate() {
            for f in 0..nf {
                lp.objective[self.offset + i * nf + f] = S::from_rational(w);
            }
        }
    }
}

pub fn build_rlf_lp<S: Scalar>(spec: &RlfProgramSpec<S>) -> Result<RlfProgram<S>> {
    spec.validate()?;
    let sc = &spec.scenario;
    let block = Block::new(sc.clone(), 0);
    let joint_len = block.len();
    let free = matches!(spec.epsilon, Epsilon::Free);
    let n = joint_len + usize::from(free);
    let sense = match spec.objective {
        Objective::MinimizeRelaxation => Sense::Minimize,
        _ => Sense::Maximize,
    };
    let mut lp = LinearProgram::new(n, sense);
    let epsilon_var = free.then_some(joint_len);
    match &spec.objective {
        Objective::Feasibility => {}
        Objective::Maximize(ineq) => {
            check_fits(ineq, sc)?;
            block.objective_from_weights(&mut lp, &ineq.probability_weights())
        }
        Objective::MinimizeRelaxation => lp.objective[joint_len] = S::from_i64(2),
    }

    let mut rows = ConstraintBundle::default();
    let start = lp.eq_rows.len();
    block.add_normalization(&mut lp, Scale::Unit);
    rows.normalization = start..lp.eq_rows.len();

    let start = lp.eq_rows.len();
    block.add_marginal_independence(&mut lp);
    rows.marginal_independence = start..lp.eq_rows.len();

    let start = lp.ineq_rows.len();
    block.add_agreement(&mut lp, &spec.epsilon, Scale::Unit, epsilon_var);
    rows.agreement = start..lp.ineq_rows.len();

    let start = lp.eq_rows.len();
    if let Some(observed) = &spec.observed {
        let mut match_rows = vec![vec![S::zero(); n]; sc.behavior_len()];
        block.accumulate_marginal(&mut match_rows, &S::one());
        for (row, p) in match_rows.into_iter().zip(observed.table()) {
            lp.add_eq(row, p.clone());
        }
    }
    rows.marginal_match = start..lp.eq_rows.len();

    Ok(RlfProgram {
        lp,
        scenario: sc.clone(),
        joint_len,
        epsilon_var,
        rows,
    })
}

pub(crate) fn expect_optimal<S: Scalar>(sol: LpSolution<S>, what: &str) -> Result<LpSolution<S>> {
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        LpStatus::Infeasible => Err(Error::Solver(format!(
            "{what}: reported infeasible over a non-empty polytope"
        ))),
        LpStatus::Unbounded => Err(Error::Solver(format!(
            "{what}: reported unbounded over a bounded polytope"
        ))),
    }
}

/// Optimum of a functional over the relaxed LF set together with an
/// optimal joint model.
#[derive(Clone, Debug)]
pub struct RlfOptimum<S> {
    pub value: S,
    pub joint: JointModel<S>,
}

/// `max I(p)` over the relaxed LF set at `epsilon`, exactly.
pub fn max_over_rlf(
    ineq: &InequalityExpr,
    scenario: &ScenarioSpec,
    epsilon: &Rational,
) -> Result<Rational> {
    Ok(max_over_rlf_with::<Rational>(ineq, scenario, epsilon)?.value)
}

pub fn max_over_rlf_with<S: Scalar>(
    ineq: &InequalityExpr,
    scenario: &ScenarioSpec,
    epsilon: &Rational,
) -> Result<RlfOptimum<S>> {
    let spec = RlfProgramSpec {
        scenario: scenario.clone(),
        epsilon: Epsilon::Fixed(S::from_rational(epsilon)),
        objective: Objective::Maximize(ineq.clone()),
        observed: None,
    };
    let program = build_rlf_lp(&spec)?;
    let sol = expect_optimal(lp::solve(&program.lp)?, &ineq.label)?;
    let joint = program.joint_model(sol.point()?)?;
    Ok(RlfOptimum {
        value: sol.value()?.clone(),
        joint,
    })
}

#[derive(Clone, Debug)]
pub enum Membership<S> {
    /// Carries a joint model reproducing the behavior.
    Inside(JointModel<S>),
    Outside,
}

impl<S> Membership<S> {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::Inside(_))
    }
}

/// Tolerance used to reject signalling inputs.
pub fn signalling_tolerance<S: Scalar>() -> f64 {
    match S::MODE {
        Mode::Rational => 0.0,
        Mode::Float => DEFAULT_TOLERANCE,
    }
}

/// Whether `behavior` lies in the relaxed LF set at `epsilon`.
pub fn membership<S: Scalar>(behavior: &Behavior<S>, epsilon: &S) -> Result<Membership<S>> {
    behavior.require_no_signalling(signalling_tolerance::<S>())?;
    let spec = RlfProgramSpec {
        scenario: behavior.scenario().clone(),
        epsilon: Epsilon::Fixed(epsilon.clone()),
        objective: Objective::Feasibility,
        observed: Some(behavior.clone()),
    };
    let program = build_rlf_lp(&spec)?;
    let sol = lp::solve(&program.lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(Membership::Inside(program.joint_model(sol.point()?)?)),
        LpStatus::Infeasible => Ok(Membership::Outside),
        LpStatus::Unbounded => Err(Error::Solver(
            "feasibility problem reported unbounded".into(),
        )),
    }
}

fn check_fits(ineq: &InequalityExpr, scenario: &ScenarioSpec) -> Result<()> {
    if ineq.scenario.parties != scenario.parties || ineq.scenario.m != scenario.m {
        return Err(Error::ScenarioMismatch(format!(
            "{} does not fit the scenario",
            ineq.label
        )));
    }
    Ok(())
}

/// LP over behaviors in the no-signalling polytope maximizing `objective`.
pub fn build_ns_lp<S: Scalar>(
    objective: &InequalityExpr,
    scenario: &ScenarioSpec,
) -> Result<LinearProgram<S>> {
    scenario.validate()?;
    check_fits(objective, scenario)?;
    let block = Block::behavior(scenario, 0);
    let mut lp = LinearProgram::new(block.len(), Sense::Maximize);
    block.objective_from_weights(&mut lp, &objective.probability_weights());
    block.add_normalization(&mut lp, Scale::Unit);
    block.add_marginal_independence(&mut lp);
    Ok(lp)
}

/// Maximum of `objective` over the no-signalling polytope, exactly.
pub fn max_over_ns(objective: &InequalityExpr, scenario: &ScenarioSpec) -> Result<Rational> {
    max_over_ns_with(objective, scenario)
}

pub fn max_over_ns_with<S: Scalar>(
    objective: &InequalityExpr,
    scenario: &ScenarioSpec,
) -> Result<S> {
    let lp = build_ns_lp::<S>(objective, scenario)?;
    Ok(expect_optimal(lp::solve(&lp)?, &objective.label)?
        .value()?
        .clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequalities::{chained, lf_catalog_m3};
    use crate::scalar::q;

    #[test]
    fn lp_dimensions() {
        let sc = ScenarioSpec::bipartite(3, 2).unwrap();
        let spec = RlfProgramSpec::<Rational> {
            scenario: sc,
            epsilon: Epsilon::Fixed(q(0, 1)),
            objective: Objective::Feasibility,
            observed: None,
        };
        let p = build_rlf_lp(&spec).unwrap();
        assert_eq!(p.lp.variable_count(), 144);
        assert_eq!(p.rows.normalization.len(), 9);
        // Two parties, six contexts off the reference input each, two
        // outcomes of the other party, four friend pairs.
        assert_eq!(p.rows.marginal_independence.len(), 2 * 6 * 2 * 4);
        assert_eq!(p.rows.agreement.len(), 6);
    }

    #[test]
    fn spec_validation() {
        let sc = ScenarioSpec::bipartite(2, 2).unwrap();
        let bad = |epsilon, objective| RlfProgramSpec::<Rational> {
            scenario: sc.clone(),
            epsilon,
            objective,
            observed: None,
        };
        assert!(bad(Epsilon::Free, Objective::Feasibility)
            .validate()
            .is_err());
        assert!(bad(Epsilon::Fixed(q(0, 1)), Objective::MinimizeRelaxation)
            .validate()
            .is_err());
        assert!(bad(Epsilon::Fixed(q(3, 4)), Objective::Feasibility)
            .validate()
            .is_err());
        assert!(bad(Epsilon::Fixed(q(-1, 4)), Objective::Feasibility)
            .validate()
            .is_err());
        let wrong = RlfProgramSpec::<Rational> {
            scenario: sc.clone(),
            epsilon: Epsilon::Fixed(q(0, 1)),
            objective: Objective::Maximize(chained(3).unwrap()),
            observed: None,
        };
        assert!(matches!(wrong.validate(), Err(Error::ScenarioMismatch(_))));
    }

    #[test]
    fn i5_bounds() {
        let cat = lf_catalog_m3().unwrap();
        let sc = &cat[4].scenario;
        assert_eq!(max_over_rlf(&cat[4], sc, &q(0, 1)).unwrap(), q(2, 1));
        assert_eq!(max_over_rlf(&cat[4], sc, &q(1, 2)).unwrap(), q(4, 1));
        assert_eq!(max_over_ns(&cat[4], sc).unwrap(), q(4, 1));
    }

    #[test]
    fn chsh_ns_maximum() {
        let c = chained(2).unwrap();
        assert_eq!(max_over_ns(&c, &c.scenario).unwrap(), q(4, 1));
    }

    #[test]
    fn membership_examples() {
        let sc = ScenarioSpec::bipartite(2, 2).unwrap();
        let uniform = Behavior::<Rational>::uniform(sc.clone()).unwrap();
        assert!(membership(&uniform, &q(0, 1)).unwrap().is_inside());
        let pr = Behavior::<Rational>::pr_box(sc.clone()).unwrap();
        assert!(!membership(&pr, &q(0, 1)).unwrap().is_inside());
        assert!(membership(&pr, &q(1, 2)).unwrap().is_inside());
        let signalling = Behavior::<Rational>::from_fn(sc, |o, x| {
            if o[0] == x[1] && o[1] == 0 {
                q(1, 1)
            } else {
                q(0, 1)
            }
        })
        .unwrap();
        assert!(matches!(
            membership(&signalling, &q(1, 2)),
            Err(Error::Signalling { .. })
        ));
    }

    #[test]
    fn witness_reproduces_behavior_and_friend_independence() {
        let sc = ScenarioSpec::bipartite(3, 2).unwrap();
        let b = Behavior::<Rational>::mixture(&[
            (q(1, 2), &Behavior::uniform(sc.clone()).unwrap()),
            (
                q(1, 2),
                &Behavior::deterministic(sc.clone(), &[vec![0, 1, 0], vec![1, 1, 0]]).unwrap(),
            ),
        ])
        .unwrap();
        let Membership::Inside(joint) = membership(&b, &q(0, 1)).unwrap() else {
            panic!("expected inside");
        };
        assert_eq!(joint.marginalize().unwrap(), b);
        let dist = joint.friend_distribution();
        assert!(dist.iter().all(|d| d == &dist[0]));
        for party in 0..2 {
            assert!(joint.agreement(party).iter().all(|(_, v)| v == &q(1, 1)));
        }
    }
}
