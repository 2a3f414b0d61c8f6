//! Observed behaviors `p(a,b|x,y)` (or `p(a,b,c|x,y,z)`), underlying joint
//! models `P(a,b,…,f_1,f_2,…|x,y,…)` that also carry the friends' outcomes,
//! and their correlators.
//!
//! Index layout: contexts (input tuples) are outermost, and within a context
//! outcomes are lexicographic with party 0 most significant. A joint model
//! stores the super-observer outcomes before the friend outcomes, so the
//! bipartite vector is ordered `(x,y)` then `(a,b,c,d)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::scalar::{Mode, Rational, Scalar, DEFAULT_TOLERANCE};

const PARTY_NAMES: [char; 3] = ['A', 'B', 'C'];

/// Parties, inputs, outcome alphabets and each super-observer's
/// "ask the friend" input.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub parties: usize,
    /// Inputs per super-observer.
    pub m: usize,
    /// Outcomes per friend.
    pub k: usize,
    pub friend_inputs: Vec<usize>,
}

impl ScenarioSpec {
    /// Bipartite scenario with the friend queried at input `m - 1`.
    pub fn bipartite(m: usize, k: usize) -> Result<Self> {
        Self::new(2, m, k, vec![m.saturating_sub(1); 2])
    }

    pub fn tripartite(m: usize, k: usize, friend_inputs: [usize; 3]) -> Result<Self> {
        Self::new(3, m, k, friend_inputs.to_vec())
    }

    pub fn new(parties: usize, m: usize, k: usize, friend_inputs: Vec<usize>) -> Result<Self> {
        let spec = Self {
            parties,
            m,
            k,
            friend_inputs,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_friend_inputs(mut self, friend_inputs: Vec<usize>) -> Result<Self> {
        self.friend_inputs = friend_inputs;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.parties) {
            return Err(Error::OutOfRange(format!(
                "parties must be 2 or 3, got {}",
                self.parties
            )));
        }
        if self.m == 0 || self.k == 0 {
            return Err(Error::OutOfRange("m and k must be positive".into()));
        }
        if self.friend_inputs.len() != self.parties {
            return Err(Error::OutOfRange(format!(
                "{} friend inputs for {} parties",
                self.friend_inputs.len(),
                self.parties
            )));
        }
        if let Some(&f) = self.friend_inputs.iter().find(|&&f| f >= self.m) {
            return Err(Error::OutOfRange(format!(
                "friend input {f} not below m = {}",
                self.m
            )));
        }
        Ok(())
    }

    /// Super-observer outcomes per context (`2^parties`).
    pub fn outcomes(&self) -> usize {
        1 << self.parties
    }

    /// Friend outcome tuples (`k^parties`).
    pub fn friend_tuples(&self) -> usize {
        self.k.pow(self.parties as u32)
    }

    /// Input tuples (`m^parties`).
    pub fn contexts(&self) -> usize {
        self.m.pow(self.parties as u32)
    }

    pub fn behavior_len(&self) -> usize {
        self.contexts() * self.outcomes()
    }

    /// Entries of a joint model per context.
    pub fn joint_block(&self) -> usize {
        self.outcomes() * self.friend_tuples()
    }

    pub fn joint_len(&self) -> usize {
        self.contexts() * self.joint_block()
    }

    pub fn context_index(&self, inputs: &[usize]) -> usize {
        debug_assert_eq!(inputs.len(), self.parties);
        inputs.iter().fold(0, |acc, &x| acc * self.m + x)
    }

    pub fn context_inputs(&self, mut ctx: usize) -> Vec<usize> {
        let mut out = vec![0; self.parties];
        for slot in out.iter_mut().rev() {
            *slot = ctx % self.m;
            ctx /= self.m;
        }
        out
    }

    pub fn outcome_index(&self, outcomes: &[usize]) -> usize {
        outcomes.iter().fold(0, |acc, &a| (acc << 1) | a)
    }

    pub fn outcome_bits(&self, out: usize) -> Vec<usize> {
        (0..self.parties)
            .map(|p| (out >> (self.parties - 1 - p)) & 1)
            .collect()
    }

    pub fn friend_index(&self, friends: &[usize]) -> usize {
        friends.iter().fold(0, |acc, &f| acc * self.k + f)
    }

    pub fn friend_outcomes(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.parties];
        for slot in out.iter_mut().rev() {
            *slot = idx % self.k;
            idx /= self.k;
        }
        out
    }

    pub fn behavior_index(&self, outcomes: &[usize], inputs: &[usize]) -> usize {
        self.context_index(inputs) * self.outcomes() + self.outcome_index(outcomes)
    }

    pub fn joint_index(&self, outcomes: &[usize], friends: &[usize], inputs: &[usize]) -> usize {
        self.context_index(inputs) * self.joint_block()
            + self.outcome_index(outcomes) * self.friend_tuples()
            + self.friend_index(friends)
    }

    /// Human-readable label such as `p(a=0,b=1|x=2,y=0)`.
    pub fn entry_label(&self, outcomes: &[usize], inputs: &[usize]) -> String {
        const OUT: [char; 3] = ['a', 'b', 'c'];
        const IN: [char; 3] = ['x', 'y', 'z'];
        let outs: Vec<String> = outcomes
            .iter()
            .enumerate()
            .map(|(p, v)| format!("{}={v}", OUT[p]))
            .collect();
        let ins: Vec<String> = inputs
            .iter()
            .enumerate()
            .map(|(p, v)| format!("{}={v}", IN[p]))
            .collect();
        format!("p({}|{})", outs.join(","), ins.join(","))
    }

    pub fn context_label(&self, inputs: &[usize]) -> String {
        const IN: [char; 3] = ['x', 'y', 'z'];
        let ins: Vec<String> = inputs
            .iter()
            .enumerate()
            .map(|(p, v)| format!("{}={v}", IN[p]))
            .collect();
        format!("({})", ins.join(","))
    }

    fn same_shape(&self, other: &ScenarioSpec) -> bool {
        self.parties == other.parties && self.m == other.m
    }
}

fn check_table<S: Scalar>(
    scenario: &ScenarioSpec,
    table: &[S],
    block: usize,
    tol: f64,
) -> Result<()> {
    for ctx in 0..scenario.contexts() {
        let inputs = scenario.context_inputs(ctx);
        let entries = &table[ctx * block..(ctx + 1) * block];
        let mut sum = S::zero();
        for (i, v) in entries.iter().enumerate() {
            if v.is_negative(tol) {
                let outs = scenario.outcome_bits(i / (block / scenario.outcomes()));
                return Err(Error::NegativeEntry {
                    at: scenario.entry_label(&outs, &inputs),
                    value: v.to_string(),
                });
            }
            sum = sum + v.clone();
        }
        if !(sum.clone() - S::one()).is_zero_tol(tol) {
            return Err(Error::NotNormalized {
                context: scenario.context_label(&inputs),
                sum: sum.to_string(),
            });
        }
    }
    Ok(())
}

fn default_tol<S: Scalar>() -> f64 {
    match S::MODE {
        Mode::Rational => 0.0,
        Mode::Float => DEFAULT_TOLERANCE,
    }
}

/// Observed conditional distribution of the super-observers.
#[derive(Clone, Debug, PartialEq)]
pub struct Behavior<S> {
    scenario: ScenarioSpec,
    table: Vec<S>,
}

impl<S: Scalar> Behavior<S> {
    /// Validates non-negativity and per-context normalization (exact in
    /// rational mode, within the default tolerance in float mode).
    pub fn new(scenario: ScenarioSpec, table: Vec<S>) -> Result<Self> {
        Self::with_tolerance(scenario, table, default_tol::<S>())
    }

    pub fn with_tolerance(scenario: ScenarioSpec, table: Vec<S>, tol: f64) -> Result<Self> {
        scenario.validate()?;
        if table.len() != scenario.behavior_len() {
            return Err(Error::Schema(format!(
                "behavior table has {} entries, expected {}",
                table.len(),
                scenario.behavior_len()
            )));
        }
        check_table(&scenario, &table, scenario.outcomes(), tol)?;
        Ok(Self { scenario, table })
    }

    /// Builds a table entrywise from `f(outcomes, inputs)`.
    pub fn from_fn(
        scenario: ScenarioSpec,
        mut f: impl FnMut(&[usize], &[usize]) -> S,
    ) -> Result<Self> {
        let mut table = Vec::with_capacity(scenario.behavior_len());
        for ctx in 0..scenario.contexts() {
            let inputs = scenario.context_inputs(ctx);
            for out in 0..scenario.outcomes() {
                table.push(f(&scenario.outcome_bits(out), &inputs));
            }
        }
        Self::new(scenario, table)
    }

    pub fn scenario(&self) -> &ScenarioSpec {
        &self.scenario
    }

    pub fn table(&self) -> &[S] {
        &self.table
    }

    pub fn into_table(self) -> Vec<S> {
        self.table
    }

    pub fn p(&self, outcomes: &[usize], inputs: &[usize]) -> &S {
        &self.table[self.scenario.behavior_index(outcomes, inputs)]
    }

    /// `p = 1/2^n` everywhere.
    pub fn uniform(scenario: ScenarioSpec) -> Result<Self> {
        let v = S::one() / S::from_i64(scenario.outcomes() as i64);
        Self::from_fn(scenario, |_, _| v.clone())
    }

    /// Bipartite box with `a ⊕ b = f(x, y)` and uniform marginals. Every such
    /// box is no-signalling; with `f(x,y) = x·y` at `m = 2` it is the PR box.
    pub fn xor_box(scenario: ScenarioSpec, f: impl Fn(usize, usize) -> usize) -> Result<Self> {
        if scenario.parties != 2 {
            return Err(Error::ScenarioMismatch("xor boxes are bipartite".into()));
        }
        let half = S::one() / S::from_i64(2);
        Self::from_fn(scenario, |o, x| {
            if (o[0] ^ o[1]) == f(x[0], x[1]) & 1 {
                half.clone()
            } else {
                S::zero()
            }
        })
    }

    /// The PR box `a ⊕ b = x·y` (inputs other than 0 count as 1 when m > 2).
    pub fn pr_box(scenario: ScenarioSpec) -> Result<Self> {
        Self::xor_box(scenario, |x, y| usize::from(x > 0 && y > 0))
    }

    /// Local deterministic behavior: `strategy[party][input]` is the outcome.
    pub fn deterministic(scenario: ScenarioSpec, strategy: &[Vec<usize>]) -> Result<Self> {
        if strategy.len() != scenario.parties || strategy.iter().any(|s| s.len() != scenario.m) {
            return Err(Error::ScenarioMismatch(
                "strategy shape does not match scenario".into(),
            ));
        }
        Self::from_fn(scenario, |o, x| {
            if (0..o.len()).all(|p| strategy[p][x[p]] == o[p]) {
                S::one()
            } else {
                S::zero()
            }
        })
    }

    /// Convex combination `Σ w_i p_i`. Weights must be non-negative and sum to one.
    pub fn mixture(parts: &[(S, &Behavior<S>)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::OutOfRange("empty mixture".into()))?;
        let scenario = first.1.scenario.clone();
        let mut table = vec![S::zero(); scenario.behavior_len()];
        for (w, b) in parts {
            if !b.scenario.same_shape(&scenario) {
                return Err(Error::ScenarioMismatch(
                    "mixture of different scenarios".into(),
                ));
            }
            for (t, v) in table.iter_mut().zip(&b.table) {
                *t = t.clone() + w.clone() * v.clone();
            }
        }
        Self::new(scenario, table)
    }

    /// Same table under a different scenario annotation (e.g. another
    /// friend-input convention). Shapes must agree.
    pub fn with_scenario(&self, scenario: ScenarioSpec) -> Result<Self> {
        if !self.scenario.same_shape(&scenario) {
            return Err(Error::ScenarioMismatch(
                "cannot reinterpret table under another shape".into(),
            ));
        }
        Ok(Self {
            scenario,
            table: self.table.clone(),
        })
    }

    /// Relabels every party's inputs by `perm` (new input `perm[x]` gets
    /// the statistics of old input `x`).
    pub fn relabel_inputs(&self, perm: &[usize], scenario: ScenarioSpec) -> Result<Self> {
        if !self.scenario.same_shape(&scenario) || perm.len() != self.scenario.m {
            return Err(Error::ScenarioMismatch("relabeling shape mismatch".into()));
        }
        let mut table = vec![S::zero(); self.table.len()];
        for ctx in 0..self.scenario.contexts() {
            let inputs = self.scenario.context_inputs(ctx);
            let mapped: Vec<usize> = inputs.iter().map(|&x| perm[x]).collect();
            for out in 0..self.scenario.outcomes() {
                let bits = self.scenario.outcome_bits(out);
                table[scenario.behavior_index(&bits, &mapped)] =
                    self.table[self.scenario.behavior_index(&bits, &inputs)].clone();
            }
        }
        Self::new(scenario, table)
    }

    pub fn correlators(&self) -> CorrelatorTable<S> {
        CorrelatorTable::of(self)
    }

    /// Maximal violation of each party's marginal-independence family.
    pub fn check_no_signalling(&self, tol: f64) -> NoSignallingReport<S> {
        let sc = &self.scenario;
        let mut per_party = Vec::with_capacity(sc.parties);
        for party in 0..sc.parties {
            let mut worst = S::zero();
            // Marginal over all parties except `party`, compared with the
            // reference context where `party` uses input 0.
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
                    let mut flipped = bits.clone();
                    flipped[party] = 1;
                    let here = self.p(&bits, &inputs).clone() + self.p(&flipped, &inputs).clone();
                    let there =
                        self.p(&bits, &reference).clone() + self.p(&flipped, &reference).clone();
                    let diff = (here - there).abs();
                    if diff.cmp_tol(&worst, 0.0).is_gt() {
                        worst = diff;
                    }
                }
            }
            per_party.push(worst);
        }
        let max = per_party.iter().cloned().fold(S::zero(), |a, b| {
            if b.cmp_tol(&a, 0.0).is_gt() {
                b
            } else {
                a
            }
        });
        NoSignallingReport {
            is_no_signalling: !max.is_positive(tol),
            per_party,
            max_violation: max,
        }
    }

    /// Errors with [`Error::Signalling`] unless the behavior is no-signalling.
    pub fn require_no_signalling(&self, tol: f64) -> Result<()> {
        let report = self.check_no_signalling(tol);
        if report.is_no_signalling {
            Ok(())
        } else {
            Err(Error::Signalling {
                max_violation: report.max_violation.to_f64(),
            })
        }
    }

    pub fn to_json(&self) -> Value {
        let sc = &self.scenario;
        let mut table = Map::new();
        for ctx in 0..sc.contexts() {
            let inputs = sc.context_inputs(ctx);
            let key = inputs
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",");
            let entries = &self.table[ctx * sc.outcomes()..(ctx + 1) * sc.outcomes()];
            table.insert(key, nest(entries, sc.parties));
        }
        json!({
            "scenario": sc,
            "mode": S::MODE,
            "table": table,
        })
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let mode: Mode = serde_json::from_value(
            doc.get("mode")
                .cloned()
                .ok_or_else(|| Error::Schema("missing `mode`".into()))?,
        )
        .map_err(|e| Error::Schema(format!("mode: {e}")))?;
        if mode != S::MODE {
            return Err(Error::Schema(format!(
                "document is in {mode} mode, expected {}",
                S::MODE
            )));
        }
        let scenario: ScenarioSpec = serde_json::from_value(
            doc.get("scenario")
                .cloned()
                .ok_or_else(|| Error::Schema("missing `scenario`".into()))?,
        )
        .map_err(|e| Error::Schema(format!("scenario: {e}")))?;
        scenario.validate()?;
        let table_obj = doc
            .get("table")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Schema("missing or non-object `table`".into()))?;
        if table_obj.len() != scenario.contexts() {
            return Err(Error::Schema(format!(
                "table has {} contexts, expected {}",
                table_obj.len(),
                scenario.contexts()
            )));
        }
        let mut table = vec![S::zero(); scenario.behavior_len()];
        for (key, value) in table_obj {
            let inputs: Vec<usize> = key
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Schema(format!("bad context key `{key}`")))?;
            if inputs.len() != scenario.parties || inputs.iter().any(|&x| x >= scenario.m) {
                return Err(Error::Schema(format!("context key `{key}` out of range")));
            }
            let mut flat = Vec::with_capacity(scenario.outcomes());
            flatten(value, scenario.parties, &mut flat)
                .map_err(|e| Error::Schema(format!("context `{key}`: {e}")))?;
            let base = scenario.context_index(&inputs) * scenario.outcomes();
            table[base..base + scenario.outcomes()].clone_from_slice(&flat);
        }
        Self::new(scenario, table)
    }
}

fn nest<S: Scalar>(entries: &[S], depth: usize) -> Value {
    if depth == 0 {
        return entries[0].to_json();
    }
    let half = entries.len() / 2;
    Value::Array(vec![
        nest(&entries[..half], depth - 1),
        nest(&entries[half..], depth - 1),
    ])
}

fn flatten<S: Scalar>(value: &Value, depth: usize, out: &mut Vec<S>) -> Result<()> {
    if depth == 0 {
        out.push(S::from_json(value)?);
        return Ok(());
    }
    match value.as_array() {
        Some(items) if items.len() == 2 => {
            for item in items {
                flatten(item, depth - 1, out)?;
            }
            Ok(())
        }
        _ => Err(Error::Schema(format!(
            "expected a pair at nesting depth {depth}, found {value}"
        ))),
    }
}

impl Behavior<Rational> {
    pub fn to_float(&self) -> Behavior<f64> {
        Behavior {
            scenario: self.scenario.clone(),
            table: self.table.iter().map(Rational::to_f64).collect(),
        }
    }
}

impl Behavior<f64> {
    /// Exact behavior close to this one: every entry is rounded to a
    /// fraction with denominator at most `max_den`, then the last outcome of
    /// each context absorbs the rounding so contexts stay normalized.
    ///
    /// The result need not be exactly no-signalling.
    pub fn rationalize(&self, max_den: i64) -> Result<Behavior<Rational>> {
        let sc = &self.scenario;
        let n = sc.outcomes();
        let mut table = Vec::with_capacity(self.table.len());
        for chunk in self.table.chunks(n) {
            let mut sum = Rational::integer(0);
            for v in &chunk[..n - 1] {
                let r = Rational::approximate(v.max(0.0), max_den)?;
                sum = &sum + &r;
                table.push(r);
            }
            table.push(&Rational::integer(1) - &sum);
        }
        Behavior::new(sc.clone(), table)
    }

    /// Exact no-signalling behavior close to this one, obtained by rounding
    /// every correlator to a multiple of `1/den` and inverting. Fails with
    /// [`Error::NegativeEntry`] when rounding pushes a zero entry below zero.
    pub fn rationalize_no_signalling(&self, den: i64) -> Result<Behavior<Rational>> {
        if den < 1 {
            return Err(Error::OutOfRange(format!(
                "denominator must be positive, got {den}"
            )));
        }
        let values = CorrelatorTable::of(self)
            .values
            .into_iter()
            .map(|(t, v)| (t, Rational::new((v * den as f64).round() as i64, den)))
            .collect();
        CorrelatorTable {
            scenario: self.scenario.clone(),
            values,
        }
        .reconstruct()
    }
}

/// Either-mode behavior, as read from a JSON document.
#[derive(Clone, Debug)]
pub enum AnyBehavior {
    Rational(Behavior<Rational>),
    Float(Behavior<f64>),
}

impl AnyBehavior {
    pub fn from_json(doc: &Value) -> Result<Self> {
        match doc.get("mode").and_then(Value::as_str) {
            Some("rational") => Ok(AnyBehavior::Rational(Behavior::from_json(doc)?)),
            Some("float") => Ok(AnyBehavior::Float(Behavior::from_json(doc)?)),
            Some(other) => Err(Error::Schema(format!("unknown mode `{other}`"))),
            None => Err(Error::Schema("missing `mode`".into())),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            AnyBehavior::Rational(b) => b.to_json(),
            AnyBehavior::Float(b) => b.to_json(),
        }
    }

    pub fn scenario(&self) -> &ScenarioSpec {
        match self {
            AnyBehavior::Rational(b) => b.scenario(),
            AnyBehavior::Float(b) => b.scenario(),
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            AnyBehavior::Rational(_) => Mode::Rational,
            AnyBehavior::Float(_) => Mode::Float,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NoSignallingReport<S> {
    /// Entry `i` is the largest change of the marginal of all parties but
    /// `i` when party `i` switches input.
    pub per_party: Vec<S>,
    pub max_violation: S,
    pub is_no_signalling: bool,
}

/// Underlying distribution over super-observer and friend outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct JointModel<S> {
    scenario: ScenarioSpec,
    table: Vec<S>,
}

impl<S: Scalar> JointModel<S> {
    pub fn new(scenario: ScenarioSpec, table: Vec<S>) -> Result<Self> {
        Self::with_tolerance(scenario, table, default_tol::<S>())
    }

    pub fn with_tolerance(scenario: ScenarioSpec, table: Vec<S>, tol: f64) -> Result<Self> {
        scenario.validate()?;
        if table.len() != scenario.joint_len() {
            return Err(Error::Schema(format!(
                "joint table has {} entries, expected {}",
                table.len(),
                scenario.joint_len()
            )));
        }
        check_table(&scenario, &table, scenario.joint_block(), tol)?;
        Ok(Self { scenario, table })
    }

    pub fn from_fn(
        scenario: ScenarioSpec,
        mut f: impl FnMut(&[usize], &[usize], &[usize]) -> S,
    ) -> Result<Self> {
        let mut table = Vec::with_capacity(scenario.joint_len());
        for ctx in 0..scenario.contexts() {
            let inputs = scenario.context_inputs(ctx);
            for out in 0..scenario.outcomes() {
                let bits = scenario.outcome_bits(out);
                for fi in 0..scenario.friend_tuples() {
                    table.push(f(&bits, &scenario.friend_outcomes(fi), &inputs));
                }
            }
        }
        Self::new(scenario, table)
    }

    pub fn scenario(&self) -> &ScenarioSpec {
        &self.scenario
    }

    pub fn table(&self) -> &[S] {
        &self.table
    }

    pub fn p(&self, outcomes: &[usize], friends: &[usize], inputs: &[usize]) -> &S {
        &self.table[self.scenario.joint_index(outcomes, friends, inputs)]
    }

    /// Sums out the friends' outcomes.
    pub fn marginalize(&self) -> Result<Behavior<S>> {
        let sc = &self.scenario;
        let table = self
            .table
            .chunks(sc.friend_tuples())
            .map(|chunk| chunk.iter().cloned().fold(S::zero(), |a, b| a + b))
            .collect();
        Behavior::new(sc.clone(), table)
    }

    /// `p(f|x)` for every context, as a table `[ctx][friend tuple]`.
    pub fn friend_distribution(&self) -> Vec<Vec<S>> {
        let sc = &self.scenario;
        let nf = sc.friend_tuples();
        (0..sc.contexts())
            .map(|ctx| {
                let block = &self.table[ctx * sc.joint_block()..(ctx + 1) * sc.joint_block()];
                (0..nf)
                    .map(|f| {
                        (0..sc.outcomes())
                            .map(|o| block[o * nf + f].clone())
                            .fold(S::zero(), |a, b| a + b)
                    })
                    .collect()
            })
            .collect()
    }

    /// `p(a_i = f_i | x)` for `party` in every context where that party
    /// uses its friend input.
    pub fn agreement(&self, party: usize) -> Vec<(Vec<usize>, S)> {
        let sc = &self.scenario;
        let mut out = Vec::new();
        for ctx in 0..sc.contexts() {
            let inputs = sc.context_inputs(ctx);
            if inputs[party] != sc.friend_inputs[party] {
                continue;
            }
            let mut acc = S::zero();
            for o in 0..sc.outcomes() {
                let bits = sc.outcome_bits(o);
                for f in 0..sc.friend_tuples() {
                    let friends = sc.friend_outcomes(f);
                    if friends[party] == bits[party] {
                        acc = acc + self.p(&bits, &friends, &inputs).clone();
                    }
                }
            }
            out.push((inputs, acc));
        }
        out
    }
}

/// Which input each party uses in a correlator; `None` means the party is
/// summed out. `[Some(1), Some(0)]` is `⟨A_1 B_0⟩`, `[Some(2), None]` is
/// `⟨A_2⟩`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term(pub Vec<Option<usize>>);

impl Term {
    pub fn full(inputs: &[usize]) -> Self {
        Term(inputs.iter().map(|&x| Some(x)).collect())
    }

    pub fn marginal(parties: usize, party: usize, input: usize) -> Self {
        let mut v = vec![None; parties];
        v[party] = Some(input);
        Term(v)
    }

    pub fn parties(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> usize {
        self.0.iter().filter(|x| x.is_some()).count()
    }

    /// Parses labels like `A1B0`, `A2`, `A0B1C2`.
    pub fn parse(label: &str, parties: usize) -> Result<Self> {
        let mut v = vec![None; parties];
        let mut chars = label.trim().chars().peekable();
        let bad = || Error::Parse(format!("bad correlator label `{label}`"));
        if chars.peek().is_none() {
            return Err(bad());
        }
        while let Some(c) = chars.next() {
            let party = PARTY_NAMES.iter().position(|&p| p == c).ok_or_else(bad)?;
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            if party >= parties || v[party].is_some() {
                return Err(bad());
            }
            v[party] = Some(digits.parse().map_err(|_| bad())?);
        }
        Ok(Term(v))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, x) in self.0.iter().enumerate() {
            if let Some(x) = x {
                write!(f, "{}{x}", PARTY_NAMES[p])?;
            }
        }
        Ok(())
    }
}

/// Expectation of a product of ±1 outcomes, `Σ_o (-1)^{Σ_{i∈S} o_i} p(o|x)`.
///
/// Parties outside the term are summed out in the context where they use
/// input 0, which is unambiguous for no-signalling behaviors.
pub fn correlator<S: Scalar>(behavior: &Behavior<S>, term: &Term) -> S {
    let sc = behavior.scenario();
    let inputs: Vec<usize> = term.0.iter().map(|x| x.unwrap_or(0)).collect();
    let mut acc = S::zero();
    for out in 0..sc.outcomes() {
        let bits = sc.outcome_bits(out);
        let parity = term
            .0
            .iter()
            .zip(&bits)
            .filter(|(x, _)| x.is_some())
            .map(|(_, &b)| b)
            .sum::<usize>()
            & 1;
        let p = behavior.p(&bits, &inputs).clone();
        acc = if parity == 0 { acc + p } else { acc - p };
    }
    acc
}

/// Every full and lower-order correlator of a behavior.
#[derive(Clone, Debug)]
pub struct CorrelatorTable<S> {
    scenario: ScenarioSpec,
    values: BTreeMap<Term, S>,
}

impl<S: Scalar> CorrelatorTable<S> {
    pub fn of(behavior: &Behavior<S>) -> Self {
        let sc = behavior.scenario().clone();
        let values = all_terms(&sc)
            .into_iter()
            .map(|t| {
                let v = correlator(behavior, &t);
                (t, v)
            })
            .collect();
        Self {
            scenario: sc,
            values,
        }
    }

    pub fn get(&self, term: &Term) -> Option<&S> {
        self.values.get(term)
    }

    /// `⟨A_x B_y …⟩` over all parties.
    pub fn full(&self, inputs: &[usize]) -> &S {
        &self.values[&Term::full(inputs)]
    }

    pub fn marginal(&self, party: usize, input: usize) -> &S {
        &self.values[&Term::marginal(self.scenario.parties, party, input)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &S)> {
        self.values.iter()
    }

    /// Inverse map `p(o|x) = 2^{-n} Σ_S (-1)^{Σ_{i∈S} o_i} ⟨∏_{i∈S} A_{x_i}⟩`.
    pub fn reconstruct(&self) -> Result<Behavior<S>> {
        let sc = self.scenario.clone();
        let scale = S::one() / S::from_i64(sc.outcomes() as i64);
        let values = &self.values;
        Behavior::from_fn(sc.clone(), |o, x| {
            let mut acc = S::one();
            for subset in 1..(1usize << sc.parties) {
                let term = Term(
                    (0..sc.parties)
                        .map(|p| (subset >> p & 1 == 1).then_some(x[p]))
                        .collect(),
                );
                let parity = (0..sc.parties)
                    .filter(|&p| subset >> p & 1 == 1)
                    .map(|p| o[p])
                    .sum::<usize>()
                    & 1;
                let v = values[&term].clone();
                acc = if parity == 0 { acc + v } else { acc - v };
            }
            acc * scale.clone()
        })
    }
}

/// Every correlator term of a scenario, including lower-order marginals.
pub fn all_terms(sc: &ScenarioSpec) -> Vec<Term> {
    let mut out = Vec::new();
    for subset in 1..(1usize << sc.parties) {
        let members: Vec<usize> = (0..sc.parties).filter(|&p| subset >> p & 1 == 1).collect();
        let combos = sc.m.pow(members.len() as u32);
        for mut c in 0..combos {
            let mut v = vec![None; sc.parties];
            for &p in members.iter().rev() {
                v[p] = Some(c % sc.m);
                c /= sc.m;
            }
            out.push(Term(v));
        }
    }
    out
}
