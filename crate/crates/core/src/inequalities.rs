//! Linear functionals on behaviors, stored as correlator coefficients.
//!
//! Generators cover the chained family and its partial sums, the two-input
//! CHSH blocks of the chained recurrence, the Mermin symmetry, and the
//! catalog of LF inequality classes for three inputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::behavior::{correlator, Behavior, ScenarioSpec, Term};
use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// Bounds an inequality is expected to satisfy. Advisory only: the LP is the
/// source of truth and tests check these against it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KnownBounds {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lf: Option<Rational>,
    /// Slope `s` of the claimed relaxed bound `lf + s·ε`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lf_relaxed_slope: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ns: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantum_max: Option<f64>,
}

impl KnownBounds {
    /// Claimed relaxed bound at `epsilon`, if both parts are known.
    pub fn relaxed(&self, epsilon: &Rational) -> Option<Rational> {
        Some(self.lf.clone()? + self.lf_relaxed_slope.clone()? * epsilon.clone())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityExpr {
    pub label: String,
    pub scenario: ScenarioSpec,
    terms: BTreeMap<Term, Rational>,
    pub known_bounds: KnownBounds,
}

impl InequalityExpr {
    /// Zero coefficients are dropped.
    pub fn new(
        label: impl Into<String>,
        scenario: ScenarioSpec,
        terms: impl IntoIterator<Item = (Term, Rational)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (t, c) in terms {
            if t.parties() != scenario.parties || t.order() == 0 {
                return Err(Error::ScenarioMismatch(format!(
                    "term {t} does not fit the scenario"
                )));
            }
            if t.0.iter().flatten().any(|&x| x >= scenario.m) {
                return Err(Error::ScenarioMismatch(format!(
                    "term {t} uses an input ≥ m = {}",
                    scenario.m
                )));
            }
            let entry = map.entry(t).or_insert_with(|| Rational::integer(0));
            *entry = &*entry + &c;
        }
        map.retain(|_, c: &mut Rational| !c.is_zero());
        Ok(Self {
            label: label.into(),
            scenario,
            terms: map,
            known_bounds: KnownBounds::default(),
        })
    }

    pub fn with_bounds(mut self, bounds: KnownBounds) -> Self {
        self.known_bounds = bounds;
        self
    }

    pub fn terms(&self) -> &BTreeMap<Term, Rational> {
        &self.terms
    }

    pub fn coefficient(&self, term: &Term) -> Rational {
        self.terms
            .get(term)
            .cloned()
            .unwrap_or_else(|| Rational::integer(0))
    }

    /// Full-correlator coefficients keyed by input tuple.
    pub fn correlator_coeffs(&self) -> impl Iterator<Item = (Vec<usize>, &Rational)> {
        self.terms
            .iter()
            .filter(|(t, _)| t.order() == t.parties())
            .map(|(t, c)| (t.0.iter().map(|x| x.unwrap()).collect(), c))
    }

    /// Lower-order (marginal) correlator coefficients.
    pub fn marginal_coeffs(&self) -> impl Iterator<Item = (&Term, &Rational)> {
        self.terms.iter().filter(|(t, _)| t.order() < t.parties())
    }

    /// `Σ coeff · correlator`.
    pub fn evaluate<S: Scalar>(&self, behavior: &Behavior<S>) -> Result<S> {
        let sc = behavior.scenario();
        if sc.parties != self.scenario.parties || sc.m != self.scenario.m {
            return Err(Error::ScenarioMismatch(format!(
                "{} is defined for {} parties with m = {}, behavior has {} parties with m = {}",
                self.label, self.scenario.parties, self.scenario.m, sc.parties, sc.m
            )));
        }
        Ok(self.terms.iter().fold(S::zero(), |acc, (t, c)| {
            acc + S::from_rational(c) * correlator(behavior, t)
        }))
    }

    /// Probability-form coefficients `ω`, laid out like a behavior table, so
    /// that the functional equals `Σ ω_i p_i`. Marginal correlators are read
    /// in the context where the summed-out parties use input 0.
    pub fn probability_weights(&self) -> Vec<Rational> {
        let sc = &self.scenario;
        let mut w = vec![Rational::integer(0); sc.behavior_len()];
        for (t, c) in &self.terms {
            let inputs: Vec<usize> = t.0.iter().map(|x| x.unwrap_or(0)).collect();
            for out in 0..sc.outcomes() {
                let bits = sc.outcome_bits(out);
                let parity =
                    t.0.iter()
                        .zip(&bits)
                        .filter(|(x, _)| x.is_some())
                        .map(|(_, b)| b)
                        .sum::<usize>()
                        & 1;
                let i = sc.behavior_index(&bits, &inputs);
                w[i] = if parity == 0 { &w[i] + c } else { &w[i] - c };
            }
        }
        w
    }

    /// Coefficient-wise sum, keeping this expression's scenario and label.
    pub fn plus(&self, other: &InequalityExpr) -> Result<Self> {
        self.combine(other, Rational::integer(1))
    }

    pub fn minus(&self, other: &InequalityExpr) -> Result<Self> {
        self.combine(other, Rational::integer(-1))
    }

    fn combine(&self, other: &InequalityExpr, sign: Rational) -> Result<Self> {
        if self.scenario.parties != other.scenario.parties || self.scenario.m != other.scenario.m {
            return Err(Error::ScenarioMismatch(
                "combining inequalities of different shapes".into(),
            ));
        }
        let terms = self
            .terms
            .iter()
            .map(|(t, c)| (t.clone(), c.clone()))
            .chain(other.terms.iter().map(|(t, c)| (t.clone(), c * &sign)));
        Self::new(self.label.clone(), self.scenario.clone(), terms)
    }

    /// Renames every party's input `x` to `perm[x]`.
    pub fn relabel_inputs(&self, perm: &[usize], scenario: ScenarioSpec) -> Result<Self> {
        if perm.len() != self.scenario.m {
            return Err(Error::ScenarioMismatch(
                "permutation length differs from m".into(),
            ));
        }
        let terms = self.terms.iter().map(|(t, c)| {
            (
                Term(t.0.iter().map(|x| x.map(|x| perm[x])).collect()),
                c.clone(),
            )
        });
        Ok(Self::new(self.label.clone(), scenario, terms)?.with_bounds(self.known_bounds.clone()))
    }

    pub fn to_json(&self) -> Value {
        let corr: BTreeMap<String, String> = self
            .correlator_coeffs()
            .map(|(x, c)| {
                let key = x
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                (key, c.to_string())
            })
            .collect();
        let marg: BTreeMap<String, String> = self
            .marginal_coeffs()
            .map(|(t, c)| (t.to_string(), c.to_string()))
            .collect();
        json!({
            "label": self.label,
            "scenario": self.scenario,
            "correlator_coeffs": corr,
            "marginal_coeffs": marg,
            "known_bounds": self.known_bounds,
        })
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let scenario: ScenarioSpec = serde_json::from_value(
            doc.get("scenario")
                .cloned()
                .ok_or_else(|| Error::Schema("missing `scenario`".into()))?,
        )
        .map_err(|e| Error::Schema(format!("scenario: {e}")))?;
        scenario.validate()?;
        let label = doc
            .get("label")
            .and_then(Value::as_str)
            .unwrap_or("custom")
            .to_string();
        let mut terms = Vec::new();
        if let Some(corr) = doc.get("correlator_coeffs") {
            let corr = corr
                .as_object()
                .ok_or_else(|| Error::Schema("`correlator_coeffs` must be an object".into()))?;
            for (key, v) in corr {
                let inputs: Vec<usize> = key
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Schema(format!("bad correlator key `{key}`")))?;
                if inputs.len() != scenario.parties {
                    return Err(Error::Schema(format!(
                        "correlator key `{key}` has the wrong arity"
                    )));
                }
                terms.push((Term::full(&inputs), coefficient(v)?));
            }
        }
        if let Some(marg) = doc.get("marginal_coeffs") {
            let marg = marg
                .as_object()
                .ok_or_else(|| Error::Schema("`marginal_coeffs` must be an object".into()))?;
            for (key, v) in marg {
                terms.push((Term::parse(key, scenario.parties)?, coefficient(v)?));
            }
        }
        if terms.is_empty() {
            return Err(Error::Schema("inequality has no terms".into()));
        }
        let bounds = match doc.get("known_bounds") {
            Some(b) if !b.is_null() => serde_json::from_value(b.clone())
                .map_err(|e| Error::Schema(format!("known_bounds: {e}")))?,
            _ => KnownBounds::default(),
        };
        Ok(Self::new(label, scenario, terms)?.with_bounds(bounds))
    }
}

fn coefficient(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => s.parse(),
        Value::Number(n) if n.is_i64() => Ok(Rational::integer(n.as_i64().unwrap())),
        other => Err(Error::Schema(format!(
            "coefficient {other} must be an integer or a \"p/q\" string"
        ))),
    }
}

fn r(v: i64) -> Rational {
    Rational::integer(v)
}

fn corr(x: usize, y: usize) -> Term {
    Term::full(&[x, y])
}

/// Chained functional
/// `⟨A_{m-1}B_{m-1}⟩ − ⟨A_j B_{m-1}⟩ + Σ_{l=j}^{m-2} (⟨A_l B_l⟩ + ⟨A_{l+1} B_l⟩)`.
/// `j = 0` is the full chained inequality.
pub fn chained_partial(m: usize, j: usize) -> Result<InequalityExpr> {
    if m < 2 {
        return Err(Error::OutOfRange(format!(
            "chained family needs m ≥ 2, got {m}"
        )));
    }
    if j > m - 2 {
        return Err(Error::OutOfRange(format!(
            "partial chained index j = {j} exceeds m − 2 = {}",
            m - 2
        )));
    }
    let top = m - 1;
    let mut terms = vec![(corr(top, top), r(1)), (corr(j, top), r(-1))];
    for l in j..top {
        terms.push((corr(l, l), r(1)));
        terms.push((corr(l + 1, l), r(1)));
    }
    let label = if j == 0 {
        format!("chained_m{m}")
    } else {
        format!("chained_m{m}_j{j}")
    };
    let lf = r(2 * (m - j) as i64 - 2);
    let mut bounds = KnownBounds {
        lf: Some(lf),
        ..KnownBounds::default()
    };
    if j == 0 {
        bounds.lf_relaxed_slope = Some(r(4));
        bounds.ns = Some(r(2 * m as i64));
        bounds.quantum_max = Some(2.0 * m as f64 * (std::f64::consts::PI / (2.0 * m as f64)).cos());
    }
    Ok(InequalityExpr::new(label, ScenarioSpec::bipartite(m, 2)?, terms)?.with_bounds(bounds))
}

/// Full chained inequality with `2m` correlator terms.
pub fn chained(m: usize) -> Result<InequalityExpr> {
    chained_partial(m, 0)
}

/// Two-input CHSH block
/// `⟨A_{j+1}B_{m-1}⟩ − ⟨A_j B_{m-1}⟩ + ⟨A_j B_j⟩ + ⟨A_{j+1} B_j⟩`.
pub fn chsh_tilde(m: usize, j: usize) -> Result<InequalityExpr> {
    if m < 3 || j > m - 3 {
        return Err(Error::OutOfRange(format!(
            "CHSH block needs 0 ≤ j ≤ m − 3, got m = {m}, j = {j}"
        )));
    }
    let top = m - 1;
    let terms = [
        (corr(j + 1, top), r(1)),
        (corr(j, top), r(-1)),
        (corr(j, j), r(1)),
        (corr(j + 1, j), r(1)),
    ];
    let bounds = KnownBounds {
        lf: Some(r(2)),
        ..KnownBounds::default()
    };
    Ok(InequalityExpr::new(
        format!("chsh_tilde_m{m}_j{j}"),
        ScenarioSpec::bipartite(m, 2)?,
        terms,
    )?
    .with_bounds(bounds))
}

/// Maps the Mermin labels `1, 2, 3` to internal inputs: label `i` becomes
/// input `inputs[i - 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MerminLabels {
    pub inputs: [usize; 3],
}

impl Default for MerminLabels {
    fn default() -> Self {
        Self { inputs: [0, 1, 2] }
    }
}

/// Friend inputs (per party) under which the relaxed Mermin bound is
/// `2 + 8ε` with the default labels. Found by searching all assignments.
pub const MERMIN_FRIEND_INPUTS: [usize; 3] = [2, 2, 2];

/// `⟨A_3B_3C_2⟩ + ⟨A_1B_1C_2⟩ + ⟨A_1B_3C_1⟩ − ⟨A_3B_1C_1⟩` on three inputs.
pub fn mermin() -> Result<InequalityExpr> {
    mermin_with(MerminLabels::default(), MERMIN_FRIEND_INPUTS)
}

pub fn mermin_with(labels: MerminLabels, friend_inputs: [usize; 3]) -> Result<InequalityExpr> {
    let mut seen = [false; 3];
    for &x in &labels.inputs {
        if x >= 3 || std::mem::replace(&mut seen[x], true) {
            return Err(Error::OutOfRange(format!(
                "Mermin labels {:?} are not a permutation of 0..3",
                labels.inputs
            )));
        }
    }
    let l = |i: usize| labels.inputs[i - 1];
    let t = |a: usize, b: usize, c: usize| Term::full(&[l(a), l(b), l(c)]);
    let terms = [
        (t(3, 3, 2), r(1)),
        (t(1, 1, 2), r(1)),
        (t(1, 3, 1), r(1)),
        (t(3, 1, 1), r(-1)),
    ];
    let bounds = KnownBounds {
        lf: Some(r(2)),
        lf_relaxed_slope: Some(r(8)),
        ns: Some(r(4)),
        quantum_max: Some(4.0),
    };
    Ok(InequalityExpr::new(
        "mermin",
        ScenarioSpec::tripartite(3, 2, friend_inputs)?,
        terms,
    )?
    .with_bounds(bounds))
}

const CATALOG_M3: &str = include_str!("../data/lf_catalog_m3.json");
const CATALOG_M3_SHA256: &str = "27c1c2cfe1b167292929547cc6261fa0163af2e4d900333d2cc2810d392d8da3";

#[derive(Deserialize)]
struct CatalogFile {
    version: u32,
    scenario: ScenarioSpec,
    inequalities: Vec<CatalogEntry>,
}

#[derive(Deserialize)]
struct CatalogEntry {
    label: String,
    terms: BTreeMap<String, Rational>,
    lf: Rational,
    lf_relaxed_slope: Rational,
}

/// The six LF inequality classes for `m = 3`, `k = 2`.
pub fn lf_catalog_m3() -> Result<Vec<InequalityExpr>> {
    load_catalog(CATALOG_M3, CATALOG_M3_SHA256)
}

/// Parses a catalog document after checking its SHA-256 digest.
pub fn load_catalog(text: &str, expected_sha256: &str) -> Result<Vec<InequalityExpr>> {
    let digest = hex::encode(Sha256::digest(text.as_bytes()));
    if digest != expected_sha256 {
        return Err(Error::Integrity(format!(
            "catalog digest {digest} does not match {expected_sha256}"
        )));
    }
    let file: CatalogFile =
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("catalog: {e}")))?;
    if file.version != 1 {
        return Err(Error::Schema(format!(
            "unsupported catalog version {}",
            file.version
        )));
    }
    file.scenario.validate()?;
    file.inequalities
        .into_iter()
        .map(|e| {
            let terms = e
                .terms
                .iter()
                .map(|(k, v)| Ok((Term::parse(k, file.scenario.parties)?, v.clone())))
                .collect::<Result<Vec<_>>>()?;
            let half = Rational::new(1, 2);
            let bounds = KnownBounds {
                ns: Some(&e.lf + &(&e.lf_relaxed_slope * &half)),
                lf: Some(e.lf),
                lf_relaxed_slope: Some(e.lf_relaxed_slope),
                quantum_max: None,
            };
            Ok(InequalityExpr::new(e.label, file.scenario.clone(), terms)?.with_bounds(bounds))
        })
        .collect()
}

/// Catalog entry or generated family by name: `I_1` … `I_6`, `chained`
/// (needs `m`), `chsh` (the `m = 2` chained functional), `mermin`.
pub fn resolve(label: &str, m: Option<usize>) -> Result<InequalityExpr> {
    let lower = label.to_ascii_lowercase();
    match lower.as_str() {
        "chained" => chained(m.ok_or_else(|| Error::OutOfRange("`chained` needs --m".into()))?),
        "chsh" => chained(2),
        "mermin" => mermin(),
        _ => {
            let wanted = lower.replace('_', "");
            lf_catalog_m3()?
                .into_iter()
                .find(|i| i.label.to_ascii_lowercase().replace('_', "") == wanted)
                .ok_or_else(|| Error::OutOfRange(format!("unknown inequality `{label}`")))
        }
    }
}
