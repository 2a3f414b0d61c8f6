//! Born-rule behaviors of qubit states measured with ±1-valued observables.
//!
//! Observables are `r·σ_x + t·σ_y + s·σ_z` with `r² + s² + t² = 1`, which
//! makes them Hermitian involutions. Outcome bit 0 is eigenvalue +1, so the
//! projector for bit `o` is `(1 + (−1)^o·O)/2`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::behavior::{Behavior, ScenarioSpec};
use crate::error::{Error, Result};
use crate::inequalities::MERMIN_FRIEND_INPUTS;

const UNIT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observable {
    pub r: f64,
    pub s: f64,
    pub t: f64,
}

impl Observable {
    pub fn new(r: f64, s: f64, t: f64) -> Result<Self> {
        let o = Self { r, s, t };
        o.validate()?;
        Ok(o)
    }

    /// `sin θ·σ_x + cos θ·σ_z`.
    pub fn in_xz_plane(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidObservable(format!(
                "angle {theta} is not finite"
            )));
        }
        let theta = theta.rem_euclid(2.0 * PI);
        Self::new(theta.sin(), theta.cos(), 0.0)
    }

    pub fn x() -> Self {
        Self {
            r: 1.0,
            s: 0.0,
            t: 0.0,
        }
    }

    pub fn y() -> Self {
        Self {
            r: 0.0,
            s: 0.0,
            t: 1.0,
        }
    }

    pub fn z() -> Self {
        Self {
            r: 0.0,
            s: 1.0,
            t: 0.0,
        }
    }

    pub fn negated(self) -> Self {
        Self {
            r: -self.r,
            s: -self.s,
            t: -self.t,
        }
    }

    /// Reads the Pauli components off a 2×2 matrix, rejecting anything that
    /// is not a traceless Hermitian involution.
    pub fn from_matrix(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let hermitian =
            (0..2).all(|i| (0..2).all(|j| (m[i][j] - m[j][i].conj()).norm() <= UNIT_TOL));
        if !hermitian {
            return Err(Error::InvalidObservable("matrix is not Hermitian".into()));
        }
        if (m[0][0] + m[1][1]).norm() > UNIT_TOL {
            return Err(Error::InvalidObservable("matrix is not traceless".into()));
        }
        Self::new(m[1][0].re, m[0][0].re, m[1][0].im)
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [
            [Complex64::new(self.s, 0.0), Complex64::new(self.r, -self.t)],
            [Complex64::new(self.r, self.t), Complex64::new(-self.s, 0.0)],
        ]
    }

    fn validate(&self) -> Result<()> {
        if ![self.r, self.s, self.t].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidObservable(format!(
                "non-finite component in {self:?}"
            )));
        }
        let norm = self.r * self.r + self.s * self.s + self.t * self.t;
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidObservable(format!(
                "observable does not square to the identity (r² + s² + t² = {norm})"
            )));
        }
        Ok(())
    }

    fn projector(&self, outcome: usize) -> [[Complex64; 2]; 2] {
        let sign = if outcome == 0 { 0.5 } else { -0.5 };
        let o = self.matrix();
        let mut p = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                p[i][j] = o[i][j] * sign;
            }
            p[i][i] += 0.5;
        }
        p
    }
}

/// Pure state of `parties` qubits plus one observable per party and input.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumConfig {
    state: Vec<Complex64>,
    observables: Vec<Vec<Observable>>,
}

impl QuantumConfig {
    /// `observables[party][input]`; party 0 is the most significant qubit.
    pub fn new(state: Vec<Complex64>, observables: Vec<Vec<Observable>>) -> Result<Self> {
        let parties = observables.len();
        if parties == 0 || state.len() != 1 << parties {
            return Err(Error::Schema(format!(
                "state has dimension {} but {parties} parties need {}",
                state.len(),
                1usize << parties
            )));
        }
        let norm: f64 = state.iter().map(Complex64::norm_sqr).sum();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::Schema(format!("state norm² is {norm}, expected 1")));
        }
        let m = observables[0].len();
        if m == 0 || observables.iter().any(|o| o.len() != m) {
            return Err(Error::Schema(
                "every party needs the same positive number of observables".into(),
            ));
        }
        for o in observables.iter().flatten() {
            o.validate()?;
        }
        Ok(Self { state, observables })
    }

    pub fn parties(&self) -> usize {
        self.observables.len()
    }

    pub fn inputs(&self) -> usize {
        self.observables[0].len()
    }

    pub fn state(&self) -> &[Complex64] {
        &self.state
    }

    pub fn observable(&self, party: usize, input: usize) -> &Observable {
        &self.observables[party][input]
    }

    pub fn to_json(&self) -> Value {
        let observables: BTreeMap<String, Vec<Value>> = self
            .observables
            .iter()
            .enumerate()
            .map(|(p, obs)| {
                let list = obs
                    .iter()
                    .map(|o| {
                        let mut v = json!({"r": o.r, "s": o.s});
                        if o.t != 0.0 {
                            v["t"] = json!(o.t);
                        }
                        v
                    })
                    .collect();
                (party_name(p), list)
            })
            .collect();
        json!({
            "state": self.state.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
            "observables": observables,
        })
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let state = doc
            .get("state")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Schema("missing `state` array".into()))?
            .iter()
            .map(|pair| match pair.as_array().map(Vec::as_slice) {
                Some([re, im]) => match (re.as_f64(), im.as_f64()) {
                    (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
                    _ => Err(Error::Schema(format!("amplitude {pair} is not numeric"))),
                },
                _ => Err(Error::Schema(format!(
                    "amplitude {pair} is not a [re, im] pair"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let table = doc
            .get("observables")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Schema("missing `observables` object".into()))?;
        let mut observables = Vec::with_capacity(table.len());
        for p in 0..table.len() {
            let name = party_name(p);
            let list = table
                .get(&name)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Schema(format!("missing observables for party {name}")))?;
            let parsed = list
                .iter()
                .map(|o| {
                    let get = |k: &str| o.get(k).and_then(Value::as_f64);
                    match (get("r"), get("s")) {
                        (Some(r), Some(s)) => Observable::new(r, s, get("t").unwrap_or(0.0)),
                        _ => Err(Error::Schema(format!(
                            "observable {o} needs numeric `r` and `s`"
                        ))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            observables.push(parsed);
        }
        Self::new(state, observables)
    }
}

fn party_name(p: usize) -> String {
    char::from(b'A' + p as u8).to_string()
}

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz_state(parties: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << parties];
    v[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[(1 << parties) - 1] = v[0];
    v
}

/// Φ⁺ with measurements in the x–z plane at the given angles.
pub fn chained_config(alice: &[f64], bob: &[f64]) -> Result<QuantumConfig> {
    let obs = |angles: &[f64]| {
        angles
            .iter()
            .map(|&a| Observable::in_xz_plane(a))
            .collect::<Result<Vec<_>>>()
    };
    QuantumConfig::new(ghz_state(2), vec![obs(alice)?, obs(bob)?])
}

/// Settings reaching `2m·cos(π/2m)` on the chained inequality: Alice at
/// `jπ/m`, Bob halfway between neighbours at `(2j + 1)π/(2m)`.
pub fn chained_optimal_config(m: usize) -> Result<QuantumConfig> {
    if m < 2 {
        return Err(Error::OutOfRange(format!(
            "chained family needs m ≥ 2, got {m}"
        )));
    }
    let mf = m as f64;
    let alice: Vec<f64> = (0..m).map(|j| j as f64 * PI / mf).collect();
    let bob: Vec<f64> = (0..m)
        .map(|j| (2 * j + 1) as f64 * PI / (2.0 * mf))
        .collect();
    chained_config(&alice, &bob)
}

/// GHZ with X/Y settings reaching the algebraic maximum 4 of the default
/// Mermin functional (labels 1, 2, 3 on inputs 0, 1, 2). Inputs the
/// functional does not use measure σ_z.
pub fn ghz_mermin_config() -> QuantumConfig {
    let (x, y, z) = (Observable::x(), Observable::y(), Observable::z());
    let observables = vec![vec![y.negated(), z, x], vec![y, z, x], vec![y, x, z]];
    QuantumConfig::new(ghz_state(3), observables).expect("fixed settings are valid")
}

/// `p(o|x) = ⟨ψ| ⊗_i Π_{o_i}^{O_{i,x_i}} |ψ⟩`.
pub fn behavior_from_config(
    config: &QuantumConfig,
    scenario: &ScenarioSpec,
) -> Result<Behavior<f64>> {
    if scenario.parties != config.parties() || scenario.m != config.inputs() {
        return Err(Error::ScenarioMismatch(format!(
            "config has {} parties with {} inputs, scenario has {} with {}",
            config.parties(),
            config.inputs(),
            scenario.parties,
            scenario.m
        )));
    }
    let n = config.parties();
    Behavior::from_fn(scenario.clone(), |o, x| {
        let mut phi = config.state.clone();
        for p in 0..n {
            apply_local(&mut phi, n, p, &config.observables[p][x[p]].projector(o[p]));
        }
        let v: f64 = config
            .state
            .iter()
            .zip(&phi)
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        if v.abs() < 1e-15 {
            0.0
        } else {
            v
        }
    })
}

fn apply_local(v: &mut [Complex64], parties: usize, party: usize, m: &[[Complex64; 2]; 2]) {
    let mask = 1 << (parties - 1 - party);
    for i0 in 0..v.len() {
        if i0 & mask != 0 {
            continue;
        }
        let i1 = i0 | mask;
        let (a, b) = (v[i0], v[i1]);
        v[i0] = m[0][0] * a + m[0][1] * b;
        v[i1] = m[1][0] * a + m[1][1] * b;
    }
}

/// Quantum chained-optimal behavior for `m` inputs.
pub fn chained_behavior(m: usize) -> Result<Behavior<f64>> {
    behavior_from_config(&chained_optimal_config(m)?, &ScenarioSpec::bipartite(m, 2)?)
}

/// GHZ behavior in the tripartite scenario used by the Mermin functional.
pub fn ghz_behavior() -> Result<Behavior<f64>> {
    behavior_from_config(
        &ghz_mermin_config(),
        &ScenarioSpec::tripartite(3, 2, MERMIN_FRIEND_INPUTS)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{correlator, Term};
    use crate::inequalities::{chained, mermin};

    /// Dense Kronecker-product evaluation of `⟨ψ|O_1 ⊗ … ⊗ O_n|ψ⟩`.
    fn brute_force_expectation(state: &[Complex64], ops: &[[[Complex64; 2]; 2]]) -> f64 {
        let dim = state.len();
        let n = ops.len();
        let entry = |i: usize, j: usize| {
            (0..n).fold(Complex64::new(1.0, 0.0), |acc, p| {
                let shift = n - 1 - p;
                acc * ops[p][(i >> shift) & 1][(j >> shift) & 1]
            })
        };
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..dim {
            for j in 0..dim {
                total += state[i].conj() * entry(i, j) * state[j];
            }
        }
        total.re
    }

    #[test]
    fn alice_settings_at_two_inputs() {
        let c = chained_optimal_config(2).unwrap();
        let a0 = c.observable(0, 0);
        let a1 = c.observable(0, 1);
        assert!((a0.r).abs() < 1e-15 && (a0.s - 1.0).abs() < 1e-15);
        assert!((a1.r - 1.0).abs() < 1e-15 && a1.s.abs() < 1e-15);
    }

    #[test]
    fn chained_values_match_closed_form() {
        for m in 2..=10 {
            let b = chained_behavior(m).unwrap();
            let v = chained(m).unwrap().evaluate(&b).unwrap();
            let expected = 2.0 * m as f64 * (PI / (2.0 * m as f64)).cos();
            assert!((v - expected).abs() < 1e-9, "m = {m}: {v} vs {expected}");
            assert!(b.check_no_signalling(1e-12).is_no_signalling);
        }
        let v6 = chained(6)
            .unwrap()
            .evaluate(&chained_behavior(6).unwrap())
            .unwrap();
        assert!((v6 - 11.591).abs() < 1e-3);
    }

    #[test]
    fn printed_bob_angles_miss_the_maximum() {
        let alice = [0.0, PI / 2.0];
        let bob = [PI / 2.0, 3.0 * PI / 2.0];
        let sc = ScenarioSpec::bipartite(2, 2).unwrap();
        let b = behavior_from_config(&chained_config(&alice, &bob).unwrap(), &sc).unwrap();
        assert!(chained(2).unwrap().evaluate(&b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn correlators_are_cosines_of_angle_differences() {
        let m = 5;
        let c = chained_optimal_config(m).unwrap();
        let b = chained_behavior(m).unwrap();
        for x in 0..m {
            for y in 0..m {
                let ta = (x as f64) * PI / m as f64;
                let tb = (2 * y + 1) as f64 * PI / (2.0 * m as f64);
                let e = correlator(&b, &Term::full(&[x, y]));
                assert!((e - (ta - tb).cos()).abs() < 1e-12);
                let brute = brute_force_expectation(
                    c.state(),
                    &[c.observable(0, x).matrix(), c.observable(1, y).matrix()],
                );
                assert!((e - brute).abs() < 1e-12);
            }
        }
        let e00 = correlator(&chained_behavior(2).unwrap(), &Term::full(&[0, 0]));
        assert!((e00 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn identical_z_measurements_are_perfectly_correlated() {
        let c = QuantumConfig::new(
            ghz_state(2),
            vec![vec![Observable::z()], vec![Observable::z()]],
        )
        .unwrap();
        let sc = ScenarioSpec::new(2, 1, 2, vec![0, 0]).unwrap();
        let b = behavior_from_config(&c, &sc).unwrap();
        for (v, e) in b.table().iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert!((v - e).abs() < 1e-15);
        }
    }

    #[test]
    fn ghz_reaches_mermin_maximum() {
        let c = ghz_mermin_config();
        let b = ghz_behavior().unwrap();
        let v = mermin().unwrap().evaluate(&b).unwrap();
        assert!((v - 4.0).abs() < 1e-9);
        assert!(b.check_no_signalling(1e-12).is_no_signalling);
        let xxx = correlator(&b, &Term::full(&[2, 2, 1]));
        assert!((xxx - 1.0).abs() < 1e-12);
        let ops = [
            c.observable(0, 2).matrix(),
            c.observable(1, 2).matrix(),
            c.observable(2, 1).matrix(),
        ];
        assert!((brute_force_expectation(c.state(), &ops) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_observables_and_states() {
        assert!(Observable::new(1.0, 1.0, 0.0).is_err());
        assert!(Observable::in_xz_plane(f64::NAN).is_err());
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert!(Observable::from_matrix([[zero, i], [i, zero]]).is_err());
        assert_eq!(
            Observable::from_matrix([[zero, -i], [i, zero]]).unwrap(),
            Observable::y()
        );
        assert!(Observable::from_matrix([[one, zero], [zero, one]]).is_err());
        assert!(
            QuantumConfig::new(vec![one, one, zero, zero], vec![vec![Observable::z()]; 2]).is_err()
        );
        assert!(QuantumConfig::new(ghz_state(2), vec![vec![Observable::z()]; 3]).is_err());
    }

    #[test]
    fn json_round_trip() {
        for c in [chained_optimal_config(3).unwrap(), ghz_mermin_config()] {
            let back = QuantumConfig::from_json(&c.to_json()).unwrap();
            assert_eq!(back, c);
        }
        assert!(ghz_mermin_config().to_json()["observables"]["A"][0]
            .get("t")
            .is_some());
    }

    #[test]
    fn no_signalling_rationalization_is_exact() {
        let b = chained_behavior(3).unwrap();
        let exact = b.rationalize_no_signalling(1 << 30).unwrap();
        assert!(exact.check_no_signalling(0.0).is_no_signalling);
        for (a, e) in b.table().iter().zip(exact.table()) {
            assert!((a - e.to_f64()).abs() < 1e-8);
        }
    }
}
