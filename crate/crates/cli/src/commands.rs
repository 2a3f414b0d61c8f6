use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use nonabsolute::constraints::{max_over_ns_with, max_over_rlf_with};
use nonabsolute::inequalities::{chained, chsh_tilde, lf_catalog_m3, mermin, resolve};
use nonabsolute::measures::{
    af_lower_bound, non_absoluteness_coefficient, non_absoluteness_fraction,
};
use nonabsolute::quantum::{behavior_from_config, chained_optimal_config, ghz_mermin_config};
use nonabsolute::{
    AnyBehavior, Behavior, Error, InequalityExpr, Mode, Rational, Result, Scalar, ScenarioSpec,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::record::{emit, tolerance, RunRecord};
use crate::{BoundArgs, CheckArgs, Convention, GenArgs, MeasuresArgs, SweepArgs};

/// Largest denominator used when a float behavior is turned exact.
const RATIONALIZE_DEN: i64 = 1 << 39;

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn convention_name(c: Convention) -> &'static str {
    match c {
        Convention::Last => "last",
        Convention::First => "first",
    }
}

fn with_convention(sc: &ScenarioSpec, c: Convention) -> Result<ScenarioSpec> {
    sc.clone()
        .with_friend_inputs(vec![c.friend_input(sc.m); sc.parties])
}

fn scalar_text<S: Scalar>(v: &S) -> String {
    match v.to_json() {
        Value::String(s) => s,
        other => other.to_string(),
    }
}

fn convert(b: AnyBehavior, mode: Mode) -> Result<AnyBehavior> {
    Ok(match (b, mode) {
        (AnyBehavior::Rational(r), Mode::Float) => AnyBehavior::Float(r.to_float()),
        (AnyBehavior::Float(f), Mode::Rational) => {
            AnyBehavior::Rational(f.rationalize_no_signalling(RATIONALIZE_DEN)?)
        }
        (b, _) => b,
    })
}

fn comparison_tolerance<S: Scalar>() -> f64 {
    match S::MODE {
        Mode::Rational => 0.0,
        Mode::Float => 1e-6,
    }
}

pub fn bound(a: &BoundArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let epsilon: Rational = a.epsilon.parse()?;
    let ineq = match (&a.inequality, &a.file) {
        (Some(label), _) => resolve(label, a.m)?,
        (None, Some(path)) => InequalityExpr::from_json(&read_json(path)?)?,
        (None, None) => return Err(Error::Schema("give an inequality label or --file".into())),
    };
    let sc = with_convention(&ineq.scenario, a.convention)?;
    let mode = Mode::from(a.mode);
    let results = match mode {
        Mode::Rational => bound_results::<Rational>(&ineq, &sc, &epsilon)?,
        Mode::Float => bound_results::<f64>(&ineq, &sc, &epsilon)?,
    };
    let mut record = RunRecord::new("bound", mode, started);
    record.scenario = Some(sc);
    record.convention = Some(convention_name(a.convention));
    record.parameters = json!({"inequality": ineq.label, "epsilon": epsilon.to_string()});
    record.results = results;
    record.print();
    Ok(ExitCode::SUCCESS)
}

fn bound_results<S: Scalar>(
    ineq: &InequalityExpr,
    sc: &ScenarioSpec,
    epsilon: &Rational,
) -> Result<Value> {
    let relaxed = max_over_rlf_with::<S>(ineq, sc, epsilon)?;
    let ns = max_over_ns_with::<S>(ineq, sc)?;
    Ok(json!({
        "bound": relaxed.value.to_json(),
        "ns_bound": ns.to_json(),
        "catalog_prediction": ineq.known_bounds.relaxed(epsilon).map(|v| v.to_string()),
    }))
}

/// Functionals whose bounds are reported alongside the measures.
fn reference_inequalities(sc: &ScenarioSpec) -> Result<Vec<InequalityExpr>> {
    let mut out = Vec::new();
    match (sc.parties, sc.m) {
        (2, m) if m >= 2 => {
            out.push(chained(m)?);
            for j in 0..m.saturating_sub(2) {
                out.push(chsh_tilde(m, j)?);
            }
            if m == 3 {
                out.extend(lf_catalog_m3()?);
            }
        }
        (3, 3) => out.push(mermin()?),
        _ => {}
    }
    Ok(out)
}

pub fn measures(a: &MeasuresArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let (behavior, default_mode) = if let Some(path) = &a.behavior {
        let b = AnyBehavior::from_json(&read_json(path)?)?;
        let mode = b.mode();
        (b, mode)
    } else if let Some(m) = a.quantum_chained {
        let sc = with_convention(&ScenarioSpec::bipartite(m, 2)?, a.convention)?;
        (
            AnyBehavior::Float(behavior_from_config(&chained_optimal_config(m)?, &sc)?),
            Mode::Float,
        )
    } else {
        let sc = with_convention(&ScenarioSpec::tripartite(3, 2, [0, 0, 0])?, a.convention)?;
        (
            AnyBehavior::Float(behavior_from_config(&ghz_mermin_config(), &sc)?),
            Mode::Float,
        )
    };
    let mode = a.mode.map(Mode::from).unwrap_or(default_mode);
    let behavior = convert(behavior, mode)?;
    let results = match &behavior {
        AnyBehavior::Rational(b) => measure_results(b)?,
        AnyBehavior::Float(b) => measure_results(b)?,
    };
    let mut record = RunRecord::new("measures", mode, started);
    record.scenario = Some(behavior.scenario().clone());
    if a.behavior.is_none() {
        record.convention = Some(convention_name(a.convention));
    }
    record.parameters = json!({
        "source": a.behavior.as_ref().map(|p| p.display().to_string()),
        "quantum_chained": a.quantum_chained,
        "ghz": a.ghz,
    });
    record.results = results;
    record.print();
    Ok(ExitCode::SUCCESS)
}

fn measure_results<S: Scalar>(b: &Behavior<S>) -> Result<Value> {
    let af = non_absoluteness_fraction(b)?;
    let ac = non_absoluteness_coefficient(b)?;
    let tol = comparison_tolerance::<S>();
    if ac.value.cmp_tol(&af.value, tol).is_gt() {
        return Err(Error::Solver(format!(
            "A_c = {} exceeds A_f = {}",
            ac.value, af.value
        )));
    }
    let mut rows = Vec::new();
    for ineq in reference_inequalities(b.scenario())? {
        let value = ineq.evaluate(b)?;
        let lf = max_over_rlf_with::<S>(&ineq, b.scenario(), &Rational::integer(0))?.value;
        let ns = max_over_ns_with::<S>(&ineq, b.scenario())?;
        // Values a hair above the NS maximum are float noise.
        let capped = if value.cmp_tol(&ns, 0.0).is_gt() {
            ns.clone()
        } else {
            value.clone()
        };
        let lower = af_lower_bound(&capped, &lf, &ns)?;
        if lower.cmp_tol(&af.value, tol).is_gt() {
            return Err(Error::Solver(format!(
                "{}: lower bound {lower} exceeds A_f = {}",
                ineq.label, af.value
            )));
        }
        rows.push(json!({
            "inequality": ineq.label,
            "value": value.to_json(),
            "lf_bound": lf.to_json(),
            "ns_bound": ns.to_json(),
            "af_lower_bound": lower.to_json(),
        }));
    }
    Ok(json!({
        "a_f": af.to_json(),
        "a_c": ac.to_json(),
        "inequalities": rows,
    }))
}

#[derive(Debug, Serialize)]
struct SweepRow {
    m: usize,
    quantum_value: String,
    lf_bound: String,
    ns_bound: String,
    a_f: String,
    a_c: String,
    af_lower_bound: String,
    friend_input: usize,
}

fn parse_range(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("`{text}` is not a range like 2..10"));
    let (lo, hi) = text.split_once("..").ok_or_else(bad)?;
    let hi = hi.strip_prefix('=').unwrap_or(hi);
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo < 2 || hi < lo {
        return Err(Error::OutOfRange(format!(
            "range {text} must be non-empty and start at 2 or more"
        )));
    }
    Ok((lo, hi))
}

pub fn sweep(a: &SweepArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let (lo, hi) = parse_range(&a.m_range)?;
    let mode = Mode::from(a.mode);
    let rows = (lo..=hi)
        .into_par_iter()
        .map(|m| match mode {
            Mode::Rational => sweep_row::<Rational>(m, a.convention),
            Mode::Float => sweep_row::<f64>(m, a.convention),
        })
        .collect::<Result<Vec<_>>>()?;

    let tol = match mode {
        Mode::Rational => comparison_tolerance::<Rational>(),
        Mode::Float => comparison_tolerance::<f64>(),
    };
    let column = |f: fn(&SweepRow) -> &String| {
        rows.iter()
            .map(f)
            .map(|s| parse_number(s))
            .collect::<Vec<f64>>()
    };
    let non_decreasing = |v: Vec<f64>| v.windows(2).all(|w| w[1] >= w[0] - tol);
    let monotone = non_decreasing(column(|r| &r.a_f)) && non_decreasing(column(|r| &r.a_c));
    if !monotone {
        eprintln!("warning: A_f or A_c decreases somewhere in the sweep");
    }

    let mut table = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut table);
        for r in &rows {
            w.serialize(r).map_err(|e| Error::Schema(e.to_string()))?;
        }
        w.flush()?;
    }
    if let Some(path) = &a.out {
        fs::write(path, &table)?;
    }
    if a.csv {
        emit(&String::from_utf8_lossy(&table));
        return Ok(ExitCode::SUCCESS);
    }
    let mut record = RunRecord::new("sweep", mode, started);
    record.convention = Some(convention_name(a.convention));
    record.parameters = json!({"family": "chained", "m_range": [lo, hi], "out": a.out.as_ref().map(|p| p.display().to_string())});
    record.results = json!({"rows": rows, "monotone": monotone});
    record.print();
    Ok(ExitCode::SUCCESS)
}

fn parse_number(s: &str) -> f64 {
    s.parse::<Rational>()
        .map(|r| r.to_f64())
        .unwrap_or(f64::NAN)
}

fn sweep_row<S: Scalar>(m: usize, convention: Convention) -> Result<SweepRow> {
    let sc = with_convention(&ScenarioSpec::bipartite(m, 2)?, convention)?;
    let float = behavior_from_config(&chained_optimal_config(m)?, &sc)?;
    let behavior = match convert(AnyBehavior::Float(float), S::MODE)? {
        AnyBehavior::Rational(b) => Behavior::<S>::from_json(&b.to_json()),
        AnyBehavior::Float(b) => Behavior::<S>::from_json(&b.to_json()),
    }?;
    let ineq = chained(m)?;
    let value = ineq.evaluate(&behavior)?;
    let lf = max_over_rlf_with::<S>(&ineq, &sc, &Rational::integer(0))?.value;
    let ns = max_over_ns_with::<S>(&ineq, &sc)?;
    let af = non_absoluteness_fraction(&behavior)?.value;
    let ac = non_absoluteness_coefficient(&behavior)?.value;
    let lower = af_lower_bound(&value, &lf, &ns)?;
    Ok(SweepRow {
        m,
        quantum_value: scalar_text(&value),
        lf_bound: scalar_text(&lf),
        ns_bound: scalar_text(&ns),
        a_f: scalar_text(&af),
        a_c: scalar_text(&ac),
        af_lower_bound: scalar_text(&lower),
        friend_input: convention.friend_input(m),
    })
}

pub fn gen(a: &GenArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let s = &a.source;
    let (behavior, default_mode) = if let Some(m) = s.quantum_chained {
        let sc = with_convention(&ScenarioSpec::bipartite(m, 2)?, a.convention)?;
        (
            AnyBehavior::Float(behavior_from_config(&chained_optimal_config(m)?, &sc)?),
            Mode::Float,
        )
    } else if s.ghz {
        let sc = with_convention(&ScenarioSpec::tripartite(3, 2, [0, 0, 0])?, a.convention)?;
        (
            AnyBehavior::Float(behavior_from_config(&ghz_mermin_config(), &sc)?),
            Mode::Float,
        )
    } else {
        let sc = with_convention(&ScenarioSpec::bipartite(a.m, 2)?, a.convention)?;
        let b = if s.pr_box {
            Behavior::pr_box(sc)?
        } else {
            Behavior::uniform(sc)?
        };
        (AnyBehavior::Rational(b), Mode::Rational)
    };
    let mode = a.mode.map(Mode::from).unwrap_or(default_mode);
    let behavior = convert(behavior, mode)?;
    let text = serde_json::to_string_pretty(&behavior.to_json())?;
    match &a.out {
        None => emit(&format!("{text}\n")),
        Some(path) => {
            fs::write(path, format!("{text}\n"))?;
            let mut record = RunRecord::new("gen", mode, started);
            record.scenario = Some(behavior.scenario().clone());
            record.convention = Some(convention_name(a.convention));
            record.parameters = json!({"out": path.display().to_string()});
            record.results = json!({"written": path.display().to_string()});
            record.print();
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn check(a: &CheckArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let behavior = AnyBehavior::from_json(&read_json(&a.behavior)?)?;
    let mode = behavior.mode();
    let tol = a.tolerance.unwrap_or(tolerance(mode));
    let (ok, report) = match &behavior {
        AnyBehavior::Rational(b) => ns_report(b, tol),
        AnyBehavior::Float(b) => ns_report(b, tol),
    };
    let mut record = RunRecord::new("check", mode, started);
    record.tolerance = tol;
    record.scenario = Some(behavior.scenario().clone());
    record.parameters = json!({"behavior": a.behavior.display().to_string()});
    record.results = report;
    record.print();
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn ns_report<S: Scalar>(b: &Behavior<S>, tol: f64) -> (bool, Value) {
    let r = b.check_no_signalling(tol);
    // Loading already rejected unnormalized or negative tables.
    let report = json!({
        "normalized": true,
        "non_negative": true,
        "no_signalling": r.is_no_signalling,
        "max_violation": r.max_violation.to_json(),
        "per_party": r.per_party.iter().map(Scalar::to_json).collect::<Vec<_>>(),
    });
    (r.is_no_signalling, report)
}
