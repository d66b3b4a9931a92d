//! Checks behind the acceptance report. Each returns whether it held and
//! a one-line summary of what was measured.

use std::time::Instant;

use seriesjudge::engine::{analyze, default_corpus, run_corpus, Conclusion, EngineConfig};
use seriesjudge::expr::{central_difference, Expr, PsiFunction};
use seriesjudge::extrange::ExtReal;
use seriesjudge::lambda::{chain, lambda_diff};
use seriesjudge::ratio_root::{precondition_limit, remark_limit, RemarkForm, Tolerances};
use seriesjudge::stats::{Family, PointData, SeriesSpec, StatError};

use super::{ext, limit_fixtures, limit_points, log_uniform_points, with_aux, DIFF_FIXTURES, P, REMARK_CASES};

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

/// Running maximum of an error measure, with the first offenders kept.
#[derive(Default)]
struct Worst {
    value: f64,
    count: usize,
    failures: Vec<String>,
}

impl Worst {
    fn record(&mut self, err: f64, tol: f64, what: impl FnOnce() -> String) {
        self.count += 1;
        if err.is_nan() || err > self.value {
            self.value = if err.is_nan() { f64::INFINITY } else { err };
        }
        if (err.is_nan() || err > tol) && self.failures.len() < 3 {
            self.failures.push(format!("{} ({err:.2e})", what()));
        }
    }

    fn fail(&mut self, what: String) {
        self.count += 1;
        self.value = f64::INFINITY;
        if self.failures.len() < 3 {
            self.failures.push(what);
        }
    }

    fn outcome(self, tol: f64, label: &str) -> Outcome {
        let mut detail = format!("{} {label}, worst {:.2e} (tolerance {tol:e})", self.count, self.value);
        if !self.failures.is_empty() {
            detail.push_str(&format!("; e.g. {}", self.failures.join("; ")));
        }
        Outcome { pass: self.failures.is_empty() && self.count > 0, detail }
    }
}

fn corpus_specs() -> Vec<SeriesSpec> {
    default_corpus().into_iter().map(|e| e.spec).collect()
}

pub fn corpus_soundness() -> Outcome {
    let entries = default_corpus();
    let start = Instant::now();
    let report = run_corpus(&entries, &EngineConfig::default());
    let secs = start.elapsed().as_secs_f64();
    let fraction = report.decided_fraction();
    let pass = entries.len() >= 20 && report.contradictions.is_empty() && fraction >= 0.85 && secs < 60.0;
    let mut detail = format!(
        "{} entries, {} decided ({:.0}%), {} contradictions, {secs:.1} s",
        entries.len(),
        report.decided,
        100.0 * fraction,
        report.contradictions.len()
    );
    if !report.contradictions.is_empty() {
        detail.push_str(&format!(": {}", report.contradictions.join(", ")));
    }
    Outcome { pass, detail }
}

/// `1/(λ_{k+1}^{1+δ} ∏_{i=0}^{k} λ_i)` as an expression.
pub fn boundary_term(k: usize, delta: f64) -> String {
    let p = 1.0 + delta;
    match k {
        0 => format!("1/n^{p}"),
        1 => format!("1/(n*log(n)^{p})"),
        _ => {
            let mut factors = vec!["n".to_string()];
            for i in 2..=k {
                factors.push(format!("L({i}, n)"));
            }
            factors.push(format!("L({}, n)^{p}", k + 1));
            format!("1/({})", factors.join("*"))
        }
    }
}

pub fn boundary_statistics() -> Outcome {
    let top = ExtReal::pow2(64, P).unwrap();
    let mut worst = Worst::default();
    for k in 0..=2 {
        for delta in [-0.5, 0.5] {
            let term = boundary_term(k, delta);
            let spec = SeriesSpec::parse(&term, &term).unwrap();
            let data = match PointData::compute(&spec, None, &top, k, P) {
                Ok(d) => d,
                Err(e) => {
                    worst.fail(format!("{term}: {e}"));
                    continue;
                }
            };
            for family in [Family::L, Family::S, Family::Omega] {
                match data.statistic(family, k, false) {
                    Ok(v) => {
                        let err = (v.to_f64() - (1.0 + delta)).abs();
                        worst.record(err, 0.05, || format!("{} k={k} on {term} = {}", family.name(), v.to_f64()));
                    }
                    Err(e) => worst.fail(format!("{} k={k} on {term}: {e}", family.name())),
                }
            }
        }
    }
    worst.outcome(0.05, "statistics at n = 2^64, absolute error")
}

/// `|Ω - S|`, measured against `max(1, |S|)`.
pub fn omega_s_equivalence() -> Outcome {
    let n = ext(1e6);
    let mut worst = Worst::default();
    for spec in corpus_specs() {
        let data = PointData::compute(&spec, None, &n, 1, P).unwrap();
        for k in 0..=1 {
            let (o, s) = (data.statistic(Family::Omega, k, false), data.statistic(Family::S, k, false));
            match (o, s) {
                (Ok(o), Ok(s)) => {
                    let scale = s.abs().to_f64().max(1.0);
                    let err = o.sub(&s).unwrap().abs().to_f64() / scale;
                    worst.record(err, 1e-3, || format!("{} k={k}", spec.name));
                }
                (o, s) => worst.fail(format!("{} k={k}: {:?} / {:?}", spec.name, o.err(), s.err())),
            }
        }
    }
    worst.outcome(1e-3, "entry/depth pairs at n = 10^6, |Omega - S| / max(1, |S|)")
}

/// A term together with an evaluation of `a_n` that does not go through
/// the expression evaluator.
struct ClassicalCase {
    term: &'static str,
    value: fn(&ExtReal) -> ExtReal,
}

const WIDE: usize = 512;

fn classical_cases() -> Vec<ClassicalCase> {
    vec![
        ClassicalCase { term: "1/n^2", value: |n| n.powi(-2).unwrap() },
        ClassicalCase { term: "1/(n*log(n)^2)", value: |n| n.mul(&n.ln().unwrap().powi(2).unwrap()).unwrap().powi(-1).unwrap() },
        ClassicalCase { term: "2^(-n)", value: |n| ExtReal::from_i64(2, WIDE).pow(&n.neg()).unwrap() },
        ClassicalCase { term: "n/(n^2 + 1)", value: |n| n.div(&n.powi(2).unwrap().add(&ExtReal::one(WIDE)).unwrap()).unwrap() },
        ClassicalCase { term: "log(n)/n^2", value: |n| n.ln().unwrap().div(&n.powi(2).unwrap()).unwrap() },
        ClassicalCase { term: "exp(-lgamma(n + 1))", value: |n| n.add(&ExtReal::one(WIDE)).unwrap().lgamma().unwrap().neg().exp().unwrap() },
        ClassicalCase { term: "3^n*exp(lgamma(n + 1))/n^n", value: |n| {
            let ln = ExtReal::from_i64(3, WIDE).ln().unwrap().mul(n).unwrap()
                .add(&n.add(&ExtReal::one(WIDE)).unwrap().lgamma().unwrap()).unwrap()
                .sub(&n.mul(&n.ln().unwrap()).unwrap()).unwrap();
            ln.exp().unwrap()
        } },
    ]
}

/// Classical statistics at `k = 0` by their textbook formulas, 512 bits:
/// logarithmic, both Schlömilch forms, Raabe, and Jamet.
fn classical_values(a: fn(&ExtReal) -> ExtReal, n: &ExtReal) -> [(Family, ExtReal); 6] {
    let one = ExtReal::one(WIDE);
    let m = n.add(&one).unwrap();
    let (an, am) = (a(n), a(&m));
    let ln_n = n.ln().unwrap();
    let ratio_ln = an.div(&am).unwrap().ln().unwrap();
    let logarithmic = an.ln().unwrap().neg().div(&ln_n).unwrap();
    let schlomilch = n.mul(&ratio_ln).unwrap();
    let schlomilch_diff = ratio_ln.div(&m.div(n).unwrap().ln().unwrap()).unwrap();
    let raabe = n.mul(&one.sub(&am.div(&an).unwrap()).unwrap()).unwrap();
    let root = an.ln().unwrap().div(n).unwrap().exp().unwrap();
    let jamet = one.sub(&root).unwrap().mul(n).unwrap().div(&ln_n).unwrap();
    [
        (Family::L, logarithmic),
        (Family::Omega, schlomilch),
        (Family::S, schlomilch_diff),
        (Family::Ptilde, raabe.clone()),
        (Family::P, raabe),
        (Family::J, jamet),
    ]
}

pub fn classical_reductions() -> Outcome {
    let mut worst = Worst::default();
    for (i, case) in classical_cases().into_iter().enumerate() {
        let spec = SeriesSpec::parse(case.term, case.term).unwrap();
        let aux = spec.resolved();
        for x in log_uniform_points(40 + i as u8, 10, 20.0, 1e6) {
            let n = ExtReal::from_f64(x.floor(), WIDE).unwrap();
            let data = PointData::compute(&spec, Some(&aux), &n.with_precision(P), 0, P).unwrap();
            for (family, want) in classical_values(case.value, &n) {
                let got = data.statistic(family, 0, false).unwrap();
                let err = got.relative_diff(&want);
                worst.record(err, 1e-12, || format!("{} on {} at n = {}", family.name(), case.term, x.floor()));
            }
        }
    }
    worst.outcome(1e-12, "statistic values (6 families, 7 terms, 10 points), relative")
}

fn probe_points() -> Vec<ExtReal> {
    ["16", "1000", "1e6", "1e12", "1e18"].iter().map(|t| ExtReal::parse_with_precision(t, P).unwrap()).collect()
}

pub fn psi_identity() -> Outcome {
    let mut worst = Worst::default();
    for mut spec in corpus_specs() {
        spec.psi = Some(PsiFunction::identity());
        let aux = spec.resolved();
        for n in probe_points() {
            let data = PointData::compute(&spec, Some(&aux), &n, 2, P).unwrap();
            for family in Family::ORDER {
                for k in 0..=2 {
                    match (data.statistic(family, k, false), data.statistic(family, k, true)) {
                        (Ok(a), Ok(b)) => {
                            worst.record(a.relative_diff(&b), 1e-12, || format!("{} k={k} {} at {n}", family.name(), spec.name))
                        }
                        (Err(StatError::BelowDomain { .. }), Err(StatError::BelowDomain { .. })) => {}
                        (a, b) => worst.fail(format!("{} k={k} {} at {n}: {:?} vs {:?}", family.name(), spec.name, a.err(), b.err())),
                    }
                }
            }
        }
    }
    worst.outcome(1e-12, "plain/psi pairs over the corpus, k <= 2, relative")
}

pub fn symbolic_differentiation() -> Outcome {
    let mut worst = Worst::default();
    for (i, text) in DIFF_FIXTURES.iter().enumerate() {
        let e = Expr::parse(text).unwrap();
        let d = match e.differentiate() {
            Ok(d) => d,
            Err(err) => {
                worst.fail(format!("{text}: {err}"));
                continue;
            }
        };
        for x in log_uniform_points(i as u8, 10, 20.0, 1e6) {
            let n = ext(x);
            match (d.eval(&n, P), central_difference(&e, &n)) {
                (Ok(sym), Ok(num)) => worst.record(sym.relative_diff(&num), 1e-6, || format!("{text} at {x:.3}")),
                (a, b) => worst.fail(format!("{text} at {x:.3}: {:?} / {:?}", a.err(), b.err())),
            }
        }
    }
    worst.outcome(1e-6, "derivative values (20 fixtures x 10 points), relative")
}

pub fn limit_classifier() -> Outcome {
    let fixtures = limit_fixtures();
    let failures: Vec<String> = fixtures.iter().filter_map(|f| f.check().err()).collect();
    let tol = Tolerances::default();
    let points = limit_points();
    let (mut compared, mut disagreements) = (0, Vec::new());
    for aux in REMARK_CASES {
        let spec = with_aux("1/n^2", aux);
        for k in 0..=2 {
            for form in [RemarkForm::Modified, RemarkForm::Raabe] {
                let primary = precondition_limit(&spec, form.replaces(), k, false, &points, P, &tol);
                let alt = remark_limit(&spec, k, form, false, &points, P, &tol);
                if let (Ok(a), Ok(b)) = (primary, alt) {
                    compared += 1;
                    if !a.same_kind(&b) {
                        disagreements.push(format!("{form:?} k={k} {aux:?}: {} vs {}", a.kind, b.kind));
                    }
                }
            }
        }
    }
    let pass = failures.is_empty() && disagreements.is_empty() && compared > 0;
    let mut detail = format!(
        "{}/{} fixtures classified correctly; alternative forms agree on {}/{compared}",
        fixtures.len() - failures.len(),
        fixtures.len(),
        compared - disagreements.len()
    );
    for f in failures.iter().chain(&disagreements).take(3) {
        detail.push_str(&format!("; {f}"));
    }
    Outcome { pass, detail }
}

/// Absolute difference below which two precisions count as agreeing.
const ZERO_FLOOR: f64 = 1e-24;

pub fn precision_agreement() -> Outcome {
    let mut worst = Worst::default();
    for spec in corpus_specs() {
        let aux = spec.resolved();
        for n in probe_points() {
            let lo = PointData::compute(&spec, Some(&aux), &n, 2, 128);
            let hi = PointData::compute(&spec, Some(&aux), &n.with_precision(256), 2, 256);
            let (lo, hi) = match (lo, hi) {
                (Ok(a), Ok(b)) => (a, b),
                (a, b) => {
                    worst.fail(format!("{} at {n}: {:?} / {:?}", spec.name, a.err(), b.err()));
                    continue;
                }
            };
            for family in Family::ORDER {
                for k in 0..=2 {
                    match (lo.statistic(family, k, false), hi.statistic(family, k, false)) {
                        (Ok(a), Ok(b)) => {
                            // Statistics that vanish identically leave only rounding noise.
                            let gap = a.with_precision(256).sub(&b).unwrap().abs().to_f64();
                            let err = if gap <= ZERO_FLOOR { 0.0 } else { a.relative_diff(&b) };
                            worst.record(err, 1e-12, || format!("{} k={k} {} at {n}", family.name(), spec.name))
                        }
                        (Err(StatError::BelowDomain { .. }), Err(StatError::BelowDomain { .. })) => {}
                        (a, b) => worst.fail(format!("{} k={k} {} at {n}: {:?} / {:?}", family.name(), spec.name, a.err(), b.err())),
                    }
                }
            }
        }
    }
    worst.outcome(1e-12, "statistics at 128 vs 256 bits over the corpus, relative (absolute below 1e-24)")
}

pub fn lambda_difference_stability() -> Outcome {
    let mut worst = Worst::default();
    for k in 1..=4 {
        for x in log_uniform_points(60 + k as u8, 25, 20.0, 1e12) {
            let n = ExtReal::from_f64(x.floor(), P).unwrap();
            let m = n.add(&ExtReal::one(P)).unwrap();
            let fast = lambda_diff(k, &n, &m, P).unwrap();
            let at = |y: &ExtReal| chain(&y.with_precision(512), k, 512).unwrap().values[k].clone();
            let naive = at(&m).sub(&at(&n)).unwrap();
            worst.record(fast.relative_diff(&naive), 1e-20, || format!("k={k} at n = {}", x.floor()));
        }
    }
    worst.outcome(1e-20, "neighbour differences vs naive 512-bit subtraction (n <= 1e12), relative")
}

pub fn determinism_and_density() -> Outcome {
    let entries = default_corpus();
    let base = EngineConfig::default();
    let dense = EngineConfig { density: 2, ..EngineConfig::default() };
    let (mut mismatched, mut flipped) = (Vec::new(), Vec::new());
    let (mut upgraded, mut lost) = (0, 0);
    for entry in &entries {
        let first = analyze(&entry.spec, &base);
        let second = analyze(&entry.spec, &base);
        let same = match (&first, &second) {
            (Ok(a), Ok(b)) => a.to_json() == b.to_json(),
            (Err(a), Err(b)) => a.to_string() == b.to_string(),
            _ => false,
        };
        if !same {
            mismatched.push(entry.spec.name.clone());
        }
        let coarse = first.map(|v| v.conclusion).unwrap_or(Conclusion::Inconclusive);
        let fine = analyze(&entry.spec, &dense).map(|v| v.conclusion).unwrap_or(Conclusion::Inconclusive);
        match (coarse, fine) {
            (a, b) if a == b => {}
            (Conclusion::Inconclusive, _) => upgraded += 1,
            (_, Conclusion::Inconclusive) => lost += 1,
            _ => flipped.push(entry.spec.name.clone()),
        }
    }
    let pass = mismatched.is_empty() && flipped.is_empty();
    let mut detail = format!(
        "{} entries: {} non-identical reruns, {} flips at double density ({upgraded} upgraded, {lost} lost)",
        entries.len(),
        mismatched.len(),
        flipped.len()
    );
    for name in mismatched.iter().chain(&flipped).take(3) {
        detail.push_str(&format!("; {name}"));
    }
    Outcome { pass, detail }
}
