#![allow(dead_code)]

pub mod criteria;

use proptest::test_runner::{RngAlgorithm, TestRng};
use proptest::prelude::Rng;
use seriesjudge::engine::ProbeGrid;
use seriesjudge::expr::{Expr, PsiFunction};
use seriesjudge::extrange::ExtReal;
use seriesjudge::ratio_root::{
    classify_limit, precondition_limit, remark_limit, LimitEstimate, LimitKind, Precondition, RatioRootError,
    RemarkForm, Tolerances,
};
use seriesjudge::stats::{SeriesSpec, StatError};

pub const P: usize = 128;

/// Expressions whose symbolic derivatives are checked numerically.
pub const DIFF_FIXTURES: [&str; 20] = [
    "n^3",
    "1/n^2",
    "log(n)",
    "n*log(n)",
    "log(log(n))",
    "L(3, n)",
    "exp(-n/1000)",
    "sqrt(n)",
    "n^1.5/log(n)",
    "exp(-sqrt(n))",
    "exp(sqrt(log(n)))",
    "1/(n*log(n)^2)",
    "2^n",
    "(n^2 + 1)/(n^3 + n)",
    "log(n)^3/n^1.2",
    "n^n",
    "3^n/n^n",
    "n*L(2, n)^0.5",
    "n/(n^2 + 1)",
    "(log(n) + n)^2/sqrt(n + 3)",
];

/// `count` reproducible points, log-uniform in `[lo, hi]`.
pub fn log_uniform_points(seed: u8, count: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]);
    (0..count)
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            (lo.ln() + u * (hi.ln() - lo.ln())).exp()
        })
        .collect()
}

pub fn ext(v: f64) -> ExtReal {
    ExtReal::from_f64(v, P).unwrap()
}

pub fn spec(term: &str) -> SeriesSpec {
    SeriesSpec::parse(term, term).unwrap()
}

pub fn with_aux(term: &str, aux: &[(&str, &str)]) -> SeriesSpec {
    let mut s = spec(term);
    for (name, text) in aux {
        let e = Some(Expr::parse(text).unwrap());
        match *name {
            "f" => s.f = e,
            "g" => s.g = e,
            "phi" => s.phi = e,
            "zeta" => s.zeta = e,
            "psi" => s.psi = Some(PsiFunction::new(Expr::parse(text).unwrap(), ExtReal::one(P)).unwrap()),
            other => panic!("unknown auxiliary {other}"),
        }
    }
    s
}

pub fn limit_points() -> Vec<ExtReal> {
    ProbeGrid::new(1, false, P).limit_points
}

/// Expected kind of a limit; finite values are compared at 1e-3.
#[derive(Debug, Clone, Copy)]
pub enum Expected {
    Finite(f64),
    Zero,
    PlusInfinity,
}

pub struct LimitFixture {
    pub name: &'static str,
    pub expected: Expected,
    pub run: Box<dyn Fn() -> Result<LimitEstimate, RatioRootError>>,
}

impl LimitFixture {
    pub fn check(&self) -> Result<(), String> {
        let est = (self.run)().map_err(|e| format!("{}: {e}", self.name))?;
        let ok = match (self.expected, &est.kind) {
            (Expected::Finite(want), LimitKind::Finite(v)) => (v.to_f64() - want).abs() <= 1e-3 * want.abs(),
            (Expected::Zero, LimitKind::Zero) | (Expected::PlusInfinity, LimitKind::PlusInfinity) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("{}: expected {:?}, got {}", self.name, self.expected, est.kind))
        }
    }
}

fn pre(term: &'static str, aux: &'static [(&'static str, &'static str)], which: Precondition, k: usize, psi: bool) -> Box<dyn Fn() -> Result<LimitEstimate, RatioRootError>> {
    Box::new(move || precondition_limit(&with_aux(term, aux), which, k, psi, &limit_points(), P, &Tolerances::default()))
}

fn remark(term: &'static str, aux: &'static [(&'static str, &'static str)], form: RemarkForm, k: usize) -> Box<dyn Fn() -> Result<LimitEstimate, RatioRootError>> {
    Box::new(move || remark_limit(&with_aux(term, aux), k, form, false, &limit_points(), P, &Tolerances::default()))
}

fn closed(text: &'static str) -> Box<dyn Fn() -> Result<LimitEstimate, RatioRootError>> {
    Box::new(move || {
        let e = Expr::parse(text).unwrap();
        classify_limit(|n| e.eval(n, P).map_err(StatError::from), &limit_points(), &Tolerances::default())
    })
}

/// Twelve limits with closed-form answers, four of each kind.
pub fn limit_fixtures() -> Vec<LimitFixture> {
    const T: &str = "1/n^2";
    vec![
        // Root-scale limit with default auxiliaries: n log n / (n log n).
        LimitFixture { name: "q, k=0, defaults", expected: Expected::Finite(1.0), run: pre(T, &[], Precondition::RootScale, 0, false) },
        LimitFixture { name: "q, k=0, phi=2n", expected: Expected::Finite(2.0), run: pre(T, &[("phi", "2*n")], Precondition::RootScale, 0, false) },
        // 1 / (n (log(n+1) - log n)) -> 1
        LimitFixture { name: "s, k=0, defaults", expected: Expected::Finite(1.0), run: pre(T, &[], Precondition::Modified, 0, false) },
        LimitFixture { name: "beta remark, k=0, g=1/2", expected: Expected::Finite(0.5), run: remark(T, &[("g", "1/2")], RemarkForm::Raabe, 0) },
        LimitFixture { name: "g/f, defaults", expected: Expected::Zero, run: pre(T, &[], Precondition::RatioGrowth, 0, false) },
        // With g = 1 the root-scale limit is 1/log n.
        LimitFixture { name: "q, k=0, g=1", expected: Expected::Zero, run: pre(T, &[("g", "1")], Precondition::RootScale, 0, false) },
        LimitFixture { name: "beta, k=0, f=n^2", expected: Expected::Zero, run: pre(T, &[("f", "n^2")], Precondition::Raabe, 0, false) },
        LimitFixture { name: "log(n)/sqrt(n)", expected: Expected::Zero, run: closed("log(n)/sqrt(n)") },
        // 1 / (n (log log(n+1) - log log n)) ~ log n
        LimitFixture { name: "beta, k=1, defaults", expected: Expected::PlusInfinity, run: pre(T, &[], Precondition::Raabe, 1, false) },
        LimitFixture { name: "q, k=1, defaults", expected: Expected::PlusInfinity, run: pre(T, &[], Precondition::RootScale, 1, false) },
        LimitFixture { name: "s remark, k=1, defaults", expected: Expected::PlusInfinity, run: remark(T, &[], RemarkForm::Modified, 1) },
        LimitFixture { name: "psi gate, psi=n^2", expected: Expected::PlusInfinity, run: pre(T, &[("psi", "n^2")], Precondition::PsiGate, 0, true) },
    ]
}

/// Auxiliary choices on which primary and alternative limits are compared.
pub const REMARK_CASES: [&[(&str, &str)]; 5] =
    [&[], &[("g", "1/2")], &[("f", "n^2")], &[("zeta", "2")], &[("f", "n*log(n)"), ("g", "log(n)")]];
