//! Test statistics on iterated-logarithm scales.
//!
//! Everything a statistic needs at a probe point `n` is gathered once into a
//! [`PointData`]; the statistics themselves are then a few arithmetic
//! operations on it. Logarithms of products are always formed as sums of
//! logarithms, and every difference between neighbouring points (`a_n`
//! versus `a_{n+1}`, `λ_i(n)` versus `λ_i(n+1)`) is formed without
//! subtracting nearly equal numbers.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::{DiffError, EvalError, Expr, Func, PsiFunction};
use crate::extrange::{ExtReal, NumError};
use crate::lambda::{self, LambdaChain, LambdaError};

/// Largest working precision a neighbour difference may escalate to.
pub const MAX_DIFFERENCE_BITS: usize = 8192;

/// Number of Taylor terms tried when a neighbour difference is taken from
/// derivatives instead of direct evaluation.
const TAYLOR_TERMS: usize = 24;

/// Derivative expressions larger than this abandon the Taylor route.
const TAYLOR_MAX_NODES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    L,
    S,
    Omega,
    J,
    P,
    Ptilde,
}

impl Family {
    /// Engine order: fewest auxiliary hypotheses first.
    pub const ORDER: [Family; 6] = [Family::L, Family::S, Family::Omega, Family::Ptilde, Family::P, Family::J];

    pub fn name(self) -> &'static str {
        match self {
            Family::L => "L",
            Family::S => "S",
            Family::Omega => "Omega",
            Family::J => "J",
            Family::P => "P",
            Family::Ptilde => "Ptilde",
        }
    }

    pub fn parse(name: &str) -> Option<Family> {
        Family::ORDER.into_iter().find(|f| f.name().eq_ignore_ascii_case(name.trim()))
    }

    /// Whether the family is decided against a precondition limit.
    pub fn needs_limit(self) -> bool {
        matches!(self, Family::J | Family::P | Family::Ptilde)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatError {
    #[error(transparent)]
    Lambda(#[from] LambdaError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("term is not positive at n = {0}")]
    NonPositiveTerm(String),
    #[error("{0} statistics need a psi function")]
    MissingPsi(Family),
    #[error("statistic at depth {k} needs iterated logs to level {needed}, only {available} are defined at n = {n}")]
    BelowDomain { k: usize, needed: usize, available: usize, n: String },
    #[error("{name} is not positive at n = {n}")]
    NonPositiveAux { name: &'static str, n: String },
}

/// The series under test and its optional auxiliary functions.
#[derive(Debug, Clone)]
pub struct SeriesSpec {
    pub name: String,
    pub term: Expr,
    pub f: Option<Expr>,
    pub g: Option<Expr>,
    pub phi: Option<Expr>,
    pub zeta: Option<Expr>,
    pub psi: Option<PsiFunction>,
}

/// Auxiliary functions with defaults filled in.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResolvedAux {
    pub f: Expr,
    /// `g` for the ratio-type families.
    pub g: Expr,
    /// `g` for the root-type family; `log n` when the user gave none.
    pub g_root: Expr,
    pub phi: Expr,
    pub zeta: Expr,
}

impl SeriesSpec {
    pub fn new(name: impl Into<String>, term: Expr) -> Self {
        SeriesSpec { name: name.into(), term, f: None, g: None, phi: None, zeta: None, psi: None }
    }

    pub fn parse(name: impl Into<String>, term: &str) -> Result<Self, crate::expr::ParseError> {
        Ok(SeriesSpec::new(name, Expr::parse(term)?))
    }

    /// Defaults: `f = n`, `g = 1`, `φ = n`, `ζ = 1`; an omitted `g` becomes
    /// `log n` for the root-type statistic, whose limit would otherwise be 0.
    pub fn resolved(&self) -> ResolvedAux {
        let g = self.g.clone().unwrap_or_else(|| Expr::int(1));
        ResolvedAux {
            f: self.f.clone().unwrap_or(Expr::Var),
            g_root: self.g.clone().unwrap_or_else(|| Expr::log(Expr::Var)),
            g,
            phi: self.phi.clone().unwrap_or(Expr::Var),
            zeta: self.zeta.clone().unwrap_or_else(|| Expr::int(1)),
        }
    }
}

/// One evaluation of a statistic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatSample {
    pub family: Family,
    pub psi_generalized: bool,
    pub k: usize,
    pub n: ExtReal,
    pub value: ExtReal,
    pub precision_used: usize,
}

/// `F(n+1) - F(n)` for an evaluator `F(x, bits)`.
///
/// Both ends are evaluated at a raised precision that grows until the
/// difference keeps `precision + 32` significant bits. A difference that is
/// exactly zero at two precisions is accepted as zero.
pub fn forward_difference<F>(eval: F, n: &ExtReal, precision: usize) -> Result<ExtReal, StatError>
where
    F: Fn(&ExtReal, usize) -> Result<ExtReal, StatError>,
{
    let next = n.add_exact(&ExtReal::one(n.precision()))?;
    // both arguments must be held exactly, or n + 1 rounds back to n
    let mut work = (precision + 64).max(next.precision());
    let mut zero_seen = false;
    loop {
        if work > MAX_DIFFERENCE_BITS {
            return Err(NumError::PrecisionLimit(work).into());
        }
        let a = eval(n, work)?;
        let b = eval(&next, work)?;
        let d = b.sub(&a)?;
        if d.is_zero() {
            if zero_seen || a.is_zero() && b.is_zero() {
                return Ok(ExtReal::zero(precision));
            }
            zero_seen = true;
            work *= 2;
        } else {
            let top = a.log2_magnitude().max(b.log2_magnitude());
            let lost = (top - d.log2_magnitude()).max(0) as usize;
            if work >= lost + precision + 32 {
                return Ok(d.with_precision(precision));
            }
            work = lost + precision + 64;
        }
    }
}

/// `F(n+1) - F(n) = Σ_{j>=1} F^{(j)}(n) / j!`, given `F'` symbolically.
pub fn taylor_difference(first_derivative: &Expr, n: &ExtReal, precision: usize) -> Result<ExtReal, StatError> {
    let work = precision + 32;
    let mut sum = ExtReal::zero(work);
    let mut derivative = first_derivative.clone();
    let mut factorial = ExtReal::one(work);
    for j in 1..=TAYLOR_TERMS {
        if j > 1 {
            factorial = factorial.mul(&ExtReal::from_u64(j as u64, work))?;
            derivative = derivative.differentiate()?;
            if derivative.size() > TAYLOR_MAX_NODES {
                return Err(NumError::Uncertified.into());
            }
        }
        if derivative == Expr::int(0) {
            return Ok(sum.with_precision(precision));
        }
        let term = derivative.eval(n, work)?.div(&factorial)?;
        sum = sum.add(&term)?;
        if !sum.is_zero() && term.log2_magnitude() < sum.log2_magnitude() - work as i64 {
            return Ok(sum.with_precision(precision));
        }
    }
    Err(NumError::Uncertified.into())
}

/// `λ_i` values and neighbour differences on one scale (`n` itself, or `ψ(n)`).
#[derive(Debug, Clone)]
pub struct ScaleData {
    /// Point on the scale: `n`, or `ψ(n)`.
    pub x: ExtReal,
    /// `λ_0(x) … λ_m(x)` for as many levels as are positive (at most the
    /// requested depth).
    pub chain: LambdaChain,
    /// Distance to the neighbouring point: 1, or `ψ(n+1) - ψ(n)`.
    pub step: ExtReal,
    /// `diffs[i] = λ_i(x + step) - λ_i(x)` for the same levels.
    pub diffs: Vec<ExtReal>,
}

impl ScaleData {
    pub fn build(x: ExtReal, step: ExtReal, levels: usize, precision: usize) -> Result<Self, StatError> {
        let mut depth = levels;
        let chain = loop {
            match lambda::chain(&x, depth, precision) {
                Ok(c) => break c,
                Err(LambdaError::Domain { level, .. }) if level >= 2 => depth = level - 1,
                Err(e) => return Err(e.into()),
            }
        };
        let diffs = lambda::lambda_diffs(&chain, &step, chain.k_max())?;
        Ok(ScaleData { x, chain, step, diffs })
    }

    /// Highest level whose `λ` is available.
    pub fn depth(&self) -> usize {
        self.chain.k_max()
    }

    pub fn require(&self, k: usize, needed: usize, n: &ExtReal) -> Result<(), StatError> {
        if self.depth() < needed {
            return Err(StatError::BelowDomain { k, needed, available: self.depth(), n: n.to_string() });
        }
        Ok(())
    }

    pub fn lambda(&self, level: usize) -> &ExtReal {
        &self.chain.values[level]
    }

    /// `Σ_{i=2}^{k+1} λ_i`, the logarithm of `∏_{i=0}^{k} λ_i`.
    pub fn ln_prod(&self, k: usize) -> Result<ExtReal, StatError> {
        Ok(lambda::ln_prod_lambda(&self.chain, k)?)
    }

    /// `Σ_{i=2}^{k+1} Δλ_i`, the change of `ln ∏_{i=0}^{k} λ_i` to the neighbour.
    pub fn ln_prod_change(&self, k: usize) -> Result<ExtReal, StatError> {
        let mut acc = ExtReal::zero(self.lambda(0).precision());
        for level in 2..=k + 1 {
            acc = acc.add(&self.diffs[level])?;
        }
        Ok(acc)
    }

    pub fn prod(&self, k: usize) -> Result<ExtReal, StatError> {
        Ok(lambda::prod_lambda(&self.chain, k)?)
    }
}

/// Values of the auxiliary functions at `n`.
#[derive(Debug, Clone)]
pub struct AuxValues {
    pub f: ExtReal,
    pub g: ExtReal,
    pub g_root: ExtReal,
    pub phi: ExtReal,
    pub zeta: ExtReal,
}

impl AuxValues {
    pub fn eval(aux: &ResolvedAux, n: &ExtReal, precision: usize) -> Result<Self, StatError> {
        let positive = |e: &Expr, name: &'static str| -> Result<ExtReal, StatError> {
            let v = e.eval(n, precision)?;
            if v.is_positive() {
                Ok(v)
            } else {
                Err(StatError::NonPositiveAux { name, n: n.to_string() })
            }
        };
        Ok(AuxValues {
            f: positive(&aux.f, "f")?,
            g: positive(&aux.g, "g")?,
            g_root: positive(&aux.g_root, "g")?,
            phi: positive(&aux.phi, "phi")?,
            zeta: positive(&aux.zeta, "zeta")?,
        })
    }
}

/// `ψ`-side quantities at `n`.
#[derive(Debug, Clone)]
pub struct PsiData {
    pub scale: ScaleData,
    /// `ln ψ′(n)`.
    pub ln_prime: ExtReal,
    /// `ln ψ′(n+1) - ln ψ′(n)`.
    pub ln_prime_change: Option<ExtReal>,
}

/// `ψ(n+1) - ψ(n)`: direct when affordable, from derivatives otherwise.
pub fn psi_step(psi: &PsiFunction, n: &ExtReal, precision: usize) -> Result<ExtReal, StatError> {
    let direct = forward_difference(|x, w| Ok(psi.psi.eval(x, w)?), n, precision);
    match direct {
        Err(StatError::Num(NumError::PrecisionLimit(_))) => taylor_difference(&psi.psi_prime, n, precision),
        other => other,
    }
}

impl PsiData {
    /// Scale data on `ψ(n)`; the term-free parts only (`ln ψ′` change is
    /// filled in when `with_prime_change` is set).
    pub fn eval(psi: &PsiFunction, n: &ExtReal, levels: usize, precision: usize, with_prime_change: bool) -> Result<Self, StatError> {
        let x = psi.psi.eval(n, precision)?;
        let step = psi_step(psi, n, precision)?;
        if !step.is_positive() {
            return Err(StatError::NonPositiveAux { name: "psi(n+1) - psi(n)", n: n.to_string() });
        }
        let scale = ScaleData::build(x, step, levels, precision)?;
        let ln_prime = psi.psi_prime.eval_ln(n, precision).map_err(|e| match e.error {
            NumError::Domain(_) => StatError::NonPositiveAux { name: "psi'", n: n.to_string() },
            _ => e.into(),
        })?;
        let ln_prime_change = if with_prime_change {
            let direct = forward_difference(|x, w| Ok(psi.psi_prime.eval_ln(x, w)?), n, precision);
            Some(match direct {
                Err(StatError::Num(NumError::PrecisionLimit(_))) => {
                    let derivative = Expr::log(psi.psi_prime.clone()).differentiate()?;
                    taylor_difference(&derivative, n, precision)?
                }
                other => other?,
            })
        } else {
            None
        };
        Ok(PsiData { scale, ln_prime, ln_prime_change })
    }
}

/// Everything the statistics need at one probe point.
#[derive(Debug, Clone)]
pub struct PointData {
    pub n: ExtReal,
    pub precision: usize,
    pub plain: ScaleData,
    /// `ln a_n`.
    pub ln_term: ExtReal,
    /// `ln a_n - ln a_{n+1}`.
    pub ln_ratio: ExtReal,
    pub aux: Option<AuxValues>,
    pub psi: Option<PsiData>,
}

fn ln_term(term: &Expr, n: &ExtReal, precision: usize) -> Result<ExtReal, StatError> {
    term.eval_ln(n, precision).map_err(|e| match e.error {
        NumError::Domain(_) if !term_defined(term, n) => e.into(),
        NumError::Domain(_) => StatError::NonPositiveTerm(n.to_string()),
        _ => e.into(),
    })
}

/// True when the term itself evaluates (so a log failure means `a_n <= 0`).
fn term_defined(term: &Expr, n: &ExtReal) -> bool {
    term.eval(n, 64).is_ok()
}

/// `ln a_{n+1} - ln a_n`; from the Taylor series of `ln a` once `n + 1`
/// is too wide to hold exactly.
fn term_log_difference(term: &Expr, n: &ExtReal, precision: usize) -> Result<ExtReal, StatError> {
    match forward_difference(|x, w| ln_term(term, x, w), n, precision) {
        Err(too_wide @ StatError::Num(NumError::PrecisionLimit(_))) => match Expr::log(term.clone()).differentiate() {
            Ok(derivative) => taylor_difference(&derivative, n, precision),
            Err(_) => Err(too_wide),
        },
        other => other,
    }
}

impl PointData {
    /// Gathers the data for depths `k <= k_max` at `precision` bits.
    /// Auxiliary values are evaluated when `aux` is given; `ψ` data when the
    /// spec has a `ψ`.
    pub fn compute(spec: &SeriesSpec, aux: Option<&ResolvedAux>, n: &ExtReal, k_max: usize, precision: usize) -> Result<Self, StatError> {
        let levels = k_max + 2;
        let plain = ScaleData::build(n.clone(), ExtReal::one(precision), levels, precision)?;
        let ln_term_value = ln_term(&spec.term, n, precision)?;
        let ln_ratio = term_log_difference(&spec.term, n, precision)?.neg();
        let aux = aux.map(|a| AuxValues::eval(a, n, precision)).transpose()?;
        let psi = spec
            .psi
            .as_ref()
            .map(|psi| PsiData::eval(psi, n, levels, precision, true))
            .transpose()?;
        Ok(PointData { n: n.clone(), precision, plain, ln_term: ln_term_value, ln_ratio, aux, psi })
    }

    fn scale(&self, family: Family, psi: bool) -> Result<&ScaleData, StatError> {
        if psi {
            self.psi.as_ref().map(|p| &p.scale).ok_or(StatError::MissingPsi(family))
        } else {
            Ok(&self.plain)
        }
    }

    fn aux(&self) -> Result<&AuxValues, StatError> {
        self.aux.as_ref().ok_or(StatError::NonPositiveAux { name: "auxiliary functions", n: self.n.to_string() })
    }

    /// Log of the root-test base `a_n ∏_{i=0}^{k} λ_i` (divided by `ψ′(n)`
    /// on the ψ scale).
    fn ln_root_base(&self, k: usize, psi: bool) -> Result<ExtReal, StatError> {
        let scale = self.scale(Family::J, psi)?;
        let mut v = self.ln_term.add(&scale.ln_prod(k)?)?;
        if psi {
            v = v.sub(&self.psi.as_ref().expect("checked").ln_prime)?;
        }
        Ok(v)
    }

    /// `ln` of the ratio-test base `a_n/a_{n+1} ∏ λ_i(n)/λ_i(n+1)` (times
    /// `ψ′(n+1)/ψ′(n)` on the ψ scale).
    pub fn ratio_log(&self, k: usize, psi: bool) -> Result<ExtReal, StatError> {
        let scale = self.scale(Family::S, psi)?;
        let mut v = self.ln_ratio.sub(&scale.ln_prod_change(k)?)?;
        if psi {
            let change = self.psi.as_ref().and_then(|p| p.ln_prime_change.as_ref()).expect("computed with psi");
            v = v.add(change)?;
        }
        Ok(v)
    }

    /// Value of one statistic at this point.
    pub fn statistic(&self, family: Family, k: usize, psi: bool) -> Result<ExtReal, StatError> {
        let scale = self.scale(family, psi)?;
        scale.require(k, k + 2, &self.n)?;
        let value = match family {
            Family::L => {
                let mut num = self.ln_term.add(&scale.ln_prod(k)?)?.neg();
                if psi {
                    num = num.add(&self.psi.as_ref().expect("checked").ln_prime)?;
                }
                num.div(scale.lambda(k + 2))?
            }
            Family::S => self.ratio_log(k, psi)?.div(&scale.diffs[k + 2])?,
            Family::Omega => {
                let mut v = self.ratio_log(k, psi)?.mul(&scale.prod(k + 1)?)?;
                if psi {
                    v = v.div(&scale.step)?;
                }
                v
            }
            Family::J => {
                let aux = self.aux()?;
                let root = self.ln_root_base(k, psi)?.div(&aux.phi)?;
                root.expm1()?.neg().mul(&aux.f)?.div(&aux.g_root)?
            }
            Family::P => {
                let aux = self.aux()?;
                let inner = self.ratio_log(k, psi)?.neg().div(&aux.zeta)?;
                inner.expm1()?.neg().mul(&aux.f)?.div(&aux.g)?
            }
            Family::Ptilde => {
                let aux = self.aux()?;
                let inner = self.ratio_log(k, psi)?.neg();
                inner.expm1()?.neg().mul(&aux.f)?.div(&aux.g)?
            }
        };
        Ok(value)
    }

    pub fn sample(&self, family: Family, k: usize, psi: bool) -> Result<StatSample, StatError> {
        Ok(StatSample {
            family,
            psi_generalized: psi,
            k,
            n: self.n.clone(),
            value: self.statistic(family, k, psi)?,
            precision_used: self.precision,
        })
    }
}

fn single(spec: &SeriesSpec, family: Family, k: usize, n: &ExtReal, psi: bool, precision: usize) -> Result<StatSample, StatError> {
    if psi && spec.psi.is_none() {
        return Err(StatError::MissingPsi(family));
    }
    let aux = family.needs_limit().then(|| spec.resolved());
    PointData::compute(spec, aux.as_ref(), n, k, precision)?.sample(family, k, psi)
}

macro_rules! stat_fns {
    ($($plain:ident, $psi:ident => $family:expr;)*) => {$(
        pub fn $plain(spec: &SeriesSpec, k: usize, n: &ExtReal, precision: usize) -> Result<StatSample, StatError> {
            single(spec, $family, k, n, false, precision)
        }
        pub fn $psi(spec: &SeriesSpec, k: usize, n: &ExtReal, precision: usize) -> Result<StatSample, StatError> {
            single(spec, $family, k, n, true, precision)
        }
    )*};
}

stat_fns! {
    l_stat, l_stat_psi => Family::L;
    s_stat, s_stat_psi => Family::S;
    omega_stat, omega_stat_psi => Family::Omega;
    j_stat, j_stat_psi => Family::J;
    p_stat, p_stat_psi => Family::P;
    ptilde_stat, ptilde_stat_psi => Family::Ptilde;
}

/// True when `e` contains a function the term evaluator must split in log
/// space to stay in range.
pub fn uses_lgamma(e: &Expr) -> bool {
    e.contains_func(Func::Lgamma)
}
