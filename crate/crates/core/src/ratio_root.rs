//! Root- and ratio-type families: their precondition limits, the limit
//! classifier, and the threshold rule that turns a tail of samples into a
//! decision.

use std::fmt;

use serde::Serialize;

use crate::extrange::{ExtReal, NumError};
use crate::lambda;
use crate::stats::{psi_step, AuxValues, Family, ResolvedAux, ScaleData, SeriesSpec, StatError, StatSample};

pub use crate::stats::{j_stat, j_stat_psi, p_stat, p_stat_psi, ptilde_stat, ptilde_stat_psi};

pub const ZERO_TOL: f64 = 1e-6;
pub const INF_TOL: f64 = 1e6;
pub const REL_TOL: f64 = 1e-3;
pub const WINDOW: usize = 8;
pub const DEFAULT_MARGIN: f64 = 0.05;
/// Fewest points a limit may be classified from.
pub const MIN_LIMIT_POINTS: usize = 16;

/// Tolerances of the limit classifier and the threshold rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub zero_tol: f64,
    pub inf_tol: f64,
    pub rel_tol: f64,
    pub window: usize,
    pub margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { zero_tol: ZERO_TOL, inf_tol: INF_TOL, rel_tol: REL_TOL, window: WINDOW, margin: DEFAULT_MARGIN }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value")]
pub enum LimitKind {
    Finite(ExtReal),
    Zero,
    PlusInfinity,
    Undetermined,
}

impl fmt::Display for LimitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitKind::Finite(v) => write!(f, "finite ({})", short(v)),
            LimitKind::Zero => f.write_str("0"),
            LimitKind::PlusInfinity => f.write_str("+infinity"),
            LimitKind::Undetermined => f.write_str("undetermined"),
        }
    }
}

/// Compact decimal for messages.
pub fn short(v: &ExtReal) -> String {
    let x = v.to_f64();
    if x.is_finite() && x != 0.0 {
        if (1e-4..1e7).contains(&x.abs()) {
            format!("{x:.6}")
        } else {
            format!("{x:.6e}")
        }
    } else {
        v.with_precision(24).to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Confidence {
    /// The window satisfies the rule outright.
    Stable,
    /// The window clears the tolerance but not monotonically.
    Trend,
    Weak,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LimitSample {
    pub n: ExtReal,
    pub value: ExtReal,
}

/// Classified limit with the trailing window it was read from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LimitEstimate {
    #[serde(flatten)]
    pub kind: LimitKind,
    pub samples: Vec<LimitSample>,
    pub confidence: Confidence,
}

impl LimitEstimate {
    pub fn same_kind(&self, other: &LimitEstimate) -> bool {
        std::mem::discriminant(&self.kind) == std::mem::discriminant(&other.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RatioRootError {
    #[error("at n = {n}: {source}")]
    Sample { n: String, source: StatError },
    #[error("limit needs at least {MIN_LIMIT_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("probe points must grow by a factor of at least 2 (at n = {0})")]
    NotGeometric(String),
    #[error("{0} needs a psi function")]
    MissingPsi(&'static str),
    #[error("alternative limit needs psi(n)/(psi(n+1) - psi(n)) -> +infinity, found {0}")]
    GateFailed(LimitKind),
    #[error("{case:?} case does not match a {limit} limit")]
    CaseMismatch { case: Case, limit: LimitKind },
}

fn magnitude(v: &ExtReal) -> f64 {
    v.abs().to_f64()
}

/// Classifies the limit of a sampled sequence from its trailing window.
pub fn classify_samples(samples: &[LimitSample], tol: &Tolerances) -> LimitEstimate {
    let start = samples.len().saturating_sub(tol.window);
    let window: Vec<LimitSample> = samples[start..].to_vec();
    let undetermined = |window| LimitEstimate { kind: LimitKind::Undetermined, samples: window, confidence: Confidence::Weak };
    if window.len() < tol.window.max(2) {
        return undetermined(window);
    }
    let last = &window[window.len() - 1].value;
    let mags: Vec<f64> = window.iter().map(|s| magnitude(&s.value)).collect();
    let max_mag = mags.iter().cloned().fold(0.0, f64::max);
    let min_value = window.iter().map(|s| s.value.to_f64()).fold(f64::INFINITY, f64::min);

    if max_mag < tol.zero_tol {
        let monotone = window.windows(2).all(|w| w[1].value.abs() <= w[0].value.abs());
        let confidence = if monotone { Confidence::Stable } else { Confidence::Trend };
        return LimitEstimate { kind: LimitKind::Zero, samples: window, confidence };
    }
    if min_value > tol.inf_tol {
        let monotone = window.windows(2).all(|w| w[1].value > w[0].value);
        let confidence = if monotone { Confidence::Stable } else { Confidence::Trend };
        return LimitEstimate { kind: LimitKind::PlusInfinity, samples: window, confidence };
    }
    if magnitude(last) > tol.zero_tol && window.iter().all(|s| s.value.relative_diff(last) <= tol.rel_tol) {
        let kind = LimitKind::Finite(last.clone());
        return LimitEstimate { kind, samples: window, confidence: Confidence::Stable };
    }
    undetermined(window)
}

/// True for errors that mean "this point is out of numeric reach", after
/// which sampling stops instead of failing.
fn out_of_reach(e: &StatError) -> bool {
    matches!(
        e,
        StatError::Num(NumError::Overflow | NumError::Underflow | NumError::PrecisionLimit(_) | NumError::Uncertified)
    ) || matches!(
        e,
        StatError::Eval(ev) if matches!(ev.error, NumError::Overflow | NumError::Underflow | NumError::PrecisionLimit(_) | NumError::Uncertified)
    ) || matches!(e, StatError::Lambda(lambda::LambdaError::Num(NumError::Overflow | NumError::Underflow)))
}

/// Samples `ratio(n)` on increasing `points` and classifies the limit.
///
/// Points below the domain of the iterated logs involved are skipped.
/// Once a window's worth of samples exists, a point out of numeric range
/// ends the sampling; earlier failures propagate with their `n`.
pub fn classify_limit<F>(ratio: F, points: &[ExtReal], tol: &Tolerances) -> Result<LimitEstimate, RatioRootError>
where
    F: Fn(&ExtReal) -> Result<ExtReal, StatError>,
{
    if points.len() < MIN_LIMIT_POINTS {
        return Err(RatioRootError::TooFewPoints(points.len()));
    }
    for w in points.windows(2) {
        let doubled = w[0].mul(&ExtReal::from_i64(2, w[0].precision())).map_err(|e| RatioRootError::Sample {
            n: w[0].to_string(),
            source: e.into(),
        })?;
        if w[1] < doubled {
            return Err(RatioRootError::NotGeometric(w[1].to_string()));
        }
    }
    let mut samples = Vec::new();
    for n in points {
        match ratio(n) {
            Ok(value) => samples.push(LimitSample { n: n.clone(), value }),
            Err(StatError::BelowDomain { .. }) => continue,
            Err(StatError::Lambda(lambda::LambdaError::Domain { .. })) => continue,
            Err(e) if out_of_reach(&e) && samples.len() >= tol.window => break,
            Err(source) => return Err(RatioRootError::Sample { n: n.to_string(), source }),
        }
    }
    Ok(classify_samples(&samples, tol))
}

/// Quotient of two samplers, as a single ratio sampler.
pub fn quotient<A, B>(numerator: A, denominator: B) -> impl Fn(&ExtReal) -> Result<ExtReal, StatError>
where
    A: Fn(&ExtReal) -> Result<ExtReal, StatError>,
    B: Fn(&ExtReal) -> Result<ExtReal, StatError>,
{
    move |n| Ok(numerator(n)?.div(&denominator(n)?)?)
}

/// Points `2^(2^j)` for `j = 7..=48`, far past any grid, used only for
/// limits of auxiliary expressions.
pub fn horizon_points(precision: usize) -> Vec<ExtReal> {
    (7..=48).map(|j| ExtReal::pow2(1i64 << j, precision).expect("in range")).collect()
}

/// Which branch of a family applies, fixed by the kind of its limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Case {
    /// Finite nonzero limit `c`: threshold `1/c`.
    Main,
    /// Limit `+∞`: threshold 0.
    InfinityCase,
    /// Limit 0: divergence from boundedness only.
    ZeroCase,
}

impl Case {
    pub fn for_limit(kind: &LimitKind) -> Option<Case> {
        match kind {
            LimitKind::Finite(_) => Some(Case::Main),
            LimitKind::PlusInfinity => Some(Case::InfinityCase),
            LimitKind::Zero => Some(Case::ZeroCase),
            LimitKind::Undetermined => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    AboveForConvergence,
    BelowForDivergence,
}

/// A firing branch of the threshold rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ThresholdReport {
    /// `1/limit`, or 0 in the infinite and zero cases.
    pub statistic_limit_bound: ExtReal,
    pub comparison: Comparison,
    /// Observed level: tail minimum for convergence, tail maximum for divergence.
    pub constant: ExtReal,
    /// Smallest distance of the tail from the decision boundary.
    pub margin: ExtReal,
    /// Index into the samples from which the inequality holds to the end.
    pub from_index: usize,
}

/// Why a tail decided nothing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearMiss {
    /// Statistic level nearest to a decision.
    pub level: ExtReal,
    /// Distance still missing to the nearer boundary (positive).
    pub gap: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ThresholdOutcome {
    Decided(ThresholdReport),
    Inconclusive(NearMiss),
}

/// Limits of the tail under the drift models `v ≈ a + b·u(n)`, fitted
/// through the first and last tail samples, for `u = 1/λ_{k+2}` and, where
/// defined, the slower `u = λ_{k+3}/λ_{k+2}` that deeper logarithmic
/// factors produce.
fn extrapolated_levels(tail: &[StatSample]) -> Vec<f64> {
    let coords = |s: &StatSample| -> Option<(f64, Option<f64>)> {
        let k = s.k;
        let c = lambda::chain(&s.n, k + 2, 64).ok()?;
        let top = c.values[k + 2].to_f64();
        let deeper = c.values[k + 2].ln().ok().filter(|v| v.is_positive()).map(|v| v.to_f64() / top);
        Some((1.0 / top, deeper))
    };
    let (Some(first), Some(last)) = (tail.first(), tail.last()) else { return vec![] };
    let (Some((x0, y0)), Some((x1, y1))) = (coords(first), coords(last)) else { return vec![] };
    let (v0, v1) = (first.value.to_f64(), last.value.to_f64());
    let fit = |u0: f64, u1: f64| {
        if (u0 - u1).abs() < f64::EPSILON * u0.abs().max(u1.abs()) {
            return None;
        }
        let b = (v0 - v1) / (u0 - u1);
        Some(v1 - b * u1)
    };
    let mut out = Vec::new();
    out.extend(fit(x0, x1));
    if let (Some(y0), Some(y1)) = (y0, y1) {
        out.extend(fit(y0, y1));
    }
    out
}

/// Drift smaller than this (relative) is rounding noise.
const FLAT_DRIFT: f64 = 1e-20;

/// Tail value projected to the last horizon point under `v ≈ a + b·λ_{k+1}(n)`,
/// the growth that appears when `k` is past the depth a term lives on.
/// `None` at depth 0, where no such growth occurs; NaN when the projection
/// is unavailable, which fails every comparison.
fn growth_projection(tail: &[StatSample]) -> Option<f64> {
    let (first, last) = (tail.first()?, tail.last()?);
    let k = last.k;
    if k == 0 {
        return None;
    }
    let level = |n: &ExtReal| -> Option<f64> {
        let c = lambda::chain(n, k + 1, 64).ok()?;
        Some(c.values[k + 1].to_f64())
    };
    let horizon = ExtReal::pow2(1i64 << 48, 64).expect("in range");
    let project = || -> Option<f64> {
        let (u0, u1, uh) = (level(&first.n)?, level(&last.n)?, level(&horizon)?);
        if u1 <= u0 {
            return None;
        }
        let (v0, v1) = (first.value.to_f64(), last.value.to_f64());
        Some(v1 + (v1 - v0) / (u1 - u0) * (uh - u1))
    };
    Some(project().unwrap_or(f64::NAN))
}

/// Applies the branch rule of `case` to the tail window of `samples`.
///
/// Main: convergence when every tail sample is at least `(1/c)(1 + margin)`,
/// divergence when every one is at most `(1/c)(1 - margin)`. Infinite
/// limit: convergence at or above `margin`, divergence below 0. Zero limit:
/// divergence when the tail is bounded above (non-increasing, or level
/// within the relative tolerance). A tail drifting toward the boundary must
/// also extrapolate past it.
pub fn threshold_check(
    samples: &[StatSample],
    limit: &LimitEstimate,
    case: Case,
    tol: &Tolerances,
) -> Result<ThresholdOutcome, RatioRootError> {
    if Case::for_limit(&limit.kind) != Some(case) {
        return Err(RatioRootError::CaseMismatch { case, limit: limit.kind.clone() });
    }
    let inconclusive = |level: ExtReal, gap: f64, reason: &str| {
        Ok(ThresholdOutcome::Inconclusive(NearMiss { level, gap, reason: reason.to_string() }))
    };
    if samples.len() < tol.window {
        let level = samples.last().map(|s| s.value.clone()).unwrap_or_else(|| ExtReal::zero(64));
        return inconclusive(level, f64::INFINITY, "too few samples");
    }
    let tail = &samples[samples.len() - tol.window..];
    let tail_start = samples.len() - tol.window;
    let p = tail[0].value.precision();
    let values: Vec<f64> = tail.iter().map(|s| s.value.to_f64()).collect();
    let min = tail.iter().map(|s| &s.value).min().expect("non-empty").clone();
    let max = tail.iter().map(|s| &s.value).max().expect("non-empty").clone();
    let (v_first, v_last) = (values[0], values[values.len() - 1]);
    let flat = (v_last - v_first).abs() <= FLAT_DRIFT * v_last.abs().max(1.0);
    let drifting_down = !flat && v_last < v_first;
    let drifting_up = !flat && v_last > v_first;
    let levels = extrapolated_levels(tail);
    let growth = growth_projection(tail);

    // earliest index from which `holds` is true for every later sample
    let from_index = |holds: &dyn Fn(&ExtReal) -> bool| {
        let mut i = samples.len();
        while i > 0 && holds(&samples[i - 1].value) {
            i -= 1;
        }
        i.min(tail_start)
    };

    if case == Case::ZeroCase {
        let non_increasing = tail.windows(2).all(|w| w[1].value <= w[0].value);
        let stable = tail.iter().all(|s| s.value.relative_diff(&max) <= tol.rel_tol);
        if non_increasing || stable {
            let report = ThresholdReport {
                statistic_limit_bound: ExtReal::zero(p),
                comparison: Comparison::BelowForDivergence,
                constant: max,
                margin: ExtReal::one(p),
                from_index: tail_start,
            };
            return Ok(ThresholdOutcome::Decided(report));
        }
        return inconclusive(max, f64::INFINITY, "tail is still increasing, boundedness not established");
    }

    let (bound, conv_line, div_line, div_strict) = match (&limit.kind, case) {
        (LimitKind::Finite(c), Case::Main) => {
            let bound = ExtReal::one(p).div(&c.with_precision(p)).map_err(|e| RatioRootError::Sample {
                n: "limit".into(),
                source: e.into(),
            })?;
            let band = bound.abs().mul(&ExtReal::from_f64(tol.margin, p).expect("finite")).expect("finite");
            let conv = bound.add(&band).expect("finite");
            let div = bound.sub(&band).expect("finite");
            (bound, conv, div, false)
        }
        _ => {
            let zero = ExtReal::zero(p);
            (zero.clone(), ExtReal::from_f64(tol.margin, p).expect("finite"), zero, true)
        }
    };

    let converges = |v: &ExtReal| *v >= conv_line;
    let diverges = |v: &ExtReal| if div_strict { *v < div_line } else { *v <= div_line };

    if tail.iter().all(|s| converges(&s.value)) {
        let line = conv_line.to_f64();
        let guard_ok = !drifting_down
            || (!levels.is_empty() && levels.iter().all(|&a| a >= line) && growth.is_none_or(|g| g >= line));
        if guard_ok {
            let report = ThresholdReport {
                statistic_limit_bound: bound.clone(),
                comparison: Comparison::AboveForConvergence,
                margin: min.sub(&bound).expect("finite"),
                constant: min,
                from_index: from_index(&converges),
            };
            return Ok(ThresholdOutcome::Decided(report));
        }
        let gap = line - levels.iter().cloned().chain(growth).fold(f64::INFINITY, f64::min);
        return inconclusive(min, gap, "tail clears the convergence line but drifts back toward it");
    }
    if tail.iter().all(|s| diverges(&s.value)) {
        let line = div_line.to_f64();
        let below = |a: f64| if div_strict { a < line } else { a <= line };
        let guard_ok =
            !drifting_up || (!levels.is_empty() && levels.iter().all(|&a| below(a)) && growth.is_none_or(below));
        if guard_ok {
            let report = ThresholdReport {
                statistic_limit_bound: bound.clone(),
                comparison: Comparison::BelowForDivergence,
                margin: bound.sub(&max).expect("finite"),
                constant: max,
                from_index: from_index(&diverges),
            };
            return Ok(ThresholdOutcome::Decided(report));
        }
        let gap = levels.iter().cloned().chain(growth).fold(f64::NEG_INFINITY, f64::max) - line;
        return inconclusive(max, gap, "tail clears the divergence line but drifts back toward it");
    }
    let gap_conv = conv_line.to_f64() - min.to_f64();
    let gap_div = max.to_f64() - div_line.to_f64();
    let (level, gap) = if gap_conv <= gap_div { (min, gap_conv) } else { (max, gap_div) };
    inconclusive(level, gap.max(0.0), "tail lies inside the guard band")
}

/// Limits that select the branch of a root- or ratio-type family, plus
/// the side conditions they come with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Precondition {
    /// `φ g / (f λ_{k+2})`, with the root-family `g`.
    RootScale,
    /// `ζ g / (f (λ_{k+2}(n+1) - λ_{k+2}(n)))`.
    Modified,
    /// `g / (f (λ_{k+2}(n+1) - λ_{k+2}(n)))`.
    Raabe,
    /// `g / f` with the root-family `g`; must tend to 0.
    RootGrowth,
    /// `g / f`; must tend to 0.
    RatioGrowth,
    /// `ψ(n) / (ψ(n+1) - ψ(n))`; must tend to `+∞`.
    PsiGate,
}

impl Precondition {
    /// The limit whose kind picks the branch of `family`.
    pub fn selecting(family: Family) -> Option<Precondition> {
        match family {
            Family::J => Some(Precondition::RootScale),
            Family::P => Some(Precondition::Modified),
            Family::Ptilde => Some(Precondition::Raabe),
            _ => None,
        }
    }

    /// The side condition `family` needs besides the selecting limit.
    pub fn side_condition(family: Family, psi: bool) -> Option<Precondition> {
        match family {
            Family::J => Some(Precondition::RootGrowth),
            Family::P | Family::Ptilde => Some(Precondition::RatioGrowth),
            Family::Omega if psi => Some(Precondition::PsiGate),
            _ => None,
        }
    }

    pub fn name(self, psi: bool) -> &'static str {
        match (self, psi) {
            (Precondition::RootScale, false) => "q",
            (Precondition::RootScale, true) => "Q",
            (Precondition::Modified, false) => "s",
            (Precondition::Modified, true) => "S",
            (Precondition::Raabe, false) => "beta",
            (Precondition::Raabe, true) => "omega",
            (Precondition::RootGrowth, _) | (Precondition::RatioGrowth, _) => "g/f",
            (Precondition::PsiGate, _) => "psi/(psi(n+1)-psi(n))",
        }
    }
}

/// Alternative forms of the ratio-family limits with the neighbour
/// difference of `λ_{k+2}` replaced by `1/∏_{i=0}^{k+1} λ_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RemarkForm {
    /// `g ζ / f · ∏ λ_i` (stands in for [`Precondition::Modified`]).
    Modified,
    /// `g / f · ∏ λ_i` (stands in for [`Precondition::Raabe`]).
    Raabe,
}

impl RemarkForm {
    pub fn replaces(self) -> Precondition {
        match self {
            RemarkForm::Modified => Precondition::Modified,
            RemarkForm::Raabe => Precondition::Raabe,
        }
    }

    pub fn for_family(family: Family) -> Option<RemarkForm> {
        match family {
            Family::P => Some(RemarkForm::Modified),
            Family::Ptilde => Some(RemarkForm::Raabe),
            _ => None,
        }
    }
}

fn scale_at(spec: &SeriesSpec, psi: bool, n: &ExtReal, levels: usize, p: usize) -> Result<ScaleData, StatError> {
    if !psi {
        return ScaleData::build(n.clone(), ExtReal::one(p), levels, p);
    }
    let psi_fn = spec.psi.as_ref().ok_or(StatError::MissingPsi(Family::Omega))?;
    let x = psi_fn.psi.eval(n, p)?;
    let step = psi_step(psi_fn, n, p)?;
    if !step.is_positive() {
        return Err(StatError::NonPositiveAux { name: "psi(n+1) - psi(n)", n: n.to_string() });
    }
    ScaleData::build(x, step, levels, p)
}

/// Value of a precondition expression at `n`.
pub fn precondition_value(
    spec: &SeriesSpec,
    aux: &ResolvedAux,
    which: Precondition,
    k: usize,
    psi: bool,
    n: &ExtReal,
    p: usize,
) -> Result<ExtReal, StatError> {
    let a = AuxValues::eval(aux, n, p)?;
    let needs_scale = !matches!(which, Precondition::RootGrowth | Precondition::RatioGrowth);
    if !needs_scale {
        let g = if which == Precondition::RootGrowth { &a.g_root } else { &a.g };
        return Ok(g.div(&a.f)?);
    }
    let levels = if which == Precondition::PsiGate { 1 } else { k + 2 };
    let scale = scale_at(spec, psi, n, levels, p)?;
    scale.require(k, levels, n)?;
    Ok(match which {
        Precondition::RootScale => a.phi.mul(&a.g_root)?.div(&a.f.mul(scale.lambda(k + 2))?)?,
        Precondition::Modified => a.zeta.mul(&a.g)?.div(&a.f.mul(&scale.diffs[k + 2])?)?,
        Precondition::Raabe => a.g.div(&a.f.mul(&scale.diffs[k + 2])?)?,
        Precondition::PsiGate => scale.x.div(&scale.step)?,
        Precondition::RootGrowth | Precondition::RatioGrowth => unreachable!("handled above"),
    })
}

/// Value of a remark form at `n`; on the ψ scale the product is divided by
/// `ψ(n+1) - ψ(n)`.
pub fn remark_value(
    spec: &SeriesSpec,
    aux: &ResolvedAux,
    form: RemarkForm,
    k: usize,
    psi: bool,
    n: &ExtReal,
    p: usize,
) -> Result<ExtReal, StatError> {
    let a = AuxValues::eval(aux, n, p)?;
    let scale = scale_at(spec, psi, n, k + 1, p)?;
    scale.require(k, k + 1, n)?;
    let mut v = a.g.div(&a.f)?.mul(&scale.prod(k + 1)?)?;
    if form == RemarkForm::Modified {
        v = v.mul(&a.zeta)?;
    }
    if psi {
        v = v.div(&scale.step)?;
    }
    Ok(v)
}

/// Classified limit of a precondition over `points`.
pub fn precondition_limit(
    spec: &SeriesSpec,
    which: Precondition,
    k: usize,
    psi: bool,
    points: &[ExtReal],
    precision: usize,
    tol: &Tolerances,
) -> Result<LimitEstimate, RatioRootError> {
    if (psi || which == Precondition::PsiGate) && spec.psi.is_none() {
        return Err(RatioRootError::MissingPsi(which.name(psi)));
    }
    let aux = spec.resolved();
    let psi = psi || which == Precondition::PsiGate;
    classify_limit(|n| precondition_value(spec, &aux, which, k, psi, n, precision), points, tol)
}

/// Classified limit of a remark form. The ψ forms are only available when
/// `ψ(n)/(ψ(n+1) - ψ(n))` tends to `+∞`.
pub fn remark_limit(
    spec: &SeriesSpec,
    k: usize,
    form: RemarkForm,
    psi: bool,
    points: &[ExtReal],
    precision: usize,
    tol: &Tolerances,
) -> Result<LimitEstimate, RatioRootError> {
    if psi {
        let gate = precondition_limit(spec, Precondition::PsiGate, k, true, points, precision, tol)?;
        if gate.kind != LimitKind::PlusInfinity {
            return Err(RatioRootError::GateFailed(gate.kind));
        }
    }
    let aux = spec.resolved();
    classify_limit(|n| remark_value(spec, &aux, form, k, psi, n, precision), points, tol)
}

/// Label of the theorem behind a decision.
pub fn theorem_label(family: Family, psi: bool, case: Option<Case>) -> &'static str {
    let suffix = |case: Option<Case>| match case {
        Some(Case::InfinityCase) => 1,
        Some(Case::ZeroCase) => 2,
        _ => 0,
    };
    let table: [[&'static str; 3]; 12] = [
        ["Theorem 1", "Theorem 1", "Theorem 1"],
        ["Theorem 2", "Theorem 2", "Theorem 2"],
        ["Theorem 2*", "Theorem 2*", "Theorem 2*"],
        ["Theorem 3", "Theorem 3.1", "Theorem 3.2"],
        ["Theorem 4", "Theorem 4.1", "Theorem 4.2"],
        ["Theorem 5", "Theorem 5.1", "Theorem 5.2"],
        ["Theorem 6", "Theorem 6", "Theorem 6"],
        ["Theorem 7", "Theorem 7", "Theorem 7"],
        ["Theorem 7*", "Theorem 7*", "Theorem 7*"],
        ["Theorem 8", "Theorem 8.1", "Theorem 8.2"],
        ["Theorem 9", "Theorem 9.1", "Theorem 9.2"],
        ["Theorem 10", "Theorem 10.1", "Theorem 10.2"],
    ];
    let row = match family {
        Family::L => 0,
        Family::S => 1,
        Family::Omega => 2,
        Family::J => 3,
        Family::P => 4,
        Family::Ptilde => 5,
    } + if psi { 6 } else { 0 };
    table[row][suffix(case)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Expr, PsiFunction};
    use crate::stats::l_stat;

    const P: usize = 128;

    fn grid() -> Vec<ExtReal> {
        let mut pts: Vec<ExtReal> = (4..=64).map(|j| ExtReal::pow2(j, P).unwrap()).collect();
        pts.extend(horizon_points(P));
        pts
    }

    fn spec(term: &str) -> SeriesSpec {
        SeriesSpec::parse(term, term).unwrap()
    }

    fn with_aux(term: &str, f: &str, g: &str, phi: &str) -> SeriesSpec {
        let mut s = spec(term);
        s.f = Some(Expr::parse(f).unwrap());
        s.g = Some(Expr::parse(g).unwrap());
        s.phi = Some(Expr::parse(phi).unwrap());
        s
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn flat(value: f64, count: usize) -> Vec<StatSample> {
        (0..count)
            .map(|j| StatSample {
                family: Family::J,
                psi_generalized: false,
                k: 0,
                n: ExtReal::pow2(20 + j as i64, P).unwrap(),
                value: ExtReal::from_f64(value, P).unwrap(),
                precision_used: P,
            })
            .collect()
    }

    fn limit(kind: LimitKind) -> LimitEstimate {
        LimitEstimate { kind, samples: vec![], confidence: Confidence::Stable }
    }

    #[test]
    fn classifies_root_scale_examples() {
        let q = |s: &SeriesSpec| precondition_limit(s, Precondition::RootScale, 0, false, &grid(), P, &tol()).unwrap();
        assert_eq!(q(&with_aux("1/n^2", "n", "1", "n")).kind, LimitKind::Zero);
        let one = q(&with_aux("1/n^2", "n", "log(n)", "n"));
        assert!(matches!(one.kind, LimitKind::Finite(ref v) if v.relative_diff(&ExtReal::one(P)) < 1e-30));
        assert_eq!(q(&with_aux("1/n^2", "n", "log(n)", "n*log(n)")).kind, LimitKind::PlusInfinity);
    }

    #[test]
    fn default_root_scale_is_one() {
        let got = precondition_limit(&spec("1/n^2"), Precondition::RootScale, 0, false, &grid(), P, &tol()).unwrap();
        assert!(matches!(got.kind, LimitKind::Finite(_)));
        let growth = precondition_limit(&spec("1/n^2"), Precondition::RootGrowth, 0, false, &grid(), P, &tol()).unwrap();
        assert_eq!(growth.kind, LimitKind::Zero);
    }

    #[test]
    fn classifier_rejects_short_or_dense_grids() {
        let few: Vec<ExtReal> = grid().into_iter().take(5).collect();
        let one = |_: &ExtReal| Ok(ExtReal::one(P));
        assert_eq!(classify_limit(one, &few, &tol()).unwrap_err(), RatioRootError::TooFewPoints(5));
        let dense: Vec<ExtReal> = (100..130).map(|v| ExtReal::from_i64(v, P)).collect();
        assert!(matches!(classify_limit(one, &dense, &tol()), Err(RatioRootError::NotGeometric(_))));
    }

    #[test]
    fn oscillation_is_undetermined() {
        let samples: Vec<LimitSample> = (0..20)
            .map(|j| LimitSample {
                n: ExtReal::pow2(j, P).unwrap(),
                value: ExtReal::from_i64(if j % 2 == 0 { 1 } else { 3 }, P),
            })
            .collect();
        let got = classify_samples(&samples, &tol());
        assert_eq!(got.kind, LimitKind::Undetermined);
        assert_eq!(got.confidence, Confidence::Weak);
        assert_eq!(got.samples.len(), WINDOW);
    }

    #[test]
    fn threshold_examples() {
        let one = limit(LimitKind::Finite(ExtReal::one(P)));
        let ThresholdOutcome::Decided(r) = threshold_check(&flat(2.0, 12), &one, Case::Main, &tol()).unwrap() else {
            panic!("expected a decision")
        };
        assert_eq!(r.comparison, Comparison::AboveForConvergence);
        assert_eq!(r.constant.to_f64(), 2.0);
        assert_eq!(r.margin.to_f64(), 1.0);
        assert_eq!(r.from_index, 0);

        let inf = limit(LimitKind::PlusInfinity);
        let ThresholdOutcome::Decided(r) = threshold_check(&flat(-1.0, 12), &inf, Case::InfinityCase, &tol()).unwrap() else {
            panic!("expected a decision")
        };
        assert_eq!(r.comparison, Comparison::BelowForDivergence);

        let zero = limit(LimitKind::Zero);
        let ThresholdOutcome::Decided(r) = threshold_check(&flat(0.5, 12), &zero, Case::ZeroCase, &tol()).unwrap() else {
            panic!("expected a decision")
        };
        assert_eq!(r.comparison, Comparison::BelowForDivergence);
        assert_eq!(r.constant.to_f64(), 0.5);

        assert!(matches!(
            threshold_check(&flat(1.0, 12), &one, Case::Main, &tol()).unwrap(),
            ThresholdOutcome::Inconclusive(_)
        ));
        assert!(matches!(
            threshold_check(&flat(2.0, 12), &zero, Case::Main, &tol()),
            Err(RatioRootError::CaseMismatch { .. })
        ));
    }

    #[test]
    fn increasing_tail_is_not_bounded() {
        let mut samples = flat(0.0, 12);
        for (j, s) in samples.iter_mut().enumerate() {
            s.value = ExtReal::from_i64(j as i64, P);
        }
        let zero = limit(LimitKind::Zero);
        assert!(matches!(
            threshold_check(&samples, &zero, Case::ZeroCase, &tol()).unwrap(),
            ThresholdOutcome::Inconclusive(_)
        ));
    }

    #[test]
    fn drift_toward_the_line_blocks_a_decision() {
        // L at depth 0 for 1/(n log n) sits above 1.05 at 2^64 but tends to 1.
        let s = spec("1/(n*log(n))");
        let samples: Vec<StatSample> = (50..=64)
            .map(|j| l_stat(&s, 0, &ExtReal::pow2(j, P).unwrap(), P).unwrap())
            .collect();
        assert!(samples.iter().all(|x| x.value.to_f64() > 1.05));
        let one = limit(LimitKind::Finite(ExtReal::one(P)));
        assert!(matches!(
            threshold_check(&samples, &one, Case::Main, &tol()).unwrap(),
            ThresholdOutcome::Inconclusive(_)
        ));
    }

    #[test]
    fn slow_second_order_drift_is_caught() {
        // 1 + 0.5·λ4/λ3 stays above 1.05 on the grid yet tends to 1.
        let s = spec("1/(n*log(n)*log(log(n))^0.5)");
        let samples: Vec<StatSample> = (50..=64)
            .map(|j| l_stat(&s, 1, &ExtReal::pow2(j, P).unwrap(), P).unwrap())
            .collect();
        assert!(samples.iter().all(|x| x.value.to_f64() > 1.05));
        let one = limit(LimitKind::Finite(ExtReal::one(P)));
        assert!(matches!(
            threshold_check(&samples, &one, Case::Main, &tol()).unwrap(),
            ThresholdOutcome::Inconclusive(_)
        ));
    }

    #[test]
    fn growth_past_the_natural_depth_is_caught() {
        // For this convergent term the depth-3 ratio statistic is about
        // 0.5·λ4: below the line on the grid, unbounded in the limit.
        let s = spec("1/(n*log(n)*log(log(n))^1.5)");
        let samples: Vec<StatSample> = (50..=64)
            .map(|j| crate::stats::s_stat(&s, 3, &ExtReal::pow2(j, P).unwrap(), P).unwrap())
            .collect();
        assert!(samples.iter().all(|x| x.value.to_f64() < 0.95));
        let one = limit(LimitKind::Finite(ExtReal::one(P)));
        assert!(matches!(
            threshold_check(&samples, &one, Case::Main, &tol()).unwrap(),
            ThresholdOutcome::Inconclusive(_)
        ));
    }

    #[test]
    fn remark_forms_agree_with_primary() {
        let s = spec("1/n^2");
        let primary = precondition_limit(&s, Precondition::Raabe, 0, false, &grid(), P, &tol()).unwrap();
        let remark = remark_limit(&s, 0, RemarkForm::Raabe, false, &grid(), P, &tol()).unwrap();
        assert!(primary.same_kind(&remark));
        let LimitKind::Finite(v) = primary.kind else { panic!() };
        assert!((v.to_f64() - 1.0).abs() < 1e-3);

        let n6 = ExtReal::from_i64(1_000_000, P);
        let aux = s.resolved();
        let a = precondition_value(&s, &aux, Precondition::Raabe, 0, false, &n6, P).unwrap();
        let b = remark_value(&s, &aux, RemarkForm::Raabe, 0, false, &n6, P).unwrap();
        assert!(a.relative_diff(&b) < 1e-3);
    }

    #[test]
    fn identity_psi_remark_matches_plain() {
        let mut s = spec("1/n^2");
        s.psi = Some(PsiFunction::identity());
        let aux = s.resolved();
        for v in [1000i64, 1 << 30] {
            let n = ExtReal::from_i64(v, P);
            for form in [RemarkForm::Modified, RemarkForm::Raabe] {
                let plain = remark_value(&s, &aux, form, 1, false, &n, P).unwrap();
                let psi = remark_value(&s, &aux, form, 1, true, &n, P).unwrap();
                assert_eq!(plain, psi);
            }
        }
        remark_limit(&s, 0, RemarkForm::Raabe, true, &grid(), P, &tol()).unwrap();
    }

    #[test]
    fn exponential_psi_fails_the_gate() {
        let mut s = spec("1/n^2");
        s.psi = Some(PsiFunction::new(Expr::parse("exp(n)").unwrap(), ExtReal::one(64)).unwrap());
        let gate = precondition_limit(&s, Precondition::PsiGate, 0, true, &grid(), P, &tol()).unwrap();
        let LimitKind::Finite(v) = &gate.kind else { panic!("{:?}", gate.kind) };
        let want = 1.0 / (std::f64::consts::E - 1.0);
        assert!((v.to_f64() - want).abs() < 1e-12);
        assert!(matches!(
            remark_limit(&s, 0, RemarkForm::Raabe, true, &grid(), P, &tol()),
            Err(RatioRootError::GateFailed(LimitKind::Finite(_)))
        ));
    }

    #[test]
    fn unit_exponent_collapses_the_root() {
        let mut s = with_aux("1/n^2", "n", "log(n)", "1");
        s.zeta = None;
        for v in [100i64, 12345, 1 << 40] {
            let n = ExtReal::from_i64(v, P);
            let got = j_stat(&s, 0, &n, P).unwrap().value;
            let a = Expr::parse("1/n^2").unwrap().eval(&n, 2 * P).unwrap();
            let want = ExtReal::one(2 * P).sub(&a).unwrap().mul(&n).unwrap().div(&n.ln().unwrap()).unwrap();
            assert!(got.relative_diff(&want) < 1e-15);
        }
    }

    #[test]
    fn labels() {
        assert_eq!(theorem_label(Family::Omega, false, None), "Theorem 2*");
        assert_eq!(theorem_label(Family::J, false, Some(Case::InfinityCase)), "Theorem 3.1");
        assert_eq!(theorem_label(Family::Ptilde, true, Some(Case::ZeroCase)), "Theorem 10.2");
        assert_eq!(theorem_label(Family::L, true, Some(Case::Main)), "Theorem 6");
    }
}
