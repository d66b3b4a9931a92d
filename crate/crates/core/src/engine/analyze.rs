use std::collections::HashMap;

use crate::extrange::{ExtReal, NumError};
use crate::lambda::LambdaError;
use crate::ratio_root::{
    precondition_limit, remark_limit, theorem_label, threshold_check, Case, Comparison, Confidence, LimitEstimate,
    LimitKind, Precondition, RatioRootError, RemarkForm, ThresholdOutcome,
};
use crate::stats::{AuxValues, Family, PointData, PsiData, SeriesSpec, StatError, StatSample};

use super::config::{EngineConfig, MAX_ENGINE_PRECISION, PASS_AGREEMENT, PASS_FLOOR};
use super::grid::ProbeGrid;
use super::verdict::{Conclusion, FiredBy, NamedLimit, NearestMiss, PsiDescription, Verdict};

/// Deepest `k` accepted from callers.
pub const MAX_K: usize = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("term is not positive at n = {0}")]
    NonPositiveTerm(String),
    #[error("term cannot be evaluated at n = {n}: {source}")]
    Term { n: String, source: StatError },
    #[error("no test family is applicable: {}", .0.join("; "))]
    NoApplicableFamily(Vec<String>),
    #[error("{} says {} but {} says {}", .first.theorem, .first.conclusion, .second.theorem, .second.conclusion)]
    Contradiction { first: Box<FiredBy>, second: Box<FiredBy> },
}

/// One test: a family on one scale at one depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct TestId {
    family: Family,
    psi: bool,
    k: usize,
}

struct Firing {
    fired: FiredBy,
    samples: Vec<StatSample>,
}

struct Miss {
    miss: NearestMiss,
    samples: Vec<StatSample>,
}

#[derive(Default)]
struct Pass {
    firings: Vec<Firing>,
    misses: Vec<Miss>,
    limits: Vec<NamedLimit>,
    warnings: Vec<String>,
    /// Why tests could not run, for the no-family error.
    skipped: Vec<String>,
    any_samples: bool,
}

fn validate(config: &EngineConfig) -> Result<(), EngineError> {
    if config.k_max > MAX_K {
        return Err(EngineError::InvalidConfig(format!("k_max {} exceeds {MAX_K}", config.k_max)));
    }
    if !(64..=MAX_ENGINE_PRECISION).contains(&config.precision) {
        return Err(EngineError::InvalidConfig(format!(
            "precision {} outside [64, {MAX_ENGINE_PRECISION}]",
            config.precision
        )));
    }
    if config.families.is_empty() {
        return Err(EngineError::InvalidConfig("no families selected".into()));
    }
    if config.density == 0 {
        return Err(EngineError::InvalidConfig("grid density must be positive".into()));
    }
    Ok(())
}

fn out_of_reach(e: &StatError) -> bool {
    let num = |n: &NumError| {
        matches!(n, NumError::Overflow | NumError::Underflow | NumError::PrecisionLimit(_) | NumError::Uncertified)
    };
    match e {
        StatError::Num(n) => num(n),
        StatError::Eval(ev) => num(&ev.error),
        StatError::Lambda(LambdaError::Num(n)) => num(n),
        _ => false,
    }
}

/// Point data on the statistic grid. Points past numeric reach end the
/// grid; a non-positive term is fatal.
fn points(
    spec: &SeriesSpec,
    grid: &[ExtReal],
    k_max: usize,
    precision: usize,
    with_aux: bool,
    with_psi: bool,
    warnings: &mut Vec<String>,
) -> Result<Vec<PointData>, EngineError> {
    let plain_spec = SeriesSpec { psi: None, ..spec.clone() };
    let aux = spec.resolved();
    let mut out = Vec::with_capacity(grid.len());
    for n in grid {
        let mut data = match PointData::compute(&plain_spec, None, n, k_max, precision) {
            Ok(d) => d,
            Err(StatError::NonPositiveTerm(at)) => return Err(EngineError::NonPositiveTerm(at)),
            Err(e) if out_of_reach(&e) && !out.is_empty() => {
                warnings.push(format!("statistic grid ends before n = {n}: {e}"));
                break;
            }
            Err(e) if out.is_empty() && !out_of_reach(&e) => {
                warnings.push(format!("skipping n = {n}: {e}"));
                continue;
            }
            Err(source) => return Err(EngineError::Term { n: n.to_string(), source }),
        };
        if with_aux {
            data.aux = AuxValues::eval(&aux, n, precision).ok();
        }
        if with_psi {
            let psi = spec.psi.as_ref().expect("checked by caller");
            if *n >= psi.sigma {
                data.psi = PsiData::eval(psi, n, k_max + 2, precision, true).ok();
            }
        }
        out.push(data);
    }
    Ok(out)
}

fn samples_for(points: &[PointData], id: TestId, first_error: &mut Option<String>) -> Vec<StatSample> {
    let mut out = Vec::new();
    for p in points {
        match p.sample(id.family, id.k, id.psi) {
            Ok(s) => out.push(s),
            Err(StatError::BelowDomain { .. } | StatError::MissingPsi(_) | StatError::NonPositiveAux { .. }) => {}
            Err(e) => {
                if first_error.is_none() {
                    *first_error = Some(format!("n = {}: {e}", p.n));
                }
            }
        }
    }
    out
}

fn conclusion_of(c: Comparison) -> Conclusion {
    match c {
        Comparison::AboveForConvergence => Conclusion::Converges,
        Comparison::BelowForDivergence => Conclusion::Diverges,
    }
}

fn unit_limit(p: usize) -> LimitEstimate {
    LimitEstimate { kind: LimitKind::Finite(ExtReal::one(p)), samples: vec![], confidence: Confidence::Stable }
}

struct Runner<'a> {
    spec: &'a SeriesSpec,
    config: &'a EngineConfig,
    grid: &'a ProbeGrid,
    precision: usize,
    /// Limits that do not depend on `k`, keyed by (precondition, ψ).
    fixed: HashMap<(Precondition, bool), Result<LimitEstimate, RatioRootError>>,
}

impl Runner<'_> {
    fn fixed_limit(&mut self, which: Precondition, psi: bool) -> Result<LimitEstimate, RatioRootError> {
        if let Some(v) = self.fixed.get(&(which, psi)) {
            return v.clone();
        }
        let v = precondition_limit(
            self.spec,
            which,
            0,
            psi,
            &self.grid.limit_points,
            self.precision,
            &self.config.tolerances,
        );
        self.fixed.insert((which, psi), v.clone());
        v
    }

    /// The limit that selects the branch of `id`, or why there is none.
    fn selecting_limit(&mut self, id: TestId, pass: &mut Pass) -> Result<LimitEstimate, String> {
        let p = self.precision;
        let tol = self.config.tolerances;
        let label = theorem_label(id.family, id.psi, None);
        if let Some(side) = Precondition::side_condition(id.family, id.psi) {
            let est = self.fixed_limit(side, id.psi).map_err(|e| format!("{label}: {e}"))?;
            let wanted = if side == Precondition::PsiGate { LimitKind::PlusInfinity } else { LimitKind::Zero };
            let name = side.name(id.psi).to_string();
            let ok = est.kind == wanted;
            if !pass.limits.iter().any(|l| l.name == name && l.family == id.family && l.psi == id.psi) {
                pass.limits.push(NamedLimit { name: name.clone(), family: id.family, psi: id.psi, k: id.k, estimate: est.clone() });
            }
            if !ok {
                return Err(format!("{label}: {name} tends to {}, needs {wanted}", est.kind));
            }
        }
        let Some(which) = Precondition::selecting(id.family) else {
            return Ok(unit_limit(p));
        };
        let primary = precondition_limit(self.spec, which, id.k, id.psi, &self.grid.limit_points, p, &tol)
            .map_err(|e| format!("{label} at k = {}: {e}", id.k))?;
        pass.limits.push(NamedLimit {
            name: which.name(id.psi).into(),
            family: id.family,
            psi: id.psi,
            k: id.k,
            estimate: primary.clone(),
        });
        let remark = RemarkForm::for_family(id.family)
            .and_then(|form| remark_limit(self.spec, id.k, form, id.psi, &self.grid.limit_points, p, &tol).ok());
        if let Some(remark) = &remark {
            pass.limits.push(NamedLimit {
                name: format!("{} (alternative form)", which.name(id.psi)),
                family: id.family,
                psi: id.psi,
                k: id.k,
                estimate: remark.clone(),
            });
        }
        match (primary.kind.clone(), remark) {
            (LimitKind::Undetermined, Some(r)) if r.kind != LimitKind::Undetermined => Ok(r),
            (LimitKind::Undetermined, _) => Err(format!("{label} at k = {}: {} is undetermined", id.k, which.name(id.psi))),
            (_, Some(r)) if r.kind != LimitKind::Undetermined && !r.same_kind(&primary) => {
                pass.warnings.push(format!(
                    "{label} at k = {}: {} tends to {} but its alternative form tends to {}",
                    id.k,
                    which.name(id.psi),
                    primary.kind,
                    r.kind
                ));
                Err(format!("{label} at k = {}: limit forms disagree", id.k))
            }
            _ => Ok(primary),
        }
    }

    fn run(&mut self, pass: &mut Pass, with_psi: bool) -> Result<(), EngineError> {
        let needs_aux = self.config.families.iter().any(|f| f.needs_limit());
        let pts = points(
            self.spec,
            &self.grid.points,
            self.config.k_max,
            self.precision,
            needs_aux,
            with_psi,
            &mut pass.warnings,
        )?;
        let mut families: Vec<Family> = Family::ORDER.into_iter().filter(|f| self.config.families.contains(f)).collect();
        families.dedup();
        let scales: &[bool] = if with_psi { &[false, true] } else { &[false] };
        for &family in &families {
            for &psi in scales {
                for k in 0..=self.config.k_max {
                    let id = TestId { family, psi, k };
                    self.run_test(id, &pts, pass)?;
                }
            }
        }
        Ok(())
    }

    fn run_test(&mut self, id: TestId, pts: &[PointData], pass: &mut Pass) -> Result<(), EngineError> {
        let tol = self.config.tolerances;
        let mut first_error = None;
        let samples = samples_for(pts, id, &mut first_error);
        let label = theorem_label(id.family, id.psi, None);
        if let Some(err) = first_error {
            pass.warnings.push(format!("{label} at k = {}: some points failed ({err})", id.k));
        }
        if samples.len() < tol.window {
            pass.skipped.push(format!("{label} at k = {}: only {} samples", id.k, samples.len()));
            return Ok(());
        }
        pass.any_samples = true;
        let limit = match self.selecting_limit(id, pass) {
            Ok(l) => l,
            Err(reason) => {
                pass.skipped.push(reason);
                return Ok(());
            }
        };
        let case = Case::for_limit(&limit.kind).expect("determined limits only");
        let theorem = theorem_label(id.family, id.psi, Some(case)).to_string();
        let outcome = threshold_check(&samples, &limit, case, &tol).map_err(|e| EngineError::InvalidConfig(e.to_string()))?;
        match outcome {
            ThresholdOutcome::Decided(report) => {
                let fired = FiredBy {
                    family: id.family,
                    psi: id.psi,
                    k: id.k,
                    theorem,
                    case,
                    conclusion: conclusion_of(report.comparison),
                    bound: report.statistic_limit_bound,
                    level: report.constant,
                    margin: report.margin,
                    from_n: samples[report.from_index].n.clone(),
                };
                pass.firings.push(Firing { fired, samples });
            }
            ThresholdOutcome::Inconclusive(near) => {
                let miss = NearestMiss {
                    family: id.family,
                    psi: id.psi,
                    k: id.k,
                    theorem,
                    level: near.level,
                    gap: near.gap,
                    reason: near.reason,
                };
                pass.misses.push(Miss { miss, samples });
            }
        }
        Ok(())
    }
}

fn run_pass(spec: &SeriesSpec, config: &EngineConfig, grid: &ProbeGrid, precision: usize, with_psi: bool) -> Result<Pass, EngineError> {
    let mut runner = Runner { spec, config, grid, precision, fixed: HashMap::new() };
    let mut pass = Pass::default();
    runner.run(&mut pass, with_psi)?;
    let mut first_conv: Option<&Firing> = None;
    let mut first_div: Option<&Firing> = None;
    for f in &pass.firings {
        match f.fired.conclusion {
            Conclusion::Converges => first_conv = first_conv.or(Some(f)),
            Conclusion::Diverges => first_div = first_div.or(Some(f)),
            Conclusion::Inconclusive => {}
        }
    }
    if let (Some(c), Some(d)) = (first_conv, first_div) {
        return Err(EngineError::Contradiction { first: Box::new(c.fired.clone()), second: Box::new(d.fired.clone()) });
    }
    Ok(pass)
}

/// Values agree between passes to the pass tolerance.
fn agree(a: &ExtReal, b: &ExtReal) -> bool {
    if a.abs().to_f64() < PASS_FLOOR && b.abs().to_f64() < PASS_FLOOR {
        return true;
    }
    a.relative_diff(b) <= PASS_AGREEMENT
}

/// Recomputes `samples` of one test at `precision` and compares.
fn stable_at(spec: &SeriesSpec, samples: &[StatSample], k_max: usize, precision: usize) -> bool {
    let aux = spec.resolved();
    samples.iter().all(|s| {
        let data = PointData::compute(spec, Some(&aux), &s.n, k_max, precision)
            .or_else(|_| PointData::compute(spec, None, &s.n, k_max, precision));
        match data.and_then(|d| d.statistic(s.family, s.k, s.psi_generalized)) {
            Ok(v) => agree(&v, &s.value),
            Err(_) => false,
        }
    })
}

/// Runs every enabled test and returns the first decision in the fixed
/// order, or an inconclusive verdict carrying the nearest miss.
pub fn analyze(spec: &SeriesSpec, config: &EngineConfig) -> Result<Verdict, EngineError> {
    validate(config)?;
    let grid = ProbeGrid::capped(config.density, config.deep_probe, config.n_max.as_ref(), config.precision);
    let mut warnings = Vec::new();
    let mut with_psi = false;
    if let Some(psi) = &spec.psi {
        let problems = psi.validate(&grid.points, config.precision);
        if problems.is_empty() {
            with_psi = true;
        } else {
            warnings.extend(problems.into_iter().map(|p| format!("psi tests skipped: {p}")));
        }
    }

    let mut precision = config.precision;
    let (pass, certified) = loop {
        let pass = run_pass(spec, config, &grid, precision, with_psi)?;
        if !config.verify_precision {
            break (pass, true);
        }
        let deciding = pass
            .firings
            .first()
            .map(|f| &f.samples)
            .or_else(|| nearest(&pass.misses).map(|m| &m.samples));
        let Some(deciding) = deciding else { break (pass, true) };
        if stable_at(spec, deciding, config.k_max, 2 * precision) {
            break (pass, true);
        }
        if 2 * precision > MAX_ENGINE_PRECISION {
            break (pass, false);
        }
        warnings.push(format!("results at {precision} and {} bits disagree; escalating", 2 * precision));
        precision *= 2;
    };
    warnings.extend(pass.warnings);
    if !pass.any_samples && pass.firings.is_empty() {
        let mut reasons = pass.skipped;
        reasons.extend(warnings);
        return Err(EngineError::NoApplicableFamily(reasons));
    }

    let psi = spec.psi.as_ref().map(|p| PsiDescription {
        psi: p.psi.to_string(),
        psi_prime: p.psi_prime.to_string(),
        sigma: p.sigma.clone(),
    });
    let mut verdict = Verdict {
        term: spec.term.to_string(),
        conclusion: Conclusion::Inconclusive,
        fired_by: None,
        margin: ExtReal::zero(precision),
        evidence: vec![],
        preconditions: pass.limits,
        probes: grid.describe(),
        also_fired: vec![],
        nearest_miss: None,
        psi,
        precision,
        warnings,
    };
    let mut firings = pass.firings.into_iter();
    match firings.next() {
        Some(first) if certified => {
            verdict.conclusion = first.fired.conclusion;
            verdict.margin = first.fired.margin.clone();
            verdict.fired_by = Some(first.fired);
            verdict.evidence = first.samples;
            verdict.also_fired = firings.map(|f| f.fired).collect();
        }
        first => {
            if let Some(first) = first {
                verdict.warnings.push(format!(
                    "{} fired but could not be confirmed at {MAX_ENGINE_PRECISION} bits",
                    first.fired.theorem
                ));
            }
            if let Some(m) = nearest(&pass.misses) {
                verdict.nearest_miss = Some(m.miss.clone());
                verdict.evidence = m.samples.clone();
            }
        }
    }
    Ok(verdict)
}

/// Inconclusive test with the smallest gap; ties keep the earlier one.
fn nearest(misses: &[Miss]) -> Option<&Miss> {
    misses.iter().fold(None, |best: Option<&Miss>, m| match best {
        Some(b) if b.miss.gap <= m.miss.gap || m.miss.gap.is_nan() => Some(b),
        _ => Some(m),
    })
}
