//! Iterated logarithms `λ_0 = 1`, `λ_1(x) = x`, `λ_{i+1}(x) = ln λ_i(x)`.

use serde::Serialize;

use crate::extrange::{ExtReal, NumError};

/// Deepest level supported by the public API.
pub const MAX_LEVEL: usize = 8;

/// Extra bits carried internally by the difference recursion.
const GUARD_BITS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LambdaError {
    /// `λ_level(x) <= 0`: the argument sits below the domain threshold.
    #[error("iterated log level {level} is not positive at x = {x}")]
    Domain { level: usize, x: String },
    #[error("level {0} exceeds the chain depth {1}")]
    OutOfRange(usize, usize),
    #[error("difference step must be positive")]
    NonPositiveStep,
    #[error(transparent)]
    Num(#[from] NumError),
}

/// `values[i] = λ_i(x)` for `i = 0..=k_max`, all positive.
#[derive(Debug, Clone)]
pub struct LambdaChain {
    pub x: ExtReal,
    pub values: Vec<ExtReal>,
}

impl LambdaChain {
    pub fn k_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, level: usize) -> Result<&ExtReal, LambdaError> {
        self.values.get(level).ok_or(LambdaError::OutOfRange(level, self.k_max()))
    }
}

/// Builds `λ_0(x) … λ_{k_max}(x)` at `precision` bits.
pub fn chain(x: &ExtReal, k_max: usize, precision: usize) -> Result<LambdaChain, LambdaError> {
    let x = x.with_precision(x.precision().max(precision));
    let mut values = vec![ExtReal::one(precision)];
    if k_max >= 1 {
        if !x.is_positive() {
            return Err(LambdaError::Domain { level: 1, x: x.to_string() });
        }
        values.push(x.clone());
    }
    for level in 2..=k_max {
        let next = values[level - 1].ln()?;
        if !next.is_positive() {
            return Err(LambdaError::Domain { level, x: x.to_string() });
        }
        values.push(next);
    }
    Ok(LambdaChain { x, values })
}

/// `∏_{i=0}^{k} λ_i(x)`.
pub fn prod_lambda(c: &LambdaChain, k: usize) -> Result<ExtReal, LambdaError> {
    let mut acc = c.get(0)?.clone();
    for level in 1..=k {
        acc = acc.mul(c.get(level)?)?;
    }
    Ok(acc)
}

/// `Σ_{i=1}^{k} ln λ_i(x) = Σ_{i=2}^{k+1} λ_i(x)`, the logarithm of the
/// product without forming it. Needs the chain to level `k + 1`.
pub fn ln_prod_lambda(c: &LambdaChain, k: usize) -> Result<ExtReal, LambdaError> {
    let mut acc = ExtReal::zero(c.get(0)?.precision());
    for level in 2..=k + 1 {
        acc = acc.add(c.get(level)?)?;
    }
    Ok(acc)
}

/// `λ_i(x + h) - λ_i(x)` for `i = 0..=levels`, from the chain at `x` and the
/// step `h > 0`, through `d_{i+1} = log1p(d_i / λ_i(x))`. No value at `x + h`
/// is ever formed, so nothing cancels.
pub fn lambda_diffs(c: &LambdaChain, h: &ExtReal, levels: usize) -> Result<Vec<ExtReal>, LambdaError> {
    if !h.is_positive() {
        return Err(LambdaError::NonPositiveStep);
    }
    let p = c.get(0)?.precision();
    let work = p + GUARD_BITS;
    let mut diffs = vec![ExtReal::zero(p)];
    if levels == 0 {
        return Ok(diffs);
    }
    let mut d = h.with_precision(h.precision().max(work));
    diffs.push(d.with_precision(p));
    for level in 1..levels {
        let base = c.get(level)?.with_precision(work);
        d = d.div(&base)?.log1p()?;
        diffs.push(d.with_precision(p));
    }
    Ok(diffs)
}

/// `λ_k(n + h) - λ_k(n)` for a step `h > 0`.
pub fn lambda_diff_step(k: usize, n: &ExtReal, h: &ExtReal, precision: usize) -> Result<ExtReal, LambdaError> {
    let c = chain(n, k.saturating_sub(1).max(1), precision)?;
    let diffs = lambda_diffs(&c, h, k)?;
    Ok(diffs[k].clone())
}

/// `λ_k(m) - λ_k(n)` for `m > n`. The step `m - n` is formed exactly.
pub fn lambda_diff(k: usize, n: &ExtReal, m: &ExtReal, precision: usize) -> Result<ExtReal, LambdaError> {
    let h = m.add_exact(&n.neg())?;
    if !h.is_positive() {
        return Err(LambdaError::NonPositiveStep);
    }
    // The upper end must lie in the domain as well.
    chain(m, k, precision)?;
    lambda_diff_step(k, n, &h, precision)
}

/// Smallest integer `gamma` with `λ_k(n) > 0` for every `n > gamma`.
#[derive(Debug, Clone, Serialize)]
pub struct DomainThreshold {
    pub k: usize,
    pub gamma: ExtReal,
    /// False when `gamma` is too large to hold exactly and is rounded.
    pub exact: bool,
}

/// Domain threshold for level `k`: `λ_k(n) > 0` exactly when `n` exceeds
/// the tower `t_k` with `t_1 = 0`, `t_{i+1} = e^{t_i}`; the candidate
/// `floor(t_k)` is then confirmed by direct evaluation.
pub fn min_domain(k: usize) -> DomainThreshold {
    let p = 128;
    if k <= 1 {
        return DomainThreshold { k, gamma: ExtReal::zero(p), exact: true };
    }
    let mut tower = ExtReal::zero(p);
    for _ in 1..k {
        tower = tower.exp().expect("tower stays within range for k <= 8");
    }
    if tower.log2_magnitude() >= 100 {
        return DomainThreshold { k, gamma: tower, exact: false };
    }
    let positive_at = |n: &ExtReal| {
        let work = (n.log2_magnitude().max(0) as usize + 64).max(p);
        chain(n, k, work).is_ok()
    };
    let one = ExtReal::one(p);
    let mut gamma = tower.floor();
    while !gamma.is_zero() && positive_at(&gamma) {
        gamma = gamma.sub(&one).expect("small integers");
    }
    while !positive_at(&gamma.add(&one).expect("small integers")) {
        gamma = gamma.add(&one).expect("small integers");
    }
    DomainThreshold { k, gamma, exact: true }
}
