//! Reparameterizations `ψ` with their derivative and validity threshold.

use super::{DiffError, EvalError, Expr};
use crate::extrange::{ExtReal, NumError};

/// Relative mismatch above which an explicitly supplied derivative is
/// reported as suspicious.
const DERIVATIVE_WARN_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PsiError {
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A reparameterization `ψ`, its derivative `ψ′` and the threshold `σ`
/// from which both are expected to be positive with `ψ` increasing.
#[derive(Debug, Clone)]
pub struct PsiFunction {
    pub psi: Expr,
    pub psi_prime: Expr,
    pub sigma: ExtReal,
    /// True when `psi_prime` was supplied rather than derived.
    pub explicit_prime: bool,
}

/// Symmetric difference quotient with step `x * 2^-40`, at 256 bits.
pub fn central_difference(e: &Expr, x: &ExtReal) -> Result<ExtReal, EvalError> {
    let p = 256;
    let x = x.with_precision(p);
    let wrap = |err: NumError| EvalError { subexpr: e.to_string(), error: err };
    let h = x.mul(&ExtReal::pow2(-40, p).map_err(wrap)?).map_err(wrap)?;
    let hi = e.eval(&x.add(&h).map_err(wrap)?, p)?;
    let lo = e.eval(&x.sub(&h).map_err(wrap)?, p)?;
    let two_h = h.mul(&ExtReal::from_i64(2, p)).map_err(wrap)?;
    hi.sub(&lo).and_then(|d| d.div(&two_h)).map_err(wrap)
}

impl PsiFunction {
    /// `ψ(x) = x`.
    pub fn identity() -> Self {
        PsiFunction {
            psi: Expr::Var,
            psi_prime: Expr::int(1),
            sigma: ExtReal::one(64),
            explicit_prime: false,
        }
    }

    /// Derives `ψ′` symbolically.
    pub fn new(psi: Expr, sigma: ExtReal) -> Result<Self, PsiError> {
        let psi_prime = psi.differentiate()?;
        Ok(PsiFunction { psi, psi_prime, sigma, explicit_prime: false })
    }

    /// Uses a supplied `ψ′`, spot-checking it against difference quotients
    /// at three points past `σ`. Mismatches come back as warnings.
    pub fn with_derivative(psi: Expr, psi_prime: Expr, sigma: ExtReal) -> (Self, Vec<String>) {
        let mut warnings = Vec::new();
        let base = if sigma > ExtReal::one(64) { sigma.clone() } else { ExtReal::one(64) };
        for scale in [4, 64, 1024] {
            let x = match base.mul(&ExtReal::from_i64(scale, 128)) {
                Ok(x) => x,
                Err(_) => continue,
            };
            let check = psi_prime
                .eval(&x, 128)
                .and_then(|given| Ok((given, central_difference(&psi, &x)?)));
            match check {
                Ok((given, numeric)) => {
                    let scale = given.abs().to_f64().max(1.0);
                    let mismatch = given.sub(&numeric).map(|d| d.abs().to_f64() / scale).unwrap_or(f64::INFINITY);
                    if mismatch > DERIVATIVE_WARN_TOL {
                        warnings.push(format!(
                            "supplied psi' = {psi_prime} differs from the numeric derivative of {psi} at n = {} (relative mismatch {mismatch:.3e})",
                            x.to_f64()
                        ));
                    }
                }
                Err(err) => warnings.push(format!("could not spot-check psi' at n = {}: {err}", x.to_f64())),
            }
        }
        (PsiFunction { psi, psi_prime, sigma, explicit_prime: true }, warnings)
    }

    pub fn is_identity(&self) -> bool {
        self.psi == Expr::Var
    }

    /// Sampled check of the class hypotheses on the given increasing points:
    /// positivity of `ψ` and `ψ′`, strict increase, and growth (last value
    /// above ten times the first). Returns one message per violation.
    pub fn validate(&self, points: &[ExtReal], precision: usize) -> Vec<String> {
        let mut problems = Vec::new();
        let mut values: Vec<ExtReal> = Vec::new();
        for x in points.iter().filter(|x| **x >= self.sigma) {
            match self.psi.eval(x, precision) {
                Ok(v) if v.is_positive() => {
                    if let Some(prev) = values.last() {
                        if v <= *prev {
                            problems.push(format!("psi is not increasing at n = {x}"));
                        }
                    }
                    values.push(v);
                }
                Ok(_) => problems.push(format!("psi is not positive at n = {x}")),
                Err(err) => problems.push(format!("psi fails at n = {x}: {err}")),
            }
            match self.psi_prime.eval(x, precision) {
                Ok(v) if v.is_positive() => {}
                Ok(_) => problems.push(format!("psi' is not positive at n = {x}")),
                Err(err) => problems.push(format!("psi' fails at n = {x}: {err}")),
            }
        }
        if let (Some(first), Some(last)) = (values.first(), values.last()) {
            let ten_first = first.mul(&ExtReal::from_i64(10, precision));
            if ten_first.is_ok_and(|bound| *last <= bound) {
                problems.push("psi does not appear unbounded on the probe grid".into());
            }
        }
        problems
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<ExtReal> {
        (4..20).map(|j| ExtReal::pow2(j, 128).unwrap()).collect()
    }

    #[test]
    fn symbolic_derivative_is_used() {
        let psi = PsiFunction::new(Expr::parse("n^2").unwrap(), ExtReal::one(64)).unwrap();
        assert_eq!(psi.psi_prime.to_string(), "2*n");
        assert!(psi.validate(&grid(), 128).is_empty());
    }

    #[test]
    fn wrong_explicit_derivative_warns() {
        let (_, warnings) = PsiFunction::with_derivative(
            Expr::parse("n^2").unwrap(),
            Expr::parse("3*n").unwrap(),
            ExtReal::one(64),
        );
        assert_eq!(warnings.len(), 3);
        let (_, warnings) = PsiFunction::with_derivative(
            Expr::parse("n^2").unwrap(),
            Expr::parse("2*n").unwrap(),
            ExtReal::one(64),
        );
        assert!(warnings.is_empty());
    }

    #[test]
    fn invalid_psi_is_reported() {
        let psi = PsiFunction::new(Expr::parse("1/n").unwrap(), ExtReal::one(64)).unwrap();
        let problems = psi.validate(&grid(), 128);
        assert!(problems.iter().any(|p| p.contains("not increasing")));
        assert!(problems.iter().any(|p| p.contains("psi' is not positive")));
        let bounded = PsiFunction::new(Expr::parse("2 - 1/n").unwrap(), ExtReal::one(64)).unwrap();
        assert!(bounded.validate(&grid(), 128).iter().any(|p| p.contains("unbounded")));
    }

    #[test]
    fn lgamma_psi_needs_explicit_derivative() {
        assert!(PsiFunction::new(Expr::parse("lgamma(n)").unwrap(), ExtReal::one(64)).is_err());
    }
}
