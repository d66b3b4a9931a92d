//! Numeric evaluation, directly or in log space.

use dashu_int::IBig;

use super::{Expr, Func};
use crate::extrange::{ExtReal, NumError};

/// Guard bits carried through evaluation before the final rounding.
const GUARD_BITS: usize = 16;

/// Evaluation failure, naming the innermost subexpression that failed.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{error} in `{subexpr}`")]
pub struct EvalError {
    pub subexpr: String,
    pub error: NumError,
}

impl EvalError {
    fn at(e: &Expr, error: NumError) -> Self {
        EvalError { subexpr: e.to_string(), error }
    }
}

fn num(value: &dashu_ratio::RBig, p: usize) -> Result<ExtReal, NumError> {
    ExtReal::from_ratio(value.numerator().clone(), IBig::from(value.denominator().clone()), p)
}

/// `λ_k(x)` with `λ_0 = 1`, `λ_1 = x`.
pub(crate) fn iter_log(k: u32, x: &ExtReal) -> Result<ExtReal, NumError> {
    if k == 0 {
        return Ok(ExtReal::one(x.precision()));
    }
    let mut v = x.clone();
    for _ in 1..k {
        v = v.ln()?;
    }
    Ok(v)
}

impl Expr {
    /// Value at `n`, rounded to `precision` bits.
    pub fn eval(&self, n: &ExtReal, precision: usize) -> Result<ExtReal, EvalError> {
        let work = precision + GUARD_BITS;
        Ok(self.eval_raw(&n.with_precision(n.precision().max(work)), work)?.with_precision(precision))
    }

    /// `ln` of the value at `n`, splitting products, quotients, powers and
    /// exponentials so that values far outside the exponent range still
    /// have representable logarithms.
    pub fn eval_ln(&self, n: &ExtReal, precision: usize) -> Result<ExtReal, EvalError> {
        let work = precision + GUARD_BITS;
        let n = n.with_precision(n.precision().max(work));
        Ok(self.ln_raw(&n, work)?.with_precision(precision))
    }

    fn ln_raw(&self, n: &ExtReal, p: usize) -> Result<ExtReal, EvalError> {
        let split = match self {
            Expr::Mul(a, b) => Self::both_ln(a, b, n, p).map(|(x, y)| x.add(&y)),
            Expr::Div(a, b) => Self::both_ln(a, b, n, p).map(|(x, y)| x.sub(&y)),
            Expr::Pow(a, b) => match a.ln_raw(n, p) {
                Ok(la) => Some(b.eval_raw(n, p)?.mul(&la)),
                Err(_) => None,
            },
            Expr::Call(Func::Exp, a) => return a.eval_raw(n, p),
            Expr::Call(Func::Sqrt, a) => match a.ln_raw(n, p) {
                Ok(la) => Some(la.mul(&ExtReal::from_f64(0.5, p).expect("finite"))),
                Err(_) => None,
            },
            Expr::E => return Ok(ExtReal::one(p)),
            _ => None,
        };
        match split {
            Some(result) => result.map_err(|err| EvalError::at(self, err)),
            None => {
                let v = self.eval_raw(n, p)?;
                v.ln().map_err(|err| EvalError::at(self, err))
            }
        }
    }

    /// Log-space pieces of both operands, or `None` when either is not
    /// positive (the caller then evaluates directly).
    fn both_ln(a: &Expr, b: &Expr, n: &ExtReal, p: usize) -> Option<(ExtReal, ExtReal)> {
        Some((a.ln_raw(n, p).ok()?, b.ln_raw(n, p).ok()?))
    }

    fn eval_raw(&self, n: &ExtReal, p: usize) -> Result<ExtReal, EvalError> {
        let wrap = |r: Result<ExtReal, NumError>| r.map_err(|err| EvalError::at(self, err));
        match self {
            Expr::Num(r) => wrap(num(r, p)),
            Expr::E => Ok(ExtReal::e(p)),
            Expr::Pi => Ok(ExtReal::pi(p)),
            Expr::Var => Ok(n.clone()),
            Expr::Neg(a) => Ok(a.eval_raw(n, p)?.neg()),
            Expr::Add(a, b) => wrap(a.eval_raw(n, p)?.add(&b.eval_raw(n, p)?)),
            Expr::Sub(a, b) => wrap(a.eval_raw(n, p)?.sub(&b.eval_raw(n, p)?)),
            Expr::Mul(a, b) => wrap(a.eval_raw(n, p)?.mul(&b.eval_raw(n, p)?)),
            Expr::Div(a, b) => wrap(a.eval_raw(n, p)?.div(&b.eval_raw(n, p)?)),
            Expr::Pow(a, b) => {
                let base = a.eval_raw(n, p)?;
                if let Expr::Num(r) = b.as_ref() {
                    if r.is_int() {
                        if let Ok(k) = i64::try_from(r.numerator().clone()) {
                            return wrap(base.powi(k));
                        }
                    }
                }
                wrap(base.pow(&b.eval_raw(n, p)?))
            }
            Expr::Call(func, a) => {
                let x = a.eval_raw(n, p)?;
                wrap(match func {
                    Func::Log => x.ln(),
                    Func::Exp => x.exp(),
                    Func::Sqrt => x.sqrt(),
                    Func::Lgamma => x.lgamma(),
                })
            }
            Expr::IterLog(k, a) => wrap(iter_log(*k, &a.eval_raw(n, p)?)),
        }
    }

    /// Convenience for tests and diagnostics: value at `n` as `f64`.
    pub fn eval_f64(&self, n: f64) -> Result<f64, EvalError> {
        let n = ExtReal::from_f64(n, 128).map_err(|err| EvalError::at(&Expr::Var, err))?;
        Ok(self.eval(&n, 128)?.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(src: &str, n: &ExtReal) -> ExtReal {
        Expr::parse(src).unwrap().eval(n, 128).unwrap()
    }

    #[test]
    fn simple_values() {
        assert_eq!(at("n^2", &ExtReal::from_i64(3, 128)), ExtReal::from_i64(9, 128));
        let e = ExtReal::e(128);
        let got = at("1/(n*log(n))", &e);
        let want = ExtReal::one(128).div(&e).unwrap();
        assert!(got.relative_diff(&want) < 1e-37);
        assert_eq!(at("2^-3^2", &e), ExtReal::pow2(-9, 128).unwrap());
    }

    #[test]
    fn lgamma_matches_exact_factorial() {
        let got = at("lgamma(n+1)", &ExtReal::from_i64(10, 128));
        let want = ExtReal::from_i64(3_628_800, 192).ln().unwrap();
        assert!(got.relative_diff(&want) < 1e-36);
    }

    #[test]
    fn domain_error_names_subexpression() {
        let e = Expr::parse("1 + log(n - 5)").unwrap();
        let err = e.eval(&ExtReal::from_i64(3, 128), 128).unwrap_err();
        assert_eq!(err.subexpr, "log(n - 5)");
        assert!(matches!(err.error, NumError::Domain(_)));
    }

    #[test]
    fn log_space_survives_huge_terms() {
        let n = ExtReal::pow2(64, 128).unwrap();
        let geometric = Expr::parse("1/2^n").unwrap();
        assert!(geometric.eval(&n, 128).is_err());
        let ln = geometric.eval_ln(&n, 128).unwrap();
        let want = -(2f64.powi(64)) * std::f64::consts::LN_2;
        assert!((ln.to_f64() / want - 1.0).abs() < 1e-15);

        let factorial = Expr::parse("1/exp(lgamma(n+1))").unwrap();
        assert!(factorial.eval_ln(&n, 128).is_ok());

        let mixed = Expr::parse("(-1)^2/n").unwrap();
        assert!(mixed.eval_ln(&ExtReal::from_i64(4, 128), 128).unwrap().relative_diff(
            &ExtReal::from_f64(0.25, 128).unwrap().ln().unwrap()
        ) < 1e-36);
    }
}
