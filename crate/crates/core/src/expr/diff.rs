//! Symbolic derivative with respect to `n`.

use super::{Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiffError {
    #[error("cannot differentiate `{0}`: lgamma derivatives are not supported")]
    Unsupported(String),
}

pub(super) fn differentiate(e: &Expr) -> Result<Expr, DiffError> {
    Ok(raw(e)?.simplify())
}

fn raw(e: &Expr) -> Result<Expr, DiffError> {
    Ok(match e {
        Expr::Num(_) | Expr::E | Expr::Pi => Expr::int(0),
        Expr::Var => Expr::int(1),
        Expr::Neg(a) => Expr::neg(raw(a)?),
        Expr::Add(a, b) => Expr::add(raw(a)?, raw(b)?),
        Expr::Sub(a, b) => Expr::sub(raw(a)?, raw(b)?),
        Expr::Mul(a, b) => Expr::add(
            Expr::mul(raw(a)?, (**b).clone()),
            Expr::mul((**a).clone(), raw(b)?),
        ),
        Expr::Div(a, b) if a.is_constant() => Expr::neg(Expr::div(
            Expr::mul((**a).clone(), raw(b)?),
            Expr::pow((**b).clone(), Expr::int(2)),
        )),
        Expr::Div(a, b) => Expr::div(
            Expr::sub(
                Expr::mul(raw(a)?, (**b).clone()),
                Expr::mul((**a).clone(), raw(b)?),
            ),
            Expr::pow((**b).clone(), Expr::int(2)),
        ),
        Expr::Pow(a, b) if b.is_constant() => {
            // c * u^(c-1) * u'
            Expr::mul(
                Expr::mul((**b).clone(), Expr::pow((**a).clone(), Expr::sub((**b).clone(), Expr::int(1)))),
                raw(a)?,
            )
        }
        Expr::Pow(a, b) if a.is_constant() => {
            // ln(a) * a^v * v'
            Expr::mul(Expr::mul(Expr::log((**a).clone()), e.clone()), raw(b)?)
        }
        Expr::Pow(a, b) => {
            // u^v * (v' ln u + v u'/u)
            Expr::mul(
                e.clone(),
                Expr::add(
                    Expr::mul(raw(b)?, Expr::log((**a).clone())),
                    Expr::div(Expr::mul((**b).clone(), raw(a)?), (**a).clone()),
                ),
            )
        }
        Expr::Call(Func::Log, a) => Expr::div(raw(a)?, (**a).clone()),
        Expr::Call(Func::Exp, a) => Expr::mul(e.clone(), raw(a)?),
        Expr::Call(Func::Sqrt, a) => Expr::div(raw(a)?, Expr::mul(Expr::int(2), e.clone())),
        Expr::Call(Func::Lgamma, _) => return Err(DiffError::Unsupported(e.to_string())),
        Expr::IterLog(0, _) => Expr::int(0),
        Expr::IterLog(k, a) => {
            // d/dx L(k, u) = u' / prod_{i=1}^{k-1} L(i, u)
            let mut denom = Expr::int(1);
            for i in 1..*k {
                denom = Expr::mul(denom, Expr::iter_log(i, (**a).clone()));
            }
            Expr::div(raw(a)?, denom)
        }
    })
}
