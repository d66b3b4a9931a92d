//! One-variable expressions in `n`: parsing, evaluation, symbolic
//! differentiation and light simplification.

mod diff;
mod eval;
mod parse;
mod psi;
mod simplify;

use std::fmt;

use dashu_int::{IBig, UBig};
use dashu_ratio::RBig;

pub use diff::DiffError;
pub use eval::EvalError;
pub use parse::{ParseError, ParseErrorKind};
pub use psi::{central_difference, PsiError, PsiFunction};

/// Highest iterated-logarithm depth accepted in `L(k, x)`.
pub const MAX_ITER_LOG: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Log,
    Exp,
    Sqrt,
    Lgamma,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Log => "log",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Lgamma => "lgamma",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "log" => Func::Log,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "lgamma" => Func::Lgamma,
            _ => return None,
        })
    }
}

/// Expression tree. Numeric literals are kept as exact rationals so that
/// evaluation at any precision starts from the exact value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Num(RBig),
    E,
    Pi,
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    /// `L(k, x)`: the k-fold iterated logarithm with `L(0, x) = 1`, `L(1, x) = x`.
    IterLog(u32, Box<Expr>),
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        parse::parse(source)
    }

    pub fn int(value: i64) -> Expr {
        Expr::Num(RBig::from(value))
    }

    pub fn ratio(numerator: i64, denominator: u64) -> Expr {
        Expr::Num(RBig::from_parts(IBig::from(numerator), UBig::from(denominator)))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        Expr::Pow(Box::new(a), Box::new(b))
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    pub fn log(a: Expr) -> Expr {
        Expr::call(Func::Log, a)
    }

    pub fn iter_log(k: u32, a: Expr) -> Expr {
        Expr::IterLog(k, Box::new(a))
    }

    /// True when the expression does not mention `n`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::E | Expr::Pi => true,
            Expr::Var => false,
            Expr::Neg(a) | Expr::Call(_, a) | Expr::IterLog(_, a) => a.is_constant(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    /// True when some node is a call to `f`.
    pub fn contains_func(&self, f: Func) -> bool {
        match self {
            Expr::Num(_) | Expr::E | Expr::Pi | Expr::Var => false,
            Expr::Call(g, a) => *g == f || a.contains_func(f),
            Expr::Neg(a) | Expr::IterLog(_, a) => a.contains_func(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.contains_func(f) || b.contains_func(f)
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::E | Expr::Pi | Expr::Var => 1,
            Expr::Neg(a) | Expr::Call(_, a) | Expr::IterLog(_, a) => 1 + a.size(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    /// Substitutes `replacement` for every occurrence of `n`.
    pub fn substitute(&self, replacement: &Expr) -> Expr {
        let sub = |a: &Expr| Box::new(a.substitute(replacement));
        match self {
            Expr::Var => replacement.clone(),
            Expr::Num(_) | Expr::E | Expr::Pi => self.clone(),
            Expr::Neg(a) => Expr::Neg(sub(a)),
            Expr::Add(a, b) => Expr::Add(sub(a), sub(b)),
            Expr::Sub(a, b) => Expr::Sub(sub(a), sub(b)),
            Expr::Mul(a, b) => Expr::Mul(sub(a), sub(b)),
            Expr::Div(a, b) => Expr::Div(sub(a), sub(b)),
            Expr::Pow(a, b) => Expr::Pow(sub(a), sub(b)),
            Expr::Call(f, a) => Expr::Call(*f, sub(a)),
            Expr::IterLog(k, a) => Expr::IterLog(*k, sub(a)),
        }
    }

    pub fn differentiate(&self) -> Result<Expr, DiffError> {
        diff::differentiate(self)
    }

    pub fn simplify(&self) -> Expr {
        simplify::simplify(self)
    }

    /// Binding strength used when printing: 1 additive, 2 multiplicative,
    /// 3 unary minus, 4 power, 5 atom. Numbers that are not plain decimals
    /// print their own parentheses.
    fn level(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

/// Exact decimal rendering of a non-negative rational whose denominator
/// has no prime factors other than 2 and 5.
fn decimal_text(value: &RBig) -> Option<String> {
    if value.sign() == dashu_int::Sign::Negative {
        return None;
    }
    let mut den = value.denominator().clone();
    let mut scale = 0usize;
    let (two, five) = (UBig::from(2u8), UBig::from(5u8));
    let mut num = value.numerator().unsigned_abs();
    while den != UBig::ONE {
        if (&den % &two) == UBig::ZERO {
            den /= &two;
            num *= &five;
        } else if (&den % &five) == UBig::ZERO {
            den /= &five;
            num *= &two;
        } else {
            return None;
        }
        scale += 1;
        if scale > 64 {
            return None;
        }
    }
    let digits = num.to_string();
    if scale == 0 {
        return Some(digits);
    }
    let padded = format!("{digits:0>width$}", width = scale + 1);
    let (int_part, frac_part) = padded.split_at(padded.len() - scale);
    Some(format!("{int_part}.{frac_part}"))
}

use dashu_int::ops::UnsignedAbs;

fn write_num(f: &mut fmt::Formatter<'_>, value: &RBig) -> fmt::Result {
    if let Some(text) = decimal_text(value) {
        return f.write_str(&text);
    }
    let magnitude = RBig::from_parts(IBig::from(value.numerator().clone().unsigned_abs()), value.denominator().clone());
    let sign = if value.sign() == dashu_int::Sign::Negative { "-" } else { "" };
    match decimal_text(&magnitude) {
        Some(text) => write!(f, "({sign}{text})"),
        None => write!(f, "({sign}{}/{})", value.numerator().clone().unsigned_abs(), value.denominator()),
    }
}

/// A function argument: already delimited, so a lone rational literal
/// needs no parentheses of its own.
struct Arg<'a>(&'a Expr);

impl fmt::Display for Arg<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = self.0.to_string();
        match (self.0, text.strip_prefix('(').and_then(|t| t.strip_suffix(')'))) {
            (Expr::Num(_), Some(inner)) => f.write_str(inner),
            _ => f.write_str(&text),
        }
    }
}

fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(r) => write_num(f, r),
            Expr::E => f.write_str("e"),
            Expr::Pi => f.write_str("pi"),
            Expr::Var => f.write_str("n"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                wrap(f, a, a.level() < 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let op = if matches!(self, Expr::Add(..)) { " + " } else { " - " };
                wrap(f, a, a.level() < 1)?;
                f.write_str(op)?;
                wrap(f, b, b.level() <= 1)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                let op = if matches!(self, Expr::Mul(..)) { "*" } else { "/" };
                wrap(f, a, a.level() < 2)?;
                f.write_str(op)?;
                wrap(f, b, b.level() <= 2)
            }
            Expr::Pow(a, b) => {
                wrap(f, a, a.level() <= 4)?;
                f.write_str("^")?;
                wrap(f, b, b.level() < 3)
            }
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), Arg(a)),
            Expr::IterLog(k, a) => write!(f, "L({k}, {})", Arg(a)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prints_minimal_parentheses() {
        let cases = [
            "1/(n*log(n)^2)",
            "2^-3^2",
            "(2^3)^2",
            "-n^2",
            "(-n)^2",
            "n - (n - 1)",
            "n/(n/2)",
            "L(3, n)",
            "1.5*n + 0.25",
            "lgamma(n + 1)",
        ];
        for src in cases {
            let e = Expr::parse(src).unwrap();
            assert_eq!(Expr::parse(&e.to_string()).unwrap(), e, "{src} -> {e}");
        }
        assert_eq!(Expr::parse("2^-3^2").unwrap().to_string(), "2^-3^2");
        assert_eq!(Expr::parse("a").unwrap_err().kind, ParseErrorKind::UnknownIdentifier("a".into()));
    }

    #[test]
    fn folded_numbers_print_parseably() {
        for (num, den) in [(1, 3), (-1, 3), (-5, 2), (7, 8)] {
            let e = Expr::mul(Expr::ratio(num, den), Expr::Var);
            let back = Expr::parse(&e.to_string()).unwrap().simplify();
            assert_eq!(back, e.simplify(), "{e}");
        }
    }
}
