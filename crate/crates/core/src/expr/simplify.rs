//! Bottom-up constant folding and identity removal.

use dashu_ratio::RBig;

use super::Expr;

fn num(e: &Expr) -> Option<&RBig> {
    match e {
        Expr::Num(r) => Some(r),
        _ => None,
    }
}

fn is(e: &Expr, v: i64) -> bool {
    num(e).is_some_and(|r| *r == RBig::from(v))
}

/// Exact rational power for small integer exponents.
fn fold_pow(base: &RBig, exp: &RBig) -> Option<RBig> {
    if !exp.is_int() {
        return None;
    }
    let k = i64::try_from(exp.numerator().clone()).ok()?;
    if k.unsigned_abs() > 64 || (base.is_zero() && k <= 0) {
        return None;
    }
    let mut acc = RBig::ONE;
    for _ in 0..k.unsigned_abs() {
        acc *= base;
    }
    Some(if k < 0 { RBig::ONE / acc } else { acc })
}

pub(super) fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Num(_) | Expr::E | Expr::Pi | Expr::Var => e.clone(),
        Expr::Neg(a) => neg(simplify(a)),
        Expr::Add(a, b) => add(simplify(a), simplify(b)),
        Expr::Sub(a, b) => sub(simplify(a), simplify(b)),
        Expr::Mul(a, b) => mul(simplify(a), simplify(b)),
        Expr::Div(a, b) => div(simplify(a), simplify(b)),
        Expr::Pow(a, b) => pow(simplify(a), simplify(b)),
        Expr::Call(f, a) => Expr::call(*f, simplify(a)),
        Expr::IterLog(0, _) => Expr::int(1),
        Expr::IterLog(1, a) => simplify(a),
        Expr::IterLog(k, a) => Expr::iter_log(*k, simplify(a)),
    }
}

fn is_negative(r: &RBig) -> bool {
    r.sign() == dashu_int::Sign::Negative
}

/// `c * rest` split of a product with a leading numeric factor.
fn coefficient(e: &Expr) -> (RBig, Option<&Expr>) {
    match e {
        Expr::Num(r) => (r.clone(), None),
        Expr::Mul(a, b) => match num(a) {
            Some(c) => (c.clone(), Some(b)),
            None => (RBig::ONE, Some(e)),
        },
        _ => (RBig::ONE, Some(e)),
    }
}

/// `base ^ exponent` split with a numeric exponent (1 when absent).
fn power(e: &Expr) -> (&Expr, RBig) {
    match e {
        Expr::Pow(a, b) => match num(b) {
            Some(c) => (a, c.clone()),
            None => (e, RBig::ONE),
        },
        _ => (e, RBig::ONE),
    }
}

/// Sum of two like terms, if they are alike.
fn combine(a: &Expr, b: &Expr, negate_b: bool) -> Option<Expr> {
    let (ca, ra) = coefficient(a);
    let (cb, rb) = coefficient(b);
    match (ra, rb) {
        (Some(x), Some(y)) if x == y => {
            let c = if negate_b { ca - cb } else { ca + cb };
            Some(mul(Expr::Num(c), x.clone()))
        }
        _ => None,
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(r) => Expr::Num(-r),
        Expr::Neg(inner) => *inner,
        Expr::Mul(c, x) if num(&c).is_some() => mul(neg(*c), *x),
        other => Expr::neg(other),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (num(&a), num(&b)) {
        return Expr::Num(x + y);
    }
    if is(&a, 0) {
        return b;
    }
    if is(&b, 0) {
        return a;
    }
    if let Some(c) = combine(&a, &b, false) {
        return c;
    }
    match b {
        Expr::Neg(inner) => sub(a, *inner),
        Expr::Num(r) if is_negative(&r) => sub(a, Expr::Num(-r)),
        Expr::Mul(c, x) if num(&c).is_some_and(is_negative) => sub(a, mul(neg(*c), *x)),
        Expr::Add(b1, b2) if combine(&a, &b1, false).is_some() => add(add(a, *b1), *b2),
        Expr::Sub(b1, b2) if combine(&a, &b1, false).is_some() => sub(add(a, *b1), *b2),
        b => Expr::add(a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (num(&a), num(&b)) {
        return Expr::Num(x - y);
    }
    if is(&b, 0) {
        return a;
    }
    if is(&a, 0) {
        return neg(b);
    }
    if let Some(c) = combine(&a, &b, true) {
        return c;
    }
    match b {
        Expr::Neg(inner) => add(a, *inner),
        Expr::Num(r) if is_negative(&r) => add(a, Expr::Num(-r)),
        Expr::Mul(c, x) if num(&c).is_some_and(is_negative) => add(a, mul(neg(*c), *x)),
        b => Expr::sub(a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (num(&a), num(&b)) {
        return Expr::Num(x * y);
    }
    if is(&a, 0) || is(&b, 0) {
        return Expr::int(0);
    }
    if is(&a, 1) {
        return b;
    }
    if is(&b, 1) {
        return a;
    }
    if is(&a, -1) {
        return neg(b);
    }
    if is(&b, -1) {
        return neg(a);
    }
    // keep numeric factors in front
    if num(&b).is_some() {
        return mul(b, a);
    }
    if let Expr::Neg(x) = a {
        return neg(mul(*x, b));
    }
    if let Expr::Neg(y) = b {
        return neg(mul(a, *y));
    }
    match (a, b) {
        // c * (d * x) -> (c d) * x, and constants float outward
        (Expr::Num(c), Expr::Mul(d, y)) if num(&d).is_some() => mul(mul(Expr::Num(c), *d), *y),
        (a, Expr::Mul(d, y)) if num(&d).is_some() => mul(*d, mul(a, *y)),
        (Expr::Mul(c, x), b) if num(&c).is_some() => mul(*c, mul(*x, b)),
        (a, Expr::Div(p, q)) if num(&a).is_none() => div(mul(a, *p), *q),
        (Expr::Div(p, q), b) if num(&p).is_none() => div(mul(*p, b), *q),
        (a, b) => {
            let (ba, ea) = power(&a);
            let (bb, eb) = power(&b);
            if ba == bb && num(ba).is_none() {
                return pow(ba.clone(), Expr::Num(ea + eb));
            }
            Expr::mul(a, b)
        }
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (num(&a), num(&b)) {
        if !y.is_zero() {
            return Expr::Num(x / y);
        }
    }
    if is(&b, 1) {
        return a;
    }
    if is(&a, 0) && num(&b).is_some_and(|y| !y.is_zero()) {
        return Expr::int(0);
    }
    if let Some(c) = num(&b).filter(|c| !c.is_zero()) {
        return mul(Expr::Num(RBig::ONE / c), a);
    }
    if let Expr::Neg(x) = a {
        return neg(div(*x, b));
    }
    if let Expr::Neg(y) = b {
        return neg(div(a, *y));
    }
    {
        let (ba, ea) = power(&a);
        let (bb, eb) = power(&b);
        if ba == bb && num(ba).is_none() {
            return pow(ba.clone(), Expr::Num(ea - eb));
        }
    }
    match (a, b) {
        (Expr::Mul(c, x), b) if num(&c).is_some() => mul(*c, div(*x, b)),
        (Expr::Div(p, q), b) => div(*p, mul(*q, b)),
        (a, Expr::Div(p, q)) => div(mul(a, *q), *p),
        (a, Expr::Pow(u, c)) if num(&c).is_some() && num(&a).is_none() => {
            mul(a, pow(*u, neg(*c)))
        }
        (a, b) => Expr::div(a, b),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (num(&a), num(&b)) {
        if let Some(v) = fold_pow(x, y) {
            return Expr::Num(v);
        }
    }
    if is(&b, 1) {
        return a;
    }
    if is(&b, 0) || is(&a, 1) {
        return Expr::int(1);
    }
    // (u^c)^d -> u^(c d) for integer d, which holds for every u.
    if let (Expr::Pow(base, c), Some(d)) = (&a, num(&b)) {
        if let (Some(c), true) = (num(c), d.is_int()) {
            return pow((**base).clone(), Expr::Num(c * d));
        }
    }
    Expr::pow(a, b)
}
