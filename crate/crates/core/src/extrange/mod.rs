//! Extended-range, arbitrary-precision real numbers.
//!
//! [`ExtReal`] is a binary floating-point value with a configurable mantissa
//! width and a binary exponent bounded by ±2^62. All arithmetic is rounded to
//! nearest, ties to even, at the wider of the operand precisions. Domain
//! violations and exponent overflow are reported as [`NumError`] instead of
//! being folded into NaN or infinity.

mod format;
mod gamma;

use std::cmp::Ordering;
use std::fmt;

use dashu_float::round::mode::HalfEven;
use dashu_float::{Context, FBig, FpError, FpResult};
use dashu_int::ops::BitTest;
use dashu_int::{IBig, Sign};

pub use format::ParseExtRealError;

type Inner = FBig<HalfEven, 2>;

/// Default working precision in mantissa bits.
pub const DEFAULT_PRECISION: usize = 128;

/// Largest precision any internal escalation may request.
pub const MAX_PRECISION: usize = 1 << 17;

/// Bound on the binary exponent of every finite, nonzero value.
pub const EXPONENT_LIMIT: i64 = 1 << 62;

/// Errors raised by extended-range arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NumError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("exponent overflow (|x| >= 2^(2^62))")]
    Overflow,
    #[error("exponent underflow (|x| < 2^(-2^62))")]
    Underflow,
    #[error("required precision {0} bits exceeds the configured limit")]
    PrecisionLimit(usize),
    #[error("rounding could not be certified")]
    Uncertified,
}

/// Extended-range real number.
#[derive(Clone)]
pub struct ExtReal(Inner);

fn ctx(precision: usize) -> Context<HalfEven> {
    Context::new(precision.max(1))
}

/// Runs a context operation and pins the result to the context precision
/// (some shortcuts return exact values with unlimited precision).
fn apply(precision: usize, op: impl FnOnce(&Context<HalfEven>) -> FpResult<Inner>) -> Result<ExtReal, NumError> {
    match op(&ctx(precision)) {
        Ok(rounded) => ExtReal::from_inner(rounded.value(), precision).checked(),
        Err(FpError::OutOfDomain) => Err(NumError::Domain("argument outside function domain".into())),
        Err(FpError::Indeterminate) => Err(NumError::Domain("indeterminate form".into())),
        Err(FpError::InfiniteInput) => Err(NumError::Overflow),
        Err(FpError::Overflow(_)) => Err(NumError::Overflow),
        Err(FpError::Underflow(_)) => Err(NumError::Underflow),
        Err(_) => Err(NumError::Uncertified),
    }
}

impl ExtReal {
    fn checked(self) -> Result<Self, NumError> {
        if self.0.repr().is_infinite() {
            return Err(NumError::Overflow);
        }
        if self.is_zero() {
            return Ok(self);
        }
        let top = self.log2_magnitude();
        if top >= EXPONENT_LIMIT {
            Err(NumError::Overflow)
        } else if top < -EXPONENT_LIMIT {
            Err(NumError::Underflow)
        } else {
            Ok(self)
        }
    }

    fn from_inner(inner: Inner, precision: usize) -> Self {
        ExtReal(inner.with_precision(precision.max(1)).value())
    }

    pub fn zero(precision: usize) -> Self {
        Self::from_inner(Inner::ZERO, precision)
    }

    pub fn one(precision: usize) -> Self {
        Self::from_inner(Inner::ONE, precision)
    }

    pub fn from_i64(value: i64, precision: usize) -> Self {
        Self::from_inner(Inner::from(value), precision)
    }

    pub fn from_u64(value: u64, precision: usize) -> Self {
        Self::from_inner(Inner::from(value), precision)
    }

    /// Rounds an arbitrary integer to `precision` bits.
    pub fn from_ibig(value: IBig, precision: usize) -> Self {
        Self::from_inner(Inner::from_parts(value, 0), precision)
    }

    /// `significand * 2^exponent`, rounded to `precision` bits.
    pub fn from_parts(significand: IBig, exponent: i64, precision: usize) -> Result<Self, NumError> {
        let exponent = isize::try_from(exponent).map_err(|_| NumError::Overflow)?;
        ExtReal::from_inner(Inner::from_parts(significand, exponent), precision).checked()
    }

    /// Exactly `2^exponent`.
    pub fn pow2(exponent: i64, precision: usize) -> Result<Self, NumError> {
        Self::from_parts(IBig::ONE, exponent, precision)
    }

    /// Converts a finite `f64` exactly, then rounds to `precision` bits.
    pub fn from_f64(value: f64, precision: usize) -> Result<Self, NumError> {
        let inner = Inner::try_from(value)
            .map_err(|_| NumError::Domain(format!("non-finite literal {value}")))?;
        Ok(Self::from_inner(inner, precision))
    }

    /// Correctly rounded `numerator / denominator`.
    pub fn from_ratio(numerator: IBig, denominator: IBig, precision: usize) -> Result<Self, NumError> {
        let num = Inner::from_parts(numerator, 0);
        let den = Inner::from_parts(denominator, 0);
        if den.repr().significand() == &IBig::ZERO {
            return Err(NumError::DivisionByZero);
        }
        apply(precision, |c| c.div(num.repr(), den.repr()))
    }

    pub fn pi(precision: usize) -> Self {
        ExtReal(ctx(precision).pi::<2>(None).value())
    }

    pub fn e(precision: usize) -> Self {
        ExtReal(ctx(precision).e::<2>().value())
    }

    pub fn ln2(precision: usize) -> Self {
        Self::from_u64(2, precision + 8)
            .ln()
            .expect("ln 2 is finite")
            .with_precision(precision)
    }

    /// Working mantissa width in bits.
    pub fn precision(&self) -> usize {
        self.0.precision()
    }

    /// Re-rounds to a new working precision.
    pub fn with_precision(&self, precision: usize) -> Self {
        Self::from_inner(self.0.clone(), precision)
    }

    pub fn is_zero(&self) -> bool {
        self.0.repr().significand() == &IBig::ZERO
    }

    pub fn is_positive(&self) -> bool {
        !self.is_zero() && self.0.sign() == Sign::Positive
    }

    pub fn is_negative(&self) -> bool {
        !self.is_zero() && self.0.sign() == Sign::Negative
    }

    pub fn is_integer(&self) -> bool {
        self.0.repr().is_int()
    }

    /// `floor(log2 |x|)`; zero maps to `i64::MIN`.
    pub fn log2_magnitude(&self) -> i64 {
        if self.is_zero() {
            return i64::MIN;
        }
        let repr = self.0.repr();
        repr.exponent() as i64 + repr.significand().bit_len() as i64 - 1
    }

    /// Significand and exponent with the significand widened to exactly
    /// `precision` bits, so its leading bit is set (`value = m * 2^e`).
    pub fn normalized_parts(&self) -> (IBig, i64) {
        if self.is_zero() {
            return (IBig::ZERO, 0);
        }
        let repr = self.0.repr();
        let significand = repr.significand().clone();
        let bits = significand.bit_len();
        let shift = self.precision().saturating_sub(bits);
        (significand << shift, repr.exponent() as i64 - shift as i64)
    }

    pub fn neg(&self) -> Self {
        ExtReal(-self.0.clone())
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, NumError> {
        apply(self.precision().max(other.precision()), |c| c.add(self.0.repr(), other.0.repr()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, NumError> {
        apply(self.precision().max(other.precision()), |c| c.sub(self.0.repr(), other.0.repr()))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, NumError> {
        apply(self.precision().max(other.precision()), |c| c.mul(self.0.repr(), other.0.repr()))
    }

    pub fn div(&self, other: &Self) -> Result<Self, NumError> {
        if other.is_zero() {
            return Err(NumError::DivisionByZero);
        }
        apply(self.precision().max(other.precision()), |c| c.div(self.0.repr(), other.0.repr()))
    }

    /// Exact sum, widened as far as needed to hold every bit of both
    /// operands. Used to step integer probes `n -> n + 1` without rounding.
    pub fn add_exact(&self, other: &Self) -> Result<Self, NumError> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        let low = self.0.repr().exponent().min(other.0.repr().exponent()) as i64;
        let high = self.log2_magnitude().max(other.log2_magnitude());
        let width = (high - low + 2) as usize;
        if width > MAX_PRECISION * 4 {
            return Err(NumError::PrecisionLimit(width));
        }
        let width = width.max(self.precision()).max(other.precision());
        apply(width, |c| c.add(self.0.repr(), other.0.repr()))
    }

    pub fn ln(&self) -> Result<Self, NumError> {
        if !self.is_positive() {
            return Err(NumError::Domain("ln of a non-positive value".into()));
        }
        apply(self.precision(), |c| c.ln(self.0.repr(), None))
    }

    /// `ln(1 + x)` without forming `1 + x`.
    pub fn log1p(&self) -> Result<Self, NumError> {
        let minus_one = ExtReal::from_i64(-1, 2);
        if *self <= minus_one {
            return Err(NumError::Domain("log1p of a value <= -1".into()));
        }
        apply(self.precision(), |c| c.ln_1p(self.0.repr(), None))
    }

    fn exp_range_check(&self) -> Result<(), NumError> {
        // e^x leaves the exponent range once |x| > 2^62 ln 2 ~ 3.196e18.
        if self.log2_magnitude() >= 62 {
            return Err(if self.is_positive() {
                NumError::Overflow
            } else {
                NumError::Underflow
            });
        }
        Ok(())
    }

    pub fn exp(&self) -> Result<Self, NumError> {
        self.exp_range_check()?;
        apply(self.precision(), |c| c.exp(self.0.repr(), None))
    }

    /// `e^x - 1` without cancellation near zero.
    pub fn expm1(&self) -> Result<Self, NumError> {
        if self.is_negative() && self.log2_magnitude() >= 62 {
            return Ok(ExtReal::from_i64(-1, self.precision()));
        }
        self.exp_range_check()?;
        apply(self.precision(), |c| c.exp_m1(self.0.repr(), None))
    }

    pub fn sqrt(&self) -> Result<Self, NumError> {
        if self.is_negative() {
            return Err(NumError::Domain("sqrt of a negative value".into()));
        }
        apply(self.precision(), |c| c.sqrt(self.0.repr()))
    }

    pub fn powi(&self, exponent: i64) -> Result<Self, NumError> {
        if self.is_zero() && exponent < 0 {
            return Err(NumError::DivisionByZero);
        }
        if !self.is_zero() {
            let scaled = (self.log2_magnitude() + 1).saturating_mul(exponent);
            if scaled.abs() > EXPONENT_LIMIT {
                return Err(if scaled > 0 { NumError::Overflow } else { NumError::Underflow });
            }
        }
        apply(self.precision(), |c| c.powi(self.0.repr(), IBig::from(exponent)))
    }

    /// `self^exponent`. Integer exponents accept any base; otherwise the base
    /// must be positive (or zero with a positive exponent).
    pub fn pow(&self, exponent: &Self) -> Result<Self, NumError> {
        let precision = self.precision().max(exponent.precision());
        if exponent.is_integer() {
            if let Some(k) = exponent.to_i64().filter(|k| k.unsigned_abs() < (1 << 40)) {
                return self.with_precision(precision).powi(k);
            }
        }
        if self.is_zero() {
            return if exponent.is_positive() {
                Ok(ExtReal::zero(precision))
            } else {
                Err(NumError::Domain("zero raised to a non-positive power".into()))
            };
        }
        if self.is_negative() {
            return Err(NumError::Domain("negative base with non-integer exponent".into()));
        }
        let work = precision + 32;
        let log = self.with_precision(work).ln()?;
        let scaled = log.mul(&exponent.with_precision(work))?;
        Ok(scaled.exp()?.with_precision(precision))
    }

    /// `ln Γ(x)` for `x > 0`.
    pub fn lgamma(&self) -> Result<Self, NumError> {
        gamma::ln_gamma(self)
    }

    pub fn floor(&self) -> Self {
        Self::from_inner(self.0.floor(), self.precision())
    }

    /// Exact conversion of an integer value that fits in `i64`.
    pub fn to_i64(&self) -> Option<i64> {
        if !self.is_integer() {
            return None;
        }
        let value = self.0.to_int().value();
        i64::try_from(value).ok()
    }

    /// Nearest `f64`; saturates to ±∞ or 0 outside the `f64` range.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }

    /// `|a - b| / max(|a|, |b|)`, with 0 when both are zero.
    pub fn relative_diff(&self, other: &Self) -> f64 {
        let scale = if self.abs() >= other.abs() { self.abs() } else { other.abs() };
        if scale.is_zero() {
            return 0.0;
        }
        let work = self.precision().max(other.precision());
        match self.with_precision(work).sub(other).and_then(|d| d.abs().div(&scale)) {
            Ok(rel) => rel.to_f64(),
            Err(_) => f64::INFINITY,
        }
    }
}

impl PartialEq for ExtReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl fmt::Debug for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl serde::Serialize for ExtReal {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for ExtReal {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
