//! Decimal text form: `[-]d.ddd…e±K@P`, where `P` is the precision in bits.
//!
//! Enough digits are printed that parsing the text back at precision `P`
//! reproduces the original value exactly.

use std::fmt;
use std::str::FromStr;

use dashu_int::ops::BitTest;
use dashu_int::{IBig, UBig};

use super::{ExtReal, NumError, DEFAULT_PRECISION};

/// Exponents up to this size are scaled with exact integer powers of ten.
const EXACT_POW10_LIMIT: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseExtRealError {
    #[error("empty number")]
    Empty,
    #[error("malformed number `{0}`")]
    Malformed(String),
    #[error("precision must lie in 1..={max}, got {got}")]
    Precision { got: usize, max: usize },
    #[error(transparent)]
    Range(#[from] NumError),
}

fn digits_for(precision: usize) -> usize {
    (precision as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2
}

fn pow10(exp: u64) -> UBig {
    UBig::from(10u8).pow(exp as usize)
}

/// `|x| * 10^j` at roughly `work` bits.
fn scale_by_pow10(x: &ExtReal, j: i64, work: usize) -> Result<ExtReal, NumError> {
    let x = x.abs().with_precision(work);
    if j.unsigned_abs() <= EXACT_POW10_LIMIT {
        let p = ExtReal::from_ibig(IBig::from(pow10(j.unsigned_abs())), work);
        if j >= 0 {
            x.mul(&p)
        } else {
            x.div(&p)
        }
    } else {
        let guard = work + 64 - j.unsigned_abs().leading_zeros() as usize;
        let ln10 = ExtReal::from_u64(10, guard).ln()?;
        let factor = ln10.mul(&ExtReal::from_i64(j, guard))?.exp()?;
        x.with_precision(guard).mul(&factor)
    }
}

impl ExtReal {
    /// Decimal digits and exponent `K` with `|x| ≈ 0.d1d2… * 10^(K+1)`.
    fn decimal_parts(&self) -> Result<(UBig, i64), NumError> {
        let p = self.precision();
        let digits = digits_for(p) as i64;
        let work = p + 64;
        let ln10 = ExtReal::from_u64(10, work + 64).ln()?;
        let log10 = self.abs().with_precision(work + 64).ln()?.div(&ln10)?;
        let mut k = log10.floor().to_i64().ok_or(NumError::Overflow)?;
        let upper = pow10(digits as u64);
        let lower = pow10(digits as u64 - 1);
        for _ in 0..4 {
            let scaled = scale_by_pow10(self, digits - 1 - k, work)?;
            let rounded = scaled.0.round().to_int().value();
            let n = UBig::try_from(rounded).map_err(|_| NumError::Uncertified)?;
            if n >= upper {
                k += 1;
            } else if n < lower {
                k -= 1;
            } else {
                return Ok((n, k));
            }
        }
        Err(NumError::Uncertified)
    }
}

fn render(negative: bool, digits: &UBig, k: i64, precision: usize) -> String {
    let text = digits.to_string();
    let text = text.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };
    let (head, tail) = text.split_at(1);
    let esign = if k < 0 { '-' } else { '+' };
    let dot = if tail.is_empty() { "" } else { "." };
    format!("{sign}{head}{dot}{tail}e{esign}{}@{precision}", k.unsigned_abs())
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.precision();
        if self.is_zero() {
            return write!(f, "0e+0@{p}");
        }
        let (digits, k) = self.decimal_parts().map_err(|_| fmt::Error)?;
        let full = digits_for(p) as u64;
        // Prefer the shortest nearby digit count that still reads back exactly.
        for drop in (1..=4u64.min(full - 1)).rev() {
            let divisor = pow10(drop);
            let (mut q, r) = (&digits / &divisor, &digits % &divisor);
            let twice = r * 2u8;
            if twice > divisor || (twice == divisor && q.bit(0)) {
                q += 1u8;
            }
            let (q, k) = if q == pow10(full - drop) { (q / 10u8, k + 1) } else { (q, k) };
            let text = render(self.is_negative(), &q, k, p);
            if text.parse::<ExtReal>().is_ok_and(|back| &back == self) {
                return f.write_str(&text);
            }
        }
        f.write_str(&render(self.is_negative(), &digits, k, p))
    }
}

impl ExtReal {
    /// Parses a decimal literal (`12`, `-3.5e-7`, `1.2e+100000@256`) at
    /// `default_precision` unless the text carries its own `@P`.
    pub fn parse_with_precision(text: &str, default_precision: usize) -> Result<Self, ParseExtRealError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(ParseExtRealError::Empty);
        }
        let malformed = || ParseExtRealError::Malformed(text.to_string());
        let (number, precision) = match text.split_once('@') {
            Some((number, bits)) => {
                let bits: usize = bits.parse().map_err(|_| malformed())?;
                if bits == 0 || bits > super::MAX_PRECISION {
                    return Err(ParseExtRealError::Precision { got: bits, max: super::MAX_PRECISION });
                }
                (number, bits)
            }
            None => (text, default_precision),
        };
        let (negative, body) = match number.as_bytes().first() {
            Some(b'-') => (true, &number[1..]),
            Some(b'+') => (false, &number[1..]),
            _ => (false, number),
        };
        let (mantissa, exponent) = match body.find(['e', 'E']) {
            Some(at) => {
                let exp: i64 = body[at + 1..].parse().map_err(|_| malformed())?;
                (&body[..at], exp)
            }
            None => (body, 0),
        };
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(malformed());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        let all_digits = format!("{int_part}{frac_part}");
        let significand: UBig = all_digits.parse().map_err(|_| malformed())?;
        let exponent = exponent
            .checked_sub(frac_part.len() as i64)
            .ok_or(ParseExtRealError::Range(NumError::Overflow))?;
        let mut value = from_decimal(IBig::from(significand), exponent, precision)?;
        if negative {
            value = value.neg();
        }
        Ok(value)
    }
}

/// Correctly rounded `significand * 10^exponent` for moderate exponents,
/// guarded high-precision scaling otherwise.
fn from_decimal(significand: IBig, exponent: i64, precision: usize) -> Result<ExtReal, NumError> {
    if significand == IBig::ZERO {
        return Ok(ExtReal::zero(precision));
    }
    if exponent.unsigned_abs() <= EXACT_POW10_LIMIT {
        let scale = IBig::from(pow10(exponent.unsigned_abs()));
        return if exponent >= 0 {
            ExtReal::from_ibig(significand * scale, precision).checked()
        } else {
            ExtReal::from_ratio(significand, scale, precision)
        };
    }
    let bits = significand.bit_len();
    let work = precision.max(bits) + 96;
    let base = ExtReal::from_ibig(significand, work);
    Ok(scale_by_pow10(&base, exponent, work)?.with_precision(precision))
}

impl FromStr for ExtReal {
    type Err = ParseExtRealError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExtReal::parse_with_precision(s, DEFAULT_PRECISION)
    }
}
