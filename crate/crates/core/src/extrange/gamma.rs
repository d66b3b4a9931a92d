//! `ln Γ(x)` via the Stirling series after shifting the argument upward.

use std::sync::Mutex;

use dashu_int::{IBig, UBig};
use dashu_ratio::RBig;

use super::{ExtReal, NumError};

/// Bernoulli numbers `B_0, B_1, …` (with `B_1 = -1/2`), grown on demand.
static BERNOULLI: Mutex<Vec<RBig>> = Mutex::new(Vec::new());

fn bernoulli(index: usize) -> RBig {
    let mut table = BERNOULLI.lock().unwrap_or_else(|e| e.into_inner());
    while table.len() <= index {
        let m = table.len();
        if m == 0 {
            table.push(RBig::ONE);
            continue;
        }
        // B_m = -1/(m+1) * sum_{j<m} C(m+1, j) B_j
        let mut binom = UBig::ONE;
        let mut acc = RBig::ZERO;
        for (j, b) in table.iter().enumerate() {
            acc += RBig::from(binom.clone()) * b;
            binom = binom * UBig::from(m + 1 - j) / UBig::from(j + 1);
        }
        table.push(-acc / RBig::from(m + 1));
    }
    table[index].clone()
}

fn to_ext(value: &RBig, precision: usize) -> Result<ExtReal, NumError> {
    ExtReal::from_ratio(value.numerator().clone(), IBig::from(value.denominator().clone()), precision)
}

pub(super) fn ln_gamma(x: &ExtReal) -> Result<ExtReal, NumError> {
    if !x.is_positive() {
        return Err(NumError::Domain("lgamma of a non-positive value".into()));
    }
    let precision = x.precision();
    let work = precision + 32;
    let threshold = ExtReal::from_u64((0.15 * work as f64) as u64 + 8, work);
    let one = ExtReal::one(work);

    // Γ(x) = Γ(x + m) / (x (x+1) … (x+m-1))
    let mut z = x.with_precision(work);
    let mut shift_product = ExtReal::one(work);
    while z < threshold {
        shift_product = shift_product.mul(&z)?;
        z = z.add(&one)?;
    }

    let ln_z = z.ln()?;
    let half = ExtReal::from_f64(0.5, work)?;
    let two_pi = ExtReal::pi(work).mul(&ExtReal::from_u64(2, work))?;
    let mut sum = z
        .sub(&half)?
        .mul(&ln_z)?
        .sub(&z)?
        .add(&two_pi.ln()?.mul(&half)?)?;

    let z_sq = z.mul(&z)?;
    let mut z_pow = z.clone();
    let cutoff = sum.abs().log2_magnitude().max(0) - work as i64 - 2;
    let mut previous_mag = i64::MAX;
    for j in 1.. {
        let coef = to_ext(&bernoulli(2 * j), work)?
            .div(&ExtReal::from_u64((2 * j * (2 * j - 1)) as u64, work))?;
        let term = coef.div(&z_pow)?;
        let mag = term.log2_magnitude();
        if mag >= previous_mag {
            // Asymptotic series started to diverge; the shift makes this
            // happen only well below the working precision.
            break;
        }
        sum = sum.add(&term)?;
        if mag < cutoff {
            break;
        }
        previous_mag = mag;
        z_pow = z_pow.mul(&z_sq)?;
    }

    if !shift_product.is_zero() && shift_product != ExtReal::one(work) {
        sum = sum.sub(&shift_product.ln()?)?;
    }
    Ok(sum.with_precision(precision))
}
