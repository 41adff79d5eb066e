//! Helpers around [`BigRational`]: parsing literals, conversions to and from
//! `f64`, and fixed-precision rationalization.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `p`, `p/q`, or a decimal such as `-0.125` or `1e-3` into an exact rational.
pub fn parse(text: &str) -> Result<BigRational> {
    let bad = || Error::Invalid(format!("not a rational literal: `{text}`"));
    let t = text.trim();
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::DivisionByZero("rational literal"));
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = t[pos + 1..].parse().map_err(|_| bad())?;
            (&t[..pos], e)
        }
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("{whole}{frac}0").parse().map_err(|_| bad())?;
    let scale = exponent - frac.len() as i32 - 1;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(all);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -value } else { value })
}

/// Exact conversion of a finite double (every finite `f64` is a dyadic rational).
pub fn from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::Invalid(format!("non-finite value {x}")))
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // numerator/denominator overflow f64 individually; rescale
        let n = x.numer().bits() as i64;
        let d = x.denom().bits() as i64;
        let shift = (n.max(d) - 900).max(0) as usize;
        let num = (x.numer() >> shift).to_f64().unwrap_or(0.0);
        let den = (x.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
        num / den
    })
}

/// Rounds a finite double to `digits` significant decimal digits and returns it
/// as an exact rational with a power-of-ten denominator.
pub fn rationalize(x: f64, digits: u32) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::Invalid(format!("non-finite value {x}")));
    }
    if x == 0.0 {
        return Ok(BigRational::zero());
    }
    let text = format!("{:.*e}", digits.saturating_sub(1) as usize, x);
    parse(&text)
}

/// Renders a rational as a decimal string with `digits` significant digits.
pub fn decimal(x: &BigRational, digits: usize) -> String {
    let f = to_f64(x);
    if f == 0.0 {
        return "0".to_string();
    }
    let magnitude = f.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    format!("{f:.decimals$}")
}

pub fn abs(x: &BigRational) -> BigRational {
    x.abs()
}

pub fn is_one(x: &BigRational) -> bool {
    x.is_one()
}

/// Integer power of a rational.
pub fn pow(x: &BigRational, k: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..k {
        acc *= x;
    }
    acc
}
