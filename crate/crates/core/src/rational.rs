//! Exact rational helpers used by the tree designer and verifiers.

use num::bigint::BigInt;
use num::{BigRational, One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact rational value of the shortest decimal string that round-trips to `x`.
///
/// `0.6` becomes `3/5` rather than the binary expansion of the nearest double,
/// so threshold tests such as `1/(2a-1) in (k, k+1]` see the value the caller typed.
pub fn from_f64_decimal(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let text = format!("{x}");
    parse_decimal(&text)
}

/// Parses `[-]digits[.digits]` into an exact rational.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (whole, frac) = match body.split_once('.') {
        Some((w, f)) => (w, f),
        None => (body, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{whole}{frac}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let denom = num::pow(BigInt::from(10), frac.len());
    let value = Rational::new(numer, denom);
    Some(if neg { -value } else { value })
}

pub fn floor_int(x: &Rational) -> BigInt {
    x.floor().to_integer()
}

pub fn ceil_int(x: &Rational) -> BigInt {
    x.ceil().to_integer()
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Renders as `"p/q"` (or `"p/1"` for integers) for reports.
pub fn display(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// The rational with the smallest denominator strictly inside `(lo, hi)`.
///
/// Continued-fraction recursion; `hi = None` stands for +infinity. Requires `lo < hi`.
pub fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    assert!(lo < hi, "empty interval");
    simplest_open(lo, Some(hi))
}

fn simplest_open(lo: &Rational, hi: Option<&Rational>) -> Rational {
    let next_int = Rational::from_integer(floor_int(lo) + BigInt::one());
    match hi {
        None => next_int,
        Some(h) if &next_int < h => {
            // smallest-magnitude integer inside wins; for negative intervals prefer the one nearest zero
            if h.is_positive() && lo.is_negative() {
                Rational::zero()
            } else if !lo.is_negative() {
                next_int
            } else {
                Rational::from_integer(ceil_int(h) - BigInt::one())
            }
        }
        Some(h) => {
            let base = Rational::from_integer(floor_int(lo));
            let lo_f = lo - &base;
            let hi_f = h - &base;
            // 0 <= lo_f < hi_f <= 1 and no integer strictly between
            let inv_lo = if lo_f.is_zero() { None } else { Some(lo_f.recip()) };
            let inner = simplest_open(&hi_f.recip(), inv_lo.as_ref());
            base + inner.recip()
        }
    }
}
