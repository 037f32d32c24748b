//! Rational helpers: parsing, gcd of rationals, exact conversions.

use crate::error::{invalid, Result};
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{Signed, Zero};

/// Parses `"p/q"`, `"-3"`, `"1.25"` or `"2.5e-3"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational64> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| invalid(format!("bad rational `{s}`")))?;
        let q: i64 = q.trim().parse().map_err(|_| invalid(format!("bad rational `{s}`")))?;
        if q == 0 {
            return Err(invalid(format!("zero denominator in `{s}`")));
        }
        return Ok(Rational64::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = s[i + 1..].parse().map_err(|_| invalid(format!("bad exponent in `{s}`")))?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(invalid(format!("bad number `{s}`")));
    }
    let digits = format!("{int_part}{frac_part}");
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(invalid(format!("bad number `{s}`")));
    }
    let num: i64 = digits.parse().map_err(|_| invalid(format!("number `{s}` overflows i64")))?;
    let scale = exp - frac_part.len() as i32;
    let pow = |k: i32| -> Result<i64> {
        10i64
            .checked_pow(k as u32)
            .ok_or_else(|| invalid(format!("exponent too large in `{s}`")))
    };
    let mut r = if scale >= 0 {
        Rational64::from_integer(num.checked_mul(pow(scale)?).ok_or_else(|| invalid(format!("`{s}` overflows")))?)
    } else {
        Rational64::new(num, pow(-scale)?)
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Exact rational equal to the shortest decimal that round-trips `x`.
pub fn rational_from_f64(x: f64) -> Result<Rational64> {
    if !x.is_finite() {
        return Err(invalid(format!("non-finite value {x}")));
    }
    parse_rational(&format!("{x:?}"))
}

pub fn to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Largest positive rational `g` with `a / g` and `b / g` both integers.
pub fn gcd2(a: Rational64, b: Rational64) -> Rational64 {
    if a.is_zero() {
        return b.abs();
    }
    if b.is_zero() {
        return a.abs();
    }
    let l = a.denom().lcm(b.denom());
    let na = a.numer().abs() * (l / a.denom());
    let nb = b.numer().abs() * (l / b.denom());
    Rational64::new(na.gcd(&nb), l)
}

/// Rational gcd of all nonzero entries; `None` if every entry is zero.
pub fn gcd_all<I: IntoIterator<Item = Rational64>>(it: I) -> Option<Rational64> {
    let g = it.into_iter().fold(Rational64::zero(), gcd2);
    (!g.is_zero()).then_some(g)
}

/// `x / unit` as an integer, if it is one.
pub fn integer_multiple(x: Rational64, unit: Rational64) -> Option<i64> {
    let q = x / unit;
    q.is_integer().then(|| q.to_integer())
}
