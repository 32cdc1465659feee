//! Exact parsing of user-supplied numbers.

use rug::Complete;
use rug::{Integer, Rational};

use crate::error::{Error, Result};

/// Parses `"3"`, `"-0.25"`, `"1e-3"`, `"2.5E2"` or `"1/3"` into an exact rational.
pub fn parse_rational(key: &str, s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::invalid(key, "empty number"));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = parse_rational(key, n)?;
        let d = parse_rational(key, d)?;
        if d == 0 {
            return Err(Error::invalid(key, format!("zero denominator in {s:?}")));
        }
        return Ok(n / d);
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = t[i + 1..]
                .parse()
                .map_err(|_| Error::invalid(key, format!("bad exponent in {s:?}")))?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (neg, body) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::invalid(key, format!("not a number: {s:?}")));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(Error::invalid(key, format!("not a number: {s:?}")));
    }
    let digits = format!("{int_part}{frac_part}");
    let num = Integer::from_str_radix(if digits.is_empty() { "0" } else { &digits }, 10)
        .map_err(|_| Error::invalid(key, format!("not a number: {s:?}")))?;
    let scale = exp - frac_part.len() as i32;
    let mut q = Rational::from(num);
    if scale >= 0 {
        q *= Rational::from(Integer::u_pow_u(10, scale as u32).complete());
    } else {
        q /= Rational::from(Integer::u_pow_u(10, (-scale) as u32).complete());
    }
    if neg {
        q = -q;
    }
    Ok(q)
}

pub fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::invalid(key, format!("not a finite number: {s:?}")))
}

pub fn parse_u64(key: &str, s: &str) -> Result<u64> {
    s.trim()
        .parse::<u64>()
        .map_err(|_| Error::invalid(key, format!("not a nonnegative integer: {s:?}")))
}

/// Comma separated list of rationals.
pub fn parse_rational_list(key: &str, s: &str) -> Result<Vec<Rational>> {
    s.split(',').map(|p| parse_rational(key, p)).collect()
}

/// Smallest `k >= 0` with `b^k >= x`, for `b > 1` and `x >= 1`.
pub fn ceil_log(x: f64, b: f64) -> u32 {
    if x <= 1.0 {
        return 0;
    }
    (x.ln() / b.ln()).ceil().max(0.0) as u32
}
