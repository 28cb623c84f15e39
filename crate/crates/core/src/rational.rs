//! Exact rational numbers and their textual form.
//!
//! Coefficients travel through the whole pipeline as [`Rational`] so that
//! declaration equality is exact. On the wire a rational is always a string:
//! either a decimal literal (`"0.3"`, `"-12"`) or a fraction (`"7/3"`).

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type Rational = num_rational::BigRational;

/// Parses an optionally signed decimal (`12`, `0.30`, `.5`) or fraction (`7/10`).
///
/// Returns `None` for anything else, including a zero denominator.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let value = parse_unsigned(body)?;
    Some(if negative { -value } else { value })
}

fn parse_unsigned(s: &str) -> Option<Rational> {
    if let Some((num, den)) = s.split_once('/') {
        if !is_digits(num) || !is_digits(den) {
            return None;
        }
        let den: BigInt = den.parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(Rational::new(num.parse().ok()?, den));
    }
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !(int_part.is_empty() || is_digits(int_part)) || !(frac_part.is_empty() || is_digits(frac_part)) {
        return None;
    }
    if s.ends_with('.') {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    Some(Rational::new(numer, denom))
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

/// Formats a rational as the shortest exact decimal when the expansion
/// terminates, otherwise as `a/b`.
pub fn format_rational(r: &Rational) -> String {
    let mut out = String::new();
    if r.is_negative() {
        out.push('-');
    }
    out.push_str(&format_magnitude(&r.abs()));
    out
}

/// Same as [`format_rational`] but ignores the sign.
pub fn format_magnitude(r: &Rational) -> String {
    let r = r.abs();
    if r.denom().is_one() {
        return r.numer().to_string();
    }
    match decimal_places(r.denom()) {
        Some(places) => {
            let scale = num_traits::pow(BigInt::from(10u32), places);
            let scaled = r.numer() * &scale / r.denom();
            let (int_part, frac_part) = scaled.div_rem(&scale);
            let mut frac = frac_part.to_string();
            while frac.len() < places {
                frac.insert(0, '0');
            }
            let mut out = String::new();
            let _ = write!(out, "{int_part}.{frac}");
            out
        }
        None => format!("{}/{}", r.numer(), r.denom()),
    }
}

/// Number of decimal places needed to write `1/denom` exactly, if finite.
fn decimal_places(denom: &BigInt) -> Option<usize> {
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let mut d = denom.clone();
    let (mut twos, mut fives) = (0usize, 0usize);
    while d.is_even() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    d.is_one().then(|| twos.max(fives))
}

pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn integer(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Serde adapter: rationals as strings, never JSON floats.
pub mod serde_str {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use super::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).ok_or_else(|| de::Error::custom(format!("invalid rational {s:?}")))
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod serde_vec {
    use serde::ser::SerializeSeq;
    use serde::{de, Deserialize, Deserializer, Serializer};

    use super::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&format_rational(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_rational(s).ok_or_else(|| de::Error::custom(format!("invalid rational {s:?}"))))
            .collect()
    }
}
