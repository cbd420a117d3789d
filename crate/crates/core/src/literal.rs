//! Decimal literals and their least canonical enclosures.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::LiteralError;
use crate::interval::Interval;
use crate::scalar::Scalar;

/// A finite decimal literal `[+-]digits[.digits][(e|E)[+-]digits]`, split
/// into an integer significand and a power of ten.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Decimal {
    negative: bool,
    significand: BigUint,
    exponent: i64,
}

impl Decimal {
    pub(crate) fn parse(text: &str) -> Result<Self, LiteralError> {
        let bad = || LiteralError::Malformed(text.to_string());
        let t = text.trim();
        let (negative, body) = match t.as_bytes().first() {
            Some(b'-') => (true, &t[1..]),
            Some(b'+') => (false, &t[1..]),
            _ => (false, t),
        };
        let lower = body.to_ascii_lowercase();
        if lower == "inf" || lower == "infinity" {
            return Err(LiteralError::Unbounded(text.to_string()));
        }
        let (mantissa, exp_part) = match lower.find('e') {
            Some(pos) => (&body[..pos], Some(&body[pos + 1..])),
            None => (body, None),
        };
        let (int_part, frac_part) = match mantissa.find('.') {
            Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let mut exponent: i64 = match exp_part {
            Some(e) => {
                let digits = e.strip_prefix(['+', '-']).unwrap_or(e);
                if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(bad());
                }
                // saturate absurd exponents; the float parse decides 0 / inf
                e.parse::<i64>().unwrap_or(if e.starts_with('-') {
                    -1_000_000
                } else {
                    1_000_000
                })
            }
            None => 0,
        };
        exponent -= frac_part.len() as i64;
        let digits: String = format!("{int_part}{frac_part}");
        let significand = BigUint::parse_bytes(digits.as_bytes(), 10).unwrap_or_default();
        Ok(Decimal {
            negative,
            significand,
            exponent,
        })
    }

    fn is_zero(&self) -> bool {
        self.significand.is_zero()
    }

    /// Compares `|self|` with the magnitude of a finite float.
    fn cmp_magnitude<T: Scalar>(&self, f: T) -> Ordering {
        let (mantissa, exp2, _) = f.integer_decode();
        let mut lhs = self.significand.clone();
        let mut rhs = BigUint::from(mantissa);
        if self.exponent >= 0 {
            lhs *= pow10(self.exponent as u32);
        } else {
            rhs *= pow10((-self.exponent) as u32);
        }
        if exp2 >= 0 {
            rhs <<= exp2 as u32;
        } else {
            lhs <<= (-exp2) as u32;
        }
        lhs.cmp(&rhs)
    }
}

fn pow10(e: u32) -> BigUint {
    let mut acc = BigUint::one();
    let ten = BigUint::from(10u32);
    let mut base = ten;
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// The least canonical interval containing the real number written as a
/// decimal literal: `[f, f]` when the literal is exactly a float `f`,
/// otherwise the two adjacent floats around it.
///
/// Infinite literals are rejected; canonical intervals enclose a real.
pub fn least_canonical<T: Scalar>(text: &str) -> Result<Interval<T>, LiteralError> {
    let dec = Decimal::parse(text)?;
    if dec.is_zero() {
        return Ok(Interval::point(T::zero()));
    }
    let nearest: T = text
        .trim()
        .parse()
        .map_err(|_| LiteralError::Malformed(text.to_string()))?;
    let magnitude = nearest.abs();
    let (lo, hi) = if magnitude.is_infinite() {
        (T::max_value(), T::infinity())
    } else if magnitude == T::zero() {
        (T::zero(), T::zero().succ())
    } else {
        match dec.cmp_magnitude(magnitude) {
            Ordering::Equal => (magnitude, magnitude),
            Ordering::Less => (magnitude.pred(), magnitude),
            Ordering::Greater => (magnitude, magnitude.succ()),
        }
    };
    Ok(if dec.negative {
        Interval::from_bounds(-hi, -lo)
    } else {
        Interval::from_bounds(lo, hi)
    })
}

/// Parses one endpoint of a domain declaration. `inf` / `-inf` are allowed
/// here; finite literals are enclosed outward (`lower` picks the left end of
/// the canonical enclosure, otherwise the right end).
pub fn parse_bound<T: Scalar>(text: &str, lower: bool) -> Result<T, LiteralError> {
    let t = text.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => return Ok(T::infinity()),
        "-inf" | "-infinity" => return Ok(T::neg_infinity()),
        _ => {}
    }
    let enclosure = least_canonical::<T>(t)?;
    Ok(if lower { enclosure.lo() } else { enclosure.hi() })
}
