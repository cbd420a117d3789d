//! Float rendering shared by interval, paving and CLI output.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// How bounds are written out. Every style round-trips bit-exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FloatFormat {
    /// Shortest decimal that parses back to the same float.
    #[default]
    Shortest,
    /// Fixed count of significant digits (17 for `f64`, 9 for `f32`).
    Digits,
    /// C99 hexadecimal float, e.g. `0x1.8p+1`.
    Hex,
}

pub fn render<T: Scalar>(x: T, style: FloatFormat) -> String {
    if x.is_infinite() {
        return if x > T::zero() { "inf".into() } else { "-inf".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    match style {
        FloatFormat::Shortest => shortest(x),
        FloatFormat::Digits => format!("{:.*e}", T::ROUND_TRIP_DIGITS - 1, x),
        FloatFormat::Hex => hex(x),
    }
}

// plain notation for moderate magnitudes, scientific beyond
fn shortest<T: Scalar>(x: T) -> String {
    let m = x.abs();
    if m == T::zero() || (m >= T::of(1e-5) && m < T::of(1e16)) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn hex<T: Scalar>(x: T) -> String {
    let (mut mantissa, mut exp, sign) = x.integer_decode();
    let mut out = String::new();
    if sign < 0 && x != T::zero() {
        out.push('-');
    }
    if mantissa == 0 {
        out.push_str("0x0p+0");
        return out;
    }
    let top = 1u64 << (T::SIGNIFICAND_BITS - 1);
    while mantissa < top {
        mantissa <<= 1;
        exp -= 1;
    }
    let frac_bits = T::SIGNIFICAND_BITS - 1;
    let nibbles = frac_bits.div_ceil(4);
    let mut frac = mantissa & (top - 1);
    frac <<= nibbles * 4 - frac_bits;
    let mut digits = String::new();
    for i in (0..nibbles).rev() {
        let d = (frac >> (i * 4)) & 0xf;
        write!(digits, "{d:x}").unwrap();
    }
    let digits = digits.trim_end_matches('0');
    let e = exp as i32 + frac_bits as i32;
    out.push_str("0x1");
    if !digits.is_empty() {
        out.push('.');
        out.push_str(digits);
    }
    write!(out, "p{}{}", if e >= 0 { "+" } else { "-" }, e.abs()).unwrap();
    out
}

/// Parses the output of any [`FloatFormat`] (plus `inf` / `-inf`).
pub fn parse_rendered<T: Scalar>(text: &str) -> Option<T> {
    let t = text.trim();
    match t {
        "inf" | "+inf" => return Some(T::infinity()),
        "-inf" => return Some(T::neg_infinity()),
        _ => {}
    }
    let (negative, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let value = match body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        Some(hex_body) => parse_hex_body::<T>(hex_body)?,
        None => body.parse::<T>().ok()?,
    };
    Some(if negative { -value } else { value })
}

fn parse_hex_body<T: Scalar>(body: &str) -> Option<T> {
    let (mant, exp) = body.split_once(['p', 'P'])?;
    let mut exp: i64 = exp.parse().ok()?;
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    let mut m: u64 = 0;
    for c in int_part.chars().chain(frac_part.chars()) {
        let d = c.to_digit(16)? as u64;
        if m >> 60 != 0 {
            return None;
        }
        m = (m << 4) | d;
    }
    exp -= 4 * frac_part.len() as i64;
    let mut value = T::from_u64(m)?;
    // scale in exact power-of-two steps
    let step = 60i64;
    while exp > 0 {
        let k = exp.min(step);
        value = value * T::of(2f64.powi(k as i32));
        exp -= k;
    }
    while exp < 0 {
        let k = (-exp).min(step);
        value = value * T::of(2f64.powi(-k as i32));
        exp += k;
    }
    Some(value)
}
