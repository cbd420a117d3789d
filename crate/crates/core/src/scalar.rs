//! Floating-point scalar abstraction and directed rounding.
//!
//! Every bound of an [`Interval`](crate::Interval) is a [`Scalar`]. The trait
//! adds what `num_traits::Float` lacks for interval work: stepping to the
//! adjacent float, a total order key usable for bisection over the float
//! grid, and exact-digit rendering. Directed rounding is done without
//! touching the FPU rounding mode: error-free transformations (TwoSum,
//! FMA residuals) tell whether the round-to-nearest result is exact and on
//! which side of the true value it fell, and the bound is stepped by one
//! ulp only when needed.

use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// A binary floating-point type usable as an interval bound (`f32` or `f64`).
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Significand width in bits, hidden bit included.
    const SIGNIFICAND_BITS: u32;
    /// Significant decimal digits that always round-trip.
    const ROUND_TRIP_DIGITS: usize;

    /// Least float strictly greater than `self` (`+inf` stays `+inf`).
    fn succ(self) -> Self;
    /// Greatest float strictly less than `self` (`-inf` stays `-inf`).
    fn pred(self) -> Self;
    /// Order-preserving integer key; `-0.0` and `+0.0` share key 0.
    fn ordinal(self) -> i64;
    /// Inverse of [`Scalar::ordinal`]; key 0 maps to `+0.0`.
    fn from_ordinal(key: i64) -> Self;

    /// Converts an `f64` constant (exact for the small literals used in code).
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }
}

macro_rules! impl_scalar {
    ($t:ty, $bits:ty, $ibits:ty, $sig:expr, $digits:expr) => {
        impl Scalar for $t {
            const SIGNIFICAND_BITS: u32 = $sig;
            const ROUND_TRIP_DIGITS: usize = $digits;

            fn succ(self) -> Self {
                if self == 0.0 {
                    // next_up(-0.0) is also the least positive subnormal
                    return <$t>::from_bits(1);
                }
                self.next_up()
            }

            fn pred(self) -> Self {
                if self == 0.0 {
                    return -<$t>::from_bits(1);
                }
                self.next_down()
            }

            fn ordinal(self) -> i64 {
                debug_assert!(!self.is_nan());
                let bits = self.to_bits() as $ibits;
                let magnitude = (bits & <$ibits>::MAX) as i64;
                if bits < 0 {
                    -magnitude
                } else {
                    magnitude
                }
            }

            fn from_ordinal(key: i64) -> Self {
                let magnitude = key.unsigned_abs() as $bits;
                let bits = if key < 0 {
                    magnitude | !(<$bits>::MAX >> 1)
                } else {
                    magnitude
                };
                <$t>::from_bits(bits)
            }
        }
    };
}

impl_scalar!(f64, u64, i64, 53, 17);
impl_scalar!(f32, u32, i32, 24, 9);

/// Normalizes `-0.0` to `+0.0` so that bounds compare bit-for-bit.
#[inline]
pub(crate) fn unsign_zero<T: Scalar>(x: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x
    }
}

/// Magnitude below which FMA residuals may lose their sign to underflow.
#[inline]
fn tiny<T: Scalar>() -> T {
    T::min_positive_value() / T::epsilon() * T::of(4.0)
}

#[inline]
fn step<T: Scalar>(x: T, up: bool) -> T {
    if up {
        x.succ()
    } else {
        x.pred()
    }
}

/// Rounds a finite overflowed result toward the requested direction.
#[inline]
fn overflowed<T: Scalar>(inf: T, up: bool) -> T {
    match (inf > T::zero(), up) {
        (true, true) | (false, false) => inf,
        (true, false) => T::max_value(),
        (false, true) => -T::max_value(),
    }
}

/// Adjusts a round-to-nearest result given the sign of `true - result`.
#[inline]
fn settle<T: Scalar>(result: T, residual_sign: T, up: bool) -> T {
    if residual_sign == T::zero() {
        result
    } else if up && residual_sign > T::zero() {
        result.succ()
    } else if !up && residual_sign < T::zero() {
        result.pred()
    } else {
        result
    }
}

/// `a + b` rounded toward `+inf` (`up`) or `-inf`. Never called with
/// opposite infinities.
pub(crate) fn add_dir<T: Scalar>(a: T, b: T, up: bool) -> T {
    let s = a + b;
    if s.is_infinite() {
        if a.is_infinite() || b.is_infinite() {
            return s;
        }
        return overflowed(s, up);
    }
    // TwoSum
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    unsign_zero(settle(s, err, up))
}

pub(crate) fn mul_dir<T: Scalar>(a: T, b: T, up: bool) -> T {
    if a == T::zero() || b == T::zero() {
        return T::zero();
    }
    let p = a * b;
    if a.is_infinite() || b.is_infinite() {
        return p;
    }
    if p.is_infinite() {
        return overflowed(p, up);
    }
    if p.abs() < tiny() {
        return step(p, up);
    }
    let err = a.mul_add(b, -p);
    settle(p, err, up)
}

/// `a / b` with `b != 0` and not both infinite.
pub(crate) fn div_dir<T: Scalar>(a: T, b: T, up: bool) -> T {
    debug_assert!(b != T::zero());
    if a == T::zero() {
        return T::zero();
    }
    let q = a / b;
    if a.is_infinite() || b.is_infinite() {
        return unsign_zero(q);
    }
    if q.is_infinite() {
        return overflowed(q, up);
    }
    let t = tiny();
    if q.abs() < t || a.abs() < t || b.abs() < t {
        return unsign_zero(step(q, up));
    }
    let r = (-q).mul_add(b, a);
    let sign = if (r > T::zero()) == (b > T::zero()) {
        r.abs()
    } else {
        -r.abs()
    };
    settle(q, sign, up)
}

/// Square root of `x >= 0` rounded in the requested direction.
pub(crate) fn sqrt_dir<T: Scalar>(x: T, up: bool) -> T {
    if x == T::zero() || x.is_infinite() {
        return x.sqrt();
    }
    let s = x.sqrt();
    if x < tiny() {
        return if up { s.succ() } else { s.pred().max(T::zero()) };
    }
    let r = (-s).mul_add(s, x);
    settle(s, r, up)
}

/// `x^k` for `x >= 0`, rounded by repeated directed multiplication.
pub(crate) fn pow_nonneg_dir<T: Scalar>(x: T, k: u32, up: bool) -> T {
    debug_assert!(x >= T::zero());
    let mut acc = T::one();
    let mut base = x;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_dir(acc, base, up);
        }
        e >>= 1;
        if e > 0 {
            base = mul_dir(base, base, up);
        }
    }
    acc
}

/// Largest float `r` we can certify with `r^k <= y` (`up == false`) or
/// least `r` with `r^k >= y` (`up == true`), for `y >= 0`, `k >= 1`.
pub(crate) fn root_nonneg_dir<T: Scalar>(y: T, k: u32, up: bool) -> T {
    debug_assert!(y >= T::zero() && k >= 1);
    if k == 1 || y == T::zero() || y.is_infinite() {
        return y;
    }
    if k == 2 {
        return sqrt_dir(y, up);
    }
    let r = y.powf(T::one() / T::from_u32(k).expect("small k"));
    if up {
        first_from(r, true, |r| pow_nonneg_dir(r, k, false) >= y)
    } else {
        first_from(r.max(T::zero()), false, |r| pow_nonneg_dir(r, k, true) <= y)
    }
}

/// Nearest float to `start`, moving up or down, that satisfies the
/// monotone predicate `ok`. Gallops over ordinals, then bisects: near
/// the subnormal range a root can sit billions of ulps from the libm
/// estimate. `ok` must hold at `+inf` (upwards) or at zero (downwards).
fn first_from<T: Scalar>(start: T, up: bool, ok: impl Fn(T) -> bool) -> T {
    if ok(start) {
        return start;
    }
    let limit = if up { T::infinity() } else { T::zero() }.ordinal();
    let dir: i64 = if up { 1 } else { -1 };
    let mut bad = start.ordinal();
    let mut step: i64 = 1;
    let mut good = loop {
        let probe = bad + dir * step;
        let probe = if up { probe.min(limit) } else { probe.max(limit) };
        if ok(T::from_ordinal(probe)) {
            break probe;
        }
        bad = probe;
        step = step.saturating_mul(2);
    };
    while (good - bad).abs() > 1 {
        let mid = bad + (good - bad) / 2;
        if ok(T::from_ordinal(mid)) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    T::from_ordinal(good)
}

/// Widens a libm result by one ulp in the requested direction.
#[inline]
pub(crate) fn widen<T: Scalar>(x: T, up: bool) -> T {
    if x.is_infinite() {
        x
    } else {
        unsign_zero(step(x, up))
    }
}
