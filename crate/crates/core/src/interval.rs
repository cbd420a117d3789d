//! Closed floating-point intervals with outward rounding.
//!
//! An [`Interval`] is either empty or `[lo, hi]` with `lo <= hi`, where the
//! bounds are floats or infinities. Arithmetic results always contain the
//! exact real image; exact operations (`+`, `-`, `*`, `/`, `sqrt`, integer
//! powers) round each bound outward only when the round-to-nearest result
//! was inexact, while `exp`, `log`, `sin`, `cos` widen the libm result by one
//! ulp. The libm-backed functions therefore assume the platform functions
//! are faithful (error below one ulp); that holds for the usual libms but is
//! not verified here.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{render, FloatFormat};
use crate::scalar::{
    add_dir, div_dir, mul_dir, pow_nonneg_dir, sqrt_dir, unsign_zero, widen, Scalar,
};

#[derive(Clone, Copy, PartialEq)]
pub struct Interval<T> {
    // empty is stored as (+inf, -inf); zero bounds are always +0.0
    lo: T,
    hi: T,
}

impl<T: Scalar> Interval<T> {
    /// `[lo, hi]`. Panics on NaN, `lo > hi`, `lo = +inf` or `hi = -inf`.
    pub fn new(lo: T, hi: T) -> Self {
        Self::try_new(lo, hi).expect("valid interval bounds")
    }

    pub fn try_new(lo: T, hi: T) -> Result<Self> {
        let ok = !lo.is_nan()
            && !hi.is_nan()
            && lo <= hi
            && lo != T::infinity()
            && hi != T::neg_infinity();
        if ok {
            Ok(Self::from_bounds(lo, hi))
        } else {
            Err(Error::InvalidBounds {
                lo: format!("{lo}"),
                hi: format!("{hi}"),
            })
        }
    }

    /// Builds `[lo, hi]`, yielding the empty interval whenever the bounds
    /// do not describe a non-empty set of reals.
    pub(crate) fn from_bounds(lo: T, hi: T) -> Self {
        if lo <= hi && lo != T::infinity() && hi != T::neg_infinity() {
            Interval {
                lo: unsign_zero(lo),
                hi: unsign_zero(hi),
            }
        } else {
            Self::empty()
        }
    }

    pub fn empty() -> Self {
        Interval {
            lo: T::infinity(),
            hi: T::neg_infinity(),
        }
    }

    pub fn entire() -> Self {
        Interval {
            lo: T::neg_infinity(),
            hi: T::infinity(),
        }
    }

    pub fn point(x: T) -> Self {
        Self::new(x, x)
    }

    /// `[-inf, 0]`
    pub fn nonpositive() -> Self {
        Interval {
            lo: T::neg_infinity(),
            hi: T::zero(),
        }
    }

    /// `[0, +inf]`
    pub fn nonnegative() -> Self {
        Interval {
            lo: T::zero(),
            hi: T::infinity(),
        }
    }

    /// Left bound (`+inf` for the empty interval).
    #[inline]
    pub fn lo(&self) -> T {
        self.lo
    }

    /// Right bound (`-inf` for the empty interval).
    #[inline]
    pub fn hi(&self) -> T {
        self.hi
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn is_entire(&self) -> bool {
        self.lo == T::neg_infinity() && self.hi == T::infinity()
    }

    pub fn is_bounded(&self) -> bool {
        self.is_empty() || (self.lo.is_finite() && self.hi.is_finite())
    }

    /// Non-empty with no float strictly inside: `[f, f]` or `[f, succ(f)]`.
    pub fn is_canonical(&self) -> bool {
        !self.is_empty() && (self.lo == self.hi || self.lo.succ() == self.hi)
    }

    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.is_empty() || (other.lo <= self.lo && self.hi <= other.hi)
    }

    /// Subset and not equal.
    pub fn is_proper_subset(&self, other: &Self) -> bool {
        self.is_subset(other) && self != other
    }

    pub fn intersect(&self, other: &Self) -> Self {
        Self::from_bounds(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    /// Least interval containing both.
    pub fn hull(&self, other: &Self) -> Self {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// `hi - lo` rounded up; `+inf` when unbounded, zero when empty.
    pub fn width(&self) -> T {
        if self.is_empty() {
            T::zero()
        } else {
            add_dir(self.hi, -self.lo, true)
        }
    }

    /// A float inside the interval, strictly interior when the interval is
    /// not canonical. Unbounded ends are treated by stepping away from the
    /// finite end (or from zero).
    pub fn midpoint(&self) -> T {
        debug_assert!(!self.is_empty());
        let (lo, hi) = (self.lo, self.hi);
        let two = T::of(2.0);
        let m = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => lo / two + hi / two,
            (false, false) => T::zero(),
            (true, false) => {
                if lo < T::zero() {
                    T::zero()
                } else {
                    (lo * two).max(T::one()).min(T::max_value())
                }
            }
            (false, true) => {
                if hi > T::zero() {
                    T::zero()
                } else {
                    (hi * two).min(-T::one()).max(-T::max_value())
                }
            }
        };
        if lo < m && m < hi || self.is_canonical() {
            unsign_zero(m.max(lo).min(hi))
        } else {
            // midpoint on the float grid
            let key = (lo.ordinal() as i128 + hi.ordinal() as i128).div_euclid(2);
            T::from_ordinal(key as i64)
        }
    }

    /// Bisects at [`Interval::midpoint`]; both halves share the midpoint.
    pub fn split(&self) -> Result<(Self, Self)> {
        if self.is_empty() || self.is_canonical() {
            return Err(Error::CannotSplit);
        }
        let m = self.midpoint();
        Ok((
            Self::from_bounds(self.lo, m),
            Self::from_bounds(m, self.hi),
        ))
    }

    /// Largest absolute value of the bounds.
    pub fn mag(&self) -> T {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn render(&self, style: FloatFormat) -> String {
        if self.is_empty() {
            return "[empty]".into();
        }
        format!("[{},{}]", render(self.lo, style), render(self.hi, style))
    }

    pub fn mul_interval(&self, other: &Self) -> Self {
        if self.is_empty() || other.is_empty() {
            return Self::empty();
        }
        let (a, b, c, d) = (self.lo, self.hi, other.lo, other.hi);
        let lo = mul_dir(a, c, false)
            .min(mul_dir(a, d, false))
            .min(mul_dir(b, c, false))
            .min(mul_dir(b, d, false));
        let hi = mul_dir(a, c, true)
            .max(mul_dir(a, d, true))
            .max(mul_dir(b, c, true))
            .max(mul_dir(b, d, true));
        Self::from_bounds(lo, hi)
    }

    /// Quotient set `{x / y : x in self, y in divisor, y != 0}` split into at
    /// most two ordered, disjoint pieces. A divisor of `[0, 0]` gives no
    /// quotient at all.
    pub fn ext_div(&self, divisor: &Self) -> IntervalPair<T> {
        let (a, b) = (self, divisor);
        let zero = T::zero();
        if a.is_empty() || b.is_empty() || (b.lo == zero && b.hi == zero) {
            return IntervalPair::none();
        }
        if b.lo > zero || b.hi < zero {
            return IntervalPair::single(a.div_nonzero(b));
        }
        if a.contains(zero) {
            return IntervalPair::single(Self::entire());
        }
        let (ninf, pinf) = (T::neg_infinity(), T::infinity());
        let pair = if a.lo > zero {
            if b.lo == zero {
                (Self::from_bounds(div_dir(a.lo, b.hi, false), pinf), Self::empty())
            } else if b.hi == zero {
                (Self::from_bounds(ninf, div_dir(a.lo, b.lo, true)), Self::empty())
            } else {
                (
                    Self::from_bounds(ninf, div_dir(a.lo, b.lo, true)),
                    Self::from_bounds(div_dir(a.lo, b.hi, false), pinf),
                )
            }
        } else if b.lo == zero {
            (Self::from_bounds(ninf, div_dir(a.hi, b.hi, true)), Self::empty())
        } else if b.hi == zero {
            (Self::from_bounds(div_dir(a.hi, b.lo, false), pinf), Self::empty())
        } else {
            (
                Self::from_bounds(ninf, div_dir(a.hi, b.hi, true)),
                Self::from_bounds(div_dir(a.hi, b.lo, false), pinf),
            )
        };
        IntervalPair::new(pair.0, pair.1)
    }

    /// Solutions of `x * factor = product` for `x`, as at most two pieces.
    ///
    /// Differs from [`Interval::ext_div`] only when both `product` and
    /// `factor` contain zero: then `x * 0 = 0` admits every real `x`.
    pub fn mul_rev(product: &Self, factor: &Self) -> IntervalPair<T> {
        let zero = T::zero();
        if product.is_empty() || factor.is_empty() {
            return IntervalPair::none();
        }
        if product.contains(zero) && factor.contains(zero) {
            return IntervalPair::single(Self::entire());
        }
        product.ext_div(factor)
    }

    /// Division for a divisor that excludes zero.
    fn div_nonzero(&self, b: &Self) -> Self {
        let a = self;
        let zero = T::zero();
        let (lo, hi) = if b.lo > zero {
            if a.lo >= zero {
                (div_dir(a.lo, b.hi, false), div_dir(a.hi, b.lo, true))
            } else if a.hi <= zero {
                (div_dir(a.lo, b.lo, false), div_dir(a.hi, b.hi, true))
            } else {
                (div_dir(a.lo, b.lo, false), div_dir(a.hi, b.lo, true))
            }
        } else if a.lo >= zero {
            (div_dir(a.hi, b.hi, false), div_dir(a.lo, b.lo, true))
        } else if a.hi <= zero {
            (div_dir(a.hi, b.lo, false), div_dir(a.lo, b.hi, true))
        } else {
            (div_dir(a.hi, b.hi, false), div_dir(a.lo, b.hi, true))
        };
        Self::from_bounds(lo, hi)
    }

    /// Integer power; even powers use the symmetric range.
    pub fn powi(&self, k: u32) -> Self {
        if self.is_empty() {
            return Self::empty();
        }
        if k == 0 {
            return Self::point(T::one());
        }
        let zero = T::zero();
        let down = |x: T| pow_signed(x, k, false);
        let up = |x: T| pow_signed(x, k, true);
        if k % 2 == 1 || self.lo >= zero {
            Self::from_bounds(down(self.lo), up(self.hi))
        } else if self.hi <= zero {
            Self::from_bounds(down(self.hi), up(self.lo))
        } else {
            Self::from_bounds(zero, up(self.mag()))
        }
    }

    pub fn sqrt(&self) -> Self {
        let a = self.intersect(&Self::nonnegative());
        if a.is_empty() {
            return a;
        }
        Self::from_bounds(sqrt_dir(a.lo, false), sqrt_dir(a.hi, true))
    }

    pub fn exp(&self) -> Self {
        if self.is_empty() {
            return *self;
        }
        let lo = widen(self.lo.exp(), false).max(T::zero());
        let hi = widen(self.hi.exp(), true);
        Self::from_bounds(lo, hi)
    }

    /// Natural logarithm over `self ∩ (0, +inf)`.
    pub fn ln(&self) -> Self {
        if self.is_empty() || self.hi <= T::zero() {
            return Self::empty();
        }
        let lo = if self.lo <= T::zero() {
            T::neg_infinity()
        } else {
            widen(self.lo.ln(), false)
        };
        Self::from_bounds(lo, widen(self.hi.ln(), true))
    }

    pub fn sin(&self) -> Self {
        // maxima at pi/2 + 2k pi, minima at -pi/2 + 2k pi
        self.periodic(T::sin, T::FRAC_PI_2(), -T::FRAC_PI_2())
    }

    pub fn cos(&self) -> Self {
        self.periodic(T::cos, T::zero(), T::PI())
    }

    fn periodic(&self, f: fn(T) -> T, max_phase: T, min_phase: T) -> Self {
        if self.is_empty() {
            return *self;
        }
        let unit = Self::new(-T::one(), T::one());
        let tau = T::PI() * T::of(2.0);
        if !self.is_bounded() || self.width() >= tau {
            return unit;
        }
        let (fa, fb) = (f(self.lo), f(self.hi));
        let mut lo = widen(fa.min(fb), false);
        let mut hi = widen(fa.max(fb), true);
        if hits_phase(self, max_phase, tau) {
            hi = T::one();
        }
        if hits_phase(self, min_phase, tau) {
            lo = -T::one();
        }
        Self::from_bounds(lo, hi).intersect(&unit)
    }
}

/// Whether `phase + 2k pi` may lie in `a` for some integer `k`, with a
/// tolerance covering the rounding of `2k pi`.
fn hits_phase<T: Scalar>(a: &Interval<T>, phase: T, tau: T) -> bool {
    let slack = periodic_slack(a.mag());
    let k_lo = ((a.lo - phase) / tau).floor() - T::one();
    let k_hi = ((a.hi - phase) / tau).ceil() + T::one();
    let mut k = k_lo;
    while k <= k_hi {
        let p = phase + k * tau;
        if p >= a.lo - slack && p <= a.hi + slack {
            return true;
        }
        k = k + T::one();
    }
    false
}

/// Absolute tolerance for sums of multiples of pi near magnitude `m`.
pub(crate) fn periodic_slack<T: Scalar>(m: T) -> T {
    T::epsilon() * T::of(16.0) * (m + T::of(8.0))
}

/// `x^k` for any sign of `x`, rounded in the requested direction.
fn pow_signed<T: Scalar>(x: T, k: u32, up: bool) -> T {
    if x >= T::zero() {
        pow_nonneg_dir(x, k, up)
    } else if k.is_multiple_of(2) {
        pow_nonneg_dir(-x, k, up)
    } else {
        -pow_nonneg_dir(-x, k, !up)
    }
}

impl<T: Scalar> Default for Interval<T> {
    fn default() -> Self {
        Self::entire()
    }
}

impl<T: Scalar> Add for Interval<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.is_empty() || rhs.is_empty() {
            return Self::empty();
        }
        Self::from_bounds(add_dir(self.lo, rhs.lo, false), add_dir(self.hi, rhs.hi, true))
    }
}

impl<T: Scalar> Sub for Interval<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<T: Scalar> Neg for Interval<T> {
    type Output = Self;
    fn neg(self) -> Self {
        if self.is_empty() {
            return self;
        }
        Self::from_bounds(-self.hi, -self.lo)
    }
}

impl<T: Scalar> Mul for Interval<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.mul_interval(&rhs)
    }
}

/// Hull of the relational quotient `{q : q * rhs = self}` (see
/// [`Interval::mul_rev`]). This is the division used by natural interval
/// evaluation, so that evaluation agrees with propagation over the
/// compiled `x * z = y` constraint.
impl<T: Scalar> Div for Interval<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        Interval::mul_rev(&self, &rhs).hull()
    }
}

impl<T: Scalar> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(FloatFormat::Shortest))
    }
}

// raw bounds; the empty interval shows as `[inf,-inf]`
impl<T: fmt::Debug> fmt::Debug for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?},{:?}]", self.lo, self.hi)
    }
}

/// Up to two disjoint intervals; `first` lies strictly left of `second`
/// when both are non-empty, and `first` is empty only if `second` is.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct IntervalPair<T> {
    first: Interval<T>,
    second: Interval<T>,
}

impl<T: Scalar> IntervalPair<T> {
    /// Normalizes order, merges touching or overlapping pieces.
    pub fn new(a: Interval<T>, b: Interval<T>) -> Self {
        let (a, b) = if a.is_empty() || (!b.is_empty() && b.lo < a.lo) {
            (b, a)
        } else {
            (a, b)
        };
        if !b.is_empty() && a.hi >= b.lo {
            return Self::single(a.hull(&b));
        }
        IntervalPair { first: a, second: b }
    }

    pub fn none() -> Self {
        IntervalPair {
            first: Interval::empty(),
            second: Interval::empty(),
        }
    }

    pub fn single(a: Interval<T>) -> Self {
        IntervalPair {
            first: a,
            second: Interval::empty(),
        }
    }

    pub fn first(&self) -> Interval<T> {
        self.first
    }

    pub fn second(&self) -> Interval<T> {
        self.second
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn hull(&self) -> Interval<T> {
        self.first.hull(&self.second)
    }

    pub fn contains(&self, x: T) -> bool {
        self.first.contains(x) || self.second.contains(x)
    }

    /// Hull of each piece intersected with `domain`. Tighter than
    /// `hull().intersect(domain)` whenever the gap overlaps the domain.
    pub fn hull_within(&self, domain: &Interval<T>) -> Interval<T> {
        self.first
            .intersect(domain)
            .hull(&self.second.intersect(domain))
    }
}

/// A box: one interval per variable, indexed by position.
#[derive(Clone, PartialEq, Default)]
pub struct IntervalBox<T>(Vec<Interval<T>>);

impl<T: Scalar> IntervalBox<T> {
    pub fn new(domains: Vec<Interval<T>>) -> Self {
        IntervalBox(domains)
    }

    pub fn entire(n: usize) -> Self {
        IntervalBox(vec![Interval::entire(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True if some component is the empty interval.
    pub fn has_empty(&self) -> bool {
        self.0.iter().any(Interval::is_empty)
    }

    pub fn as_slice(&self) -> &[Interval<T>] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Interval<T>> {
        self.0.iter()
    }

    pub fn push(&mut self, x: Interval<T>) {
        self.0.push(x)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a.is_subset(b))
    }

    pub fn intersect(&self, other: &Self) -> Self {
        IntervalBox(self.0.iter().zip(&other.0).map(|(a, b)| a.intersect(b)).collect())
    }

    pub fn contains_point(&self, p: &[T]) -> bool {
        p.len() == self.len() && self.0.iter().zip(p).all(|(d, &x)| d.contains(x))
    }

    /// Index of the widest component, lowest index on ties.
    pub fn widest(&self) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for (i, d) in self.0.iter().enumerate() {
            let w = d.width();
            if best.is_none_or(|(_, bw)| w > bw) {
                best = Some((i, w));
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn max_width(&self) -> T {
        self.0.iter().map(Interval::width).fold(T::zero(), T::max)
    }

    /// Product of widths (area for two variables).
    pub fn volume(&self) -> T {
        self.0.iter().map(Interval::width).fold(T::one(), |acc, w| acc * w)
    }

    pub fn into_vec(self) -> Vec<Interval<T>> {
        self.0
    }
}

impl<T> std::ops::Index<usize> for IntervalBox<T> {
    type Output = Interval<T>;
    fn index(&self, i: usize) -> &Interval<T> {
        &self.0[i]
    }
}

impl<T> std::ops::IndexMut<usize> for IntervalBox<T> {
    fn index_mut(&mut self, i: usize) -> &mut Interval<T> {
        &mut self.0[i]
    }
}

impl<T: fmt::Debug> fmt::Debug for IntervalBox<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl<T: Scalar> FromIterator<Interval<T>> for IntervalBox<T> {
    fn from_iter<I: IntoIterator<Item = Interval<T>>>(iter: I) -> Self {
        IntervalBox(iter.into_iter().collect())
    }
}

impl<T: Scalar> Serialize for Interval<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_empty() {
            return s.serialize_none();
        }
        [render(self.lo, FloatFormat::Shortest), render(self.hi, FloatFormat::Shortest)]
            .serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Interval<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw: Option<[String; 2]> = Deserialize::deserialize(d)?;
        match raw {
            None => Ok(Interval::empty()),
            Some([lo, hi]) => {
                let lo = crate::format::parse_rendered::<T>(&lo)
                    .ok_or_else(|| D::Error::custom(format!("bad bound `{lo}`")))?;
                let hi = crate::format::parse_rendered::<T>(&hi)
                    .ok_or_else(|| D::Error::custom(format!("bad bound `{hi}`")))?;
                Interval::try_new(lo, hi).map_err(D::Error::custom)
            }
        }
    }
}
