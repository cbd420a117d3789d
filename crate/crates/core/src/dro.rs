//! Domain reduction operators for the primitive constraints.
//!
//! Each operator replaces the domains of its constraint's variables by the
//! hull of the constraint relation's projections, intersected with the
//! current domains and rounded outward. A single sweep over the
//! projections is repeated until nothing changes, so the operator as a
//! whole is idempotent on the float grid and not only in exact arithmetic.


use crate::csp::{PrimitiveConstraint, VarId};
use crate::expr::UnaryOp;
use crate::interval::{periodic_slack, Interval, IntervalBox, IntervalPair};
use crate::scalar::{root_nonneg_dir, widen, Scalar};

/// Sweeps before giving up on an internal fixpoint. Never reached by the
/// kernels below in practice; they settle in two or three sweeps.
const MAX_SWEEPS: usize = 64;

/// Branches beyond which periodic back-projection gives up.
const MAX_BRANCHES: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReductionOutcome {
    /// Variables whose domain shrank strictly.
    pub changed: Vec<VarId>,
    /// Some domain became empty.
    pub failed: bool,
}

/// Applies the operator of `c` to `b` in place.
pub fn narrow<T: Scalar>(c: &PrimitiveConstraint<T>, b: &mut IntervalBox<T>) -> ReductionOutcome {
    match c {
        PrimitiveConstraint::AllEq(members) => return all_eq(members, b),
        PrimitiveConstraint::Bound { v, rel } => {
            let old = b[*v];
            let new = old.intersect(&rel.as_interval());
            b[*v] = new;
            return ReductionOutcome {
                changed: if new != old { vec![*v] } else { vec![] },
                failed: new.is_empty(),
            };
        }
        _ => {}
    }

    if let Some(out) = diagonal(c, b) {
        return out;
    }
    let ids = c.vars();
    let mut local = Local::new(&ids, b);
    for _ in 0..MAX_SWEEPS {
        let before = local.d;
        match c {
            PrimitiveConstraint::Sum { .. } => sum_sweep(&mut local),
            PrimitiveConstraint::Prod { .. } => prod_sweep(&mut local),
            PrimitiveConstraint::Unary { f, .. } => unary_sweep(*f, &mut local),
            _ => unreachable!(),
        }
        if local.failed() || local.d == before {
            break;
        }
    }

    let mut out = ReductionOutcome::default();
    for (slot, &v) in ids.iter().enumerate() {
        let new = local.d[slot];
        if new != b[v] {
            b[v] = new;
            if !out.changed.contains(&v) {
                out.changed.push(v);
            }
        }
    }
    out.failed = local.failed();
    out
}

/// Pure form of [`narrow`]: returns the reduced box.
pub fn reduce<T: Scalar>(
    c: &PrimitiveConstraint<T>,
    b: &IntervalBox<T>,
) -> (IntervalBox<T>, ReductionOutcome) {
    let mut out = b.clone();
    let outcome = narrow(c, &mut out);
    (out, outcome)
}

/// True iff applying the operator would change nothing.
pub fn is_fixpoint<T: Scalar>(c: &PrimitiveConstraint<T>, b: &IntervalBox<T>) -> bool {
    let (_, outcome) = reduce(c, b);
    outcome.changed.is_empty() && !outcome.failed
}

/// Constraints naming one variable in two roles whose relation collapses
/// to a closed form. Sweeping these would creep: `x + y = x` shaves
/// `lb(y)` off `x` per sweep and may need billions of sweeps to settle.
fn diagonal<T: Scalar>(c: &PrimitiveConstraint<T>, b: &mut IntervalBox<T>) -> Option<ReductionOutcome> {
    let zero = Interval::point(T::zero());
    let one = Interval::point(T::one());
    let updates: Vec<(VarId, Interval<T>)> = match *c {
        PrimitiveConstraint::Sum { x, y, z } if x == y && y == z => vec![(x, b[x].intersect(&zero))],
        PrimitiveConstraint::Sum { x, y, z } if x == z => vec![(y, b[y].intersect(&zero))],
        PrimitiveConstraint::Sum { x, y, z } if y == z => vec![(x, b[x].intersect(&zero))],
        PrimitiveConstraint::Prod { x, y, z } if x == y && y == z => vec![(x, points_within(&b[x], &[0.0, 1.0]))],
        PrimitiveConstraint::Prod { x, y, z } if x == z || y == z => {
            // u * w = u: u = 0 or w = 1
            let (u, w) = if x == z { (x, y) } else { (y, x) };
            let u_zero = b[u].contains(T::zero());
            let w_one = b[w].contains(T::one());
            vec![
                (u, if w_one { b[u] } else { b[u].intersect(&zero) }),
                (w, if u_zero { b[w] } else { b[w].intersect(&one) }),
            ]
        }
        PrimitiveConstraint::Unary { f, x, y } if x == y => vec![(x, fixed_points(f, &b[x]))],
        _ => return None,
    };
    let mut out = ReductionOutcome::default();
    for (v, d) in updates {
        if d != b[v] {
            b[v] = d;
            out.changed.push(v);
        }
        out.failed |= d.is_empty();
    }
    Some(out)
}

/// Hull of the listed (exactly representable) values that lie in `x`.
fn points_within<T: Scalar>(x: &Interval<T>, values: &[f64]) -> Interval<T> {
    values
        .iter()
        .map(|&v| Interval::point(T::of(v)).intersect(x))
        .fold(Interval::empty(), |acc, p| acc.hull(&p))
}

/// Hull of the solutions of `f(t) = t` within `x`.
fn fixed_points<T: Scalar>(f: UnaryOp, x: &Interval<T>) -> Interval<T> {
    match f {
        UnaryOp::Neg | UnaryOp::Sin => points_within(x, &[0.0]),
        UnaryOp::Exp | UnaryOp::Log => Interval::empty(),
        UnaryOp::Sqrt => points_within(x, &[0.0, 1.0]),
        UnaryOp::Pow(0) => points_within(x, &[1.0]),
        UnaryOp::Pow(1) => *x,
        UnaryOp::Pow(k) if k % 2 == 0 => points_within(x, &[0.0, 1.0]),
        UnaryOp::Pow(_) => points_within(x, &[-1.0, 0.0, 1.0]),
        UnaryOp::Cos => {
            // the unique solution of cos t = t, 0.7390851332151606416...
            let d = T::of(0.739_085_133_215_160_6);
            Interval::new(d.pred(), d.succ()).intersect(x)
        }
    }
}

fn all_eq<T: Scalar>(members: &[VarId], b: &mut IntervalBox<T>) -> ReductionOutcome {
    let common = members
        .iter()
        .fold(Interval::entire(), |acc, &v| acc.intersect(&b[v]));
    let mut out = ReductionOutcome {
        changed: Vec::new(),
        failed: common.is_empty(),
    };
    for &v in members {
        if b[v] != common {
            b[v] = common;
            if !out.changed.contains(&v) {
                out.changed.push(v);
            }
        }
    }
    out
}

/// Working copy of up to three domains; slots naming the same variable
/// are kept equal.
struct Local<T> {
    ids: [VarId; 3],
    n: usize,
    d: [Interval<T>; 3],
}

impl<T: Scalar> Local<T> {
    fn new(ids: &[VarId], b: &IntervalBox<T>) -> Self {
        let mut l = Local {
            ids: [usize::MAX; 3],
            n: ids.len(),
            d: [Interval::entire(); 3],
        };
        for (i, &v) in ids.iter().enumerate() {
            l.ids[i] = v;
            l.d[i] = b[v];
        }
        l
    }

    #[inline]
    fn get(&self, slot: usize) -> Interval<T> {
        self.d[slot]
    }

    #[inline]
    fn set(&mut self, slot: usize, value: Interval<T>) {
        let v = self.ids[slot];
        for i in 0..self.n {
            if self.ids[i] == v {
                self.d[i] = self.d[i].intersect(&value);
            }
        }
    }

    fn failed(&self) -> bool {
        self.d[..self.n].iter().any(Interval::is_empty)
    }
}

// slots: 0 = x, 1 = y, 2 = z for x + y = z
fn sum_sweep<T: Scalar>(l: &mut Local<T>) {
    l.set(2, l.get(0) + l.get(1));
    l.set(0, l.get(2) - l.get(1));
    l.set(1, l.get(2) - l.get(0));
}

// x * y = z; back-projection intersects each quotient piece with the
// current domain before taking the hull
fn prod_sweep<T: Scalar>(l: &mut Local<T>) {
    l.set(2, l.get(0) * l.get(1));
    let x = Interval::mul_rev(&l.get(2), &l.get(1)).hull_within(&l.get(0));
    l.set(0, x);
    let y = Interval::mul_rev(&l.get(2), &l.get(0)).hull_within(&l.get(1));
    l.set(1, y);
}

// f(x) = y
fn unary_sweep<T: Scalar>(f: UnaryOp, l: &mut Local<T>) {
    l.set(1, f.apply(l.get(0)));
    let x = inverse(f, &l.get(1), &l.get(0));
    l.set(0, x);
}

/// Values of `x` within `dom` whose image under `f` can lie in `y`.
fn inverse<T: Scalar>(f: UnaryOp, y: &Interval<T>, dom: &Interval<T>) -> Interval<T> {
    if y.is_empty() || dom.is_empty() {
        return Interval::empty();
    }
    let pre = match f {
        UnaryOp::Neg => -*y,
        UnaryOp::Exp => y.ln(),
        UnaryOp::Log => y.exp(),
        UnaryOp::Sqrt => y.intersect(&Interval::nonnegative()).powi(2),
        UnaryOp::Pow(k) => return pow_inverse(k, y, dom),
        UnaryOp::Sin => return periodic_inverse(y, dom, Periodic::Sin),
        UnaryOp::Cos => return periodic_inverse(y, dom, Periodic::Cos),
    };
    dom.intersect(&pre)
}

fn pow_inverse<T: Scalar>(k: u32, y: &Interval<T>, dom: &Interval<T>) -> Interval<T> {
    if k == 0 {
        return if y.contains(T::one()) {
            *dom
        } else {
            Interval::empty()
        };
    }
    if k % 2 == 1 {
        let lo = signed_root(y.lo(), k, false);
        let hi = signed_root(y.hi(), k, true);
        return dom.intersect(&Interval::from_bounds(lo, hi));
    }
    let y = y.intersect(&Interval::nonnegative());
    if y.is_empty() {
        return y;
    }
    let r = Interval::from_bounds(
        root_nonneg_dir(y.lo(), k, false),
        root_nonneg_dir(y.hi(), k, true),
    );
    IntervalPair::new(-r, r).hull_within(dom)
}

fn signed_root<T: Scalar>(v: T, k: u32, up: bool) -> T {
    if v >= T::zero() {
        root_nonneg_dir(v, k, up)
    } else {
        -root_nonneg_dir(-v, k, !up)
    }
}

#[derive(Clone, Copy)]
enum Periodic {
    Sin,
    Cos,
}

/// Back-projection through `sin` / `cos` by enumerating the solution
/// branches that meet `dom`; gives up (returns `dom`) beyond
/// [`MAX_BRANCHES`] branches or on unbounded domains.
fn periodic_inverse<T: Scalar>(y: &Interval<T>, dom: &Interval<T>, f: Periodic) -> Interval<T> {
    let one = T::one();
    let y = y.intersect(&Interval::new(-one, one));
    if y.is_empty() {
        return y;
    }
    if (y.lo() <= -one && y.hi() >= one) || !dom.is_bounded() {
        return *dom;
    }
    let tau = T::PI() * T::of(2.0);
    if dom.width() > tau * T::of(3.0) {
        return *dom;
    }
    // base branches within one period
    let (b1, b2) = match f {
        Periodic::Sin => {
            let lo = widen(y.lo().asin(), false);
            let hi = widen(y.hi().asin(), true);
            ((lo, hi), (T::PI() - hi, T::PI() - lo))
        }
        Periodic::Cos => {
            let lo = widen(y.hi().acos(), false);
            let hi = widen(y.lo().acos(), true);
            ((lo, hi), (-hi, -lo))
        }
    };
    let k_lo = ((dom.lo() - T::PI()) / tau).floor() - one;
    let k_hi = ((dom.hi() + T::PI()) / tau).ceil() + one;
    let mut hull = Interval::empty();
    let mut branches = 0usize;
    let mut k = k_lo;
    while k <= k_hi {
        let shift = k * tau;
        for (lo, hi) in [b1, b2] {
            let (plo, phi) = (lo + shift, hi + shift);
            let piece = Interval::from_bounds(
                plo - periodic_slack(plo.abs()),
                phi + periodic_slack(phi.abs()),
            );
            let part = piece.intersect(dom);
            if !part.is_empty() {
                branches += 1;
                hull = hull.hull(&part);
            }
        }
        k = k + one;
    }
    if branches > MAX_BRANCHES {
        *dom
    } else {
        hull
    }
}
