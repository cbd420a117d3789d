//! Branch-and-prune paving.
//!
//! Boxes are taken from a stack, narrowed by box consistency, dropped when
//! narrowing fails, and kept as inner when every inequality certainly holds
//! on them. The rest are bisected along their widest domain until they are
//! no wider than `epsilon`. Pruning only ever removes non-solutions, so
//! inner and boundary boxes together cover every solution in the start box.

use std::fmt::Write as _;

use serde::Serialize;

use crate::consistency::{BcConfig, Pruner};
use crate::error::{Error, Result};
use crate::expr::BoundExpr;
use crate::format::{render, FloatFormat};
use crate::interval::IntervalBox;
use crate::propagation::Outcome;
use crate::scalar::Scalar;
use crate::system::SystemSpec;

/// Default cap on processed boxes.
pub const DEFAULT_BOX_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    /// Every point satisfies every inequality.
    Inner,
    /// Undecided.
    Boundary,
}

/// Inner iff every inequality evaluates to an interval with right bound
/// at most zero.
pub fn classify<T: Scalar>(bound: &[BoundExpr<T>], b: &IntervalBox<T>) -> Classification {
    if bound.iter().all(|g| g.eval(b.as_slice()).hi() <= T::zero()) {
        Classification::Inner
    } else {
        Classification::Boundary
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Paving<T> {
    pub inner: Vec<IntervalBox<T>>,
    /// Undecided boxes no wider than `epsilon` (or no longer splittable).
    pub boundary: Vec<IntervalBox<T>>,
    /// Boxes discarded because pruning proved them empty.
    pub failed: u64,
    pub epsilon: T,
    /// Boxes never processed because the box budget ran out; empty on
    /// completion.
    pub pending: Vec<IntervalBox<T>>,
    /// Boxes taken off the stack.
    pub processed: u64,
}

impl<T: Scalar> Paving<T> {
    pub fn is_complete(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty() && self.boundary.is_empty() && self.pending.is_empty()
    }

    pub fn inner_volume(&self) -> T {
        self.inner.iter().fold(T::zero(), |acc, b| acc + b.volume())
    }

    pub fn boundary_volume(&self) -> T {
        self.boundary.iter().fold(T::zero(), |acc, b| acc + b.volume())
    }

    /// Whether `p` lies in some inner, boundary or pending box.
    pub fn covers(&self, p: &[T]) -> bool {
        self.inner
            .iter()
            .chain(&self.boundary)
            .chain(&self.pending)
            .any(|b| b.contains_point(p))
    }

    /// Records in output order: inner boxes, then boundary, then pending.
    pub fn records(&self, names: &[String], style: FloatFormat) -> Vec<BoxRecord> {
        let tagged = self
            .inner
            .iter()
            .map(|b| ("inner", b))
            .chain(self.boundary.iter().map(|b| ("boundary", b)))
            .chain(self.pending.iter().map(|b| ("pending", b)));
        tagged
            .map(|(status, b)| BoxRecord {
                status,
                domains: names
                    .iter()
                    .zip(b.iter())
                    .map(|(n, d)| DomainRecord {
                        name: n.clone(),
                        lo: render(d.lo(), style),
                        hi: render(d.hi(), style),
                    })
                    .collect(),
            })
            .collect()
    }

    /// Plain table: a header of variable names, then one row per box.
    pub fn to_table(&self, names: &[String], style: FloatFormat) -> String {
        let mut out = String::new();
        let _ = write!(out, "status");
        for n in names {
            let _ = write!(out, "\t{n}");
        }
        out.push('\n');
        for r in self.records(names, style) {
            let _ = write!(out, "{}", r.status);
            for d in &r.domains {
                let _ = write!(out, "\t[{},{}]", d.lo, d.hi);
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoxRecord {
    pub status: &'static str,
    pub domains: Vec<DomainRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DomainRecord {
    pub name: String,
    pub lo: String,
    pub hi: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaveConfig<T> {
    pub epsilon: T,
    pub bc: BcConfig<T>,
    pub max_boxes: u64,
}

impl<T: Scalar> PaveConfig<T> {
    pub fn new(epsilon: T) -> Self {
        PaveConfig {
            epsilon,
            bc: BcConfig::default(),
            max_boxes: DEFAULT_BOX_BUDGET,
        }
    }
}

/// Paves the solution set of `s` within `b`.
pub fn pave<T: Scalar>(s: &SystemSpec<T>, b: &IntervalBox<T>, config: &PaveConfig<T>) -> Result<Paving<T>> {
    let eps = config.epsilon;
    if eps.is_nan() || eps <= T::zero() || !eps.is_finite() {
        return Err(Error::BadEpsilon);
    }
    if config.max_boxes == 0 {
        return Err(Error::BadConfig);
    }
    let pruner = Pruner::new(s, config.bc)?;
    if b.len() != s.variables.len() {
        return Err(Error::BoxArity {
            expected: s.variables.len(),
            found: b.len(),
        });
    }
    if let Some(i) = b.iter().position(|d| !d.is_empty() && !d.is_bounded()) {
        return Err(Error::UnboundedDomain(s.variables[i].0.clone()));
    }

    let mut paving = Paving {
        inner: Vec::new(),
        boundary: Vec::new(),
        failed: 0,
        epsilon: eps,
        pending: Vec::new(),
        processed: 0,
    };
    let mut stack = vec![b.clone()];
    while let Some(current) = stack.pop() {
        if paving.processed >= config.max_boxes {
            stack.push(current);
            paving.pending = stack;
            break;
        }
        paving.processed += 1;
        let report = pruner.prune(&current)?;
        if report.outcome == Outcome::Failure {
            paving.failed += 1;
            continue;
        }
        let pruned = report.domains;
        if classify(pruner.bound_expressions(), &pruned) == Classification::Inner {
            paving.inner.push(pruned);
            continue;
        }
        if pruned.max_width() <= eps {
            paving.boundary.push(pruned);
            continue;
        }
        let k = pruned.widest().expect("non-empty box");
        match pruned[k].split() {
            Ok((left, right)) => {
                let mut r = pruned.clone();
                r[k] = right;
                let mut l = pruned;
                l[k] = left;
                stack.push(r);
                stack.push(l);
            }
            Err(_) => paving.boundary.push(pruned),
        }
    }
    Ok(paving)
}
