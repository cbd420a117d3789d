//! The generic propagation loop and its selectively initialized variants.
//!
//! [`gpa`] keeps an active set of constraints. It repeatedly takes one out,
//! applies its reduction operator, and stops at the first empty domain.
//! Every constraint on a variable that changed is added back. The constraint
//! just applied is released only after that step, so it is never queued
//! again by its own changes. When the active set runs dry the box is a
//! common fixpoint of every operator that was ever activated.
//!
//! [`psi_evaluate`] starts from the peripheral constraints only, processed
//! deepest level first. On a tree-shaped network with unconstrained
//! internal variables this runs each operator once, and the root ends up
//! holding the natural interval value of the expression.
//! [`psi_reactivate`] restarts propagation from the single constraint on a
//! variable whose domain was cut from outside.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::csp::{ConstraintId, Csp, VarId};
use crate::dro::narrow;
use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalBox};
use crate::scalar::Scalar;

/// Activation cap used when none is given. Reaching it means the run was
/// still converging (possibly one ulp at a time), not that it looped.
pub const DEFAULT_ACTIVATION_BUDGET: u64 = 10_000_000;

/// Order in which the active set hands out constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discipline {
    Fifo,
    /// Largest depth first, FIFO among equals.
    DeepestFirst,
    /// Smallest depth first, FIFO among equals.
    ShallowestFirst,
    /// Uniformly random member, reproducible from the seed.
    Random(u64),
}

enum Store {
    Fifo(VecDeque<ConstraintId>),
    Deepest(BinaryHeap<(u32, Reverse<u64>, ConstraintId)>),
    Shallowest(BinaryHeap<(Reverse<u32>, Reverse<u64>, ConstraintId)>),
    Random(Vec<ConstraintId>, Box<StdRng>),
}

/// Constraints awaiting activation, each at most once.
///
/// A popped constraint still counts as a member until [`ActiveSet::release`]
/// is called, so it cannot be re-queued in the meantime.
pub struct ActiveSet {
    store: Store,
    member: Vec<bool>,
    seq: u64,
}

impl ActiveSet {
    pub fn new(constraints: usize, discipline: Discipline) -> Self {
        let store = match discipline {
            Discipline::Fifo => Store::Fifo(VecDeque::new()),
            Discipline::DeepestFirst => Store::Deepest(BinaryHeap::new()),
            Discipline::ShallowestFirst => Store::Shallowest(BinaryHeap::new()),
            Discipline::Random(seed) => Store::Random(Vec::new(), Box::new(StdRng::seed_from_u64(seed))),
        };
        ActiveSet {
            store,
            member: vec![false; constraints],
            seq: 0,
        }
    }

    /// Adds `c` unless it is already a member; returns whether it was added.
    pub fn insert(&mut self, c: ConstraintId, depth: u32) -> bool {
        if self.member[c] {
            return false;
        }
        self.member[c] = true;
        self.seq += 1;
        let seq = self.seq;
        match &mut self.store {
            Store::Fifo(q) => q.push_back(c),
            Store::Deepest(h) => h.push((depth, Reverse(seq), c)),
            Store::Shallowest(h) => h.push((Reverse(depth), Reverse(seq), c)),
            Store::Random(v, _) => v.push(c),
        }
        true
    }

    /// Takes the next constraint out of the order; it stays a member.
    pub fn pop(&mut self) -> Option<ConstraintId> {
        match &mut self.store {
            Store::Fifo(q) => q.pop_front(),
            Store::Deepest(h) => h.pop().map(|(_, _, c)| c),
            Store::Shallowest(h) => h.pop().map(|(_, _, c)| c),
            Store::Random(v, rng) => {
                if v.is_empty() {
                    None
                } else {
                    let i = rng.random_range(0..v.len());
                    Some(v.swap_remove(i))
                }
            }
        }
    }

    pub fn release(&mut self, c: ConstraintId) {
        self.member[c] = false;
    }

    pub fn contains(&self, c: ConstraintId) -> bool {
        self.member[c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Fixpoint,
    Failure,
    BudgetExhausted,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Fixpoint => "fixpoint",
            Outcome::Failure => "failure",
            Outcome::BudgetExhausted => "budget-exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropagationStats {
    /// Activation count per constraint, indexed by constraint id.
    pub activations: Vec<u64>,
    pub total_activations: u64,
    /// Activations that changed at least one domain.
    pub effective_activations: u64,
    pub outcome: Outcome,
}

impl PropagationStats {
    fn new(constraints: usize) -> Self {
        PropagationStats {
            activations: vec![0; constraints],
            total_activations: 0,
            effective_activations: 0,
            outcome: Outcome::Fixpoint,
        }
    }

    pub fn failed(&self) -> bool {
        self.outcome == Outcome::Failure
    }

    pub fn max_activations(&self) -> u64 {
        self.activations.iter().copied().max().unwrap_or(0)
    }

    /// Adds the counts of `other` (same network) into `self`; the outcome
    /// becomes the more severe of the two.
    pub fn absorb(&mut self, other: &PropagationStats) {
        if self.activations.len() < other.activations.len() {
            self.activations.resize(other.activations.len(), 0);
        }
        for (a, b) in self.activations.iter_mut().zip(&other.activations) {
            *a += b;
        }
        self.total_activations += other.total_activations;
        self.effective_activations += other.effective_activations;
        if other.outcome != Outcome::Fixpoint {
            self.outcome = other.outcome;
        }
    }

    /// `key=value` lines: totals first, then `activations.cN` per constraint.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "outcome={}", self.outcome.as_str());
        let _ = writeln!(out, "total_activations={}", self.total_activations);
        let _ = writeln!(out, "effective_activations={}", self.effective_activations);
        for (c, n) in self.activations.iter().enumerate() {
            let _ = writeln!(out, "activations.c{c}={n}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GpaConfig {
    pub discipline: Discipline,
    /// Maximum number of activations before giving up.
    pub budget: u64,
}

impl Default for GpaConfig {
    fn default() -> Self {
        GpaConfig {
            discipline: Discipline::Fifo,
            budget: DEFAULT_ACTIVATION_BUDGET,
        }
    }
}

impl GpaConfig {
    pub fn with_discipline(discipline: Discipline) -> Self {
        GpaConfig {
            discipline,
            ..GpaConfig::default()
        }
    }
}

/// Propagates over `csp` starting from the constraints in `init`, reducing
/// `b` in place. On failure the offending domain in `b` is empty.
pub fn gpa<T: Scalar>(
    csp: &Csp<T>,
    b: &mut IntervalBox<T>,
    init: &[ConstraintId],
    discipline: Discipline,
) -> PropagationStats {
    gpa_with(csp, b, init, &GpaConfig::with_discipline(discipline))
}

pub fn gpa_with<T: Scalar>(
    csp: &Csp<T>,
    b: &mut IntervalBox<T>,
    init: &[ConstraintId],
    config: &GpaConfig,
) -> PropagationStats {
    let constraints = csp.constraints();
    let mut stats = PropagationStats::new(constraints.len());
    if b.has_empty() {
        stats.outcome = Outcome::Failure;
        return stats;
    }
    let mut active = ActiveSet::new(constraints.len(), config.discipline);
    for &c in init {
        active.insert(c, constraints[c].depth);
    }
    while let Some(c) = active.pop() {
        if stats.total_activations >= config.budget {
            stats.outcome = Outcome::BudgetExhausted;
            return stats;
        }
        stats.activations[c] += 1;
        stats.total_activations += 1;
        let out = narrow(&constraints[c].kind, b);
        if !out.changed.is_empty() {
            stats.effective_activations += 1;
        }
        if out.failed {
            stats.outcome = Outcome::Failure;
            return stats;
        }
        for &v in &out.changed {
            for &w in csp.watchers(v) {
                active.insert(w, constraints[w].depth);
            }
        }
        active.release(c);
    }
    stats
}

/// Evaluation by propagation: peripheral constraints only, deepest first.
pub fn psi_evaluate<T: Scalar>(csp: &Csp<T>, b: &mut IntervalBox<T>) -> PropagationStats {
    gpa(csp, b, &csp.peripheral_set(), Discipline::DeepestFirst)
}

/// Cuts the domain of `v` to `shrunk` and propagates from the one
/// constraint `v` occurs in. `b` should be a fixpoint of `csp`.
pub fn psi_reactivate<T: Scalar>(
    csp: &Csp<T>,
    b: &mut IntervalBox<T>,
    v: VarId,
    shrunk: Interval<T>,
) -> Result<PropagationStats> {
    psi_reactivate_with(csp, b, v, shrunk, &GpaConfig::with_discipline(Discipline::ShallowestFirst))
}

pub fn psi_reactivate_with<T: Scalar>(
    csp: &Csp<T>,
    b: &mut IntervalBox<T>,
    v: VarId,
    shrunk: Interval<T>,
    config: &GpaConfig,
) -> Result<PropagationStats> {
    let name = &csp.variables()[v].name;
    let watchers = csp.watchers(v);
    if watchers.len() != 1 {
        return Err(Error::NotSingleConstraint(name.clone(), watchers.len()));
    }
    if !shrunk.is_proper_subset(&b[v]) {
        return Err(Error::NotProperSubset(name.clone()));
    }
    b[v] = shrunk;
    Ok(gpa_with(csp, b, watchers, config))
}

/// Runs [`psi_reactivate`] and reports whether no operator ran twice.
pub fn count_single_pass<T: Scalar>(
    csp: &Csp<T>,
    b: &IntervalBox<T>,
    v: VarId,
    shrunk: Interval<T>,
) -> Result<bool> {
    let mut b = b.clone();
    let stats = psi_reactivate(csp, &mut b, v, shrunk)?;
    Ok(stats.max_activations() <= 1)
}
