//! Box consistency, functional and relational.
//!
//! Both variants narrow one bound of one variable at a time. They bisect for
//! the outermost slice of the domain that a trial test proves contains no
//! solutions. The functional test evaluates the inequality over the slice
//! and checks that the left bound is positive. The relational test runs
//! propagation over the compiled constraints of the inequality, with the
//! variable restricted to the slice, and checks for failure. Propagation
//! fails whenever the evaluation test succeeds, so relational narrowing is
//! at least as tight.

use serde::Serialize;

use crate::csp::{compile_system, compile_system_with, CompileOptions, Csp, RootRelation, VarId};
use crate::error::{Error, Result};
use crate::expr::BoundExpr;
use crate::interval::{Interval, IntervalBox};
use crate::propagation::{gpa_with, Discipline, GpaConfig, Outcome, PropagationStats, DEFAULT_ACTIVATION_BUDGET};
use crate::scalar::Scalar;
use crate::system::SystemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BcMode {
    Functional,
    Relational,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcConfig<T> {
    pub mode: BcMode,
    /// Bisection stops once the bracket is at most this wide; zero means
    /// run down to adjacent floats.
    pub tau: T,
    /// Cap on outer sweeps.
    pub max_rounds: usize,
    /// Cap on propagation activations (relational) or evaluations
    /// (functional) over the whole run.
    pub budget: u64,
    /// Rewrite to single-occurrence form before compiling (relational
    /// mode). Without it, repeated variables are compiled as shared nodes.
    pub rewrite: bool,
}

impl<T: Scalar> Default for BcConfig<T> {
    fn default() -> Self {
        BcConfig {
            mode: BcMode::Relational,
            tau: T::zero(),
            max_rounds: 1000,
            budget: DEFAULT_ACTIVATION_BUDGET,
            rewrite: true,
        }
    }
}

impl<T: Scalar> BcConfig<T> {
    pub fn with_mode(mode: BcMode) -> Self {
        BcConfig {
            mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau.is_nan() || self.tau < T::zero() || self.max_rounds == 0 || self.budget == 0 {
            return Err(Error::BadConfig);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcReport<T> {
    /// Narrowed domains of the source variables; some domain is empty iff
    /// `outcome` is [`Outcome::Failure`].
    pub domains: IntervalBox<T>,
    pub outcome: Outcome,
    pub rounds: usize,
    /// Whether the last sweep changed nothing.
    pub converged: bool,
    /// Trial tests run by the bisections.
    pub trials: u64,
    /// Propagation over the full network (relational mode only).
    pub stats: Option<PropagationStats>,
}

impl<T: Scalar> BcReport<T> {
    pub fn failed(&self) -> bool {
        self.outcome == Outcome::Failure
    }
}

enum Search<T> {
    /// The whole domain fails the test.
    Empty,
    /// Not even the extreme slice fails.
    Unchanged,
    /// Extreme failing cut point.
    At(T),
}

/// Least `t` such that `infeasible([t, hi])`, assuming the test is
/// monotone in `t`.
fn search_up<T: Scalar>(x: Interval<T>, tau: T, mut infeasible: impl FnMut(Interval<T>) -> bool) -> Search<T> {
    let (lo, hi) = (x.lo(), x.hi());
    if infeasible(x) {
        return Search::Empty;
    }
    let top = if hi.is_finite() { hi } else { T::max_value() };
    if top <= lo || !infeasible(Interval::new(top, hi)) {
        return Search::Unchanged;
    }
    let (mut a, mut b) = (lo.ordinal() as i128, top.ordinal() as i128);
    while b - a > 1 {
        if tau > T::zero() && T::from_ordinal(b as i64) - T::from_ordinal(a as i64) <= tau {
            break;
        }
        let m = a + (b - a) / 2;
        if infeasible(Interval::new(T::from_ordinal(m as i64), hi)) {
            b = m;
        } else {
            a = m;
        }
    }
    Search::At(T::from_ordinal(b as i64))
}

/// Greatest `t` such that `infeasible([lo, t])`.
fn search_down<T: Scalar>(x: Interval<T>, tau: T, mut infeasible: impl FnMut(Interval<T>) -> bool) -> Search<T> {
    let (lo, hi) = (x.lo(), x.hi());
    if infeasible(x) {
        return Search::Empty;
    }
    let bottom = if lo.is_finite() { lo } else { T::min_value() };
    if bottom >= hi || !infeasible(Interval::new(lo, bottom)) {
        return Search::Unchanged;
    }
    let (mut a, mut b) = (bottom.ordinal() as i128, hi.ordinal() as i128);
    while b - a > 1 {
        if tau > T::zero() && T::from_ordinal(b as i64) - T::from_ordinal(a as i64) <= tau {
            break;
        }
        let m = a + (b - a) / 2;
        if infeasible(Interval::new(lo, T::from_ordinal(m as i64))) {
            a = m;
        } else {
            b = m;
        }
    }
    Search::At(T::from_ordinal(a as i64))
}

fn evaluation_test<T: Scalar>(g: &BoundExpr<T>, b: &[Interval<T>], i: usize) -> impl FnMut(Interval<T>) -> bool {
    let mut scratch = b.to_vec();
    let g = g.clone();
    move |slice| {
        scratch[i] = slice;
        g.eval(&scratch).lo() > T::zero()
    }
}

/// Upper-bound narrowing by interval evaluation: `[lb, a]` for the least
/// `a` with `lb(g(X_i ↦ [a, rb])) > 0`.
pub fn shrink_upper_functional<T: Scalar>(g: &BoundExpr<T>, i: usize, b: &[Interval<T>], tau: T) -> Interval<T> {
    let x = b[i];
    if x.is_empty() {
        return x;
    }
    match search_up(x, tau, evaluation_test(g, b, i)) {
        Search::Empty => Interval::empty(),
        Search::Unchanged => x,
        Search::At(a) => Interval::new(x.lo(), a),
    }
}

/// Lower-bound narrowing by interval evaluation: `[a, rb]` for the greatest
/// `a` with `lb(g(X_i ↦ [lb, a])) > 0`.
pub fn shrink_lower_functional<T: Scalar>(g: &BoundExpr<T>, i: usize, b: &[Interval<T>], tau: T) -> Interval<T> {
    let x = b[i];
    if x.is_empty() {
        return x;
    }
    match search_down(x, tau, evaluation_test(g, b, i)) {
        Search::Empty => Interval::empty(),
        Search::Unchanged => x,
        Search::At(a) => Interval::new(a, x.hi()),
    }
}

/// A system prepared for repeated box-consistency runs: bound expressions
/// for the functional test, the compiled single-occurrence network and its
/// per-inequality fragments for the relational one.
#[derive(Debug, Clone)]
pub struct Pruner<T> {
    n: usize,
    config: BcConfig<T>,
    bound: Vec<BoundExpr<T>>,
    /// Source variables occurring in each inequality.
    occurs: Vec<Vec<usize>>,
    csp: Csp<T>,
    fragments: Vec<Csp<T>>,
    /// Network variables standing for each source variable.
    members: Vec<Vec<VarId>>,
    /// The same, restricted to those occurring in one fragment:
    /// `fragment_members[j][i]`.
    fragment_members: Vec<Vec<Vec<VarId>>>,
}

impl<T: Scalar> Pruner<T> {
    pub fn new(s: &SystemSpec<T>, config: BcConfig<T>) -> Result<Self> {
        config.validate()?;
        s.validate()?;
        let n = s.variables.len();
        let bound = s.bind_all()?;
        let names = s.names();
        let occurs = s
            .inequalities
            .iter()
            .map(|g| {
                let vs = g.variables();
                (0..n).filter(|&i| vs.contains(&names[i])).collect()
            })
            .collect();

        let (rewritten, csp) = if config.rewrite {
            let r = s.rewrite_single_occurrence();
            let csp = compile_system(&r)?;
            (r, csp)
        } else {
            let options = CompileOptions { allow_repeats: true };
            (s.clone(), compile_system_with(s, RootRelation::NonPositive, options)?)
        };
        let members: Vec<Vec<VarId>> = names
            .iter()
            .map(|name| {
                rewritten
                    .variables
                    .iter()
                    .filter(|(m, _)| rewritten.origin_of(m) == name)
                    .map(|(m, _)| csp.var_id(m).expect("compiled variable"))
                    .collect()
            })
            .collect();
        let fragments: Vec<Csp<T>> = (0..s.inequalities.len()).map(|j| csp.fragment(j)).collect();
        let fragment_members = fragments
            .iter()
            .map(|f| {
                members
                    .iter()
                    .map(|ms| ms.iter().copied().filter(|&m| !f.watchers(m).is_empty()).collect())
                    .collect()
            })
            .collect();
        Ok(Pruner {
            n,
            config,
            bound,
            occurs,
            csp,
            fragments,
            members,
            fragment_members,
        })
    }

    pub fn config(&self) -> &BcConfig<T> {
        &self.config
    }

    pub fn bound_expressions(&self) -> &[BoundExpr<T>] {
        &self.bound
    }

    pub fn network(&self) -> &Csp<T> {
        &self.csp
    }

    fn check_arity(&self, b: &IntervalBox<T>) -> Result<()> {
        if b.len() != self.n {
            return Err(Error::BoxArity {
                expected: self.n,
                found: b.len(),
            });
        }
        Ok(())
    }

    /// Narrows `b` to box consistency in the configured mode.
    pub fn prune(&self, b: &IntervalBox<T>) -> Result<BcReport<T>> {
        self.check_arity(b)?;
        match self.config.mode {
            BcMode::Functional => Ok(self.functional(b)),
            BcMode::Relational => Ok(self.relational(b)),
        }
    }

    fn report(&self, domains: IntervalBox<T>, outcome: Outcome, rounds: usize, converged: bool, trials: u64) -> BcReport<T> {
        BcReport {
            domains,
            outcome,
            rounds,
            converged,
            trials,
            stats: None,
        }
    }

    fn functional(&self, b: &IntervalBox<T>) -> BcReport<T> {
        let mut cur = b.clone();
        let tau = self.config.tau;
        let mut trials = 0u64;
        if cur.has_empty() {
            let none = IntervalBox::new(vec![Interval::empty(); self.n]);
            return self.report(none, Outcome::Failure, 0, true, 0);
        }
        for round in 1..=self.config.max_rounds {
            let mut changed = false;
            for (j, g) in self.bound.iter().enumerate() {
                for &i in &self.occurs[j] {
                    for upper in [true, false] {
                        let old = cur[i];
                        let mut counted = evaluation_test(g, cur.as_slice(), i);
                        let mut test = |slice| {
                            trials += 1;
                            counted(slice)
                        };
                        let new = match if upper { search_up(old, tau, &mut test) } else { search_down(old, tau, &mut test) } {
                            Search::Empty => Interval::empty(),
                            Search::Unchanged => old,
                            Search::At(a) if upper => Interval::new(old.lo(), a),
                            Search::At(a) => Interval::new(a, old.hi()),
                        };
                        if new != old {
                            changed = true;
                            cur[i] = new;
                        }
                        if new.is_empty() {
                            let none = IntervalBox::new(vec![Interval::empty(); self.n]);
                            return self.report(none, Outcome::Failure, round, true, trials);
                        }
                        if trials >= self.config.budget {
                            return self.report(cur, Outcome::BudgetExhausted, round, false, trials);
                        }
                    }
                }
            }
            if !changed {
                return self.report(cur, Outcome::Fixpoint, round, true, trials);
            }
        }
        self.report(cur, Outcome::Fixpoint, self.config.max_rounds, false, trials)
    }

    fn relational(&self, b: &IntervalBox<T>) -> BcReport<T> {
        let mut state = Relational {
            pruner: self,
            net: self.csp.initial_box(),
            stats: PropagationStats {
                activations: vec![0; self.csp.len()],
                total_activations: 0,
                effective_activations: 0,
                outcome: Outcome::Fixpoint,
            },
            spent: 0,
            trials: 0,
        };
        for (i, ms) in self.members.iter().enumerate() {
            for &m in ms {
                state.net[m] = b[i];
            }
        }
        let finish = |state: Relational<'_, T>, outcome: Outcome, rounds: usize, converged: bool| {
            // the empty domain may sit on an internal node
            let domains = if outcome == Outcome::Failure {
                IntervalBox::new(vec![Interval::empty(); self.n])
            } else {
                state.project()
            };
            let mut stats = state.stats;
            stats.outcome = outcome;
            BcReport {
                domains,
                outcome,
                rounds,
                converged,
                trials: state.trials,
                stats: Some(stats),
            }
        };
        if b.has_empty() {
            return finish(state, Outcome::Failure, 0, true);
        }
        let all = self.csp.all_constraints();
        match state.propagate(&all) {
            Outcome::Fixpoint => {}
            other => return finish(state, other, 0, other == Outcome::Failure),
        }
        for round in 1..=self.config.max_rounds {
            let mut changed = false;
            for j in 0..self.bound.len() {
                for &i in &self.occurs[j] {
                    for upper in [true, false] {
                        match state.shrink(j, i, upper) {
                            Step::Same => {}
                            Step::Narrowed => changed = true,
                            Step::Stop(outcome) => return finish(state, outcome, round, outcome == Outcome::Failure),
                        }
                    }
                }
            }
            if !changed {
                return finish(state, Outcome::Fixpoint, round, true);
            }
        }
        let rounds = self.config.max_rounds;
        finish(state, Outcome::Fixpoint, rounds, false)
    }
}

enum Step {
    Same,
    Narrowed,
    Stop(Outcome),
}

struct Relational<'a, T> {
    pruner: &'a Pruner<T>,
    /// Domains of the full network, kept at a propagation fixpoint.
    net: IntervalBox<T>,
    stats: PropagationStats,
    spent: u64,
    trials: u64,
}

impl<T: Scalar> Relational<'_, T> {
    fn remaining(&self) -> u64 {
        self.pruner.config.budget.saturating_sub(self.spent)
    }

    fn propagate(&mut self, init: &[usize]) -> Outcome {
        let config = GpaConfig {
            discipline: Discipline::Fifo,
            budget: self.remaining(),
        };
        let run = gpa_with(&self.pruner.csp, &mut self.net, init, &config);
        self.spent += run.total_activations;
        self.stats.absorb(&run);
        run.outcome
    }

    /// Propagation over fragment `j` with source variable `i` cut to
    /// `slice`; true iff it fails.
    fn infeasible(&mut self, j: usize, i: usize, slice: Interval<T>) -> std::result::Result<bool, Outcome> {
        self.trials += 1;
        let mut trial = self.net.clone();
        for &m in &self.pruner.fragment_members[j][i] {
            trial[m] = trial[m].intersect(&slice);
            if trial[m].is_empty() {
                return Ok(true);
            }
        }
        let frag = &self.pruner.fragments[j];
        let config = GpaConfig {
            discipline: Discipline::Fifo,
            budget: self.remaining(),
        };
        let run = gpa_with(frag, &mut trial, &frag.all_constraints(), &config);
        self.spent += run.total_activations;
        match run.outcome {
            Outcome::BudgetExhausted => Err(Outcome::BudgetExhausted),
            o => Ok(o == Outcome::Failure),
        }
    }

    fn current(&self, i: usize) -> Interval<T> {
        self.pruner.members[i]
            .iter()
            .fold(Interval::entire(), |acc, &m| acc.intersect(&self.net[m]))
    }

    fn shrink(&mut self, j: usize, i: usize, upper: bool) -> Step {
        let old = self.current(i);
        let tau = self.pruner.config.tau;
        let mut exhausted = false;
        let mut test = |slice| match self.infeasible(j, i, slice) {
            Ok(v) => v,
            Err(_) => {
                exhausted = true;
                // stop the bisection where it stands; `true` only ever
                // shrinks the bracket and is discarded below
                true
            }
        };
        let found = if upper { search_up(old, tau, &mut test) } else { search_down(old, tau, &mut test) };
        if exhausted {
            return Step::Stop(Outcome::BudgetExhausted);
        }
        let new = match found {
            Search::Empty => Interval::empty(),
            Search::Unchanged => return Step::Same,
            // the trial slice starts one float past the cut point
            Search::At(t) if upper => Interval::new(old.lo(), t.pred()),
            Search::At(t) => Interval::new(t.succ(), old.hi()),
        };
        let mut touched = Vec::new();
        for &m in &self.pruner.members[i] {
            let d = self.net[m].intersect(&new);
            if d != self.net[m] {
                self.net[m] = d;
                touched.extend_from_slice(self.pruner.csp.watchers(m));
            }
        }
        if new.is_empty() {
            return Step::Stop(Outcome::Failure);
        }
        if touched.is_empty() {
            return Step::Same;
        }
        touched.sort_unstable();
        touched.dedup();
        match self.propagate(&touched) {
            Outcome::Fixpoint => Step::Narrowed,
            other => Step::Stop(other),
        }
    }

    fn project(&self) -> IntervalBox<T> {
        (0..self.pruner.n).map(|i| self.current(i)).collect()
    }
}

/// Functional box consistency of `s` over `b`.
pub fn functional_bc<T: Scalar>(s: &SystemSpec<T>, b: &IntervalBox<T>, config: &BcConfig<T>) -> Result<BcReport<T>> {
    let config = BcConfig {
        mode: BcMode::Functional,
        ..*config
    };
    Pruner::new(s, config)?.prune(b)
}

/// Relational box consistency of `s` over `b`.
pub fn relational_bc<T: Scalar>(s: &SystemSpec<T>, b: &IntervalBox<T>, config: &BcConfig<T>) -> Result<BcReport<T>> {
    let config = BcConfig {
        mode: BcMode::Relational,
        ..*config
    };
    Pruner::new(s, config)?.prune(b)
}

/// Single relational trial: propagation over the constraints of
/// inequality `j` with source variable `i` cut to `(a, rb]`. Returns true
/// iff propagation fails, i.e. no solution has `x_i > a`.
pub fn relational_shrink<T: Scalar>(pruner: &Pruner<T>, b: &IntervalBox<T>, j: usize, i: usize, a: T) -> Result<bool> {
    pruner.check_arity(b)?;
    let mut state = Relational {
        pruner,
        net: pruner.csp.initial_box(),
        stats: PropagationStats {
            activations: vec![0; pruner.csp.len()],
            total_activations: 0,
            effective_activations: 0,
            outcome: Outcome::Fixpoint,
        },
        spent: 0,
        trials: 0,
    };
    for (k, ms) in pruner.members.iter().enumerate() {
        for &m in ms {
            state.net[m] = b[k];
        }
    }
    let x = b[i];
    let slice = if a >= x.hi() {
        Interval::new(x.hi(), x.hi())
    } else {
        Interval::new(a.succ(), x.hi())
    };
    state
        .infeasible(j, i, slice)
        .map_err(|_| Error::BudgetExceeded)
}
