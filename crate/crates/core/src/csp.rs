//! Compilation of inequality systems into primitive-constraint problems.
//!
//! Every operator node of an expression gets a fresh internal variable and
//! one primitive constraint linking it to its operands; the root variable
//! is then bounded by `<= 0`. Subtraction and division reuse the sum and
//! product kernels: `x - y = z` becomes `z + y = x` and `x / y = q` becomes
//! `q * y = x`. Constant subtrees are folded into a single constant
//! variable with a point-like domain.
//!
//! Within one expression the internal variables form a tree, so the
//! constraints of different expressions share only external variables.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{eval_natural, BinaryOp, Expr, UnaryOp};
use crate::format::FloatFormat;
use crate::interval::{Interval, IntervalBox};
use crate::scalar::Scalar;
use crate::system::SystemSpec;

pub type VarId = usize;
pub type ConstraintId = usize;

/// Depth assigned to all-equal constraints: deeper than any tree level.
pub const ALLEQ_DEPTH: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    /// A variable of the source system (or a fresh copy of one).
    External,
    /// The value of one operator node.
    Internal,
    /// A folded constant subexpression.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundRel<T> {
    /// `v <= c`
    AtMost(T),
    /// `v >= c`
    AtLeast(T),
}

impl<T: Scalar> BoundRel<T> {
    pub fn as_interval(&self) -> Interval<T> {
        match *self {
            BoundRel::AtMost(c) => Interval::new(T::neg_infinity(), c),
            BoundRel::AtLeast(c) => Interval::new(c, T::infinity()),
        }
    }

    /// The closed form of `v > a` on the float grid: `v >= succ(a)`.
    pub fn greater_than(a: T) -> Self {
        BoundRel::AtLeast(a.succ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PrimitiveConstraint<T> {
    /// `x + y = z`
    Sum { x: VarId, y: VarId, z: VarId },
    /// `x * y = z`
    Prod { x: VarId, y: VarId, z: VarId },
    /// `f(x) = y`
    Unary { f: UnaryOp, x: VarId, y: VarId },
    Bound { v: VarId, rel: BoundRel<T> },
    AllEq(Vec<VarId>),
}

impl<T: Scalar> PrimitiveConstraint<T> {
    pub fn vars(&self) -> Vec<VarId> {
        match self {
            PrimitiveConstraint::Sum { x, y, z } | PrimitiveConstraint::Prod { x, y, z } => {
                vec![*x, *y, *z]
            }
            PrimitiveConstraint::Unary { x, y, .. } => vec![*x, *y],
            PrimitiveConstraint::Bound { v, .. } => vec![*v],
            PrimitiveConstraint::AllEq(vs) => vs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub kind: PrimitiveConstraint<T>,
    /// Tree level: root bound 0, root node 1, children one deeper.
    pub depth: u32,
    /// Source inequality, `None` for all-equal constraints.
    pub expr: Option<usize>,
}

/// Whether the root of a compiled expression is bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootRelation {
    /// Plain evaluation network, no constraint on the root.
    Free,
    /// `root <= 0`
    NonPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CompileOptions {
    /// Accept repeated variables inside one expression (the result is no
    /// longer tree-shaped).
    pub allow_repeats: bool,
}

/// A compiled problem. Immutable; propagation works on a separate
/// [`IntervalBox`] indexed by [`VarId`].
#[derive(Debug, Clone)]
pub struct Csp<T> {
    variables: Vec<Variable>,
    domains: IntervalBox<T>,
    constraints: Vec<Constraint<T>>,
    watchers: Vec<Vec<ConstraintId>>,
    roots: Vec<VarId>,
    by_name: BTreeMap<String, VarId>,
}

impl<T: Scalar> Csp<T> {
    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    pub fn constraint(&self, c: ConstraintId) -> &Constraint<T> {
        &self.constraints[c]
    }

    /// Initial domains: externals from the source, internals entire,
    /// constants their folded value.
    pub fn initial_box(&self) -> IntervalBox<T> {
        self.domains.clone()
    }

    /// Constraints mentioning `v`.
    pub fn watchers(&self, v: VarId) -> &[ConstraintId] {
        &self.watchers[v]
    }

    /// Root variable of each compiled expression.
    pub fn roots(&self) -> &[VarId] {
        &self.roots
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn is_internal(&self, v: VarId) -> bool {
        self.variables[v].kind == VarKind::Internal
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn all_constraints(&self) -> Vec<ConstraintId> {
        (0..self.constraints.len()).collect()
    }

    /// Constraints with at most one internal variable.
    pub fn peripheral_set(&self) -> Vec<ConstraintId> {
        (0..self.constraints.len())
            .filter(|&c| {
                self.constraints[c]
                    .kind
                    .vars()
                    .iter()
                    .filter(|&&v| self.is_internal(v))
                    .count()
                    <= 1
            })
            .collect()
    }

    /// The same variables restricted to the constraints of inequality `j`,
    /// plus the all-equal constraints narrowed to members that occur there.
    pub fn fragment(&self, j: usize) -> Csp<T> {
        let own: Vec<&Constraint<T>> =
            self.constraints.iter().filter(|c| c.expr == Some(j)).collect();
        let used: BTreeSet<VarId> = own.iter().flat_map(|c| c.kind.vars()).collect();
        let mut constraints: Vec<Constraint<T>> = own.into_iter().cloned().collect();
        for c in &self.constraints {
            if let PrimitiveConstraint::AllEq(members) = &c.kind {
                let local: Vec<VarId> =
                    members.iter().copied().filter(|v| used.contains(v)).collect();
                if local.len() >= 2 {
                    constraints.push(Constraint {
                        kind: PrimitiveConstraint::AllEq(local),
                        depth: ALLEQ_DEPTH,
                        expr: None,
                    });
                }
            }
        }
        let mut out = Csp {
            variables: self.variables.clone(),
            domains: self.domains.clone(),
            constraints,
            watchers: Vec::new(),
            roots: self.roots.get(j).copied().into_iter().collect(),
            by_name: self.by_name.clone(),
        };
        out.index();
        out
    }

    fn index(&mut self) {
        self.watchers = vec![Vec::new(); self.variables.len()];
        for (id, c) in self.constraints.iter().enumerate() {
            for v in c.kind.vars() {
                if !self.watchers[v].contains(&id) {
                    self.watchers[v].push(id);
                }
            }
        }
    }

    /// Checks the structural invariants of a compiled tree-shaped problem:
    /// non-root internal variables occur in exactly two constraints, internal
    /// variables never cross expressions, and each expression's constraints
    /// form a tree (checked by peeling leaves).
    pub fn check_structure(&self) -> std::result::Result<(), String> {
        let roots: BTreeSet<VarId> = self.roots.iter().copied().collect();
        for (v, var) in self.variables.iter().enumerate() {
            if var.kind != VarKind::Internal {
                continue;
            }
            let n = self.watchers[v].len();
            if !roots.contains(&v) && n != 2 {
                return Err(format!("internal `{}` occurs in {n} constraints", var.name));
            }
            let exprs: BTreeSet<Option<usize>> =
                self.watchers[v].iter().map(|&c| self.constraints[c].expr).collect();
            if exprs.len() != 1 {
                return Err(format!("internal `{}` crosses expressions", var.name));
            }
        }
        let n_exprs = self.roots.len();
        for j in 0..n_exprs {
            let cs: Vec<ConstraintId> = (0..self.constraints.len())
                .filter(|&c| self.constraints[c].expr == Some(j))
                .collect();
            // tree test on the bipartite graph of constraints and internals
            let mut degree: BTreeMap<VarId, usize> = BTreeMap::new();
            let mut edges = 0usize;
            for &c in &cs {
                for v in self.constraints[c].kind.vars() {
                    if self.is_internal(v) {
                        *degree.entry(v).or_insert(0) += 1;
                        edges += 1;
                    }
                }
            }
            let nodes = cs.len() + degree.len();
            if nodes > 0 && edges + 1 != nodes {
                return Err(format!("expression {j} does not compile to a tree"));
            }
            if !self.connected(&cs) {
                return Err(format!("expression {j} compiles to a disconnected network"));
            }
        }
        Ok(())
    }

    fn connected(&self, cs: &[ConstraintId]) -> bool {
        let Some(&start) = cs.first() else {
            return true;
        };
        let members: BTreeSet<ConstraintId> = cs.iter().copied().collect();
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for v in self.constraints[c].kind.vars() {
                if !self.is_internal(v) {
                    continue;
                }
                for &d in &self.watchers[v] {
                    if members.contains(&d) && seen.insert(d) {
                        queue.push_back(d);
                    }
                }
            }
        }
        seen.len() == cs.len()
    }

    fn operand(&self, v: VarId, style: FloatFormat) -> String {
        match self.variables[v].kind {
            VarKind::Constant => self.domains[v].render(style),
            _ => self.variables[v].name.clone(),
        }
    }

    /// One line per constraint: id, depth, source inequality, relation.
    pub fn dump(&self, style: FloatFormat) -> String {
        let mut out = String::new();
        for (id, c) in self.constraints.iter().enumerate() {
            let depth = if c.depth == ALLEQ_DEPTH {
                "inf".to_string()
            } else {
                c.depth.to_string()
            };
            let expr = c.expr.map_or("-".to_string(), |j| j.to_string());
            let o = |v| self.operand(v, style);
            let body = match &c.kind {
                PrimitiveConstraint::Sum { x, y, z } => {
                    format!("sum {} + {} = {}", o(*x), o(*y), o(*z))
                }
                PrimitiveConstraint::Prod { x, y, z } => {
                    format!("prod {} * {} = {}", o(*x), o(*y), o(*z))
                }
                PrimitiveConstraint::Unary { f, x, y } => {
                    format!("unary {}({}) = {}", f.name(), o(*x), o(*y))
                }
                PrimitiveConstraint::Bound { v, rel } => match rel {
                    BoundRel::AtMost(b) => {
                        format!("bound {} <= {}", o(*v), crate::format::render(*b, style))
                    }
                    BoundRel::AtLeast(b) => {
                        format!("bound {} >= {}", o(*v), crate::format::render(*b, style))
                    }
                },
                PrimitiveConstraint::AllEq(vs) => {
                    let names: Vec<String> = vs.iter().map(|&v| o(v)).collect();
                    format!("alleq {}", names.join(" "))
                }
            };
            writeln!(out, "c{id} depth={depth} expr={expr} {body}").unwrap();
        }
        out
    }
}

/// Incremental construction of a [`Csp`].
#[derive(Debug)]
pub struct CspBuilder<T> {
    csp: Csp<T>,
    internals: usize,
    constants: usize,
}

impl<T: Scalar> Default for CspBuilder<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> CspBuilder<T> {
    pub fn new() -> Self {
        CspBuilder {
            csp: Csp {
                variables: Vec::new(),
                domains: IntervalBox::default(),
                constraints: Vec::new(),
                watchers: Vec::new(),
                roots: Vec::new(),
                by_name: BTreeMap::new(),
            },
            internals: 0,
            constants: 0,
        }
    }

    /// Declares (or looks up) an external variable.
    pub fn external(&mut self, name: &str, domain: Interval<T>) -> VarId {
        if let Some(&v) = self.csp.by_name.get(name) {
            return v;
        }
        self.push_var(name.to_string(), VarKind::External, domain)
    }

    fn push_var(&mut self, name: String, kind: VarKind, domain: Interval<T>) -> VarId {
        let id = self.csp.variables.len();
        self.csp.by_name.insert(name.clone(), id);
        self.csp.variables.push(Variable { name, kind });
        self.csp.domains.push(domain);
        id
    }

    fn internal(&mut self) -> VarId {
        self.internals += 1;
        self.push_var(format!("%v{}", self.internals), VarKind::Internal, Interval::entire())
    }

    fn constant(&mut self, value: Interval<T>) -> VarId {
        self.constants += 1;
        self.push_var(format!("%c{}", self.constants), VarKind::Constant, value)
    }

    pub fn add(&mut self, kind: PrimitiveConstraint<T>, depth: u32, expr: Option<usize>) -> ConstraintId {
        self.csp.constraints.push(Constraint { kind, depth, expr });
        self.csp.constraints.len() - 1
    }

    /// Compiles one expression as inequality number `index`; returns the
    /// root variable. Unknown variables are declared with entire domains.
    pub fn expression(
        &mut self,
        e: &Expr,
        index: usize,
        root: RootRelation,
        options: CompileOptions,
    ) -> Result<VarId> {
        if !options.allow_repeats {
            if let Some((v, _)) = e.occurrences().into_iter().find(|&(_, k)| k > 1) {
                return Err(Error::RepeatedVariable(v));
            }
        }
        let r = self.node(e, index, 1)?;
        if root == RootRelation::NonPositive {
            self.add(
                PrimitiveConstraint::Bound {
                    v: r,
                    rel: BoundRel::AtMost(T::zero()),
                },
                0,
                Some(index),
            );
        }
        if self.csp.roots.len() <= index {
            self.csp.roots.resize(index + 1, r);
        }
        self.csp.roots[index] = r;
        Ok(r)
    }

    fn node(&mut self, e: &Expr, index: usize, depth: u32) -> Result<VarId> {
        if e.is_constant() {
            let value = eval_natural(e, |_| None)?;
            return Ok(self.constant(value));
        }
        Ok(match e {
            Expr::Const(_) => unreachable!("constant subtrees are folded"),
            Expr::Var(name) => self.external(name, Interval::entire()),
            Expr::Unary(f, a) => {
                let x = self.node(a, index, depth + 1)?;
                let y = self.internal();
                self.add(PrimitiveConstraint::Unary { f: *f, x, y }, depth, Some(index));
                y
            }
            Expr::Binary(op, l, r) => {
                let a = self.node(l, index, depth + 1)?;
                let b = self.node(r, index, depth + 1)?;
                let v = self.internal();
                let kind = match op {
                    BinaryOp::Add => PrimitiveConstraint::Sum { x: a, y: b, z: v },
                    BinaryOp::Sub => PrimitiveConstraint::Sum { x: v, y: b, z: a },
                    BinaryOp::Mul => PrimitiveConstraint::Prod { x: a, y: b, z: v },
                    BinaryOp::Div => PrimitiveConstraint::Prod { x: v, y: b, z: a },
                };
                self.add(kind, depth, Some(index));
                v
            }
        })
    }

    pub fn all_eq(&mut self, members: Vec<VarId>) -> Option<ConstraintId> {
        (members.len() >= 2).then(|| self.add(PrimitiveConstraint::AllEq(members), ALLEQ_DEPTH, None))
    }

    pub fn finish(mut self) -> Csp<T> {
        self.csp.index();
        self.csp
    }
}

/// Compiles a single expression (external domains default to entire).
pub fn compile_expression<T: Scalar>(e: &Expr, root: RootRelation) -> Result<Csp<T>> {
    let mut b = CspBuilder::new();
    b.expression(e, 0, root, CompileOptions::default())?;
    Ok(b.finish())
}

/// Compiles every inequality with a `<= 0` root bound and adds one
/// all-equal constraint per equivalence class.
pub fn compile_system<T: Scalar>(s: &SystemSpec<T>) -> Result<Csp<T>> {
    compile_system_with(s, RootRelation::NonPositive, CompileOptions::default())
}

pub fn compile_system_with<T: Scalar>(
    s: &SystemSpec<T>,
    root: RootRelation,
    options: CompileOptions,
) -> Result<Csp<T>> {
    s.validate()?;
    let mut b = CspBuilder::new();
    for (name, dom) in &s.variables {
        b.external(name, *dom);
    }
    for (j, g) in s.inequalities.iter().enumerate() {
        b.expression(g, j, root, options)?;
    }
    for class in &s.classes {
        let ids = class
            .members
            .iter()
            .map(|m| b.csp.by_name[m.as_str()])
            .collect();
        b.all_eq(ids);
    }
    Ok(b.finish())
}
