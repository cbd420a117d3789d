//! Interval constraint propagation over systems of nonlinear inequalities.
//!
//! Expressions are compiled into networks of primitive constraints
//! (`x + y = z`, `x * y = z`, `f(x) = y`, bounds and all-equal links), each
//! with a sound domain reduction operator over outward-rounded intervals.
//! On top of this sit a generic propagation loop, box consistency in a
//! functional and a relational variant, and a branch-and-prune paver.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the bottom of this file fix the scalar for the common cases.

pub mod consistency;
pub mod csp;
pub mod dro;
pub mod error;
pub mod expr;
pub mod format;
pub mod interval;
mod lexer;
pub mod literal;
pub mod paving;
pub mod propagation;
pub mod scalar;
pub mod system;
pub mod system_file;

pub use consistency::{
    functional_bc, relational_bc, relational_shrink, shrink_lower_functional, shrink_upper_functional,
    BcConfig, BcMode, BcReport, Pruner,
};
pub use csp::{
    compile_expression, compile_system, compile_system_with, BoundRel, CompileOptions, Constraint,
    ConstraintId, Csp, CspBuilder, PrimitiveConstraint, RootRelation, VarId, VarKind, Variable,
};
pub use dro::{is_fixpoint, narrow, reduce, ReductionOutcome};
pub use error::{Error, LiteralError, ParseError, Result};
pub use expr::{eval_natural, BinaryOp, BoundExpr, Expr, UnaryOp};
pub use format::FloatFormat;
pub use interval::{Interval, IntervalBox, IntervalPair};
pub use literal::{least_canonical, parse_bound};
pub use paving::{classify, pave, BoxRecord, Classification, DomainRecord, PaveConfig, Paving};
pub use propagation::{
    count_single_pass, gpa, gpa_with, psi_evaluate, psi_reactivate, psi_reactivate_with, ActiveSet,
    Discipline, GpaConfig, Outcome, PropagationStats,
};
pub use scalar::Scalar;
pub use system::{EquivalenceClass, SystemSpec};
pub use system_file::parse_system;

pub type Interval64 = Interval<f64>;
pub type Interval32 = Interval<f32>;
pub type Box64 = IntervalBox<f64>;
pub type Box32 = IntervalBox<f32>;
pub type Csp64 = Csp<f64>;
pub type Csp32 = Csp<f32>;
pub type System64 = SystemSpec<f64>;
pub type System32 = SystemSpec<f32>;
