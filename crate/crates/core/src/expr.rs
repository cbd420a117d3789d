//! Arithmetic expression trees: parsing, rendering and natural interval
//! evaluation.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};
use crate::interval::Interval;
use crate::lexer::{tokenize, Tok, Token};
use crate::literal::least_canonical;
use crate::scalar::Scalar;

/// Names that cannot be used as variables.
pub const RESERVED: &[&str] = &["exp", "log", "sqrt", "sin", "cos", "var", "in"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    /// Integer power `^k`.
    Pow(u32),
}

impl UnaryOp {
    pub fn apply<T: Scalar>(self, x: Interval<T>) -> Interval<T> {
        match self {
            UnaryOp::Neg => -x,
            UnaryOp::Exp => x.exp(),
            UnaryOp::Log => x.ln(),
            UnaryOp::Sqrt => x.sqrt(),
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
            UnaryOp::Pow(k) => x.powi(k),
        }
    }

    pub fn name(self) -> String {
        match self {
            UnaryOp::Neg => "neg".into(),
            UnaryOp::Exp => "exp".into(),
            UnaryOp::Log => "log".into(),
            UnaryOp::Sqrt => "sqrt".into(),
            UnaryOp::Sin => "sin".into(),
            UnaryOp::Cos => "cos".into(),
            UnaryOp::Pow(k) => format!("pow{k}"),
        }
    }

    fn function(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn apply<T: Scalar>(self, a: Interval<T>, b: Interval<T>) -> Interval<T> {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / b,
        }
    }

    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

/// An expression tree. Constants keep their decimal literal so that they
/// can be enclosed exactly for any scalar type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Const(String),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    /// A constant from a float; negative values become `Neg(Const)`.
    pub fn constant(x: f64) -> Self {
        assert!(x.is_finite(), "constants must be finite");
        if x < 0.0 {
            Expr::unary(UnaryOp::Neg, Expr::Const(format!("{}", -x)))
        } else {
            Expr::Const(format!("{x}"))
        }
    }

    pub fn unary(op: UnaryOp, e: Expr) -> Self {
        Expr::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinaryOp, l: Expr, r: Expr) -> Self {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    /// Parses the expression grammar with precedence
    /// `^` > unary `-` > `*`,`/` > `+`,`-`, all binary operators left
    /// associative.
    pub fn parse(text: &str) -> std::result::Result<Expr, ParseError> {
        let tokens = tokenize(text)?;
        let mut p = ExprParser::new(&tokens);
        let e = p.expr()?;
        p.expect_eof()?;
        Ok(e)
    }

    /// Variable names in order of first occurrence.
    pub fn variables(&self) -> Vec<String> {
        let mut seen = Vec::new();
        self.visit_vars(&mut |v| {
            if !seen.iter().any(|s: &String| s == v) {
                seen.push(v.to_string());
            }
        });
        seen
    }

    /// Occurrence count per variable name.
    pub fn occurrences(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        self.visit_vars(&mut |v| *counts.entry(v.to_string()).or_insert(0) += 1);
        counts
    }

    /// Calls `f` on every variable leaf, left to right.
    pub fn visit_vars(&self, f: &mut impl FnMut(&str)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => f(v),
            Expr::Unary(_, e) => e.visit_vars(f),
            Expr::Binary(_, l, r) => {
                l.visit_vars(f);
                r.visit_vars(f);
            }
        }
    }

    /// Rebuilds the tree with every variable leaf replaced by `f(name)`,
    /// visiting leaves left to right.
    pub fn map_vars(&self, f: &mut impl FnMut(&str) -> String) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(c.clone()),
            Expr::Var(v) => Expr::Var(f(v)),
            Expr::Unary(op, e) => Expr::unary(*op, e.map_vars(f)),
            Expr::Binary(op, l, r) => {
                let l = l.map_vars(f);
                let r = r.map_vars(f);
                Expr::binary(*op, l, r)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var(_) => false,
            Expr::Unary(_, e) => e.is_constant(),
            Expr::Binary(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }

    /// Number of operator nodes.
    pub fn internal_nodes(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 0,
            Expr::Unary(_, e) => 1 + e.internal_nodes(),
            Expr::Binary(_, l, r) => 1 + l.internal_nodes() + r.internal_nodes(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 0,
            Expr::Unary(_, e) => 1 + e.depth(),
            Expr::Binary(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Resolves variables to positions in `names` for repeated evaluation.
    pub fn bind<T: Scalar>(&self, names: &[String]) -> Result<BoundExpr<T>> {
        let mut code = Vec::new();
        self.emit(names, &mut code)?;
        Ok(BoundExpr { code })
    }

    fn emit<T: Scalar>(&self, names: &[String], code: &mut Vec<Op<T>>) -> Result<()> {
        match self {
            Expr::Const(c) => code.push(Op::Const(least_canonical(c)?)),
            Expr::Var(v) => {
                let i = names
                    .iter()
                    .position(|n| n == v)
                    .ok_or_else(|| Error::UnboundVariable(v.clone()))?;
                code.push(Op::Load(i));
            }
            Expr::Unary(op, e) => {
                e.emit(names, code)?;
                code.push(Op::Unary(*op));
            }
            Expr::Binary(op, l, r) => {
                l.emit(names, code)?;
                r.emit(names, code)?;
                code.push(Op::Binary(*op));
            }
        }
        Ok(())
    }
}

/// Natural interval extension: bottom-up evaluation with interval operands.
pub fn eval_natural<T, F>(e: &Expr, env: F) -> Result<Interval<T>>
where
    T: Scalar,
    F: Fn(&str) -> Option<Interval<T>> + Copy,
{
    Ok(match e {
        Expr::Const(c) => least_canonical(c)?,
        Expr::Var(v) => env(v).ok_or_else(|| Error::UnboundVariable(v.clone()))?,
        Expr::Unary(op, a) => op.apply(eval_natural(a, env)?),
        Expr::Binary(op, l, r) => op.apply(eval_natural(l, env)?, eval_natural(r, env)?),
    })
}

#[derive(Debug, Clone)]
enum Op<T> {
    Const(Interval<T>),
    Load(usize),
    Unary(UnaryOp),
    Binary(BinaryOp),
}

/// An expression compiled to postfix code over a variable slice.
#[derive(Debug, Clone)]
pub struct BoundExpr<T> {
    code: Vec<Op<T>>,
}

impl<T: Scalar> BoundExpr<T> {
    /// Same result as [`eval_natural`] with the bound names mapped to
    /// `domains`.
    pub fn eval(&self, domains: &[Interval<T>]) -> Interval<T> {
        let mut stack: Vec<Interval<T>> = Vec::with_capacity(8);
        for op in &self.code {
            match op {
                Op::Const(c) => stack.push(*c),
                Op::Load(i) => stack.push(domains[*i]),
                Op::Unary(u) => {
                    let a = stack.pop().expect("well-formed code");
                    stack.push(u.apply(a));
                }
                Op::Binary(b) => {
                    let r = stack.pop().expect("well-formed code");
                    let l = stack.pop().expect("well-formed code");
                    stack.push(b.apply(l, r));
                }
            }
        }
        stack.pop().expect("well-formed code")
    }
}

/// Fully parenthesized rendering; parses back to an identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => f.write_str(c),
            Expr::Var(v) => f.write_str(v),
            Expr::Unary(UnaryOp::Neg, e) => write!(f, "(-{e})"),
            Expr::Unary(UnaryOp::Pow(k), e) => write!(f, "({e}^{k})"),
            Expr::Unary(op, e) => write!(f, "{}({e})", op.name()),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}

pub(crate) struct ExprParser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> ExprParser<'a> {
    pub(crate) fn new(tokens: &'a [Token]) -> Self {
        ExprParser { tokens, pos: 0 }
    }

    pub(crate) fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    pub(crate) fn bump(&mut self) -> &Token {
        let t = &self.tokens[self.pos.min(self.tokens.len() - 1)];
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error_here(&self, message: impl Into<String>) -> ParseError {
        let t = self.peek();
        ParseError::new(t.line, t.column, message)
    }

    fn expect_eof(&self) -> std::result::Result<(), ParseError> {
        match self.peek().tok {
            Tok::Eof => Ok(()),
            ref t => Err(self.error_here(format!("unexpected {} after expression", t.describe()))),
        }
    }

    pub(crate) fn expr(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            if op == BinaryOp::Mul && self.peek().tok == Tok::Star {
                return Err(self.error_here("`**` is not supported; use `^` with an integer exponent"));
            }
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> std::result::Result<Expr, ParseError> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            let e = self.unary()?;
            return Ok(Expr::unary(UnaryOp::Neg, e));
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut base = self.atom()?;
        while self.peek().tok == Tok::Caret {
            self.bump();
            let k = match &self.peek().tok {
                Tok::Number(n) if n.bytes().all(|b| b.is_ascii_digit()) => n
                    .parse::<u32>()
                    .map_err(|_| self.error_here("exponent too large"))?,
                _ => return Err(self.error_here("expected a non-negative integer exponent after `^`")),
            };
            self.bump();
            base = Expr::unary(UnaryOp::Pow(k), base);
        }
        Ok(base)
    }

    fn atom(&mut self) -> std::result::Result<Expr, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Number(n) => {
                self.bump();
                crate::literal::Decimal::parse(&n)
                    .map_err(|e| ParseError::new(t.line, t.column, e.to_string()))?;
                Ok(Expr::Const(n))
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(op) = UnaryOp::function(&name) {
                    if self.peek().tok != Tok::LParen {
                        return Err(self.error_here(format!("expected `(` after `{name}`")));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::unary(op, arg));
                }
                if RESERVED.contains(&name.as_str()) {
                    return Err(ParseError::new(
                        t.line,
                        t.column,
                        format!("`{name}` is reserved"),
                    ));
                }
                if self.peek().tok == Tok::LParen {
                    return Err(ParseError::new(
                        t.line,
                        t.column,
                        format!("unknown function `{name}`"),
                    ));
                }
                Ok(Expr::Var(name))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => Err(self.error_here(format!("expected an operand, found {}", other.describe()))),
        }
    }

    pub(crate) fn expect(&mut self, tok: Tok) -> std::result::Result<(), ParseError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().tok.describe()
            )))
        }
    }
}
