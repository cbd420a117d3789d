//! Text format for systems of inequalities.
//!
//! ```text
//! # unit disk
//! var x in [-2, 2];
//! var y in [-2, 2];
//! x^2 + y^2 - 1 <= 0;
//! ```
//!
//! Statements end with `;`. A declaration reads `var <name> in [<lb>, <rb>];`.
//! Bounds are decimal literals rounded outward, or `inf` / `-inf`. A
//! constraint has the form `<expr> <= 0`, `<expr> >= 0` (stored as
//! `-(expr) <= 0`) or `<expr> = 0` (stored as both). The right-hand side
//! must be the literal zero. `#` starts a comment.

use crate::error::{ParseError, Result};
use crate::expr::{Expr, ExprParser, UnaryOp};
use crate::interval::Interval;
use crate::lexer::{tokenize, Tok};
use crate::literal::parse_bound;
use crate::scalar::Scalar;
use crate::system::SystemSpec;

pub fn parse_system<T: Scalar>(src: &str) -> Result<SystemSpec<T>> {
    let tokens = tokenize(src)?;
    let mut p = ExprParser::new(&tokens);
    let mut variables: Vec<(String, Interval<T>)> = Vec::new();
    let mut inequalities = Vec::new();
    loop {
        match &p.peek().tok {
            Tok::Eof => break,
            Tok::Ident(kw) if kw == "var" => {
                p.bump();
                variables.push(declaration(&mut p)?);
            }
            _ => {
                let g = p.expr()?;
                let rel = p.peek().tok.clone();
                match rel {
                    Tok::Le | Tok::Ge | Tok::Eq => {
                        p.bump();
                    }
                    other => {
                        return Err(p
                            .error_here(format!("expected `<=`, `>=` or `=`, found {}", other.describe()))
                            .into())
                    }
                }
                zero(&mut p)?;
                p.expect(Tok::Semi)?;
                let negated = || Expr::unary(UnaryOp::Neg, g.clone());
                match rel {
                    Tok::Le => inequalities.push(g.clone()),
                    Tok::Ge => inequalities.push(negated()),
                    _ => {
                        inequalities.push(g.clone());
                        inequalities.push(negated());
                    }
                }
            }
        }
    }
    SystemSpec::new(variables, inequalities)
}

fn declaration<T: Scalar>(p: &mut ExprParser<'_>) -> std::result::Result<(String, Interval<T>), ParseError> {
    let name = match &p.peek().tok {
        Tok::Ident(n) if !crate::expr::RESERVED.contains(&n.as_str()) => n.clone(),
        other => return Err(p.error_here(format!("expected a variable name, found {}", other.describe()))),
    };
    p.bump();
    match &p.peek().tok {
        Tok::Ident(kw) if kw == "in" => {
            p.bump();
        }
        other => return Err(p.error_here(format!("expected `in`, found {}", other.describe()))),
    }
    p.expect(Tok::LBracket)?;
    let lo_at = p.error_here("");
    let lo = bound::<T>(p, true)?;
    p.expect(Tok::Comma)?;
    let hi = bound::<T>(p, false)?;
    p.expect(Tok::RBracket)?;
    p.expect(Tok::Semi)?;
    let domain = Interval::try_new(lo, hi)
        .map_err(|_| ParseError::new(lo_at.line, lo_at.column, format!("empty or invalid domain for `{name}`")))?;
    Ok((name, domain))
}

fn bound<T: Scalar>(p: &mut ExprParser<'_>, lower: bool) -> std::result::Result<T, ParseError> {
    let mut text = String::new();
    match p.peek().tok {
        Tok::Minus => {
            text.push('-');
            p.bump();
        }
        Tok::Plus => {
            p.bump();
        }
        _ => {}
    }
    let here = p.error_here("");
    match &p.peek().tok {
        Tok::Number(n) => text.push_str(n),
        Tok::Ident(n) if n == "inf" || n == "infinity" => text.push_str(n),
        other => return Err(p.error_here(format!("expected a bound, found {}", other.describe()))),
    }
    p.bump();
    parse_bound::<T>(&text, lower).map_err(|e| ParseError::new(here.line, here.column, e.to_string()))
}

fn zero(p: &mut ExprParser<'_>) -> std::result::Result<(), ParseError> {
    match &p.peek().tok {
        Tok::Number(n) if n.parse::<f64>().is_ok_and(|v| v == 0.0) => {
            p.bump();
            Ok(())
        }
        other => Err(p.error_here(format!(
            "right-hand side must be 0, found {}; move terms to the left",
            other.describe()
        ))),
    }
}
