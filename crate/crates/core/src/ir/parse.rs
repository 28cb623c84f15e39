//! Recursive-descent parser for IR documents.
//!
//! ```text
//! doc        := decl (";" decl)*
//! decl       := ("maximize" | "minimize") expr | expr ("<=" | ">=") expr
//! expr       := ["+" | "-"] term (("+" | "-") term)*
//! term       := factor factor*          (a number may only lead a term)
//! factor     := number | var | "(" expr ")"
//! ```
//!
//! Products are evaluated as they are read, so `0.3 (x + y)` becomes
//! `0.3x + 0.3y`. A product of two non-constant factors is rejected.

use std::fmt;

use num_traits::{One, Zero};

use super::lex::{tokenize, Spanned, Tok};
use super::{normalize, CmpOp, Decl, Document, LinearExpr};
use crate::rational::Rational;

const MAX_NESTING: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("column {column}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// 1-based character column; one past the end for end-of-input errors.
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    BadNumber(String),
    UnknownVariable(String),
    Equality,
    StrictInequality,
    Syntax { expected: String, found: String },
    Nonlinear,
    TooDeep,
    ObjectiveConstant,
    ZeroObjective,
    DegenerateConstraint,
    MultipleObjectives,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnexpectedChar(c) => write!(f, "lexical error: unknown symbol {c:?}"),
            Self::BadNumber(s) => write!(f, "lexical error: malformed number {s:?}"),
            Self::UnknownVariable(s) => write!(f, "unknown variable {s:?}, expected one of x, y, z, w"),
            Self::Equality => f.write_str("equality constraints are not supported, use <= or >="),
            Self::StrictInequality => f.write_str("strict inequalities are not supported, use <= or >="),
            Self::Syntax { expected, found } => write!(f, "syntax error: expected {expected}, found {found}"),
            Self::Nonlinear => f.write_str("nonlinear term: variable multiplied by variable"),
            Self::TooDeep => write!(f, "parentheses nested deeper than {MAX_NESTING}"),
            Self::ObjectiveConstant => f.write_str("objective must not contain a constant term"),
            Self::ZeroObjective => f.write_str("objective is identically zero"),
            Self::DegenerateConstraint => f.write_str("constraint has no variable terms"),
            Self::MultipleObjectives => f.write_str("more than one objective"),
        }
    }
}

/// Parses an IR document. Every failure is reported as a [`ParseError`].
pub fn parse_ir(src: &str) -> Result<Document, ParseError> {
    let tokens = tokenize(src)?;
    let end = src.chars().count() + 1;
    let mut p = Parser { tokens, pos: 0, end, depth: 0 };
    let mut decls = Vec::new();
    let mut objective_seen = false;
    loop {
        let column = p.column();
        let decl = p.decl()?;
        if decl.is_objective() {
            if objective_seen {
                return Err(ParseError { kind: ParseErrorKind::MultipleObjectives, column });
            }
            objective_seen = true;
        }
        decls.push(decl);
        match p.peek() {
            Some(Tok::Semi) => p.pos += 1,
            None => break,
            Some(_) => return Err(p.unexpected("';' or end of input")),
        }
    }
    Ok(Document::new(decls).expect("non-empty with at most one objective"))
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    end: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn column(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.column)
    }

    fn found(&self) -> String {
        self.peek().map_or_else(|| "end of input".to_string(), Tok::describe)
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        ParseError {
            kind: ParseErrorKind::Syntax { expected: expected.to_string(), found: self.found() },
            column: self.column(),
        }
    }

    fn decl(&mut self) -> Result<Decl, ParseError> {
        let column = self.column();
        if let Some(Tok::Keyword(direction)) = self.peek() {
            let direction = *direction;
            self.pos += 1;
            let expr = self.expr()?;
            if expr.is_constant() {
                return Err(ParseError { kind: ParseErrorKind::ZeroObjective, column });
            }
            if !expr.constant_term().is_zero() {
                return Err(ParseError { kind: ParseErrorKind::ObjectiveConstant, column });
            }
            return Ok(Decl::Objective { direction, expr });
        }
        let lhs = self.expr()?;
        let op = match self.peek() {
            Some(Tok::Le) => CmpOp::Le,
            Some(Tok::Ge) => CmpOp::Ge,
            _ => return Err(self.unexpected("'<=' or '>='")),
        };
        self.pos += 1;
        let rhs = self.expr()?;
        let decl = Decl::Constraint { lhs, op, rhs };
        if let Decl::Constraint { lhs, .. } = normalize(&decl) {
            if lhs.is_constant() {
                return Err(ParseError { kind: ParseErrorKind::DegenerateConstraint, column });
            }
        }
        Ok(decl)
    }

    fn expr(&mut self) -> Result<LinearExpr, ParseError> {
        let mut negate = false;
        match self.peek() {
            Some(Tok::Minus) => {
                negate = true;
                self.pos += 1;
            }
            Some(Tok::Plus) => self.pos += 1,
            _ => {}
        }
        let mut acc = self.term()?;
        if negate {
            acc = acc.scale(&-Rational::one());
        }
        loop {
            let sign = match self.peek() {
                Some(Tok::Plus) => false,
                Some(Tok::Minus) => true,
                _ => break,
            };
            self.pos += 1;
            let t = self.term()?;
            acc = if sign { acc.sub(&t) } else { acc.add(&t) };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<LinearExpr, ParseError> {
        let mut acc = match self.peek() {
            Some(Tok::Number(n)) => {
                let n = n.clone();
                self.pos += 1;
                LinearExpr::constant(n)
            }
            Some(Tok::Var(_)) | Some(Tok::LParen) => self.factor()?,
            _ => return Err(self.unexpected("number, variable or '('")),
        };
        while matches!(self.peek(), Some(Tok::Var(_)) | Some(Tok::LParen)) {
            let column = self.column();
            let f = self.factor()?;
            acc = multiply(&acc, &f).ok_or(ParseError { kind: ParseErrorKind::Nonlinear, column })?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<LinearExpr, ParseError> {
        match self.peek() {
            Some(Tok::Var(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(LinearExpr::var(v))
            }
            Some(Tok::LParen) => {
                if self.depth >= MAX_NESTING {
                    return Err(ParseError { kind: ParseErrorKind::TooDeep, column: self.column() });
                }
                self.pos += 1;
                self.depth += 1;
                let inner = self.expr()?;
                self.depth -= 1;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.unexpected("')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => Err(self.unexpected("variable or '('")),
        }
    }
}

/// Product of two linear expressions, `None` when the result is nonlinear.
fn multiply(a: &LinearExpr, b: &LinearExpr) -> Option<LinearExpr> {
    if a.is_constant() {
        Some(b.scale(a.constant_term()))
    } else if b.is_constant() {
        Some(a.scale(b.constant_term()))
    } else {
        None
    }
}
