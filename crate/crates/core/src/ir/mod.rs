//! The intermediate representation: an LP written as plain math.
//!
//! A document is a `;`-separated list of declarations, for example
//!
//! ```text
//! maximize 3x + 4y ; 3x + 4y <= 50 ; x >= 0.3 (x + y)
//! ```
//!
//! Variables are the four aliases `x`, `y`, `z`, `w`, standing for the first
//! four variables of a problem in order of first mention. Coefficients are
//! exact rationals; products with parenthesized groups are distributed while
//! parsing, so a [`LinearExpr`] is always flat.

mod lex;
mod parse;
mod print;

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::Rational;

pub use parse::{parse_ir, ParseError, ParseErrorKind};
pub(crate) use print::print_decl;
pub use print::print_ir;

/// One of the four variable aliases, ordered `x < y < z < w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X,
    Y,
    Z,
    W,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::X, Var::Y, Var::Z, Var::W];

    pub fn from_index(index: usize) -> Option<Var> {
        Self::ALL.get(index).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_char(c: char) -> Option<Var> {
        match c {
            'x' => Some(Var::X),
            'y' => Some(Var::Y),
            'z' => Some(Var::Z),
            'w' => Some(Var::W),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        ["x", "y", "z", "w"][self.index()]
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "max")]
    Max,
    #[serde(rename = "min")]
    Min,
}

impl Direction {
    pub fn keyword(self) -> &'static str {
        match self {
            Direction::Max => "maximize",
            Direction::Min => "minimize",
        }
    }
}

/// Constraint operator. `Le` sorts before `Ge`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl CmpOp {
    pub fn flipped(self) -> CmpOp {
        match self {
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Ge => CmpOp::Le,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        }
    }

    /// Whether `lhs op rhs` holds.
    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            CmpOp::Le => lhs <= rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

/// `Σ coeff·var + constant`. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LinearExpr {
    terms: BTreeMap<Var, Rational>,
    constant: Rational,
}

impl LinearExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: Rational) -> Self {
        Self { terms: BTreeMap::new(), constant: value }
    }

    pub fn var(v: Var) -> Self {
        Self::term(v, Rational::one())
    }

    pub fn term(v: Var, coeff: Rational) -> Self {
        let mut e = Self::zero();
        e.add_term(v, coeff);
        e
    }

    pub fn from_terms<I: IntoIterator<Item = (Var, Rational)>>(terms: I, constant: Rational) -> Self {
        let mut e = Self::constant(constant);
        for (v, c) in terms {
            e.add_term(v, c);
        }
        e
    }

    pub fn add_term(&mut self, v: Var, coeff: Rational) {
        let slot = self.terms.entry(v).or_insert_with(Rational::zero);
        *slot += coeff;
        if slot.is_zero() {
            self.terms.remove(&v);
        }
    }

    pub fn terms(&self) -> &BTreeMap<Var, Rational> {
        &self.terms
    }

    pub fn constant_term(&self) -> &Rational {
        &self.constant
    }

    pub fn coeff(&self, v: Var) -> Rational {
        self.terms.get(&v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant.is_zero()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.terms.keys().copied()
    }

    pub fn add(&self, other: &LinearExpr) -> LinearExpr {
        let mut out = self.clone();
        for (v, c) in &other.terms {
            out.add_term(*v, c.clone());
        }
        out.constant += &other.constant;
        out
    }

    pub fn sub(&self, other: &LinearExpr) -> LinearExpr {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, k: &Rational) -> LinearExpr {
        if k.is_zero() {
            return LinearExpr::zero();
        }
        LinearExpr { terms: self.terms.iter().map(|(v, c)| (*v, c * k)).collect(), constant: &self.constant * k }
    }

    /// Value at an assignment indexed by alias.
    pub fn eval(&self, values: &[Rational; 4]) -> Rational {
        self.terms.iter().fold(self.constant.clone(), |acc, (v, c)| acc + c * &values[v.index()])
    }
}

/// A single objective or constraint.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Decl {
    Objective { direction: Direction, expr: LinearExpr },
    Constraint { lhs: LinearExpr, op: CmpOp, rhs: LinearExpr },
}

impl Decl {
    pub fn objective(direction: Direction, expr: LinearExpr) -> Self {
        Decl::Objective { direction, expr }
    }

    pub fn constraint(lhs: LinearExpr, op: CmpOp, rhs: LinearExpr) -> Self {
        Decl::Constraint { lhs, op, rhs }
    }

    /// Builds an already normalized constraint `terms op rhs`.
    pub fn normalized_constraint<I>(terms: I, op: CmpOp, rhs: Rational) -> Self
    where
        I: IntoIterator<Item = (Var, Rational)>,
    {
        Decl::Constraint { lhs: LinearExpr::from_terms(terms, Rational::zero()), op, rhs: LinearExpr::constant(rhs) }
    }

    pub fn is_objective(&self) -> bool {
        matches!(self, Decl::Objective { .. })
    }

    /// Constraints are normal when all variables sit on the left and the
    /// only constant sits on the right. Objectives are always normal.
    pub fn is_normalized(&self) -> bool {
        match self {
            Decl::Objective { .. } => true,
            Decl::Constraint { lhs, rhs, .. } => lhs.constant_term().is_zero() && rhs.is_constant(),
        }
    }

    /// Every variable referenced on either side.
    pub fn vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = match self {
            Decl::Objective { expr, .. } => expr.vars().collect(),
            Decl::Constraint { lhs, rhs, .. } => lhs.vars().chain(rhs.vars()).collect(),
        };
        vs.sort();
        vs.dedup();
        vs
    }

    /// Whether the constraint holds at `values`; objectives always hold.
    pub fn satisfied_by(&self, values: &[Rational; 4]) -> bool {
        match self {
            Decl::Objective { .. } => true,
            Decl::Constraint { lhs, op, rhs } => op.holds(&lhs.eval(values), &rhs.eval(values)),
        }
    }
}

/// Moves every variable term to the left and the constant to the right.
///
/// The operator is kept as written; the constraint is never multiplied
/// by -1, so `<=` stays `<=`.
pub fn normalize(decl: &Decl) -> Decl {
    match decl {
        Decl::Objective { .. } => decl.clone(),
        Decl::Constraint { lhs, op, rhs } => {
            let diff = lhs.sub(rhs);
            Decl::Constraint {
                lhs: LinearExpr::from_terms(diff.terms.clone(), Rational::zero()),
                op: *op,
                rhs: LinearExpr::constant(-diff.constant),
            }
        }
    }
}

/// An ordered list of declarations; at most one objective.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Document {
    decls: Vec<Decl>,
}

impl Document {
    /// Fails when `decls` is empty or holds more than one objective.
    pub fn new(decls: Vec<Decl>) -> Result<Self, DocumentError> {
        if decls.is_empty() {
            return Err(DocumentError::Empty);
        }
        let objectives = decls.iter().filter(|d| d.is_objective()).count();
        if objectives > 1 {
            return Err(DocumentError::MultipleObjectives(objectives));
        }
        Ok(Self { decls })
    }

    pub fn decls(&self) -> &[Decl] {
        &self.decls
    }

    pub fn into_decls(self) -> Vec<Decl> {
        self.decls
    }

    pub fn objective(&self) -> Option<&Decl> {
        self.decls.iter().find(|d| d.is_objective())
    }

    pub fn constraints(&self) -> impl Iterator<Item = &Decl> {
        self.decls.iter().filter(|d| !d.is_objective())
    }

    /// Highest alias index referenced plus one.
    pub fn var_count(&self) -> usize {
        self.decls.iter().flat_map(|d| d.vars()).map(|v| v.index() + 1).max().unwrap_or(0)
    }
}

impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_ir(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DocumentError {
    #[error("document has no declarations")]
    Empty,
    #[error("document has {0} objectives, at most one allowed")]
    MultipleObjectives(usize),
}
