//! Building blocks for turning linear-programming word problems into
//! solver-ready form through a textual intermediate representation.
//!
//! - [`corpus`]: annotated problems (text, entity tags, gold declarations).
//! - [`ir`]: the math-expression IR, its parser and printer.
//! - [`canonical`]: constraint types, generation order, dense canonical form.
//! - [`scorer`]: declaration-level mapping accuracy.
//! - [`augment`]: constraint-direction reversal with span repair.
//! - [`embed`]: token + position + scaled entity-tag embedding composition.
//! - [`cli`]: the `autoform` command-line tool.

pub mod augment;
pub mod canonical;
pub mod cli;
pub mod corpus;
pub mod embed;
pub mod ir;
pub mod rational;
pub mod scorer;

pub use canonical::{canonicalize_gold, classify, sort_declarations, to_canonical, CanonicalForm, ConstraintType};
pub use corpus::{load_corpus, Problem};
pub use ir::{normalize, parse_ir, print_ir, Decl, Document, LinearExpr, Var};
pub use rational::Rational;
pub use scorer::{match_declarations, score, ScoreReport};
