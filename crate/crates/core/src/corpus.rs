//! Annotated LP word problems: loading, validation and serialization.
//!
//! A corpus file holds one JSON record per line:
//!
//! ```json
//! {"id":"p1","text":"...","tags":[{"label":"VAR","start":4,"end":12}],
//!  "variables":["cleaners","receptionists"],
//!  "gold":[{"kind":"objective","direction":"max","coeffs":["3","4"]},
//!          {"kind":"constraint","coeffs":["3","4"],"op":"<=","rhs":"50"}],
//!  "order_hints":[0]}
//! ```
//!
//! Tag spans are half-open ranges of Unicode scalar values, not bytes.
//! `variables` may be omitted, in which case it is derived from the `VAR`
//! tags in order of first mention; `order_hints` defaults to list order.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::canonical::{dense_to_expr, CanonicalError, ConstraintType};
use crate::ir::{CmpOp, Decl, Direction, LinearExpr, Var};
use crate::rational::{serde_str, serde_vec, Rational};

pub const MAX_VARIABLES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EntityLabel {
    Var,
    Param,
    Limit,
    ConstDir,
    ObjDir,
    ObjName,
}

impl EntityLabel {
    pub const ALL: [EntityLabel; 6] = [
        EntityLabel::Var,
        EntityLabel::Param,
        EntityLabel::Limit,
        EntityLabel::ConstDir,
        EntityLabel::ObjDir,
        EntityLabel::ObjName,
    ];

    /// Row of the tag embedding table; 0 is reserved for untagged tokens.
    pub fn tag_id(self) -> usize {
        self as usize + 1
    }
}

/// A labelled span of the problem text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EntityTag {
    pub label: EntityLabel,
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

/// One gold declaration, dense over the problem's variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GoldDecl {
    Objective {
        direction: Direction,
        #[serde(with = "serde_vec")]
        coeffs: Vec<Rational>,
    },
    Constraint {
        #[serde(with = "serde_vec")]
        coeffs: Vec<Rational>,
        op: CmpOp,
        #[serde(with = "serde_str")]
        rhs: Rational,
        /// Constraint type as annotated in the source dataset.
        #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
        ctype: Option<ConstraintType>,
        /// Index of the `CONST_DIR` tag that states this constraint's direction.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dir_tag: Option<usize>,
    },
}

impl GoldDecl {
    pub fn coeffs(&self) -> &[Rational] {
        match self {
            GoldDecl::Objective { coeffs, .. } | GoldDecl::Constraint { coeffs, .. } => coeffs,
        }
    }

    pub fn is_objective(&self) -> bool {
        matches!(self, GoldDecl::Objective { .. })
    }

    /// The declaration in normalized IR form.
    pub fn to_decl(&self) -> Result<Decl, CanonicalError> {
        Ok(match self {
            GoldDecl::Objective { direction, coeffs } => Decl::objective(*direction, dense_to_expr(coeffs)?),
            GoldDecl::Constraint { coeffs, op, rhs, .. } => {
                Decl::constraint(dense_to_expr(coeffs)?, *op, LinearExpr::constant(rhs.clone()))
            }
        })
    }
}

/// A validated corpus item.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Problem {
    pub id: String,
    pub text: String,
    /// Sorted by start, pairwise disjoint.
    pub tags: Vec<EntityTag>,
    pub variables: Vec<String>,
    pub gold: Vec<GoldDecl>,
    /// Source position of each gold constraint, in gold order.
    pub order_hints: Vec<usize>,
}

impl Problem {
    /// Gold indices of the constraints, in gold order.
    pub fn constraint_indices(&self) -> Vec<usize> {
        (0..self.gold.len()).filter(|&i| !self.gold[i].is_objective()).collect()
    }

    /// Gold declarations in normalized IR form.
    pub fn gold_declarations(&self) -> Vec<Decl> {
        self.gold.iter().map(|g| g.to_decl().expect("validated on load")).collect()
    }

    /// Checks every invariant of a corpus item.
    pub fn validate(&self) -> Result<(), Violation> {
        let text_len = self.text.chars().count();
        let chars: Vec<char> = self.text.chars().collect();
        for (i, tag) in self.tags.iter().enumerate() {
            if tag.start >= tag.end || tag.end > text_len {
                return Err(Violation::new(
                    "tags",
                    format!("tag {i} span [{},{}) is not within [0,{text_len}) with start < end", tag.start, tag.end),
                ));
            }
            let slice: String = chars[tag.start..tag.end].iter().collect();
            if slice != tag.surface {
                return Err(Violation::new(
                    "tags",
                    format!("tag {i} surface {:?} does not match text {slice:?}", tag.surface),
                ));
            }
        }
        for (i, pair) in self.tags.windows(2).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            if b.start < a.start {
                return Err(Violation::new("tags", format!("tags {} and {} are not sorted by start", i, i + 1)));
            }
            if b.start < a.end {
                return Err(Violation::new(
                    "tags",
                    format!("overlapping spans [{},{}) and [{},{})", a.start, a.end, b.start, b.end),
                ));
            }
        }
        let n = self.variables.len();
        if n == 0 || n > MAX_VARIABLES {
            return Err(Violation::new("variables", format!("{n} variables, expected 1 to {MAX_VARIABLES}")));
        }
        let objectives = self.gold.iter().filter(|g| g.is_objective()).count();
        if objectives != 1 {
            return Err(Violation::new("gold", format!("{objectives} objectives, expected exactly one")));
        }
        let mut linked = HashSet::new();
        for (i, g) in self.gold.iter().enumerate() {
            if g.coeffs().len() != n {
                return Err(Violation::new(
                    "gold",
                    format!("declaration {i} has {} coefficients for {n} variables", g.coeffs().len()),
                ));
            }
            if g.coeffs().iter().all(Zero::is_zero) {
                return Err(Violation::new("gold", format!("declaration {i} has no variable terms")));
            }
            if let GoldDecl::Constraint { dir_tag: Some(t), .. } = g {
                match self.tags.get(*t) {
                    Some(tag) if tag.label == EntityLabel::ConstDir => {}
                    _ => {
                        return Err(Violation::new(
                            "gold",
                            format!("declaration {i} links tag {t}, which is not a CONST_DIR tag"),
                        ))
                    }
                }
                if !linked.insert(*t) {
                    return Err(Violation::new("gold", format!("tag {t} is linked by more than one constraint")));
                }
            }
        }
        let constraints = self.gold.len() - objectives;
        if self.order_hints.len() != constraints {
            return Err(Violation::new(
                "order_hints",
                format!("{} hints for {constraints} constraints", self.order_hints.len()),
            ));
        }
        Ok(())
    }

    fn from_record(record: ProblemRecord) -> Result<Self, Violation> {
        let chars: Vec<char> = record.text.chars().collect();
        let mut tags = Vec::with_capacity(record.tags.len());
        for (i, t) in record.tags.into_iter().enumerate() {
            if t.start >= t.end || t.end > chars.len() {
                return Err(Violation::new(
                    "tags",
                    format!("tag {i} span [{},{}) is not within [0,{}) with start < end", t.start, t.end, chars.len()),
                ));
            }
            let surface: String = chars[t.start..t.end].iter().collect();
            if let Some(given) = t.surface {
                if given != surface {
                    return Err(Violation::new(
                        "tags",
                        format!("tag {i} surface {given:?} does not match text {surface:?}"),
                    ));
                }
            }
            tags.push(EntityTag { label: t.label, start: t.start, end: t.end, surface });
        }
        let variables = match record.variables {
            Some(v) => v,
            None => variables_from_tags(&tags),
        };
        let constraints = record.gold.iter().filter(|g| !g.is_objective()).count();
        let order_hints = record.order_hints.unwrap_or_else(|| (0..constraints).collect());
        let problem = Problem { id: record.id, text: record.text, tags, variables, gold: record.gold, order_hints };
        problem.validate()?;
        Ok(problem)
    }

    fn to_record(&self) -> ProblemRecord {
        ProblemRecord {
            id: self.id.clone(),
            text: self.text.clone(),
            tags: self
                .tags
                .iter()
                .map(|t| TagRecord { label: t.label, start: t.start, end: t.end, surface: None })
                .collect(),
            variables: Some(self.variables.clone()),
            gold: self.gold.clone(),
            order_hints: Some(self.order_hints.clone()),
        }
    }

    /// One corpus line, without the trailing newline.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("records always serialize")
    }
}

/// Distinct `VAR` surfaces in order of first mention, compared
/// case-insensitively with whitespace collapsed.
pub fn variables_from_tags(tags: &[EntityTag]) -> Vec<String> {
    let mut seen = HashSet::new();
    tags.iter()
        .filter(|t| t.label == EntityLabel::Var)
        .filter(|t| seen.insert(fold(&t.surface)))
        .map(|t| t.surface.clone())
        .collect()
}

/// Lowercases and collapses runs of whitespace to one space.
pub fn fold(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Canonical alias (`x`, `y`, `z`, `w`) of the variable at `index`.
pub fn variable_alias(problem: &Problem, index: usize) -> Result<Var, CorpusError> {
    if index >= problem.variables.len() {
        return Err(CorpusError::AliasOutOfRange { index, count: problem.variables.len() });
    }
    Var::from_index(index).ok_or(CorpusError::AliasOutOfRange { index, count: problem.variables.len() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TagRecord {
    label: EntityLabel,
    start: usize,
    end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    surface: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemRecord {
    id: String,
    text: String,
    tags: Vec<TagRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    variables: Option<Vec<String>>,
    gold: Vec<GoldDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order_hints: Option<Vec<usize>>,
}

/// An invariant broken by a record, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{field}: {message}")]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl Violation {
    fn new(field: &'static str, message: String) -> Self {
        Self { field, message }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line} (id {id:?}): {violation}")]
    Invalid { line: usize, id: String, violation: Violation },
    #[error("line {line}: duplicate problem id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("variable index {index} out of range for {count} variables")]
    AliasOutOfRange { index: usize, count: usize },
}

/// Reads a corpus file, preserving record order.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Problem>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io { path: path.to_owned(), source })?;
    read_corpus(BufReader::new(file)).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io { path: path.to_owned(), source },
        other => other,
    })
}

/// Reads corpus records from any buffered reader. Blank lines are skipped.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Problem>, CorpusError> {
    let mut problems = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusError::Io { path: PathBuf::new(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ProblemRecord = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Malformed { line: line_no, message: e.to_string() })?;
        let id = record.id.clone();
        let problem = Problem::from_record(record).map_err(|violation| CorpusError::Invalid {
            line: line_no,
            id: id.clone(),
            violation,
        })?;
        if !ids.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { line: line_no, id });
        }
        problems.push(problem);
    }
    Ok(problems)
}

pub fn write_corpus<W: Write>(mut out: W, problems: &[Problem]) -> std::io::Result<()> {
    for p in problems {
        writeln!(out, "{}", p.to_json_line())?;
    }
    Ok(())
}

pub fn save_corpus(path: impl AsRef<Path>, problems: &[Problem]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io = |source| CorpusError::Io { path: path.to_owned(), source };
    let mut file = std::io::BufWriter::new(File::create(path).map_err(io)?);
    write_corpus(&mut file, problems).map_err(io)?;
    file.flush().map_err(io)
}
