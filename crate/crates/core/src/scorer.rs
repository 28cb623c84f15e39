//! Declaration-level mapping accuracy.
//!
//! For problems `i = 1..N` with `D_i` gold declarations, `FP_i` predicted
//! declarations matching no gold declaration, and `FN_i` gold declarations
//! left unmatched:
//!
//! ```text
//! accuracy = 1 - Σ(FP_i + FN_i) / Σ D_i
//! ```
//!
//! A prediction matches a gold declaration only when they are identical
//! after normalization: same direction or operator, same coefficient for
//! every variable, same constant. There is no scale normalization, so
//! `2x <= 10` does not match `x <= 5`. The value is not clamped and goes
//! negative when false positives dominate.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::BufRead;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::canonical::CanonicalForm;
use crate::corpus::Problem;
use crate::ir::{normalize, parse_ir, Decl};
use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoreError {
    #[error("declaration is not normalized")]
    Unnormalized,
    #[error("prediction for unknown problem id {0:?}")]
    UnknownId(String),
    #[error("more than one prediction for problem id {0:?}")]
    DuplicateId(String),
    #[error("gold corpus is empty")]
    EmptyGold,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct MatchCounts {
    pub matched: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Multiset intersection of predicted and gold declarations.
///
/// Each gold declaration absorbs at most one identical prediction, so
/// duplicates match one-for-one.
pub fn match_declarations(pred: &[Decl], gold: &[Decl]) -> Result<MatchCounts, ScoreError> {
    if !pred.iter().chain(gold).all(Decl::is_normalized) {
        return Err(ScoreError::Unnormalized);
    }
    let mut available: HashMap<&Decl, usize> = HashMap::new();
    for g in gold {
        *available.entry(g).or_insert(0) += 1;
    }
    let mut matched = 0;
    for p in pred {
        if let Some(n) = available.get_mut(p) {
            if *n > 0 {
                *n -= 1;
                matched += 1;
            }
        }
    }
    Ok(MatchCounts { matched, fp: pred.len() - matched, fn_: gold.len() - matched })
}

/// Normalized declarations predicted for one problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub id: String,
    pub decls: Vec<Decl>,
    /// Set when the raw prediction could not be parsed; `decls` is then empty.
    pub parse_error: Option<String>,
}

impl Prediction {
    pub fn new(id: impl Into<String>, decls: Vec<Decl>) -> Self {
        Self { id: id.into(), decls, parse_error: None }
    }

    /// Parses IR text. Unparseable text yields an empty prediction that
    /// remembers the error.
    pub fn from_ir(id: impl Into<String>, ir: &str) -> Self {
        match parse_ir(ir) {
            Ok(doc) => Self::new(id, doc.decls().iter().map(normalize).collect()),
            Err(e) => Self { id: id.into(), decls: Vec::new(), parse_error: Some(e.to_string()) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProblemScore {
    pub id: String,
    #[serde(rename = "d")]
    pub gold: usize,
    pub predicted: usize,
    #[serde(flatten)]
    pub counts: MatchCounts,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreReport {
    pub per_problem: Vec<ProblemScore>,
    pub accuracy: Rational,
    /// Ids whose prediction failed to parse and was scored as empty.
    pub unparsed: Vec<String>,
}

impl ScoreReport {
    pub fn total_gold(&self) -> usize {
        self.per_problem.iter().map(|p| p.gold).sum()
    }

    pub fn total_fp(&self) -> usize {
        self.per_problem.iter().map(|p| p.counts.fp).sum()
    }

    pub fn total_fn(&self) -> usize {
        self.per_problem.iter().map(|p| p.counts.fn_).sum()
    }

    pub fn accuracy_f64(&self) -> f64 {
        self.accuracy.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine-readable summary with stable key order.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "accuracy": self.accuracy_f64(),
            "accuracy_exact": format_rational(&self.accuracy),
            "problems": self.per_problem.len(),
            "d": self.total_gold(),
            "fp": self.total_fp(),
            "fn": self.total_fn(),
            "unparsed": self.unparsed,
            "per_problem": self.per_problem,
        })
    }
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.per_problem.iter().map(|p| p.id.len()).max().unwrap_or(2).max(2);
        writeln!(f, "{:<width$}  {:>4}  {:>4}  {:>4}  {:>7}", "id", "D", "FP", "FN", "matched")?;
        for p in &self.per_problem {
            writeln!(
                f,
                "{:<width$}  {:>4}  {:>4}  {:>4}  {:>7}",
                p.id, p.gold, p.counts.fp, p.counts.fn_, p.counts.matched
            )?;
        }
        writeln!(f, "{:<width$}  {:>4}  {:>4}  {:>4}", "total", self.total_gold(), self.total_fp(), self.total_fn())?;
        write!(f, "accuracy: {:.4} ({})", self.accuracy_f64(), format_rational(&self.accuracy))
    }
}

/// Scores predictions against a gold corpus. Problems without a prediction
/// count as empty predictions.
pub fn score(preds: &[Prediction], golds: &[Problem]) -> Result<ScoreReport, ScoreError> {
    if golds.is_empty() {
        return Err(ScoreError::EmptyGold);
    }
    let known: HashSet<&str> = golds.iter().map(|p| p.id.as_str()).collect();
    let mut by_id: HashMap<&str, &Prediction> = HashMap::new();
    for p in preds {
        if !known.contains(p.id.as_str()) {
            return Err(ScoreError::UnknownId(p.id.clone()));
        }
        if by_id.insert(p.id.as_str(), p).is_some() {
            return Err(ScoreError::DuplicateId(p.id.clone()));
        }
    }
    let mut per_problem = Vec::with_capacity(golds.len());
    let mut unparsed = Vec::new();
    for problem in golds {
        let gold = problem.gold_declarations();
        let pred: &[Decl] = match by_id.get(problem.id.as_str()) {
            Some(p) => {
                if p.parse_error.is_some() {
                    unparsed.push(p.id.clone());
                }
                &p.decls
            }
            None => &[],
        };
        let counts = match_declarations(pred, &gold)?;
        per_problem.push(ProblemScore { id: problem.id.clone(), gold: gold.len(), predicted: pred.len(), counts });
    }
    let errors: usize = per_problem.iter().map(|p| p.counts.fp + p.counts.fn_).sum();
    let total: usize = per_problem.iter().map(|p| p.gold).sum();
    let accuracy = Rational::one() - Rational::new(BigInt::from(errors), BigInt::from(total));
    Ok(ScoreReport { per_problem, accuracy, unparsed })
}

/// One line of a prediction file: IR text or a canonical-form record.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical: Option<CanonicalForm>,
}

/// Reads a prediction file. Each record must carry exactly one of `ir` or
/// `canonical`.
pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<Prediction>, ScoreError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let malformed = |message: String| ScoreError::Malformed { line: line_no, message };
        let line = line.map_err(|e| malformed(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let prediction = match (record.ir, record.canonical) {
            (Some(ir), None) => Prediction::from_ir(record.id, &ir),
            (None, Some(cf)) => {
                let decls = cf.declarations().map_err(|e| malformed(e.to_string()))?;
                Prediction::new(record.id, decls)
            }
            _ => return Err(malformed("expected exactly one of `ir` or `canonical`".into())),
        };
        out.push(prediction);
    }
    Ok(out)
}
