//! Encoder input embeddings with an entity-tag term.
//!
//! For token ids `w`, tag ids `t` and position `l`, the input vector is
//!
//! ```text
//! tok[w_l] + pos[l] + lambda * tag[t_l]
//! ```
//!
//! The tag table starts at zero, so freshly built tables reproduce the plain
//! `tok + pos` input exactly. Tag id 0 is the null tag for untagged tokens;
//! ids `1..=6` follow [`EntityLabel::tag_id`](crate::corpus::EntityLabel::tag_id).
//!
//! Values are generic: [`Rational`] for exact checks, `f64` for bulk use.

use std::fmt::Debug;
use std::path::Path;

use num_traits::{Num, ToPrimitive};

use crate::corpus::EntityLabel;
use crate::rational::{parse_rational, Rational};

/// Default weight of the tag term.
pub const DEFAULT_LAMBDA: f64 = 5.0;

/// Rows in a tag table: the null tag plus one per entity label.
pub const TAG_COUNT: usize = EntityLabel::ALL.len() + 1;

pub trait Scalar: Num + Clone + PartialOrd + Debug {
    fn parse_scalar(s: &str) -> Option<Self>;
}

impl Scalar for f64 {
    fn parse_scalar(s: &str) -> Option<Self> {
        let v = s.parse().ok().or_else(|| parse_rational(s).and_then(|r| r.to_f64()))?;
        v.is_finite().then_some(v)
    }
}

impl Scalar for Rational {
    fn parse_scalar(s: &str) -> Option<Self> {
        parse_rational(s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("{tokens} tokens but {tags} tags")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("sequence of length {len} exceeds {max} positions")]
    TooLong { len: usize, max: usize },
    #[error("{table} id {id} out of range for {rows} rows")]
    IdOutOfRange { table: &'static str, id: usize, rows: usize },
    #[error("tables have widths {tok}, {pos}, {tag}")]
    WidthMismatch { tok: usize, pos: usize, tag: usize },
    #[error("lambda must be non-negative")]
    NegativeLambda,
    #[error("matrix: {0}")]
    Matrix(String),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, EmbedError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(EmbedError::Matrix("rows have different lengths".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(T::is_zero)
    }

    /// Parses `rows cols` followed by `rows * cols` row-major values, all
    /// whitespace separated.
    pub fn parse(src: &str) -> Result<Self, EmbedError> {
        let mut fields = src.split_whitespace();
        let mut dim = |what: &str| -> Result<usize, EmbedError> {
            fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| EmbedError::Matrix(format!("missing or invalid {what} in header")))
        };
        let rows = dim("row count")?;
        let cols = dim("column count")?;
        let data = fields
            .map(|s| T::parse_scalar(s).ok_or_else(|| EmbedError::Matrix(format!("invalid value {s:?}"))))
            .collect::<Result<Vec<T>, _>>()?;
        if data.len() != rows * cols {
            return Err(EmbedError::Matrix(format!("expected {} values, found {}", rows * cols, data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| EmbedError::Matrix(format!("{}: {e}", path.display())))?;
        Self::parse(&src)
    }
}

/// Token, position and tag tables plus the tag weight.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTables<T> {
    tok: Matrix<T>,
    pos: Matrix<T>,
    tag: Matrix<T>,
    lambda: T,
}

impl<T: Scalar> EmbeddingTables<T> {
    /// Builds tables with a zero tag table of [`TAG_COUNT`] rows.
    pub fn new(tok: Matrix<T>, pos: Matrix<T>, lambda: T) -> Result<Self, EmbedError> {
        let tag = Matrix::zeros(TAG_COUNT, tok.cols());
        Self::with_tag_table(tok, pos, tag, lambda)
    }

    /// Tables with an explicit (for example trained) tag table.
    pub fn with_tag_table(tok: Matrix<T>, pos: Matrix<T>, tag: Matrix<T>, lambda: T) -> Result<Self, EmbedError> {
        if tok.cols() != pos.cols() || tok.cols() != tag.cols() {
            return Err(EmbedError::WidthMismatch { tok: tok.cols(), pos: pos.cols(), tag: tag.cols() });
        }
        if lambda < T::zero() {
            return Err(EmbedError::NegativeLambda);
        }
        Ok(Self { tok, pos, tag, lambda })
    }

    pub fn dim(&self) -> usize {
        self.tok.cols()
    }

    pub fn max_len(&self) -> usize {
        self.pos.rows()
    }

    pub fn lambda(&self) -> &T {
        &self.lambda
    }

    pub fn set_lambda(&mut self, lambda: T) -> Result<(), EmbedError> {
        if lambda < T::zero() {
            return Err(EmbedError::NegativeLambda);
        }
        self.lambda = lambda;
        Ok(())
    }

    pub fn tag_table(&self) -> &Matrix<T> {
        &self.tag
    }

    pub fn tag_table_mut(&mut self) -> &mut Matrix<T> {
        &mut self.tag
    }

    fn check_ids(table: &'static str, ids: &[usize], rows: usize) -> Result<(), EmbedError> {
        match ids.iter().find(|&&id| id >= rows) {
            Some(&id) => Err(EmbedError::IdOutOfRange { table, id, rows }),
            None => Ok(()),
        }
    }

    /// `tok[w_l] + pos[l]` for every position.
    pub fn baseline_compose(&self, tokens: &[usize]) -> Result<Vec<Vec<T>>, EmbedError> {
        if tokens.len() > self.max_len() {
            return Err(EmbedError::TooLong { len: tokens.len(), max: self.max_len() });
        }
        Self::check_ids("token", tokens, self.tok.rows())?;
        Ok(tokens
            .iter()
            .enumerate()
            .map(|(l, &w)| self.tok.row(w).iter().zip(self.pos.row(l)).map(|(a, b)| a.clone() + b.clone()).collect())
            .collect())
    }

    /// `tok[w_l] + pos[l] + lambda * tag[t_l]` for every position.
    pub fn compose(&self, tokens: &[usize], tags: &[usize]) -> Result<Vec<Vec<T>>, EmbedError> {
        if tokens.len() != tags.len() {
            return Err(EmbedError::LengthMismatch { tokens: tokens.len(), tags: tags.len() });
        }
        Self::check_ids("tag", tags, self.tag.rows())?;
        let mut out = self.baseline_compose(tokens)?;
        for (row, &t) in out.iter_mut().zip(tags) {
            for (x, e) in row.iter_mut().zip(self.tag.row(t)) {
                *x = x.clone() + self.lambda.clone() * e.clone();
            }
        }
        Ok(out)
    }
}
