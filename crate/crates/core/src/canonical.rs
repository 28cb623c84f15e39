//! Constraint classification, generation order, and canonical matrix form.
//!
//! Declarations are emitted in a single fixed order so that a sequence model
//! never sees two different targets for the same problem:
//!
//! 1. the objective precedes every constraint;
//! 2. constraints are grouped by [`ConstraintType`], in enum order;
//! 3. linear constraints follow their position in the problem text;
//! 4. within a type, constraints on `x` precede `y`, then `z`, then `w`
//!    (compared lexicographically on the sorted variable indices);
//! 5. within what remains, `<=` precedes `>=`.
//!
//! Any tie left after these rules is broken structurally (normalized
//! coefficients, then the written sides), and finally by input order.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::corpus::{GoldDecl, Problem};
use crate::ir::{normalize, CmpOp, Decl, Direction, Document, LinearExpr, Var};
use crate::rational::{serde_str, serde_vec, Rational};

/// The seven constraint families, declared in generation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintType {
    Lowerbound,
    Upperbound,
    Xy,
    Xby,
    Sum,
    Linear,
    Ratio,
}

impl ConstraintType {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lowerbound => "lowerbound",
            Self::Upperbound => "upperbound",
            Self::Xy => "xy",
            Self::Xby => "xby",
            Self::Sum => "sum",
            Self::Linear => "linear",
            Self::Ratio => "ratio",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CanonicalError {
    #[error("constraint is not normalized: {0}")]
    Unnormalized(String),
    #[error("expected a constraint, got an objective")]
    NotAConstraint,
    #[error("{constraints} constraints but {types} types and {positions} positions")]
    LengthMismatch { constraints: usize, types: usize, positions: usize },
    #[error("variable '{alias}' is beyond the problem's {count} variables")]
    AliasOutOfRange { alias: Var, count: usize },
    #[error("document has no objective")]
    MissingObjective,
    #[error("problem {id}: gold declaration {index} is not expressible: {reason}")]
    NotExpressible { id: String, index: usize, reason: String },
    #[error("{0} variables exceed the four available aliases")]
    TooManyVariables(usize),
}

/// Classifies a normalized constraint.
///
/// `ratio_origin` marks constraints written as `x >= c (x + y + ...)`; that
/// shape cannot be recovered from the normalized coefficients alone.
pub fn classify(decl: &Decl, ratio_origin: bool) -> Result<ConstraintType, CanonicalError> {
    let Decl::Constraint { lhs, op, rhs } = decl else {
        return Err(CanonicalError::NotAConstraint);
    };
    if !decl.is_normalized() {
        return Err(CanonicalError::Unnormalized(crate::ir::print_decl(decl)));
    }
    if ratio_origin {
        return Ok(ConstraintType::Ratio);
    }
    let coeffs: Vec<&Rational> = lhs.terms().values().collect();
    let rhs_zero = rhs.constant_term().is_zero();
    let ty = match coeffs.as_slice() {
        [c] if c.is_one() => match op {
            CmpOp::Ge => ConstraintType::Lowerbound,
            CmpOp::Le => ConstraintType::Upperbound,
        },
        [a, b] if rhs_zero && is_unit_pair(a, b) => ConstraintType::Xy,
        [a, b] if rhs_zero && is_scaled_pair(a, b) => ConstraintType::Xby,
        cs if cs.len() >= 2 && cs.iter().all(|c| c.is_one()) => ConstraintType::Sum,
        _ => ConstraintType::Linear,
    };
    Ok(ty)
}

fn is_unit_pair(a: &Rational, b: &Rational) -> bool {
    (a.is_one() && (-b).is_one()) || ((-a).is_one() && b.is_one())
}

fn is_scaled_pair(a: &Rational, b: &Rational) -> bool {
    let opposite = a.is_positive() != b.is_positive();
    opposite && (a.abs().is_one() || b.abs().is_one())
}

/// Recognizes the written shape `v op c (v + u + ...)` (either side), with
/// `0 < c < 1`, at least two variables in the group, and no constants.
pub fn is_ratio_shape(decl: &Decl) -> bool {
    let Decl::Constraint { lhs, rhs, .. } = decl else {
        return false;
    };
    let one_side = |single: &LinearExpr, group: &LinearExpr| -> bool {
        if !single.constant_term().is_zero() || !group.constant_term().is_zero() {
            return false;
        }
        let mut single_terms = single.terms().iter();
        let (Some((v, c)), None) = (single_terms.next(), single_terms.next()) else {
            return false;
        };
        if !c.is_one() || group.terms().len() < 2 || !group.terms().contains_key(v) {
            return false;
        }
        let share = group.coeff(*v);
        share.is_positive() && share < Rational::one() && group.terms().values().all(|g| *g == share)
    };
    one_side(lhs, rhs) || one_side(rhs, lhs)
}

/// Inverse of normalizing a ratio constraint: recovers `v op c (all vars)`
/// from `(1-c)·v - c·u - ... op 0`, or `c (all vars) op v` from the negated
/// coefficients. `None` when the coefficients do not fit.
pub fn ratio_form(normalized: &Decl) -> Option<Decl> {
    let Decl::Constraint { lhs, op, rhs } = normalized else {
        return None;
    };
    if !rhs.constant_term().is_zero() || lhs.terms().len() < 2 {
        return None;
    }
    for group_on_left in [false, true] {
        let sign = if group_on_left { -Rational::one() } else { Rational::one() };
        let scaled = lhs.scale(&sign);
        let positives: Vec<(&Var, &Rational)> = scaled.terms().iter().filter(|(_, c)| c.is_positive()).collect();
        let [(target, kept)] = positives.as_slice() else {
            continue;
        };
        let share = Rational::one() - *kept;
        if !share.is_positive() || share >= Rational::one() {
            continue;
        }
        if scaled.terms().iter().any(|(v, c)| v != *target && *c != -share.clone()) {
            continue;
        }
        let group = LinearExpr::from_terms(scaled.terms().keys().map(|v| (*v, share.clone())), Rational::zero());
        let single = LinearExpr::var(**target);
        let form =
            if group_on_left { Decl::constraint(group, *op, single) } else { Decl::constraint(single, *op, group) };
        debug_assert_eq!(normalize(&form), *normalized);
        return Some(form);
    }
    None
}

/// Position of a constraint under rules 1-5.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct OrderKey {
    is_constraint: bool,
    ty: Option<ConstraintType>,
    position: usize,
    vars: Vec<usize>,
    op: Option<CmpOp>,
}

/// Structural tie-break after the five rules.
type TieKey = (Vec<(Var, Rational)>, Rational, LinearExpr, LinearExpr);

fn tie_key(decl: &Decl) -> TieKey {
    match (normalize(decl), decl) {
        (Decl::Constraint { lhs: nl, rhs: nr, .. }, Decl::Constraint { lhs, rhs, .. }) => (
            nl.terms().iter().map(|(v, c)| (*v, c.clone())).collect(),
            nr.constant_term().clone(),
            lhs.clone(),
            rhs.clone(),
        ),
        _ => (Vec::new(), Rational::zero(), LinearExpr::zero(), LinearExpr::zero()),
    }
}

fn compare_exprs(a: &LinearExpr, b: &LinearExpr) -> Ordering {
    a.terms().iter().cmp(b.terms().iter()).then_with(|| a.constant_term().cmp(b.constant_term()))
}

fn compare_ties(a: &TieKey, b: &TieKey) -> Ordering {
    a.0.cmp(&b.0)
        .then_with(|| a.1.cmp(&b.1))
        .then_with(|| compare_exprs(&a.2, &b.2))
        .then_with(|| compare_exprs(&a.3, &b.3))
}

/// Sorts declarations into generation order.
///
/// `types` and `positions` carry one entry per constraint, in the order the
/// constraints appear in `doc`. Positions only matter for linear constraints.
pub fn sort_declarations(
    doc: &Document,
    types: &[ConstraintType],
    positions: &[usize],
) -> Result<Document, CanonicalError> {
    let constraints = doc.constraints().count();
    if types.len() != constraints || positions.len() != constraints {
        return Err(CanonicalError::LengthMismatch { constraints, types: types.len(), positions: positions.len() });
    }
    let mut meta = types.iter().zip(positions);
    let mut keyed: Vec<(OrderKey, TieKey, &Decl)> = doc
        .decls()
        .iter()
        .map(|decl| {
            if decl.is_objective() {
                let key = OrderKey { is_constraint: false, ty: None, position: 0, vars: vec![], op: None };
                return (key, tie_key(decl), decl);
            }
            let (ty, position) = meta.next().expect("lengths checked");
            let Decl::Constraint { lhs, op, .. } = normalize(decl) else { unreachable!() };
            let key = OrderKey {
                is_constraint: true,
                ty: Some(*ty),
                position: if *ty == ConstraintType::Linear { *position } else { 0 },
                vars: lhs.vars().map(Var::index).collect(),
                op: Some(op),
            };
            (key, tie_key(decl), decl)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| compare_ties(&a.1, &b.1)));
    Ok(Document::new(keyed.into_iter().map(|(_, _, d)| d.clone()).collect()).expect("same declarations"))
}

/// Classifies every constraint of a parsed document (recognizing ratio
/// shapes as written) and sorts it, using input order as the position.
pub fn canonicalize_document(doc: &Document) -> Result<Document, CanonicalError> {
    let mut types = Vec::new();
    for decl in doc.constraints() {
        types.push(classify(&normalize(decl), is_ratio_shape(decl))?);
    }
    let positions: Vec<usize> = (0..types.len()).collect();
    sort_declarations(doc, &types, &positions)
}

/// One constraint row of a [`CanonicalForm`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Row {
    #[serde(with = "serde_vec")]
    pub coeffs: Vec<Rational>,
    pub op: CmpOp,
    #[serde(with = "serde_str")]
    pub rhs: Rational,
}

/// Objective direction and cost vector plus constraint rows, all dense over
/// the problem's variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalForm {
    pub direction: Direction,
    #[serde(with = "serde_vec")]
    pub objective: Vec<Rational>,
    pub rows: Vec<Row>,
}

impl CanonicalForm {
    pub fn var_count(&self) -> usize {
        self.objective.len()
    }

    /// The objective followed by each row as a normalized declaration.
    pub fn declarations(&self) -> Result<Vec<Decl>, CanonicalError> {
        let mut out = vec![Decl::objective(self.direction, dense_to_expr(&self.objective)?)];
        for row in &self.rows {
            let lhs = dense_to_expr(&row.coeffs)?;
            out.push(Decl::constraint(lhs, row.op, LinearExpr::constant(row.rhs.clone())));
        }
        Ok(out)
    }
}

/// Dense coefficient vector to an expression. Trailing entries past the
/// fourth alias are allowed only when zero.
pub fn dense_to_expr(coeffs: &[Rational]) -> Result<LinearExpr, CanonicalError> {
    let mut expr = LinearExpr::zero();
    for (i, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let v = Var::from_index(i).ok_or(CanonicalError::TooManyVariables(coeffs.len()))?;
        expr.add_term(v, c.clone());
    }
    Ok(expr)
}

fn expr_to_dense(expr: &LinearExpr, count: usize) -> Result<Vec<Rational>, CanonicalError> {
    let mut out = vec![Rational::zero(); count];
    for (v, c) in expr.terms() {
        let slot = out.get_mut(v.index()).ok_or(CanonicalError::AliasOutOfRange { alias: *v, count })?;
        *slot = c.clone();
    }
    Ok(out)
}

/// Converts an (already sorted) document into dense canonical form over
/// `var_count` variables, keeping declaration order.
pub fn to_canonical(doc: &Document, var_count: usize) -> Result<CanonicalForm, CanonicalError> {
    let Some(Decl::Objective { direction, expr }) = doc.objective() else {
        return Err(CanonicalError::MissingObjective);
    };
    let objective = expr_to_dense(expr, var_count)?;
    let mut rows = Vec::new();
    for decl in doc.constraints() {
        let Decl::Constraint { lhs, op, rhs } = normalize(decl) else { unreachable!() };
        rows.push(Row { coeffs: expr_to_dense(&lhs, var_count)?, op, rhs: rhs.constant_term().clone() });
    }
    Ok(CanonicalForm { direction: *direction, objective, rows })
}

/// Expresses a problem's gold declarations as IR in generation order.
pub fn canonicalize_gold(problem: &Problem) -> Result<Document, CanonicalError> {
    let not_expressible = |index: usize, reason: &str| CanonicalError::NotExpressible {
        id: problem.id.clone(),
        index,
        reason: reason.to_string(),
    };
    let mut decls = Vec::with_capacity(problem.gold.len());
    let mut types = Vec::new();
    for (index, gold) in problem.gold.iter().enumerate() {
        let normalized = gold.to_decl().map_err(|e| not_expressible(index, &e.to_string()))?;
        match (gold, &normalized) {
            (GoldDecl::Objective { .. }, Decl::Objective { expr, .. }) => {
                if expr.is_zero() {
                    return Err(not_expressible(index, "objective is identically zero"));
                }
                decls.push(normalized);
            }
            (GoldDecl::Constraint { ctype, .. }, Decl::Constraint { lhs, .. }) => {
                if lhs.is_constant() {
                    return Err(not_expressible(index, "constraint has no variable terms"));
                }
                let ratio = *ctype == Some(ConstraintType::Ratio);
                types.push(classify(&normalized, ratio)?);
                let written = if ratio { ratio_form(&normalized) } else { None };
                decls.push(written.unwrap_or(normalized));
            }
            _ => unreachable!("gold kind matches its declaration"),
        }
    }
    let doc = Document::new(decls).map_err(|e| not_expressible(0, &e.to_string()))?;
    sort_declarations(&doc, &types, &problem.order_hints)
}

/// Gold canonical form of a problem, in generation order.
pub fn gold_canonical(problem: &Problem) -> Result<CanonicalForm, CanonicalError> {
    to_canonical(&canonicalize_gold(problem)?, problem.variables.len())
}

/// Constraint types declared in the corpus that disagree with [`classify`].
pub fn type_disagreements(problem: &Problem) -> Vec<TypeDisagreement> {
    let mut out = Vec::new();
    for (index, gold) in problem.gold.iter().enumerate() {
        let GoldDecl::Constraint { ctype: Some(declared), .. } = gold else { continue };
        let Ok(decl) = gold.to_decl() else { continue };
        if let Ok(computed) = classify(&decl, *declared == ConstraintType::Ratio) {
            if computed != *declared {
                out.push(TypeDisagreement { id: problem.id.clone(), index, declared: *declared, computed });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypeDisagreement {
    pub id: String,
    pub index: usize,
    pub declared: ConstraintType,
    pub computed: ConstraintType,
}

/// Counts of each constraint type, handy for corpus summaries.
pub fn type_histogram<'a, I: IntoIterator<Item = &'a ConstraintType>>(types: I) -> BTreeMap<ConstraintType, usize> {
    let mut h = BTreeMap::new();
    for t in types {
        *h.entry(*t).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_ir;
    use crate::rational::{integer, rational};

    fn nc(terms: &[(Var, i64)], op: CmpOp, rhs: i64) -> Decl {
        Decl::normalized_constraint(terms.iter().map(|(v, c)| (*v, integer(*c))), op, integer(rhs))
    }

    #[test]
    fn classifies_bounds() {
        assert_eq!(classify(&nc(&[(Var::X, 1)], CmpOp::Ge, 0), false), Ok(ConstraintType::Lowerbound));
        assert_eq!(classify(&nc(&[(Var::Y, 1)], CmpOp::Le, 7), false), Ok(ConstraintType::Upperbound));
        assert_eq!(classify(&nc(&[(Var::Y, 2)], CmpOp::Le, 7), false), Ok(ConstraintType::Linear));
    }

    #[test]
    fn classifies_two_variable_shapes() {
        assert_eq!(classify(&nc(&[(Var::X, 1), (Var::Y, -1)], CmpOp::Le, 0), false), Ok(ConstraintType::Xy));
        assert_eq!(classify(&nc(&[(Var::X, -1), (Var::Y, 1)], CmpOp::Ge, 0), false), Ok(ConstraintType::Xy));
        assert_eq!(classify(&nc(&[(Var::X, 1), (Var::Y, -2)], CmpOp::Ge, 0), false), Ok(ConstraintType::Xby));
        assert_eq!(classify(&nc(&[(Var::X, 3), (Var::Y, -1)], CmpOp::Le, 0), false), Ok(ConstraintType::Xby));
        // Same sign or non-zero rhs falls through.
        assert_eq!(classify(&nc(&[(Var::X, 1), (Var::Y, 2)], CmpOp::Le, 0), false), Ok(ConstraintType::Linear));
        assert_eq!(classify(&nc(&[(Var::X, 1), (Var::Y, -2)], CmpOp::Le, 5), false), Ok(ConstraintType::Linear));
    }

    #[test]
    fn classifies_sum_linear_and_ratio() {
        assert_eq!(classify(&nc(&[(Var::X, 1), (Var::Y, 1)], CmpOp::Le, 40), false), Ok(ConstraintType::Sum));
        assert_eq!(classify(&nc(&[(Var::X, 3), (Var::Y, 4)], CmpOp::Le, 50), false), Ok(ConstraintType::Linear));
        assert_eq!(classify(&nc(&[(Var::X, 3), (Var::Y, 4)], CmpOp::Le, 50), true), Ok(ConstraintType::Ratio));
    }

    #[test]
    fn classify_rejects_unnormalized_and_objectives() {
        let raw = parse_ir("x + 5 <= y").unwrap().decls()[0].clone();
        assert!(matches!(classify(&raw, false), Err(CanonicalError::Unnormalized(_))));
        let obj = Decl::objective(Direction::Max, LinearExpr::var(Var::X));
        assert_eq!(classify(&obj, false), Err(CanonicalError::NotAConstraint));
    }

    #[test]
    fn recognizes_ratio_shape_and_inverts_it() {
        let doc = parse_ir("x >= 0.3 (x + y) ; 0.4(x + y + z) <= y ; x >= 0.3y ; x >= 1.5 (x + y)").unwrap();
        let shapes: Vec<bool> = doc.decls().iter().map(is_ratio_shape).collect();
        assert_eq!(shapes, [true, true, false, false]);

        let n = normalize(&doc.decls()[0]);
        assert_eq!(ratio_form(&n).as_ref(), Some(&doc.decls()[0]));
        let n = normalize(&doc.decls()[1]);
        assert_eq!(ratio_form(&n).as_ref(), Some(&doc.decls()[1]));
        assert_eq!(ratio_form(&normalize(&doc.decls()[2])), None);
    }

    #[test]
    fn lowerbound_sorts_before_upperbound() {
        let doc = parse_ir("x >= 0 ; maximize x ; x <= 10").unwrap();
        let types = [ConstraintType::Lowerbound, ConstraintType::Upperbound];
        let sorted = sort_declarations(&doc, &types, &[0, 1]).unwrap();
        assert_eq!(sorted.to_string(), "maximize x ; x >= 0 ; x <= 10");
    }

    #[test]
    fn same_type_sorts_by_variable_then_operator() {
        let doc = parse_ir("maximize x + y ; y <= 4 ; x <= 5").unwrap();
        let t = [ConstraintType::Upperbound; 2];
        assert_eq!(sort_declarations(&doc, &t, &[0, 1]).unwrap().to_string(), "maximize x + y ; x <= 5 ; y <= 4");

        let doc = parse_ir("x + y >= 2 ; x + y <= 9").unwrap();
        let t = [ConstraintType::Sum; 2];
        assert_eq!(sort_declarations(&doc, &t, &[0, 1]).unwrap().to_string(), "x + y <= 9 ; x + y >= 2");
    }

    #[test]
    fn linear_constraints_follow_position() {
        let doc = parse_ir("3x + 4y <= 50 ; 2x + y <= 30").unwrap();
        let t = [ConstraintType::Linear; 2];
        assert_eq!(sort_declarations(&doc, &t, &[1, 0]).unwrap().to_string(), "2x + y <= 30 ; 3x + 4y <= 50");
    }

    #[test]
    fn sort_checks_metadata_lengths() {
        let doc = parse_ir("x <= 1 ; y <= 1").unwrap();
        let err = sort_declarations(&doc, &[ConstraintType::Upperbound], &[0, 1]).unwrap_err();
        assert_eq!(err, CanonicalError::LengthMismatch { constraints: 2, types: 1, positions: 2 });
    }

    #[test]
    fn converts_to_dense_rows() {
        let doc = parse_ir("maximize 3x + 4y ; 3x + 4y <= 50").unwrap();
        let cf = to_canonical(&doc, 2).unwrap();
        assert_eq!(cf.direction, Direction::Max);
        assert_eq!(cf.objective, vec![integer(3), integer(4)]);
        assert_eq!(cf.rows, vec![Row { coeffs: vec![integer(3), integer(4)], op: CmpOp::Le, rhs: integer(50) }]);

        let cf = to_canonical(&parse_ir("minimize x").unwrap(), 1).unwrap();
        assert_eq!((cf.objective, cf.rows.len()), (vec![integer(1)], 0));

        let cf = to_canonical(&parse_ir("maximize x ; x >= 0.3 (x + y)").unwrap(), 2).unwrap();
        assert_eq!(cf.rows[0].coeffs, vec![rational(7, 10), rational(-3, 10)]);
        assert_eq!(cf.rows[0].op, CmpOp::Ge);
        assert_eq!(cf.rows[0].rhs, integer(0));
    }

    #[test]
    fn to_canonical_errors() {
        let doc = parse_ir("maximize x + z").unwrap();
        assert_eq!(to_canonical(&doc, 2), Err(CanonicalError::AliasOutOfRange { alias: Var::Z, count: 2 }));
        assert_eq!(to_canonical(&parse_ir("x <= 1").unwrap(), 1), Err(CanonicalError::MissingObjective));
    }

    #[test]
    fn canonical_form_serializes_rationals_as_strings() {
        let cf = to_canonical(&parse_ir("maximize x ; x >= 0.3 (x + y)").unwrap(), 2).unwrap();
        let json = serde_json::to_string(&cf).unwrap();
        assert_eq!(
            json,
            r#"{"direction":"max","objective":["1","0"],"rows":[{"coeffs":["0.7","-0.3"],"op":">=","rhs":"0"}]}"#
        );
        assert_eq!(serde_json::from_str::<CanonicalForm>(&json).unwrap(), cf);
        assert!(serde_json::from_str::<CanonicalForm>(r#"{"direction":"max","objective":[1.5],"rows":[]}"#).is_err());
    }
}
