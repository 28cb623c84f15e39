//! Constraint-direction augmentation.
//!
//! A negated direction phrase (`must not`, `can not`, `cannot`) tagged as
//! `CONST_DIR` is rewritten to `must`, and the operator of the constraint it
//! states is flipped. Each eligible site is reversed independently with
//! probability `p`. Tag spans after the edit are shifted so every tag still
//! covers its surface.
//!
//! Randomness comes from one ChaCha stream per problem, seeded from the
//! configured seed and the problem id, so the output does not depend on
//! corpus order or on which other problems are present.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::canonical::ConstraintType;
use crate::corpus::{fold, EntityLabel, GoldDecl, Problem, Violation};

pub const DEFAULT_REVERSE_PROB: f64 = 0.3;
pub const NEGATED_PHRASES: [&str; 3] = ["must not", "can not", "cannot"];
pub const REPLACEMENT: &str = "must";
pub const ID_SUFFIX: &str = "#aug";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AugmentError {
    #[error("reverse probability {0} is outside [0, 1]")]
    BadProbability(f64),
    #[error("problem {id:?}: cannot link CONST_DIR tag {tag} to a constraint")]
    AmbiguousLink { id: String, tag: usize },
    #[error("problem {id:?}: site refers to tag {tag} / declaration {constraint}, which is not an eligible pair")]
    BadSite { id: String, tag: usize, constraint: usize },
    #[error("problem {id:?}: span repair broke an invariant: {violation}")]
    SpanRepair { id: String, violation: Violation },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentConfig {
    p: f64,
    pub seed: u64,
}

impl AugmentConfig {
    pub fn new(p: f64, seed: u64) -> Result<Self, AugmentError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(AugmentError::BadProbability(p));
        }
        Ok(Self { p, seed })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { p: DEFAULT_REVERSE_PROB, seed: 0 }
    }
}

/// A reversible phrase: tag index and the gold index of its constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Site {
    pub tag: usize,
    pub constraint: usize,
}

pub fn is_negated_phrase(surface: &str) -> bool {
    let folded = fold(surface);
    NEGATED_PHRASES.contains(&folded.as_str())
}

/// `CONST_DIR` tags carrying a negated phrase, each linked to its constraint.
///
/// A constraint's `dir_tag` is authoritative. Without explicit links, the
/// k-th `CONST_DIR` tag in the text belongs to the constraint with the k-th
/// smallest order hint; that is only accepted when the counts agree and the
/// hints are distinct. Anything else is reported as ambiguous.
pub fn find_eligible(problem: &Problem) -> Result<Vec<Site>, AugmentError> {
    let candidates: Vec<usize> = (0..problem.tags.len())
        .filter(|&i| problem.tags[i].label == EntityLabel::ConstDir && is_negated_phrase(&problem.tags[i].surface))
        .collect();
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let constraints = problem.constraint_indices();
    let explicit: Vec<(usize, usize)> = constraints
        .iter()
        .filter_map(|&g| match &problem.gold[g] {
            GoldDecl::Constraint { dir_tag: Some(t), .. } => Some((*t, g)),
            _ => None,
        })
        .collect();
    let by_rank = if explicit.is_empty() { link_by_rank(problem, &constraints) } else { None };
    candidates
        .into_iter()
        .map(|tag| {
            let linked = match &by_rank {
                Some(ranked) => ranked.iter().find(|(t, _)| *t == tag).map(|(_, g)| *g),
                None => explicit.iter().find(|(t, _)| *t == tag).map(|(_, g)| *g),
            };
            linked
                .map(|constraint| Site { tag, constraint })
                .ok_or_else(|| AugmentError::AmbiguousLink { id: problem.id.clone(), tag })
        })
        .collect()
}

fn link_by_rank(problem: &Problem, constraints: &[usize]) -> Option<Vec<(usize, usize)>> {
    let dir_tags: Vec<usize> =
        (0..problem.tags.len()).filter(|&i| problem.tags[i].label == EntityLabel::ConstDir).collect();
    let distinct: HashSet<usize> = problem.order_hints.iter().copied().collect();
    if dir_tags.len() != constraints.len() || distinct.len() != constraints.len() {
        return None;
    }
    let mut by_hint: Vec<(usize, usize)> =
        problem.order_hints.iter().copied().zip(constraints.iter().copied()).collect();
    by_hint.sort();
    Some(dir_tags.into_iter().zip(by_hint.into_iter().map(|(_, g)| g)).collect())
}

/// Rewrites one site unconditionally: phrase to `must`, operator flipped,
/// later spans shifted. The id is left alone.
pub fn apply_reversal(problem: &mut Problem, site: Site) -> Result<(), AugmentError> {
    let bad_site = || AugmentError::BadSite { id: problem.id.clone(), tag: site.tag, constraint: site.constraint };
    let tag = problem.tags.get(site.tag).ok_or_else(bad_site)?;
    if tag.label != EntityLabel::ConstDir || !is_negated_phrase(&tag.surface) {
        return Err(bad_site());
    }
    let (start, end) = (tag.start, tag.end);
    let Some(GoldDecl::Constraint { op, ctype, .. }) = problem.gold.get_mut(site.constraint) else {
        return Err(bad_site());
    };
    *op = op.flipped();
    *ctype = ctype.map(|t| match t {
        ConstraintType::Lowerbound => ConstraintType::Upperbound,
        ConstraintType::Upperbound => ConstraintType::Lowerbound,
        other => other,
    });

    let chars: Vec<char> = problem.text.chars().collect();
    let mut text: String = chars[..start].iter().collect();
    text.push_str(REPLACEMENT);
    text.extend(&chars[end..]);
    problem.text = text;

    let new_end = start + REPLACEMENT.chars().count();
    let delta = new_end as isize - end as isize;
    for t in problem.tags.iter_mut() {
        if t.start >= end {
            t.start = (t.start as isize + delta) as usize;
            t.end = (t.end as isize + delta) as usize;
        }
    }
    let t = &mut problem.tags[site.tag];
    t.end = new_end;
    t.surface = REPLACEMENT.to_string();

    problem.validate().map_err(|violation| AugmentError::SpanRepair { id: problem.id.clone(), violation })
}

/// Draws one value from `rng` and, with probability `p`, returns the
/// problem with `site` reversed.
pub fn reverse_constraint<R: Rng>(
    problem: &Problem,
    site: Site,
    p: f64,
    rng: &mut R,
) -> Result<Option<Problem>, AugmentError> {
    let draw: f64 = rng.gen();
    if draw >= p {
        return Ok(None);
    }
    let mut out = problem.clone();
    apply_reversal(&mut out, site)?;
    Ok(Some(out))
}

/// Deterministic random stream for one problem.
pub fn problem_rng(seed: u64, id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// The problem with each eligible site reversed with probability `p`, or
/// `None` when no site was drawn. The returned problem keeps the source id.
pub fn augment_problem(problem: &Problem, config: &AugmentConfig) -> Result<Option<Problem>, AugmentError> {
    let sites = find_eligible(problem)?;
    let mut rng = problem_rng(config.seed, &problem.id);
    let mut current: Option<Problem> = None;
    for site in sites {
        let base = current.as_ref().unwrap_or(problem);
        if let Some(next) = reverse_constraint(base, site, config.p, &mut rng)? {
            current = Some(next);
        }
    }
    Ok(current)
}

/// Originals followed by their augmented variants, in corpus order.
///
/// A variant of `id` is named `id#aug<k>` with the smallest `k >= 1` not
/// already used in the corpus.
pub fn augment_corpus(corpus: &[Problem], config: &AugmentConfig) -> Result<Vec<Problem>, AugmentError> {
    let mut ids: HashSet<String> = corpus.iter().map(|p| p.id.clone()).collect();
    let mut variants = Vec::new();
    for problem in corpus {
        if let Some(mut variant) = augment_problem(problem, config)? {
            let mut k = 1;
            while ids.contains(&format!("{}{ID_SUFFIX}{k}", problem.id)) {
                k += 1;
            }
            variant.id = format!("{}{ID_SUFFIX}{k}", problem.id);
            ids.insert(variant.id.clone());
            variants.push(variant);
        }
    }
    Ok(corpus.iter().cloned().chain(variants).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::read_corpus;
    use crate::ir::CmpOp;

    fn problem(text: &str, phrase: &str, extra: &str) -> Problem {
        let chars: Vec<char> = text.chars().collect();
        let needle: Vec<char> = phrase.chars().collect();
        let start = (0..chars.len()).find(|&i| chars[i..].starts_with(&needle)).unwrap();
        let end = start + needle.len();
        let rec = format!(
            r#"{{"id":"t","text":{text:?},"tags":[{{"label":"CONST_DIR","start":{start},"end":{end}}}{extra}],"variables":["a"],"gold":[{{"kind":"objective","direction":"max","coeffs":["1"]}},{{"kind":"constraint","coeffs":["1"],"op":"<=","rhs":"50","type":"upperbound"}}]}}"#
        );
        read_corpus(rec.as_bytes()).unwrap().remove(0)
    }

    #[test]
    fn finds_cannot() {
        let p = problem("Production cannot exceed 50 units.", "cannot", "");
        assert_eq!(find_eligible(&p).unwrap(), vec![Site { tag: 0, constraint: 1 }]);
    }

    #[test]
    fn ignores_positive_phrases() {
        let p = problem("Production must be at least 10.", "must", "");
        assert!(find_eligible(&p).unwrap().is_empty());
    }

    #[test]
    fn case_and_spacing_are_folded() {
        let p = problem("Production Can  not exceed 50.", "Can  not", "");
        assert_eq!(find_eligible(&p).unwrap().len(), 1);
        let mut q = p.clone();
        apply_reversal(&mut q, Site { tag: 0, constraint: 1 }).unwrap();
        assert_eq!(q.text, "Production must exceed 50.");
    }

    #[test]
    fn rewrite_shifts_later_spans_and_flips_operator() {
        let text = "Production cannot exceed 50 units of steel.";
        let steel = text.find("steel").unwrap();
        let extra = format!(r#",{{"label":"LIMIT","start":{},"end":{}}}"#, steel, steel + 5);
        let p = problem(text, "cannot", &extra);
        let mut q = p.clone();
        apply_reversal(&mut q, Site { tag: 0, constraint: 1 }).unwrap();
        assert_eq!(q.text, "Production must exceed 50 units of steel.");
        assert_eq!(q.tags[1].start, p.tags[1].start - 2);
        assert_eq!(q.tags[1].surface, "steel");
        let GoldDecl::Constraint { op, ctype, .. } = &q.gold[1] else { panic!() };
        assert_eq!((*op, *ctype), (CmpOp::Ge, Some(ConstraintType::Lowerbound)));
        assert_eq!(q.id, p.id);
    }

    #[test]
    fn double_flip_restores_gold() {
        let p = problem("x cannot exceed 50", "cannot", "");
        let mut q = p.clone();
        apply_reversal(&mut q, Site { tag: 0, constraint: 1 }).unwrap();
        let GoldDecl::Constraint { op, ctype, .. } = &mut q.gold[1] else { panic!() };
        *op = op.flipped();
        *ctype = Some(ConstraintType::Upperbound);
        assert_eq!(q.gold, p.gold);
    }

    #[test]
    fn rejects_bad_probability_and_sites() {
        assert!(AugmentConfig::new(1.5, 0).is_err());
        assert!(AugmentConfig::new(f64::NAN, 0).is_err());
        let mut p = problem("x cannot exceed 50", "cannot", "");
        assert!(matches!(apply_reversal(&mut p, Site { tag: 0, constraint: 0 }), Err(AugmentError::BadSite { .. })));
    }

    #[test]
    fn ambiguous_links_are_errors() {
        let text = "x cannot exceed 50 and y must not exceed 10";
        let rec = format!(
            r#"{{"id":"amb","text":{text:?},"tags":[{{"label":"CONST_DIR","start":2,"end":8}},{{"label":"CONST_DIR","start":25,"end":33}}],"variables":["a"],"gold":[{{"kind":"objective","direction":"max","coeffs":["1"]}},{{"kind":"constraint","coeffs":["1"],"op":"<=","rhs":"50"}}]}}"#
        );
        let p = read_corpus(rec.as_bytes()).unwrap().remove(0);
        assert!(matches!(find_eligible(&p), Err(AugmentError::AmbiguousLink { .. })));
    }

    #[test]
    fn draws_one_value_per_site() {
        let p = problem("x cannot exceed 50", "cannot", "");
        let site = find_eligible(&p).unwrap()[0];
        let mut a = problem_rng(3, "t");
        let mut b = problem_rng(3, "t");
        let _ = reverse_constraint(&p, site, 0.0, &mut a).unwrap();
        let _: f64 = b.gen();
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());
    }

    #[test]
    fn variant_ids_avoid_collisions() {
        let p = problem("x cannot exceed 50", "cannot", "");
        let cfg = AugmentConfig::new(1.0, 1).unwrap();
        let once = augment_corpus(std::slice::from_ref(&p), &cfg).unwrap();
        assert_eq!(once[1].id, "t#aug1");
        let twice = augment_corpus(&[p.clone(), once[1].clone()], &cfg).unwrap();
        let ids: Vec<&str> = twice.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["t", "t#aug1", "t#aug2"]);
    }
}
