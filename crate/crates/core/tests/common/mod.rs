//! Seeded generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use autoform::canonical::{classify, is_ratio_shape};
use autoform::corpus::read_corpus;
use autoform::ir::{CmpOp, Decl, Direction, Document, LinearExpr, Var};
use autoform::{load_corpus, normalize, ConstraintType, Problem, Rational};
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn sample_corpus() -> Vec<Problem> {
    load_corpus(data_path("sample_corpus.jsonl")).expect("fixture corpus loads")
}

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

const DENOMS: [i64; 9] = [1, 1, 1, 2, 3, 4, 7, 10, 100];

pub fn random_rational<R: Rng>(rng: &mut R) -> Rational {
    q(rng.gen_range(-60..=60), *DENOMS.choose(rng).unwrap())
}

pub fn random_nonzero<R: Rng>(rng: &mut R) -> Rational {
    loop {
        let r = random_rational(rng);
        if !r.is_zero() {
            return r;
        }
    }
}

pub fn random_op<R: Rng>(rng: &mut R) -> CmpOp {
    if rng.gen() {
        CmpOp::Le
    } else {
        CmpOp::Ge
    }
}

pub fn random_var<R: Rng>(rng: &mut R, nvars: usize) -> Var {
    Var::ALL[rng.gen_range(0..nvars)]
}

/// Up to four terms over the first `nvars` aliases, optionally with a constant.
pub fn random_expr<R: Rng>(rng: &mut R, nvars: usize, constant: bool) -> LinearExpr {
    let mut e = LinearExpr::zero();
    for v in &Var::ALL[..nvars] {
        if rng.gen_bool(0.6) {
            e.add_term(*v, random_nonzero(rng));
        }
    }
    if constant && rng.gen_bool(0.5) {
        e = e.add(&LinearExpr::constant(random_rational(rng)));
    }
    e
}

/// A syntactically arbitrary but valid document: any written sides, at most
/// one objective at any position.
pub fn random_document<R: Rng>(rng: &mut R) -> Document {
    let nvars = rng.gen_range(1..=4);
    let count = rng.gen_range(1..=9);
    let objective_at = if rng.gen_bool(0.8) { Some(rng.gen_range(0..count)) } else { None };
    let mut decls = Vec::new();
    for i in 0..count {
        if Some(i) == objective_at {
            let expr = loop {
                let e = random_expr(rng, nvars, false);
                if !e.is_constant() {
                    break e;
                }
            };
            let direction = if rng.gen() { Direction::Max } else { Direction::Min };
            decls.push(Decl::objective(direction, expr));
            continue;
        }
        loop {
            let lhs = random_expr(rng, nvars, true);
            let rhs = random_expr(rng, nvars, true);
            let d = Decl::constraint(lhs, random_op(rng), rhs);
            if let Decl::Constraint { lhs, .. } = normalize(&d) {
                if !lhs.is_constant() {
                    decls.push(d);
                    break;
                }
            }
        }
    }
    Document::new(decls).unwrap()
}

fn small_positive<R: Rng>(rng: &mut R) -> Rational {
    q(rng.gen_range(1..=200), *[1, 1, 2, 10].choose(rng).unwrap())
}

fn sum_of(vars: &[Var], coeff: &Rational) -> LinearExpr {
    LinearExpr::from_terms(vars.iter().map(|v| (*v, coeff.clone())), Rational::zero())
}

fn subset<R: Rng>(rng: &mut R, nvars: usize, min: usize) -> Vec<Var> {
    let mut vs: Vec<Var> = Var::ALL[..nvars].to_vec();
    vs.shuffle(rng);
    let k = rng.gen_range(min..=nvars);
    vs.truncate(k);
    vs.sort();
    vs
}

/// A constraint in one of the shapes LP word problems use, written the way
/// an annotator would (ratios keep their `c(x + y)` form).
pub fn lpwp_constraint<R: Rng>(rng: &mut R, nvars: usize) -> Decl {
    let op = random_op(rng);
    let shape = if nvars < 2 { rng.gen_range(0..3) } else { rng.gen_range(0..8) };
    match shape {
        0 | 1 => {
            Decl::constraint(LinearExpr::var(random_var(rng, nvars)), op, LinearExpr::constant(small_positive(rng)))
        }
        2 => Decl::constraint(
            LinearExpr::term(random_var(rng, nvars), small_positive(rng)),
            op,
            LinearExpr::constant(small_positive(rng)),
        ),
        3 => {
            let vs = subset(rng, nvars, 2);
            Decl::constraint(LinearExpr::var(vs[0]), op, LinearExpr::var(vs[1]))
        }
        4 => {
            let mut vs = subset(rng, nvars, 2);
            vs.shuffle(rng);
            let c = [int(2), int(3), q(1, 2), q(3, 2)].choose(rng).unwrap().clone();
            Decl::constraint(LinearExpr::var(vs[0]), op, LinearExpr::term(vs[1], c))
        }
        5 => Decl::constraint(sum_of(&subset(rng, nvars, 2), &int(1)), op, LinearExpr::constant(small_positive(rng))),
        6 => {
            let vs = subset(rng, nvars, 2);
            let v = *vs.choose(rng).unwrap();
            let c = [q(3, 10), q(2, 5), q(1, 3), q(3, 4)].choose(rng).unwrap().clone();
            let group = sum_of(&vs, &c);
            if rng.gen() {
                Decl::constraint(LinearExpr::var(v), op, group)
            } else {
                Decl::constraint(group, op, LinearExpr::var(v))
            }
        }
        _ => loop {
            let lhs = random_expr(rng, nvars, false);
            if !lhs.is_constant() {
                break Decl::constraint(lhs, op, LinearExpr::constant(small_positive(rng)));
            }
        },
    }
}

/// Declaration set with per-constraint types and positions, as fed to
/// `sort_declarations`.
#[derive(Debug, Clone)]
pub struct DeclSet {
    pub decls: Vec<Decl>,
    pub types: Vec<ConstraintType>,
    pub positions: Vec<usize>,
}

impl DeclSet {
    pub fn document(&self) -> Document {
        Document::new(self.decls.clone()).unwrap()
    }

    /// Type and position of a constraint equal to `decl`; duplicates share both.
    pub fn meta(&self, decl: &Decl) -> (ConstraintType, usize) {
        let mut k = 0;
        for d in &self.decls {
            if d.is_objective() {
                continue;
            }
            if d == decl {
                return (self.types[k], self.positions[k]);
            }
            k += 1;
        }
        panic!("declaration not in set: {decl:?}")
    }

    /// The same set with constraints (and their metadata) reordered by
    /// `perm`, the objective moved to `objective_at`.
    pub fn permuted(&self, perm: &[usize], objective_at: usize) -> DeclSet {
        let constraints: Vec<&Decl> = self.decls.iter().filter(|d| !d.is_objective()).collect();
        let mut decls: Vec<Decl> = perm.iter().map(|&i| constraints[i].clone()).collect();
        if let Some(obj) = self.decls.iter().find(|d| d.is_objective()) {
            decls.insert(objective_at.min(decls.len()), obj.clone());
        }
        DeclSet {
            decls,
            types: perm.iter().map(|&i| self.types[i]).collect(),
            positions: perm.iter().map(|&i| self.positions[i]).collect(),
        }
    }
}

/// At most four variables and eight constraints, with occasional duplicated
/// constraints and repeated positions.
pub fn random_decl_set<R: Rng>(rng: &mut R) -> DeclSet {
    let nvars = rng.gen_range(1..=4);
    let m = rng.gen_range(0..=8);
    let mut constraints: Vec<(Decl, usize)> = Vec::new();
    for _ in 0..m {
        if !constraints.is_empty() && rng.gen_bool(0.1) {
            let dup = constraints.choose(rng).unwrap().clone();
            constraints.push(dup);
        } else {
            constraints.push((lpwp_constraint(rng, nvars), rng.gen_range(0..m.max(1))));
        }
    }
    let types = constraints.iter().map(|(d, _)| classify(&normalize(d), is_ratio_shape(d)).unwrap()).collect();
    let positions = constraints.iter().map(|(_, p)| *p).collect();
    let mut decls: Vec<Decl> = constraints.into_iter().map(|(d, _)| d).collect();
    if decls.is_empty() || rng.gen_bool(0.9) {
        let objective = loop {
            let e = random_expr(rng, nvars, false);
            if !e.is_constant() {
                break e;
            }
        };
        let at = rng.gen_range(0..=decls.len());
        decls.insert(at, Decl::objective(Direction::Max, objective));
    }
    DeclSet { decls, types, positions }
}

/// Type rank in generation order, written out independently of the enum.
pub fn type_rank(t: ConstraintType) -> usize {
    match t {
        ConstraintType::Lowerbound => 0,
        ConstraintType::Upperbound => 1,
        ConstraintType::Xy => 2,
        ConstraintType::Xby => 3,
        ConstraintType::Sum => 4,
        ConstraintType::Linear => 5,
        ConstraintType::Ratio => 6,
    }
}

/// Checks rules 1-5 between two declarations that appear in this order.
pub fn rules_allow(set: &DeclSet, a: &Decl, b: &Decl) -> bool {
    match (a.is_objective(), b.is_objective()) {
        (true, _) => return true,
        (false, true) => return false,
        _ => {}
    }
    let (ta, pa) = set.meta(a);
    let (tb, pb) = set.meta(b);
    if type_rank(ta) != type_rank(tb) {
        return type_rank(ta) < type_rank(tb);
    }
    if ta == ConstraintType::Linear && pa != pb {
        return pa < pb;
    }
    let (Decl::Constraint { lhs: la, op: oa, .. }, Decl::Constraint { lhs: lb, op: ob, .. }) =
        (normalize(a), normalize(b))
    else {
        unreachable!()
    };
    let va: Vec<usize> = Var::ALL.iter().filter(|v| !la.coeff(**v).is_zero()).map(|v| v.index()).collect();
    let vb: Vec<usize> = Var::ALL.iter().filter(|v| !lb.coeff(**v).is_zero()).map(|v| v.index()).collect();
    if va != vb {
        return va < vb;
    }
    !(oa == CmpOp::Ge && ob == CmpOp::Le)
}

/// Largest number of equal pairs between `pred` and `gold`, by trying every
/// assignment.
pub fn brute_force_matching(pred: &[Decl], gold: &[Decl]) -> usize {
    fn go(pred: &[Decl], gold: &[Decl], used: &mut Vec<bool>) -> usize {
        let Some((first, rest)) = pred.split_first() else { return 0 };
        let mut best = go(rest, gold, used);
        for j in 0..gold.len() {
            if !used[j] && gold[j] == *first {
                used[j] = true;
                best = best.max(1 + go(rest, gold, used));
                used[j] = false;
            }
        }
        best
    }
    go(pred, gold, &mut vec![false; gold.len()])
}

/// Smallest interval `[lo, hi]` with at most `tail` probability mass on
/// each side under Binomial(n, p), from the exact pmf.
pub fn binomial_interval(n: usize, p: f64, tail: f64) -> (usize, usize) {
    let mut pmf = vec![0.0f64; n + 1];
    pmf[0] = (1.0 - p).powi(n as i32);
    for k in 0..n {
        pmf[k + 1] = pmf[k] * (n - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
    }
    let mut cdf = 0.0;
    let mut lo = None;
    let mut hi = n;
    for (k, m) in pmf.iter().enumerate() {
        cdf += m;
        if lo.is_none() && cdf > tail {
            lo = Some(k);
        }
        if cdf >= 1.0 - tail {
            hi = k;
            break;
        }
    }
    (lo.unwrap(), hi)
}

/// Incrementally written problem text with character-indexed tags.
pub struct TextBuilder {
    text: String,
    tags: Vec<Value>,
}

impl TextBuilder {
    pub fn new() -> Self {
        Self { text: String::new(), tags: Vec::new() }
    }

    pub fn push(&mut self, s: &str) -> &mut Self {
        self.text.push_str(s);
        self
    }

    pub fn tag(&mut self, label: &str, surface: &str) -> usize {
        let start = self.text.chars().count();
        self.text.push_str(surface);
        let end = self.text.chars().count();
        self.tags.push(json!({"label": label, "start": start, "end": end}));
        self.tags.len() - 1
    }
}

pub const ELIGIBLE: [&str; 6] = ["cannot", "must not", "can not", "Cannot", "MUST NOT", "must  not"];
pub const INELIGIBLE: [&str; 5] = ["at most", "must", "at least", "should not exceed", "cannot be less than"];

/// A two-variable problem with one constraint per phrase, each linked to
/// its `CONST_DIR` tag. Multi-byte characters precede every span.
pub fn problem_with_phrases<R: Rng>(rng: &mut R, id: &str, phrases: &[&str]) -> Problem {
    let mut b = TextBuilder::new();
    b.push("Ein Café « naïve » sells ");
    b.tag("VAR", "crêpes");
    b.push(" and ");
    b.tag("VAR", "galettes");
    b.push(". ");
    let mut gold = vec![json!({"kind": "objective", "direction": "max",
        "coeffs": [rng.gen_range(1..9).to_string(), rng.gen_range(1..9).to_string()]})];
    for (k, phrase) in phrases.iter().enumerate() {
        b.push(&format!("Rule {k} · stock "));
        let dir = b.tag("CONST_DIR", phrase);
        b.push(" exceed ");
        let limit = rng.gen_range(10..500);
        b.tag("LIMIT", &limit.to_string());
        b.push(" ✓ units. ");
        let op = if rng.gen() { "<=" } else { ">=" };
        gold.push(json!({"kind": "constraint",
            "coeffs": [rng.gen_range(1..6).to_string(), rng.gen_range(0..6).to_string()],
            "op": op, "rhs": limit.to_string(), "type": "linear", "dir_tag": dir}));
    }
    b.push("Maximize ");
    b.tag("OBJ_NAME", "profit");
    b.push(".");
    let rec = json!({"id": id, "text": b.text, "tags": b.tags, "gold": gold});
    read_corpus(rec.to_string().as_bytes()).expect("generated problem is valid").remove(0)
}

/// A corpus of `problems` problems with `sites` eligible phrases each,
/// interleaved with ineligible ones.
pub fn augmentable_corpus<R: Rng>(rng: &mut R, problems: usize, sites: usize) -> Vec<Problem> {
    (0..problems)
        .map(|i| {
            let mut phrases: Vec<&str> = (0..sites).map(|_| *ELIGIBLE.choose(rng).unwrap()).collect();
            for _ in 0..rng.gen_range(0..3) {
                phrases.push(INELIGIBLE.choose(rng).unwrap());
            }
            phrases.shuffle(rng);
            problem_with_phrases(rng, &format!("p{i:04}"), &phrases)
        })
        .collect()
}

/// A problem whose gold constraints are random LP word-problem shapes over
/// up to four tagged variables, with annotated types and shuffled hints.
pub fn random_lpwp_problem<R: Rng>(rng: &mut R, id: &str) -> Problem {
    let names = ["apples", "pears", "plums", "figs"];
    let nvars = rng.gen_range(1..=4);
    let mut b = TextBuilder::new();
    b.push("A grower ships ");
    for (i, name) in names[..nvars].iter().enumerate() {
        if i > 0 {
            b.push(", ");
        }
        b.tag("VAR", name);
    }
    b.push(".");
    let dense = |e: &LinearExpr| -> Vec<String> {
        Var::ALL[..nvars].iter().map(|v| autoform::rational::format_rational(&e.coeff(*v))).collect()
    };
    let objective = loop {
        let e = random_expr(rng, nvars, false);
        if !e.is_constant() {
            break e;
        }
    };
    let mut gold = vec![json!({"kind": "objective", "direction": "min", "coeffs": dense(&objective)})];
    let m = rng.gen_range(0..=8);
    for _ in 0..m {
        let d = lpwp_constraint(rng, nvars);
        let ty = classify(&normalize(&d), is_ratio_shape(&d)).unwrap();
        let Decl::Constraint { lhs, op, rhs } = normalize(&d) else { unreachable!() };
        gold.push(json!({"kind": "constraint", "coeffs": dense(&lhs), "op": op,
            "rhs": autoform::rational::format_rational(rhs.constant_term()), "type": ty}));
    }
    let mut hints: Vec<usize> = (0..m).collect();
    hints.shuffle(rng);
    let rec = json!({"id": id, "text": b.text, "tags": b.tags, "gold": gold, "order_hints": hints});
    read_corpus(rec.to_string().as_bytes()).expect("generated problem is valid").remove(0)
}

/// Property-test settings without a regressions file, which integration
/// tests have no source directory for.
pub fn proptest_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config { cases, failure_persistence: None, ..Default::default() }
}
