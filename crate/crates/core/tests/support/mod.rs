//! Reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use opa_core::sparql::{
    Algebra, CompareOp, Expr, Operand, PatternTerm, QueryTriple, Solution, Variable,
};
use opa_core::{Graph, Literal, Term, Triple};
use rand::seq::SliceRandom;
use rand::Rng;

pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";

type Row = BTreeMap<String, Term>;

fn to_solution(row: &Row) -> Solution {
    row.iter()
        .fold(Solution::new(), |s, (k, v)| s.with(k, v.clone()))
}

fn to_row(sol: &Solution) -> Row {
    sol.iter()
        .map(|(k, v)| (k.name().to_owned(), v.clone()))
        .collect()
}

fn agree(a: &Row, b: &Row) -> bool {
    a.iter().all(|(k, v)| b.get(k).is_none_or(|w| w == v))
}

fn share(a: &Row, b: &Row) -> bool {
    a.keys().any(|k| b.contains_key(k))
}

fn slot(p: &PatternTerm, t: &Term, row: &mut Row) -> bool {
    match p {
        PatternTerm::Term(c) => c == t,
        PatternTerm::Var(v) => match row.get(v.name()) {
            Some(bound) => bound == t,
            None => {
                row.insert(v.name().to_owned(), t.clone());
                true
            }
        },
    }
}

/// Every assignment of one graph triple per pattern, kept when consistent.
fn bgp(graph: &Graph, patterns: &[QueryTriple]) -> Vec<Row> {
    let triples: Vec<&Triple> = graph.iter().collect();
    let mut out = Vec::new();
    let k = patterns.len();
    let total = triples.len().pow(k as u32);
    if k == 0 {
        return vec![Row::new()];
    }
    for mut index in 0..total {
        let mut row = Row::new();
        let mut ok = true;
        for p in patterns {
            let t = triples[index % triples.len()];
            index /= triples.len();
            ok &= slot(&p.subject, t.subject(), &mut row)
                && slot(&p.predicate, t.predicate(), &mut row)
                && slot(&p.object, t.object(), &mut row);
        }
        if ok {
            out.push(row);
        }
    }
    out
}

fn integer(t: &Term) -> Option<i64> {
    match t {
        Term::Literal(l) if l.datatype() == XSD_INTEGER => l.lexical().parse().ok(),
        _ => None,
    }
}

/// `None` stands for an evaluation error.
fn expr(e: &Expr, row: &Row) -> Option<bool> {
    match e {
        Expr::Compare(op, l, r) => {
            let value = |o: &Operand| match o {
                Operand::Var(v) => row.get(v.name()).and_then(integer),
                Operand::Const(t) => integer(t),
            };
            let (a, b) = (value(l)?, value(r)?);
            Some(match op {
                CompareOp::Lt => a < b,
                CompareOp::Le => a <= b,
                CompareOp::Gt => a > b,
                CompareOp::Ge => a >= b,
                CompareOp::Eq => a == b,
                CompareOp::Ne => a != b,
            })
        }
        Expr::And(l, r) => match (expr(l, row), expr(r, row)) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        Expr::Or(l, r) => match (expr(l, row), expr(r, row)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
        Expr::Not(inner) => expr(inner, row).map(|b| !b),
    }
}

fn rows(graph: &Graph, a: &Algebra) -> Vec<Row> {
    match a {
        Algebra::Bgp(ps) => bgp(graph, ps),
        Algebra::Join(l, r) => {
            let (l, r) = (rows(graph, l), rows(graph, r));
            let mut out = Vec::new();
            for x in &l {
                for y in &r {
                    if agree(x, y) {
                        let mut m = x.clone();
                        m.extend(y.iter().map(|(k, v)| (k.clone(), v.clone())));
                        out.push(m);
                    }
                }
            }
            out
        }
        Algebra::Union(l, r) => {
            let mut out = rows(graph, l);
            out.extend(rows(graph, r));
            out
        }
        Algebra::Minus(l, r) => {
            let r = rows(graph, r);
            rows(graph, l)
                .into_iter()
                .filter(|x| !r.iter().any(|y| agree(x, y) && share(x, y)))
                .collect()
        }
        Algebra::Filter(e, inner) => rows(graph, inner)
            .into_iter()
            .filter(|row| expr(e, row) == Some(true))
            .collect(),
        Algebra::Limit(n, inner) => rows(graph, inner).into_iter().take(*n).collect(),
        Algebra::SelectAll(inner) => rows(graph, inner),
    }
}

/// Cross-product evaluation of the algebra, as a sorted multiset.
pub fn reference_eval(graph: &Graph, a: &Algebra) -> Vec<Solution> {
    let mut out: Vec<Solution> = rows(graph, a).iter().map(to_solution).collect();
    out.sort();
    out
}

pub fn sorted(mut sols: Vec<Solution>) -> Vec<Solution> {
    sols.sort();
    sols
}

pub fn row_of(sol: &Solution) -> BTreeMap<String, Term> {
    to_row(sol)
}

pub fn symbols() -> [Term; 4] {
    [
        Term::iri("http://example.org/a").unwrap(),
        Term::iri("http://example.org/b").unwrap(),
        Term::Literal(Literal::typed("1", XSD_INTEGER)),
        Term::Literal(Literal::typed("2", XSD_INTEGER)),
    ]
}

/// Up to 8 triples over the four-symbol vocabulary.
pub fn random_graph(rng: &mut impl Rng) -> Graph {
    let syms = symbols();
    let n = rng.gen_range(0..=8);
    let triples = (0..n).map(|_| {
        let s = syms[rng.gen_range(0..2)].clone();
        let p = syms[rng.gen_range(0..2)].clone();
        let o = syms[rng.gen_range(0..4)].clone();
        Triple::new(s, p, o).unwrap()
    });
    Graph::from_triples(triples)
}

const VARS: [&str; 3] = ["x", "y", "z"];

fn random_slot(rng: &mut impl Rng, allowed: usize) -> PatternTerm {
    if rng.gen_bool(0.6) {
        PatternTerm::Var(Variable::new(*VARS.choose(rng).unwrap()).unwrap())
    } else {
        PatternTerm::Term(symbols()[rng.gen_range(0..allowed)].clone())
    }
}

fn random_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    let leaf = |rng: &mut dyn rand::RngCore| {
        let ops = [
            CompareOp::Lt,
            CompareOp::Le,
            CompareOp::Gt,
            CompareOp::Ge,
            CompareOp::Eq,
            CompareOp::Ne,
        ];
        let var = Operand::Var(Variable::new(VARS[rng.gen_range(0..3)]).unwrap());
        let other = if rng.gen_bool(0.5) {
            Operand::Var(Variable::new(VARS[rng.gen_range(0..3)]).unwrap())
        } else {
            Operand::Const(symbols()[rng.gen_range(0..4)].clone())
        };
        Expr::compare(ops[rng.gen_range(0..ops.len())], var, other)
    };
    if depth == 0 || rng.gen_bool(0.6) {
        return leaf(rng);
    }
    match rng.gen_range(0..3) {
        0 => Expr::And(
            Box::new(random_expr(rng, depth - 1)),
            Box::new(random_expr(rng, depth - 1)),
        ),
        1 => Expr::Or(
            Box::new(random_expr(rng, depth - 1)),
            Box::new(random_expr(rng, depth - 1)),
        ),
        _ => Expr::Not(Box::new(random_expr(rng, depth - 1))),
    }
}

/// A random tree over BGP, Join, Union, Minus and Filter.
pub fn random_algebra(rng: &mut impl Rng, depth: u32) -> Algebra {
    if depth == 0 || rng.gen_bool(0.25) {
        let n = rng.gen_range(1..=2);
        let patterns = (0..n)
            .map(|_| {
                QueryTriple::new(
                    random_slot(rng, 2),
                    random_slot(rng, 2),
                    random_slot(rng, 4),
                )
            })
            .collect();
        return Algebra::Bgp(patterns);
    }
    let mut sub = || random_algebra(rng, depth - 1);
    let (l, r) = (sub(), sub());
    match rng.gen_range(0..4) {
        0 => Algebra::join(l, r),
        1 => Algebra::union(l, r),
        2 => Algebra::minus(l, r),
        _ => Algebra::filter(random_expr(rng, 2), l),
    }
}

/// Exhaustive search over bijections between the blank nodes of `a` and
/// `b`, pruning a partial mapping as soon as a fully mapped triple of `a`
/// is missing from `b`.
pub fn brute_isomorphic(a: &Graph, b: &Graph) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let ba: Vec<String> = a.blank_nodes().into_iter().map(str::to_owned).collect();
    let bb: Vec<String> = b.blank_nodes().into_iter().map(str::to_owned).collect();
    if ba.len() != bb.len() {
        return false;
    }
    let target: BTreeSet<&Triple> = b.iter().collect();
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    let mut used = vec![false; bb.len()];
    search(a, &ba, &bb, &target, &mut map, &mut used)
}

fn mapped(t: &Triple, map: &BTreeMap<String, String>) -> Option<Triple> {
    let rename = |x: &Term| match x {
        Term::BlankNode(l) => map.get(l).map(|m| Term::blank(m.clone()).unwrap()),
        other => Some(other.clone()),
    };
    Some(
        Triple::new(
            rename(t.subject())?,
            t.predicate().clone(),
            rename(t.object())?,
        )
        .unwrap(),
    )
}

fn search(
    a: &Graph,
    ba: &[String],
    bb: &[String],
    target: &BTreeSet<&Triple>,
    map: &mut BTreeMap<String, String>,
    used: &mut [bool],
) -> bool {
    let consistent = a
        .iter()
        .all(|t| mapped(t, map).is_none_or(|m| target.contains(&m)));
    if !consistent {
        return false;
    }
    let Some(next) = ba.get(map.len()) else {
        return true;
    };
    for i in 0..bb.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        map.insert(next.clone(), bb[i].clone());
        if search(a, ba, bb, target, map, used) {
            return true;
        }
        map.remove(next);
        used[i] = false;
    }
    false
}
