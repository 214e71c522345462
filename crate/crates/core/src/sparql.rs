//! A SPARQL subset: `SELECT *` over group patterns with UNION, MINUS,
//! FILTER (numeric comparisons) and LIMIT.
//!
//! Evaluation is lazy. Under `LIMIT 1` a union stops as soon as one arm has
//! produced a solution, and the right operand of MINUS or a join is only
//! evaluated once the left operand has produced something.

use std::cell::{Cell, OnceCell};
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::rdf_io::{resolve_iri, PrefixMap};
use crate::rdf_model::{Graph, Literal, Term, Triple, TriplePattern};
use crate::vocab::{rdf, xsd};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Result<Variable, QueryError> {
        let name = name.into();
        if name.is_empty() {
            return Err(QueryError::new(0, 0, "empty variable name"));
        }
        Ok(Variable(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternTerm {
    Var(Variable),
    Term(Term),
}

impl PatternTerm {
    fn var(&self) -> Option<&Variable> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }
}

impl From<Variable> for PatternTerm {
    fn from(v: Variable) -> Self {
        PatternTerm::Var(v)
    }
}

impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        PatternTerm::Term(t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryTriple {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl QueryTriple {
    pub fn new(
        subject: impl Into<PatternTerm>,
        predicate: impl Into<PatternTerm>,
        object: impl Into<PatternTerm>,
    ) -> Self {
        QueryTriple {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }

    fn slots(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.slots().into_iter().filter_map(PatternTerm::var)
    }

    /// Substitute bound variables; unbound ones become wildcards.
    pub fn instantiate(&self, sol: &Solution) -> TriplePattern {
        let slot = |p: &PatternTerm| match p {
            PatternTerm::Term(t) => Some(t.clone()),
            PatternTerm::Var(v) => sol.get(v).cloned(),
        };
        TriplePattern::new(
            slot(&self.subject),
            slot(&self.predicate),
            slot(&self.object),
        )
    }

    /// Extend `sol` so that this pattern maps onto `t`, if consistent.
    pub fn bind(&self, t: &Triple, sol: &Solution) -> Option<Solution> {
        let mut out = sol.clone();
        for (slot, value) in self
            .slots()
            .into_iter()
            .zip([t.subject(), t.predicate(), t.object()])
        {
            match slot {
                PatternTerm::Term(term) => {
                    if term != value {
                        return None;
                    }
                }
                PatternTerm::Var(v) => match out.get(v) {
                    Some(bound) if bound != value => return None,
                    Some(_) => {}
                    None => {
                        out.0.insert(v.clone(), value.clone());
                    }
                },
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CompareOp {
    fn symbol(self) -> &'static str {
        match self {
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Var(Variable),
    Const(Term),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Compare(CompareOp, Operand, Operand),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

/// Marker for a FILTER evaluation error (unbound variable, non-numeric term).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExprError;

impl Expr {
    pub fn compare(op: CompareOp, left: Operand, right: Operand) -> Expr {
        Expr::Compare(op, left, right)
    }

    /// Three-valued evaluation: errors propagate except where `&&`/`||`
    /// can decide from the other operand.
    pub fn eval(&self, sol: &Solution) -> Result<bool, ExprError> {
        match self {
            Expr::Compare(op, l, r) => {
                let value = |o: &Operand| -> Result<f64, ExprError> {
                    let term = match o {
                        Operand::Var(v) => sol.get(v).ok_or(ExprError)?,
                        Operand::Const(t) => t,
                    };
                    eval_numeric(term).ok_or(ExprError)
                };
                let (a, b) = (value(l)?, value(r)?);
                Ok(match op {
                    CompareOp::Lt => a < b,
                    CompareOp::Le => a <= b,
                    CompareOp::Gt => a > b,
                    CompareOp::Ge => a >= b,
                    CompareOp::Eq => a == b,
                    CompareOp::Ne => a != b,
                })
            }
            Expr::And(l, r) => match (l.eval(sol), r.eval(sol)) {
                (Ok(false), _) | (_, Ok(false)) => Ok(false),
                (Ok(true), Ok(true)) => Ok(true),
                _ => Err(ExprError),
            },
            Expr::Or(l, r) => match (l.eval(sol), r.eval(sol)) {
                (Ok(true), _) | (_, Ok(true)) => Ok(true),
                (Ok(false), Ok(false)) => Ok(false),
                _ => Err(ExprError),
            },
            Expr::Not(e) => e.eval(sol).map(|b| !b),
        }
    }

    /// Effective boolean value used by FILTER: errors count as false.
    pub fn holds(&self, sol: &Solution) -> bool {
        self.eval(sol) == Ok(true)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let operand = |o: &Operand| match o {
            Operand::Var(v) => v.to_string(),
            Operand::Const(Term::Literal(l))
                if eval_numeric(&Term::Literal(l.clone())).is_some() =>
            {
                l.lexical().to_owned()
            }
            Operand::Const(t) => t.to_string(),
        };
        match self {
            Expr::Compare(op, l, r) => write!(f, "{}{}{}", operand(l), op.symbol(), operand(r)),
            Expr::And(l, r) => write!(f, "({l} && {r})"),
            Expr::Or(l, r) => write!(f, "({l} || {r})"),
            Expr::Not(e) => write!(f, "!({e})"),
        }
    }
}

/// SPARQL algebra for the supported fragment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Algebra {
    Bgp(Vec<QueryTriple>),
    Join(Box<Algebra>, Box<Algebra>),
    Union(Box<Algebra>, Box<Algebra>),
    Minus(Box<Algebra>, Box<Algebra>),
    Filter(Expr, Box<Algebra>),
    Limit(usize, Box<Algebra>),
    SelectAll(Box<Algebra>),
}

impl Algebra {
    pub fn join(l: Algebra, r: Algebra) -> Algebra {
        Algebra::Join(Box::new(l), Box::new(r))
    }

    pub fn union(l: Algebra, r: Algebra) -> Algebra {
        Algebra::Union(Box::new(l), Box::new(r))
    }

    pub fn minus(l: Algebra, r: Algebra) -> Algebra {
        Algebra::Minus(Box::new(l), Box::new(r))
    }

    pub fn filter(e: Expr, inner: Algebra) -> Algebra {
        Algebra::Filter(e, Box::new(inner))
    }

    /// Arms of a left-nested union chain, in order. A non-union node is a
    /// chain of one.
    pub fn union_arms(&self) -> Vec<&Algebra> {
        match self {
            Algebra::Union(l, r) => {
                let mut arms = l.union_arms();
                arms.extend(r.union_arms());
                arms
            }
            other => vec![other],
        }
    }

    /// Strip `SelectAll` and `Limit` wrappers.
    pub fn body(&self) -> &Algebra {
        match self {
            Algebra::SelectAll(inner) | Algebra::Limit(_, inner) => inner.body(),
            other => other,
        }
    }

    /// Triple patterns whose matches contribute bindings to the output,
    /// i.e. those not under the right operand of a MINUS.
    pub fn positive_patterns(&self) -> Vec<&QueryTriple> {
        match self {
            Algebra::Bgp(ps) => ps.iter().collect(),
            Algebra::Join(l, r) | Algebra::Union(l, r) => {
                let mut v = l.positive_patterns();
                v.extend(r.positive_patterns());
                v
            }
            Algebra::Minus(l, _) => l.positive_patterns(),
            Algebra::Filter(_, inner) | Algebra::Limit(_, inner) | Algebra::SelectAll(inner) => {
                inner.positive_patterns()
            }
        }
    }

    /// Variables that may be bound by solutions of this algebra, in first
    /// occurrence order.
    pub fn variables(&self) -> Vec<Variable> {
        let mut out: Vec<Variable> = Vec::new();
        for p in self.positive_patterns() {
            for v in p.variables() {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }
}

/// A partial mapping from variables to terms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Solution(BTreeMap<Variable, Term>);

impl Solution {
    pub fn new() -> Self {
        Solution::default()
    }

    pub fn with(mut self, var: &str, term: Term) -> Self {
        self.0.insert(Variable(var.to_owned()), term);
        self
    }

    pub fn get(&self, v: &Variable) -> Option<&Term> {
        self.0.get(v)
    }

    pub fn get_name(&self, name: &str) -> Option<&Term> {
        self.0.get(&Variable(name.to_owned()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Term)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn shares_variable(&self, other: &Solution) -> bool {
        self.0.keys().any(|k| other.0.contains_key(k))
    }

    fn merge(&self, other: &Solution) -> Solution {
        let mut out = self.clone();
        for (k, v) in &other.0 {
            out.0.entry(k.clone()).or_insert_with(|| v.clone());
        }
        out
    }
}

pub type SolutionSequence = Vec<Solution>;

/// True iff every variable bound in both maps to the same term.
pub fn compatible(a: &Solution, b: &Solution) -> bool {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small
        .0
        .iter()
        .all(|(k, v)| large.0.get(k).is_none_or(|w| w == v))
}

const INTEGER_TYPES: &[&str] = &[
    "integer",
    "nonNegativeInteger",
    "positiveInteger",
    "nonPositiveInteger",
    "negativeInteger",
    "long",
    "int",
    "short",
    "byte",
    "unsignedLong",
    "unsignedInt",
    "unsignedShort",
    "unsignedByte",
];

fn is_integer_lexical(s: &str) -> bool {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

fn is_decimal_lexical(s: &str) -> bool {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    (!int.is_empty() || !frac.is_empty())
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.bytes().all(|b| b.is_ascii_digit())
}

/// Numeric value of a literal with an XSD numeric datatype, or of a plain
/// digit-only string literal.
pub fn eval_numeric(term: &Term) -> Option<f64> {
    let lit = term.as_literal()?;
    let lex = lit.lexical().trim();
    let dt = lit.datatype();
    if dt == xsd::STRING {
        return (!lex.is_empty() && lex.bytes().all(|b| b.is_ascii_digit()))
            .then(|| lex.parse().ok())
            .flatten();
    }
    let local = dt.strip_prefix(xsd::NS)?;
    match local {
        l if INTEGER_TYPES.contains(&l) => {
            is_integer_lexical(lex).then(|| lex.parse().ok()).flatten()
        }
        "decimal" => is_decimal_lexical(lex).then(|| lex.parse().ok()).flatten(),
        "double" | "float" => match lex {
            "INF" | "+INF" => Some(f64::INFINITY),
            "-INF" => Some(f64::NEG_INFINITY),
            "NaN" => Some(f64::NAN),
            _ if lex
                .bytes()
                .all(|b| b.is_ascii_digit() || b"+-.eE".contains(&b)) =>
            {
                lex.parse().ok()
            }
            _ => None,
        },
        _ => None,
    }
}

type Solutions<'a> = Box<dyn Iterator<Item = Solution> + 'a>;

/// Defers building an iterator until it is first polled.
fn lazy<'a, I, F>(f: F) -> Solutions<'a>
where
    I: Iterator<Item = Solution> + 'a,
    F: FnOnce() -> I + 'a,
{
    let mut f = Some(f);
    Box::new(std::iter::once(()).flat_map(move |_| (f.take().expect("polled once"))()))
}

/// Evaluates algebra over one graph, counting index probes.
pub struct Evaluator<'g> {
    graph: &'g Graph,
    probes: Cell<usize>,
}

impl<'g> Evaluator<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        Evaluator {
            graph,
            probes: Cell::new(0),
        }
    }

    /// Index lookups performed so far (selectivity estimates and matches).
    pub fn probes(&self) -> usize {
        self.probes.get()
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn solutions<'a>(&'a self, algebra: &'a Algebra) -> Solutions<'a>
    where
        'g: 'a,
    {
        match algebra {
            Algebra::Bgp(patterns) => lazy(move || {
                let remaining: Vec<usize> = (0..patterns.len()).collect();
                self.bgp(patterns, remaining, Solution::new())
            }),
            Algebra::Join(l, r) => {
                let right: OnceCell<Vec<Solution>> = OnceCell::new();
                Box::new(self.solutions(l).flat_map(move |a| {
                    right
                        .get_or_init(|| self.solutions(r).collect())
                        .iter()
                        .filter(|b| compatible(&a, b))
                        .map(|b| a.merge(b))
                        .collect::<Vec<_>>()
                }))
            }
            Algebra::Union(l, r) => {
                Box::new(self.solutions(l).chain(lazy(move || self.solutions(r))))
            }
            Algebra::Minus(l, r) => {
                let right: OnceCell<Vec<Solution>> = OnceCell::new();
                Box::new(self.solutions(l).filter(move |a| {
                    !right
                        .get_or_init(|| self.solutions(r).collect())
                        .iter()
                        .any(|b| a.shares_variable(b) && compatible(a, b))
                }))
            }
            Algebra::Filter(expr, inner) => {
                Box::new(self.solutions(inner).filter(move |s| expr.holds(s)))
            }
            Algebra::Limit(n, inner) => Box::new(self.solutions(inner).take(*n)),
            Algebra::SelectAll(inner) => self.solutions(inner),
        }
    }

    fn probe_estimate(&self, tp: &TriplePattern) -> usize {
        self.probes.set(self.probes.get() + 1);
        self.graph.estimate(tp)
    }

    fn bgp<'a>(
        &'a self,
        patterns: &'a [QueryTriple],
        remaining: Vec<usize>,
        sol: Solution,
    ) -> Solutions<'a>
    where
        'g: 'a,
    {
        if remaining.is_empty() {
            return Box::new(std::iter::once(sol));
        }
        // most concrete slots first, then smallest index bucket
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .map(|(pos, &i)| {
                let tp = patterns[i].instantiate(&sol);
                let concrete = [&tp.subject, &tp.predicate, &tp.object]
                    .iter()
                    .filter(|s| s.is_some())
                    .count();
                (pos, (3 - concrete, self.probe_estimate(&tp)))
            })
            .min_by_key(|&(_, key)| key)
            .expect("non-empty");
        let mut rest = remaining;
        let chosen = rest.remove(pos);
        let pattern = &patterns[chosen];
        let tp = pattern.instantiate(&sol);
        self.probes.set(self.probes.get() + 1);
        let hits: Vec<&'g Triple> = self.graph.matching(&tp);
        Box::new(
            hits.into_iter()
                .filter_map(move |t| pattern.bind(t, &sol))
                .flat_map(move |s| self.bgp(patterns, rest.clone(), s)),
        )
    }
}

/// Evaluate `algebra` against `graph`, materializing all solutions.
pub fn eval(graph: &Graph, algebra: &Algebra) -> SolutionSequence {
    Evaluator::new(graph).solutions(algebra).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct QueryError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    /// Name of the unsupported SPARQL feature, when that is the cause.
    pub unsupported: Option<String>,
}

impl QueryError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        QueryError {
            line,
            column,
            message: message.into(),
            unsupported: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Var(String),
    Iri(String),
    PName(String, String),
    Str(String),
    Number(String),
    Word(String),
    LangTag(String),
    DtMark,
    Punct(&'static str),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

const PUNCTS: &[&str] = &[
    "&&", "||", "<=", ">=", "!=", "{", "}", "(", ")", ".", ";", ",", "*", "<", ">", "=", "!",
];

fn lex(text: &str) -> Result<Vec<Spanned>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    let is_name = |c: char| c.is_alphanumeric() || c == '_' || c == '-';
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let push = |out: &mut Vec<Spanned>, tok| {
            out.push(Spanned {
                tok,
                line: l0,
                column: c0,
            })
        };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c == '?' || c == '$' {
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            if j == i + 1 {
                return Err(QueryError::new(l0, c0, "empty variable name"));
            }
            push(&mut out, Tok::Var(chars[i + 1..j].iter().collect()));
            {
                let n = j - i;
                advance(&mut i, &mut line, &mut col, n);
            }
            continue;
        }
        if c == '<' {
            // IRI reference if it closes before whitespace, else an operator
            let mut j = i + 1;
            while j < chars.len() && !chars[j].is_whitespace() && chars[j] != '>' && chars[j] != '<'
            {
                j += 1;
            }
            if j < chars.len() && chars[j] == '>' && chars.get(i + 1) != Some(&'=') {
                push(&mut out, Tok::Iri(chars[i + 1..j].iter().collect()));
                {
                    let n = j + 1 - i;
                    advance(&mut i, &mut line, &mut col, n);
                }
                continue;
            }
        }
        if c == '"' || c == '\'' {
            let mut j = i + 1;
            let mut s = String::new();
            loop {
                match chars.get(j) {
                    None | Some('\n') => {
                        return Err(QueryError::new(l0, c0, "unterminated string"))
                    }
                    Some('\\') => {
                        match chars.get(j + 1) {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(&e) => s.push(e),
                            None => return Err(QueryError::new(l0, c0, "unterminated string")),
                        }
                        j += 2;
                    }
                    Some(&q) if q == c => break,
                    Some(&o) => {
                        s.push(o);
                        j += 1;
                    }
                }
            }
            push(&mut out, Tok::Str(s));
            {
                let n = j + 1 - i;
                advance(&mut i, &mut line, &mut col, n);
            }
            continue;
        }
        if c == '@' {
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '-') {
                j += 1;
            }
            push(&mut out, Tok::LangTag(chars[i + 1..j].iter().collect()));
            {
                let n = j - i;
                advance(&mut i, &mut line, &mut col, n);
            }
            continue;
        }
        if c == '^' && chars.get(i + 1) == Some(&'^') {
            push(&mut out, Tok::DtMark);
            advance(&mut i, &mut line, &mut col, 2);
            continue;
        }
        let starts_number = c.is_ascii_digit()
            || ((c == '+' || c == '-' || c == '.')
                && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()));
        if starts_number {
            let mut j = i + 1;
            while j < chars.len()
                && (chars[j].is_ascii_digit()
                    || (chars[j] == '.' && chars.get(j + 1).is_some_and(|d| d.is_ascii_digit()))
                    || ((chars[j] == 'e' || chars[j] == 'E')
                        && chars
                            .get(j + 1)
                            .is_some_and(|d| d.is_ascii_digit() || *d == '-' || *d == '+'))
                    || ((chars[j] == '-' || chars[j] == '+') && matches!(chars[j - 1], 'e' | 'E')))
            {
                j += 1;
            }
            push(&mut out, Tok::Number(chars[i..j].iter().collect()));
            {
                let n = j - i;
                advance(&mut i, &mut line, &mut col, n);
            }
            continue;
        }
        if is_name(c) || c == ':' {
            let mut j = i;
            while j < chars.len()
                && (is_name(chars[j])
                    || chars[j] == ':'
                    || (chars[j] == '.' && chars.get(j + 1).is_some_and(|n| is_name(*n))))
            {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            let tok = match word.split_once(':') {
                Some((p, l)) => Tok::PName(p.to_owned(), l.to_owned()),
                None => Tok::Word(word),
            };
            push(&mut out, tok);
            {
                let n = j - i;
                advance(&mut i, &mut line, &mut col, n);
            }
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                push(&mut out, Tok::Punct(p));
                advance(&mut i, &mut line, &mut col, p.len());
            }
            None => {
                return Err(QueryError::new(
                    l0,
                    c0,
                    format!("unexpected character {c:?}"),
                ))
            }
        }
    }
    Ok(out)
}

const UNSUPPORTED: &[&str] = &[
    "OPTIONAL",
    "DISTINCT",
    "REDUCED",
    "GROUP",
    "HAVING",
    "ORDER",
    "OFFSET",
    "ASK",
    "DESCRIBE",
    "CONSTRUCT",
    "SERVICE",
    "GRAPH",
    "BIND",
    "VALUES",
    "FROM",
    "NAMED",
    "COUNT",
    "SUM",
    "MIN",
    "MAX",
    "AVG",
    "SAMPLE",
    "GROUP_CONCAT",
    "EXISTS",
    "NOT",
    "IN",
    "INSERT",
    "DELETE",
    "LOAD",
    "CLEAR",
];

struct QueryParser {
    toks: Vec<Spanned>,
    pos: usize,
    prefixes: PrefixMap,
    end: (usize, usize),
}

enum Element {
    Triples(Vec<QueryTriple>),
    Group(Algebra),
    Minus(Algebra),
    Filter(Expr),
}

impl QueryParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map_or(self.end, |s| (s.line, s.column))
    }

    fn err(&self, msg: impl Into<String>) -> QueryError {
        let (l, c) = self.here();
        QueryError::new(l, c, msg)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn is_word(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), QueryError> {
        if self.is_punct(p) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{p}'")))
        }
    }

    fn check_unsupported(&self) -> Result<(), QueryError> {
        if let Some(Tok::Word(w)) = self.peek() {
            let upper = w.to_ascii_uppercase();
            if UNSUPPORTED.contains(&upper.as_str()) {
                let (l, c) = self.here();
                return Err(QueryError {
                    line: l,
                    column: c,
                    message: format!("unsupported SPARQL feature: {upper}"),
                    unsupported: Some(upper),
                });
            }
        }
        Ok(())
    }

    fn unsupported(&self, feature: &str) -> QueryError {
        let (l, c) = self.here();
        QueryError {
            line: l,
            column: c,
            message: format!("unsupported SPARQL feature: {feature}"),
            unsupported: Some(feature.to_owned()),
        }
    }

    fn query(&mut self) -> Result<Algebra, QueryError> {
        loop {
            if self.is_word("PREFIX") {
                self.pos += 1;
                let prefix = match self.next() {
                    Some(Tok::PName(p, l)) if l.is_empty() => p,
                    _ => return Err(self.err("expected prefix name after PREFIX")),
                };
                let iri = match self.next() {
                    Some(Tok::Iri(i)) => self.resolve(&i)?,
                    _ => return Err(self.err("expected IRI in PREFIX declaration")),
                };
                self.prefixes.insert(prefix, iri);
            } else if self.is_word("BASE") {
                self.pos += 1;
                match self.next() {
                    Some(Tok::Iri(i)) => {
                        let base = self.resolve(&i)?;
                        self.prefixes.set_base(Some(base));
                    }
                    _ => return Err(self.err("expected IRI after BASE")),
                }
            } else {
                break;
            }
        }
        self.check_unsupported()?;
        if !self.is_word("SELECT") {
            return Err(self.err("expected SELECT"));
        }
        self.pos += 1;
        self.check_unsupported()?;
        if !self.is_punct("*") {
            return Err(self.unsupported("SELECT projection (only SELECT * is supported)"));
        }
        self.pos += 1;
        self.check_unsupported()?;
        if self.is_word("WHERE") {
            self.pos += 1;
        }
        let body = self.group()?;
        self.check_unsupported()?;
        let mut algebra = body;
        if self.is_word("LIMIT") {
            self.pos += 1;
            let n = match self.next() {
                Some(Tok::Number(n)) => n
                    .parse::<usize>()
                    .map_err(|_| self.err("LIMIT expects a non-negative integer"))?,
                _ => return Err(self.err("LIMIT expects a non-negative integer")),
            };
            algebra = Algebra::Limit(n, Box::new(algebra));
        }
        self.check_unsupported()?;
        if self.peek().is_some() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(Algebra::SelectAll(Box::new(algebra)))
    }

    fn resolve(&self, iri: &str) -> Result<String, QueryError> {
        resolve_iri(self.prefixes.base(), iri).map_err(|m| self.err(m))
    }

    fn group(&mut self) -> Result<Algebra, QueryError> {
        self.expect_punct("{")?;
        let mut elements = Vec::new();
        loop {
            self.check_unsupported()?;
            if self.is_punct("}") {
                self.pos += 1;
                break;
            }
            if self.is_punct(".") {
                self.pos += 1;
                continue;
            }
            if self.is_punct("{") {
                let mut alg = self.group()?;
                while self.is_word("UNION") {
                    self.pos += 1;
                    let right = self.group()?;
                    alg = Algebra::union(alg, right);
                }
                elements.push(Element::Group(alg));
            } else if self.is_word("MINUS") {
                self.pos += 1;
                elements.push(Element::Minus(self.group()?));
            } else if self.is_word("FILTER") {
                self.pos += 1;
                if !self.is_punct("(") {
                    return Err(self.unsupported("FILTER function call"));
                }
                self.pos += 1;
                let e = self.expr()?;
                self.expect_punct(")")?;
                elements.push(Element::Filter(e));
            } else if self.peek().is_none() {
                return Err(self.err("unexpected end of query, expected '}'"));
            } else {
                let triples = self.triples_block()?;
                match elements.last_mut() {
                    Some(Element::Triples(prev)) => prev.extend(triples),
                    _ => elements.push(Element::Triples(triples)),
                }
            }
        }
        let mut filters = Vec::new();
        let mut g: Option<Algebra> = None;
        for el in elements {
            match el {
                Element::Triples(ts) => {
                    g = Some(match g {
                        None => Algebra::Bgp(ts),
                        Some(Algebra::Bgp(mut prev)) => {
                            prev.extend(ts);
                            Algebra::Bgp(prev)
                        }
                        Some(prev) => Algebra::join(prev, Algebra::Bgp(ts)),
                    })
                }
                Element::Group(a) => {
                    g = Some(match g {
                        None => a,
                        Some(prev) => Algebra::join(prev, a),
                    })
                }
                Element::Minus(a) => {
                    g = Some(Algebra::minus(g.unwrap_or(Algebra::Bgp(Vec::new())), a));
                }
                Element::Filter(e) => filters.push(e),
            }
        }
        let mut g = g.unwrap_or(Algebra::Bgp(Vec::new()));
        if let Some(cond) = filters
            .into_iter()
            .reduce(|a, b| Expr::And(Box::new(a), Box::new(b)))
        {
            g = Algebra::filter(cond, g);
        }
        Ok(g)
    }

    fn triples_block(&mut self) -> Result<Vec<QueryTriple>, QueryError> {
        let mut out = Vec::new();
        let subject = self.term(false)?;
        loop {
            let predicate = if self.is_word("a") {
                self.pos += 1;
                PatternTerm::Term(Term::named(rdf::TYPE))
            } else {
                let p = self.term(false)?;
                if let PatternTerm::Term(t) = &p {
                    if !t.is_iri() {
                        return Err(self.err("predicate must be an IRI or variable"));
                    }
                }
                p
            };
            loop {
                let object = self.term(true)?;
                out.push(QueryTriple::new(subject.clone(), predicate.clone(), object));
                if self.is_punct(",") {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if self.is_punct(";") {
                while self.is_punct(";") {
                    self.pos += 1;
                }
                if self.is_punct(".") || self.is_punct("}") {
                    break;
                }
            } else {
                break;
            }
        }
        Ok(out)
    }

    fn term(&mut self, literal_ok: bool) -> Result<PatternTerm, QueryError> {
        self.check_unsupported()?;
        let (l, c) = self.here();
        let t = match self.next() {
            Some(Tok::Var(v)) => return Ok(PatternTerm::Var(Variable(v))),
            Some(Tok::Iri(i)) => Term::Iri(self.resolve(&i)?),
            Some(Tok::PName(p, local)) => match self.prefixes.expand(&p, &local) {
                Some(iri) => Term::Iri(iri),
                None => return Err(QueryError::new(l, c, format!("undeclared prefix '{p}:'"))),
            },
            Some(Tok::Str(s)) if literal_ok => Term::Literal(self.literal_suffix(s)?),
            Some(Tok::Number(n)) if literal_ok => Term::Literal(number_literal(&n)),
            Some(Tok::Word(w)) if literal_ok && (w == "true" || w == "false") => {
                Term::Literal(Literal::typed(w, xsd::BOOLEAN))
            }
            Some(Tok::Punct("[")) | Some(Tok::Punct("(")) => {
                return Err(QueryError {
                    line: l,
                    column: c,
                    message: "unsupported SPARQL feature: blank node or collection syntax".into(),
                    unsupported: Some("blank node syntax".into()),
                })
            }
            Some(other) => {
                return Err(QueryError::new(l, c, format!("unexpected token {other:?}")))
            }
            None => return Err(QueryError::new(l, c, "unexpected end of query")),
        };
        Ok(PatternTerm::Term(t))
    }

    fn literal_suffix(&mut self, lexical: String) -> Result<Literal, QueryError> {
        match self.peek() {
            Some(Tok::LangTag(tag)) => {
                let tag = tag.clone();
                self.pos += 1;
                Ok(Literal::lang(lexical, tag))
            }
            Some(Tok::DtMark) => {
                self.pos += 1;
                match self.term(false)? {
                    PatternTerm::Term(Term::Iri(dt)) => Ok(Literal::typed(lexical, dt)),
                    _ => Err(self.err("expected datatype IRI")),
                }
            }
            _ => Ok(Literal::plain(lexical)),
        }
    }

    fn expr(&mut self) -> Result<Expr, QueryError> {
        let mut left = self.and_expr()?;
        while self.is_punct("||") {
            self.pos += 1;
            let right = self.and_expr()?;
            left = Expr::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr, QueryError> {
        let mut left = self.unary()?;
        while self.is_punct("&&") {
            self.pos += 1;
            let right = self.unary()?;
            left = Expr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr, QueryError> {
        if self.is_punct("!") {
            self.pos += 1;
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.is_punct("(") {
            self.pos += 1;
            let e = self.expr()?;
            self.expect_punct(")")?;
            return Ok(e);
        }
        let left = self.operand()?;
        let op = match self.next() {
            Some(Tok::Punct("<")) => CompareOp::Lt,
            Some(Tok::Punct("<=")) => CompareOp::Le,
            Some(Tok::Punct(">")) => CompareOp::Gt,
            Some(Tok::Punct(">=")) => CompareOp::Ge,
            Some(Tok::Punct("=")) => CompareOp::Eq,
            Some(Tok::Punct("!=")) => CompareOp::Ne,
            _ => {
                self.pos -= 1;
                return Err(self.unsupported("FILTER expression other than a numeric comparison"));
            }
        };
        let right = self.operand()?;
        Ok(Expr::Compare(op, left, right))
    }

    fn operand(&mut self) -> Result<Operand, QueryError> {
        if let Some(Tok::Word(_)) = self.peek() {
            if matches!(
                self.toks.get(self.pos + 1).map(|s| &s.tok),
                Some(Tok::Punct("("))
            ) {
                return Err(self.unsupported("FILTER function call"));
            }
        }
        Ok(match self.term(true)? {
            PatternTerm::Var(v) => Operand::Var(v),
            PatternTerm::Term(t) => Operand::Const(t),
        })
    }
}

fn number_literal(n: &str) -> Literal {
    let dt = if n.contains(['e', 'E']) {
        xsd::DOUBLE
    } else if n.contains('.') {
        xsd::DECIMAL
    } else {
        xsd::INTEGER
    };
    Literal::typed(n, dt)
}

/// Parse a query in the supported fragment into algebra.
pub fn parse_query(text: &str) -> Result<Algebra, QueryError> {
    let toks = lex(text)?;
    let end = text
        .lines()
        .enumerate()
        .last()
        .map_or((1, 1), |(i, l)| (i + 1, l.chars().count() + 1));
    let mut p = QueryParser {
        toks,
        pos: 0,
        prefixes: PrefixMap::new(),
        end,
    };
    p.query()
}

/// Column order for tabular output: algebra variables, then any extras.
pub fn solution_columns(algebra: &Algebra, solutions: &[Solution]) -> Vec<Variable> {
    let mut cols = algebra.variables();
    let mut extra: HashMap<Variable, ()> = HashMap::new();
    for s in solutions {
        for (v, _) in s.iter() {
            if !cols.contains(v) {
                extra.insert(v.clone(), ());
            }
        }
    }
    let mut extra: Vec<Variable> = extra.into_keys().collect();
    extra.sort();
    cols.extend(extra);
    cols
}
