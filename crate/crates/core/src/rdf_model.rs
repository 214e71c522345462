//! In-memory RDF terms, triples and an immutable indexed graph.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::vocab::{rdf, xsd};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid IRI {0:?}: must be non-empty and contain no whitespace")]
    InvalidIri(String),
    #[error("invalid blank node label {0:?}")]
    InvalidBlankNode(String),
    #[error("triple subject must be an IRI or blank node, found {0}")]
    LiteralSubject(Term),
    #[error("triple predicate must be an IRI, found {0}")]
    NonIriPredicate(Term),
}

/// A literal: lexical form, datatype IRI and optional language tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    lexical: String,
    datatype: String,
    language: Option<String>,
}

impl Literal {
    pub fn plain(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: xsd::STRING.to_owned(),
            language: None,
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: datatype.into(),
            language: None,
        }
    }

    /// Language tags are stored lower-cased; the datatype becomes `rdf:langString`.
    pub fn lang(lexical: impl Into<String>, language: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: rdf::LANG_STRING.to_owned(),
            language: Some(language.into().to_ascii_lowercase()),
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> &str {
        &self.datatype
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }
}

/// An RDF node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    BlankNode(String),
    Literal(Literal),
}

impl Term {
    pub fn iri(iri: impl Into<String>) -> Result<Term, ModelError> {
        let iri = iri.into();
        if iri.is_empty() || iri.chars().any(char::is_whitespace) {
            return Err(ModelError::InvalidIri(iri));
        }
        Ok(Term::Iri(iri))
    }

    pub fn blank(label: impl Into<String>) -> Result<Term, ModelError> {
        let label = label.into();
        if label.is_empty() || label.chars().any(char::is_whitespace) {
            return Err(ModelError::InvalidBlankNode(label));
        }
        Ok(Term::BlankNode(label))
    }

    /// Build an IRI term from a constant known to be valid.
    pub(crate) fn named(iri: &str) -> Term {
        Term::Iri(iri.to_owned())
    }

    pub fn literal(lit: Literal) -> Term {
        Term::Literal(lit)
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Term::BlankNode(_))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            _ => None,
        }
    }

    /// True when this term is the IRI `iri`.
    pub fn is(&self, iri: &str) -> bool {
        self.as_iri() == Some(iri)
    }
}

/// N-Triples rendering of the term.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => {
                f.write_str("<")?;
                for c in iri.chars() {
                    match c {
                        '\u{0}'..='\u{20}'
                        | '<'
                        | '>'
                        | '"'
                        | '{'
                        | '}'
                        | '|'
                        | '^'
                        | '`'
                        | '\\' => write!(f, "\\u{:04X}", c as u32)?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str(">")
            }
            Term::BlankNode(label) => write!(f, "_:{label}"),
            Term::Literal(lit) => {
                f.write_str("\"")?;
                for c in lit.lexical.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")?;
                if let Some(lang) = &lit.language {
                    write!(f, "@{lang}")
                } else if lit.datatype != xsd::STRING {
                    write!(f, "^^{}", Term::Iri(lit.datatype.clone()))
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    subject: Term,
    predicate: Term,
    object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Triple, ModelError> {
        if subject.is_literal() {
            return Err(ModelError::LiteralSubject(subject));
        }
        if !predicate.is_iri() {
            return Err(ModelError::NonIriPredicate(predicate));
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> &Term {
        &self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

/// A triple pattern; `None` is a wildcard slot.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: Option<Term>,
    pub predicate: Option<Term>,
    pub object: Option<Term>,
}

impl TriplePattern {
    pub fn new(subject: Option<Term>, predicate: Option<Term>, object: Option<Term>) -> Self {
        TriplePattern {
            subject,
            predicate,
            object,
        }
    }

    pub fn any() -> Self {
        TriplePattern::default()
    }

    pub fn matches(&self, t: &Triple) -> bool {
        fn slot(p: &Option<Term>, v: &Term) -> bool {
            p.as_ref().is_none_or(|p| p == v)
        }
        slot(&self.subject, &t.subject)
            && slot(&self.predicate, &t.predicate)
            && slot(&self.object, &t.object)
    }
}

/// An immutable set of triples with subject, predicate and object indexes.
///
/// Triples are kept sorted so iteration order depends only on the set of
/// triples, never on insertion order.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    triples: Vec<Triple>,
    by_subject: HashMap<Term, Vec<u32>>,
    by_predicate: HashMap<Term, Vec<u32>>,
    by_object: HashMap<Term, Vec<u32>>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    /// Build a graph from already validated triples; duplicates collapse.
    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut triples: Vec<Triple> = triples.into_iter().collect();
        triples.sort_unstable();
        triples.dedup();
        let mut g = Graph {
            triples,
            ..Graph::default()
        };
        for (i, t) in g.triples.iter().enumerate() {
            let i = i as u32;
            g.by_subject.entry(t.subject.clone()).or_default().push(i);
            g.by_predicate
                .entry(t.predicate.clone())
                .or_default()
                .push(i);
            g.by_object.entry(t.object.clone()).or_default().push(i);
        }
        g
    }

    /// Returns a new graph that also contains `t`. Use [`GraphBuilder`] for
    /// bulk loading.
    pub fn insert(&self, t: Triple) -> Graph {
        if self.contains(&t) {
            return self.clone();
        }
        Graph::from_triples(self.triples.iter().cloned().chain(std::iter::once(t)))
    }

    /// Like [`Graph::insert`] but validates raw terms first.
    pub fn insert_terms(&self, s: Term, p: Term, o: Term) -> Result<Graph, ModelError> {
        Ok(self.insert(Triple::new(s, p, o)?))
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.binary_search(t).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Triple> {
        self.triples.iter()
    }

    /// Number of triples the most selective index would scan for `pattern`.
    pub fn estimate(&self, pattern: &TriplePattern) -> usize {
        self.candidates(pattern)
            .map_or(self.triples.len(), |ids| ids.len())
    }

    fn candidates(&self, pattern: &TriplePattern) -> Option<&[u32]> {
        let lookups = [
            (&pattern.subject, &self.by_subject),
            (&pattern.predicate, &self.by_predicate),
            (&pattern.object, &self.by_object),
        ];
        let mut best: Option<&[u32]> = None;
        for (slot, index) in lookups {
            if let Some(term) = slot {
                let ids = index.get(term).map_or(&[][..], Vec::as_slice);
                if best.is_none_or(|b| ids.len() < b.len()) {
                    best = Some(ids);
                }
            }
        }
        best
    }

    /// All triples agreeing with every concrete slot of `pattern`, in graph order.
    pub fn matches<'a>(
        &'a self,
        pattern: &'a TriplePattern,
    ) -> impl Iterator<Item = &'a Triple> + 'a {
        let ids: Box<dyn Iterator<Item = usize> + 'a> = match self.candidates(pattern) {
            Some(ids) => Box::new(ids.iter().map(|&i| i as usize)),
            None => Box::new(0..self.triples.len()),
        };
        ids.map(move |i| &self.triples[i])
            .filter(move |t| pattern.matches(t))
    }

    /// Convenience: `matches` with borrowed slots.
    pub fn find(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> Vec<&Triple> {
        self.matching(&TriplePattern::new(s.cloned(), p.cloned(), o.cloned()))
    }

    /// Collected form of [`Graph::matches`], not tied to the pattern's lifetime.
    pub fn matching(&self, pattern: &TriplePattern) -> Vec<&Triple> {
        let ids: Vec<usize> = match self.candidates(pattern) {
            Some(ids) => ids.iter().map(|&i| i as usize).collect(),
            None => (0..self.triples.len()).collect(),
        };
        ids.into_iter()
            .map(|i| &self.triples[i])
            .filter(|t| pattern.matches(t))
            .collect()
    }

    pub fn with_subject(&self, s: &Term) -> impl Iterator<Item = &Triple> {
        self.index_iter(&self.by_subject, s)
    }

    pub fn with_predicate(&self, p: &Term) -> impl Iterator<Item = &Triple> {
        self.index_iter(&self.by_predicate, p)
    }

    pub fn with_object(&self, o: &Term) -> impl Iterator<Item = &Triple> {
        self.index_iter(&self.by_object, o)
    }

    fn index_iter<'a>(
        &'a self,
        index: &'a HashMap<Term, Vec<u32>>,
        key: &Term,
    ) -> impl Iterator<Item = &'a Triple> + 'a {
        index
            .get(key)
            .map_or(&[][..], Vec::as_slice)
            .iter()
            .map(|&i| &self.triples[i as usize])
    }

    /// Objects of `(s, p, ?)`.
    pub fn objects<'a>(&'a self, s: &Term, p: &'a str) -> impl Iterator<Item = &'a Term> + 'a {
        self.with_subject(s)
            .filter(move |t| t.predicate.is(p))
            .map(|t| &t.object)
    }

    /// Blank node labels in first-appearance order.
    pub fn blank_nodes(&self) -> Vec<&str> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for t in &self.triples {
            for term in [&t.subject, &t.object] {
                if let Term::BlankNode(b) = term {
                    if seen.insert(b.as_str()) {
                        out.push(b.as_str());
                    }
                }
            }
        }
        out
    }

    /// Graph isomorphism up to blank node renaming.
    pub fn is_isomorphic(&self, other: &Graph) -> bool {
        crate::iso::isomorphic(self, other)
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples
    }
}

impl Eq for Graph {}

impl<'a> IntoIterator for &'a Graph {
    type Item = &'a Triple;
    type IntoIter = std::slice::Iter<'a, Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        Graph::from_triples(iter)
    }
}

/// Accumulates triples and builds the indexed [`Graph`] once.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    triples: Vec<Triple>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        GraphBuilder::default()
    }

    pub fn push(&mut self, t: Triple) {
        self.triples.push(t);
    }

    pub fn add(&mut self, s: Term, p: Term, o: Term) -> Result<(), ModelError> {
        self.triples.push(Triple::new(s, p, o)?);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn build(self) -> Graph {
        Graph::from_triples(self.triples)
    }
}
