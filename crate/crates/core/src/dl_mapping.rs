//! Description logic abstract syntax, extraction of DL axioms from OWL
//! triples, DL-syntax rendering and expressivity letters.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::rdf_io::PrefixMap;
use crate::rdf_model::{Graph, Term, Triple};
use crate::vocab::{owl, rdf, rdfs, xsd};

/// Concept expressions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Concept {
    Atomic(Term),
    Top,
    Bottom,
    Not(Box<Concept>),
    And(Vec<Concept>),
    Or(Vec<Concept>),
    Nominal(Vec<Term>),
    Exists(Role, Box<Concept>),
    Forall(Role, Box<Concept>),
    ExistsSelf(Role),
    HasValue(Role, Term),
    AtMost(u64, Role, Option<Box<Concept>>),
    AtLeast(u64, Role, Option<Box<Concept>>),
}

impl Concept {
    pub fn atomic(t: Term) -> Concept {
        Concept::Atomic(t)
    }

    pub fn complement(c: Concept) -> Concept {
        Concept::Not(Box::new(c))
    }

    pub fn exists(r: Role, c: Concept) -> Concept {
        Concept::Exists(r, Box::new(c))
    }

    pub fn forall(r: Role, c: Concept) -> Concept {
        Concept::Forall(r, Box::new(c))
    }

    /// n-ary intersection; collapses to the single member or ⊤.
    pub fn and(mut members: Vec<Concept>) -> Concept {
        match members.len() {
            0 => Concept::Top,
            1 => members.pop().expect("one member"),
            _ => Concept::And(members),
        }
    }

    /// n-ary union; collapses to the single member or ⊥.
    pub fn or(mut members: Vec<Concept>) -> Concept {
        match members.len() {
            0 => Concept::Bottom,
            1 => members.pop().expect("one member"),
            _ => Concept::Or(members),
        }
    }

    fn is_compound(&self) -> bool {
        matches!(self, Concept::And(_) | Concept::Or(_))
    }
}

/// Role expressions. Only `Atomic`, `Universal`, `Empty`, `Inverse` and
/// `Chain` are produced by extraction; the rest complete the DL<∀₀^π>
/// role grammar.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Atomic(Term),
    Universal,
    Empty,
    Inverse(Box<Role>),
    Not(Box<Role>),
    And(Box<Role>, Box<Role>),
    Or(Box<Role>, Box<Role>),
    Chain(Vec<Role>),
    TransClosure(Box<Role>),
    ReflTransClosure(Box<Role>),
    Restrict(Box<Role>, Option<Box<Concept>>, Option<Box<Concept>>),
    Id(Box<Concept>),
    Sym(Box<Role>),
}

impl Role {
    pub fn atomic(t: Term) -> Role {
        Role::Atomic(t)
    }

    pub fn inverse(r: Role) -> Role {
        Role::Inverse(Box::new(r))
    }

    fn is_simple(&self) -> bool {
        matches!(self, Role::Atomic(_) | Role::Universal | Role::Empty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PropertyKind {
    Refl,
    Irrefl,
    Sym,
    Asym,
    Trans,
    Fn,
    InvFn,
    Disj,
}

impl PropertyKind {
    fn name(self) -> &'static str {
        match self {
            PropertyKind::Refl => "Refl",
            PropertyKind::Irrefl => "Irrefl",
            PropertyKind::Sym => "Sym",
            PropertyKind::Asym => "Asym",
            PropertyKind::Trans => "Trans",
            PropertyKind::Fn => "Fn",
            PropertyKind::InvFn => "InvFn",
            PropertyKind::Disj => "Disj",
        }
    }

    fn from_type(iri: &str) -> Option<PropertyKind> {
        Some(match iri {
            owl::REFLEXIVE_PROPERTY => PropertyKind::Refl,
            owl::IRREFLEXIVE_PROPERTY => PropertyKind::Irrefl,
            owl::SYMMETRIC_PROPERTY => PropertyKind::Sym,
            owl::ASYMMETRIC_PROPERTY => PropertyKind::Asym,
            owl::TRANSITIVE_PROPERTY => PropertyKind::Trans,
            owl::FUNCTIONAL_PROPERTY => PropertyKind::Fn,
            owl::INVERSE_FUNCTIONAL_PROPERTY => PropertyKind::InvFn,
            _ => return None,
        })
    }
}

/// Axioms and assertions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    ConceptEquiv(Concept, Concept),
    ConceptSub(Concept, Concept),
    RoleEquiv(Role, Role),
    RoleSub(Role, Role),
    ChainSub(Vec<Role>, Role),
    ConceptAssert(Concept, Term),
    NegConceptAssert(Concept, Term),
    RoleAssert(Role, Term, Term),
    NegRoleAssert(Role, Term, Term),
    SameIndividual(Term, Term),
    DifferentIndividuals(Term, Term),
    /// `Disj` carries two roles, every other kind one.
    RoleProperty(PropertyKind, Vec<Role>),
}

impl Axiom {
    /// Short kind name used for inventory counts.
    pub fn kind(&self) -> &'static str {
        match self {
            Axiom::ConceptEquiv(..) => "ConceptEquiv",
            Axiom::ConceptSub(..) => "ConceptSub",
            Axiom::RoleEquiv(..) => "RoleEquiv",
            Axiom::RoleSub(..) => "RoleSub",
            Axiom::ChainSub(..) => "ChainSub",
            Axiom::ConceptAssert(..) => "ConceptAssert",
            Axiom::NegConceptAssert(..) => "NegConceptAssert",
            Axiom::RoleAssert(..) => "RoleAssert",
            Axiom::NegRoleAssert(..) => "NegRoleAssert",
            Axiom::SameIndividual(..) => "SameIndividual",
            Axiom::DifferentIndividuals(..) => "DifferentIndividuals",
            Axiom::RoleProperty(..) => "RoleProperty",
        }
    }
}

/// Expressivity feature tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Letter {
    AL,
    C,
    S,
    H,
    O,
    I,
    F,
    N,
    Q,
    R,
    D,
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Conventional name for a letter set, e.g. `ALC`, `SHOIN(D)`.
pub fn dl_name(letters: &BTreeSet<Letter>) -> String {
    let mut out = String::new();
    if letters.contains(&Letter::S) {
        out.push('S');
    } else {
        out.push_str("AL");
        if letters.contains(&Letter::C) {
            out.push('C');
        }
    }
    for l in [
        Letter::H,
        Letter::O,
        Letter::I,
        Letter::F,
        Letter::N,
        Letter::Q,
        Letter::R,
    ] {
        if letters.contains(&l) {
            out.push_str(&l.to_string());
        }
    }
    if letters.contains(&Letter::D) {
        out.push_str("(D)");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractionError {
    #[error("malformed RDF list starting at {head}: {reason}")]
    MalformedList { head: Term, reason: String },
}

/// Output of [`extract_axioms`]. Every input triple lands in exactly one of
/// `consumed`, `scaffolding` or `unmapped`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractionReport {
    pub axioms: Vec<Axiom>,
    pub consumed: Vec<Triple>,
    pub scaffolding: Vec<Triple>,
    pub unmapped: Vec<Triple>,
    pub letters: BTreeSet<Letter>,
}

impl ExtractionReport {
    pub fn axiom_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut counts = BTreeMap::new();
        for a in &self.axioms {
            *counts.entry(a.kind()).or_insert(0) += 1;
        }
        counts
    }
}

const DECLARATION_TYPES: &[&str] = &[
    owl::CLASS,
    owl::RESTRICTION,
    owl::OBJECT_PROPERTY,
    owl::DATATYPE_PROPERTY,
    owl::ANNOTATION_PROPERTY,
    owl::NAMED_INDIVIDUAL,
    owl::ONTOLOGY,
    owl::ALL_DISJOINT_CLASSES,
    owl::ALL_DISJOINT_PROPERTIES,
    owl::ALL_DIFFERENT,
    rdfs::CLASS,
    rdfs::DATATYPE,
    rdf::PROPERTY,
    rdf::LIST,
];

const CLASS_KEYS: &[&str] = &[
    owl::INTERSECTION_OF,
    owl::UNION_OF,
    owl::COMPLEMENT_OF,
    owl::ONE_OF,
];

const RESTRICTION_KEYS: &[&str] = &[
    owl::SOME_VALUES_FROM,
    owl::ALL_VALUES_FROM,
    owl::HAS_VALUE,
    owl::HAS_SELF,
    owl::MIN_CARDINALITY,
    owl::MAX_CARDINALITY,
    owl::CARDINALITY,
    owl::MIN_QUALIFIED_CARDINALITY,
    owl::MAX_QUALIFIED_CARDINALITY,
    owl::QUALIFIED_CARDINALITY,
];

const ANNOTATIONS: &[&str] = &[
    rdfs::LABEL,
    rdfs::COMMENT,
    rdfs::SEE_ALSO,
    rdfs::IS_DEFINED_BY,
    owl::VERSION_INFO,
];

fn in_reserved_namespace(iri: &str) -> bool {
    [rdf::NS, rdfs::NS, owl::NS, xsd::NS]
        .iter()
        .any(|ns| iri.starts_with(ns))
}

/// Axioms produced by one rule and the triples it consumed.
type Mapped<'g> = (Vec<Axiom>, Vec<&'g Triple>);

enum Resolve {
    Malformed,
    Fatal(ExtractionError),
}

impl From<ExtractionError> for Resolve {
    fn from(e: ExtractionError) -> Self {
        Resolve::Fatal(e)
    }
}

struct Extractor<'g> {
    g: &'g Graph,
    annotation_props: HashSet<&'g Term>,
}

/// Triples used while resolving one axiom.
#[derive(Default)]
struct Used<'g> {
    scaffold: Vec<&'g Triple>,
}

impl<'g> Extractor<'g> {
    fn list(&self, head: &'g Term, used: &mut Used<'g>) -> Result<Vec<&'g Term>, ExtractionError> {
        let mut items = Vec::new();
        let mut seen = HashSet::new();
        let mut node = head;
        let bad = |reason: &str| ExtractionError::MalformedList {
            head: head.clone(),
            reason: reason.to_owned(),
        };
        while !node.is(rdf::NIL) {
            if !seen.insert(node) {
                return Err(bad("rdf:rest chain revisits a node"));
            }
            let firsts: Vec<&Triple> = self
                .g
                .with_subject(node)
                .filter(|t| t.predicate().is(rdf::FIRST))
                .collect();
            let rests: Vec<&Triple> = self
                .g
                .with_subject(node)
                .filter(|t| t.predicate().is(rdf::REST))
                .collect();
            match (firsts.as_slice(), rests.as_slice()) {
                ([f], [r]) => {
                    items.push(f.object());
                    used.scaffold.push(f);
                    used.scaffold.push(r);
                    node = r.object();
                }
                ([], _) | (_, []) => return Err(bad("list cell lacks rdf:first or rdf:rest")),
                _ => return Err(bad("list cell has several rdf:first or rdf:rest values")),
            }
        }
        Ok(items)
    }

    fn definitions(&self, node: &'g Term) -> Vec<&'g Triple> {
        self.g
            .with_subject(node)
            .filter(|t| {
                let p = t.predicate().as_iri().unwrap_or("");
                CLASS_KEYS.contains(&p)
                    || RESTRICTION_KEYS.contains(&p)
                    || p == owl::ON_PROPERTY
                    || p == owl::ON_CLASS
            })
            .collect()
    }

    fn concept(
        &self,
        node: &'g Term,
        visiting: &mut Vec<&'g Term>,
        used: &mut Used<'g>,
    ) -> Result<Concept, Resolve> {
        match node {
            Term::Iri(iri) if iri == owl::THING => return Ok(Concept::Top),
            Term::Iri(iri) if iri == owl::NOTHING => return Ok(Concept::Bottom),
            Term::Iri(_) => return Ok(Concept::Atomic(node.clone())),
            Term::Literal(_) => return Err(Resolve::Malformed),
            Term::BlankNode(_) => {}
        }
        let defs = self.definitions(node);
        if defs.is_empty() {
            return Ok(Concept::Atomic(node.clone()));
        }
        if visiting.contains(&node) {
            return Err(Resolve::Malformed);
        }
        visiting.push(node);
        let result = self.class_expression(&defs, visiting, used);
        visiting.pop();
        if result.is_ok() {
            used.scaffold.extend(defs);
        }
        result
    }

    /// Interpret the defining triples of one node as a class expression.
    fn class_expression(
        &self,
        defs: &[&'g Triple],
        visiting: &mut Vec<&'g Term>,
        used: &mut Used<'g>,
    ) -> Result<Concept, Resolve> {
        let get = |p: &str| -> Vec<&'g Term> {
            defs.iter()
                .filter(|t| t.predicate().is(p))
                .map(|t| t.object())
                .collect()
        };
        let class_keys: Vec<&str> = CLASS_KEYS
            .iter()
            .copied()
            .filter(|k| !get(k).is_empty())
            .collect();
        let restriction_keys: Vec<&str> = RESTRICTION_KEYS
            .iter()
            .copied()
            .filter(|k| !get(k).is_empty())
            .collect();
        if let [key] = class_keys.as_slice() {
            if !restriction_keys.is_empty() || defs.len() != 1 {
                return Err(Resolve::Malformed);
            }
            let target = defs[0].object();
            return match *key {
                owl::COMPLEMENT_OF => {
                    Ok(Concept::complement(self.concept(target, visiting, used)?))
                }
                owl::ONE_OF => {
                    let items = self.list(target, used)?;
                    Ok(Concept::Nominal(items.into_iter().cloned().collect()))
                }
                k => {
                    let mut members = Vec::new();
                    for item in self.list(target, used)? {
                        members.push(self.concept(item, visiting, used)?);
                    }
                    Ok(if k == owl::INTERSECTION_OF {
                        Concept::and(members)
                    } else {
                        Concept::or(members)
                    })
                }
            };
        }
        if !class_keys.is_empty() || restriction_keys.len() != 1 {
            return Err(Resolve::Malformed);
        }
        let single = |p: &str| -> Result<&'g Term, Resolve> {
            match get(p).as_slice() {
                [one] => Ok(*one),
                _ => Err(Resolve::Malformed),
            }
        };
        let role = self.role(single(owl::ON_PROPERTY)?, used)?;
        let key = restriction_keys[0];
        let value = single(key)?;
        let on_class = get(owl::ON_CLASS);
        let qualified = matches!(
            key,
            owl::MIN_QUALIFIED_CARDINALITY
                | owl::MAX_QUALIFIED_CARDINALITY
                | owl::QUALIFIED_CARDINALITY
        );
        if qualified != (on_class.len() == 1) || on_class.len() > 1 {
            return Err(Resolve::Malformed);
        }
        let count = || -> Result<u64, Resolve> {
            let lit = value.as_literal().ok_or(Resolve::Malformed)?;
            lit.lexical()
                .trim()
                .parse::<u64>()
                .map_err(|_| Resolve::Malformed)
        };
        let filler = |s: &Self,
                      visiting: &mut Vec<&'g Term>,
                      used: &mut Used<'g>|
         -> Result<Option<Box<Concept>>, Resolve> {
            match on_class.first() {
                Some(c) => Ok(Some(Box::new(s.concept(c, visiting, used)?))),
                None => Ok(None),
            }
        };
        Ok(match key {
            owl::SOME_VALUES_FROM => Concept::exists(role, self.concept(value, visiting, used)?),
            owl::ALL_VALUES_FROM => Concept::forall(role, self.concept(value, visiting, used)?),
            owl::HAS_VALUE => Concept::HasValue(role, value.clone()),
            owl::HAS_SELF => {
                let truthy = value
                    .as_literal()
                    .is_some_and(|l| matches!(l.lexical(), "true" | "1"));
                if !truthy {
                    return Err(Resolve::Malformed);
                }
                Concept::ExistsSelf(role)
            }
            owl::MIN_CARDINALITY | owl::MIN_QUALIFIED_CARDINALITY => {
                Concept::AtLeast(count()?, role, filler(self, visiting, used)?)
            }
            owl::MAX_CARDINALITY | owl::MAX_QUALIFIED_CARDINALITY => {
                Concept::AtMost(count()?, role, filler(self, visiting, used)?)
            }
            _ => {
                let n = count()?;
                let f = filler(self, visiting, used)?;
                Concept::And(vec![
                    Concept::AtMost(n, role.clone(), f.clone()),
                    Concept::AtLeast(n, role, f),
                ])
            }
        })
    }

    fn role(&self, node: &'g Term, used: &mut Used<'g>) -> Result<Role, Resolve> {
        match node {
            Term::Iri(iri) if iri == owl::TOP_OBJECT_PROPERTY => Ok(Role::Universal),
            Term::Iri(iri) if iri == owl::BOTTOM_OBJECT_PROPERTY => Ok(Role::Empty),
            Term::Iri(_) => Ok(Role::Atomic(node.clone())),
            Term::Literal(_) => Err(Resolve::Malformed),
            Term::BlankNode(_) => {
                let inv: Vec<&'g Triple> = self
                    .g
                    .with_subject(node)
                    .filter(|t| t.predicate().is(owl::INVERSE_OF))
                    .collect();
                match inv.as_slice() {
                    [] => Ok(Role::Atomic(node.clone())),
                    [t] => {
                        if t.object() == node {
                            return Err(Resolve::Malformed);
                        }
                        let inner = self.role(t.object(), used)?;
                        used.scaffold.push(t);
                        Ok(Role::inverse(inner))
                    }
                    _ => Err(Resolve::Malformed),
                }
            }
        }
    }

    fn c(&self, node: &'g Term, used: &mut Used<'g>) -> Result<Concept, Resolve> {
        self.concept(node, &mut Vec::new(), used)
    }

    /// Axioms for the triple `t`, with any additional triples the rule
    /// consumes. `Ok(None)` means no rule applies.
    fn axioms_for(
        &self,
        t: &'g Triple,
        used: &mut Used<'g>,
    ) -> Result<Option<Mapped<'g>>, Resolve> {
        let (s, o) = (t.subject(), t.object());
        let p = t.predicate().as_iri().unwrap_or("");
        let one = |a: Axiom| Ok(Some((vec![a], Vec::new())));
        match p {
            rdfs::SUB_CLASS_OF => one(Axiom::ConceptSub(self.c(s, used)?, self.c(o, used)?)),
            owl::EQUIVALENT_CLASS => one(Axiom::ConceptEquiv(self.c(s, used)?, self.c(o, used)?)),
            owl::DISJOINT_WITH => one(Axiom::ConceptSub(
                self.c(s, used)?,
                Concept::complement(self.c(o, used)?),
            )),
            owl::DISJOINT_UNION_OF => {
                let mut members = Vec::new();
                for item in self.list(o, used)? {
                    members.push(self.c(item, used)?);
                }
                let mut axioms = vec![Axiom::ConceptEquiv(
                    self.c(s, used)?,
                    Concept::or(members.clone()),
                )];
                axioms.extend(pairwise(&members, |a, b| {
                    Axiom::ConceptSub(a.clone(), Concept::complement(b.clone()))
                }));
                Ok(Some((axioms, Vec::new())))
            }
            owl::MEMBERS | owl::DISTINCT_MEMBERS => {
                let kind = self.g.objects(s, rdf::TYPE).find_map(|ty| {
                    ty.as_iri().filter(|i| {
                        [
                            owl::ALL_DISJOINT_CLASSES,
                            owl::ALL_DIFFERENT,
                            owl::ALL_DISJOINT_PROPERTIES,
                        ]
                        .contains(i)
                    })
                });
                let Some(kind) = kind else { return Ok(None) };
                let items = self.list(o, used)?;
                let axioms = match kind {
                    owl::ALL_DISJOINT_CLASSES => {
                        let mut cs = Vec::new();
                        for i in items {
                            cs.push(self.c(i, used)?);
                        }
                        pairwise(&cs, |a, b| {
                            Axiom::ConceptSub(a.clone(), Concept::complement(b.clone()))
                        })
                    }
                    owl::ALL_DIFFERENT => pairwise(&items, |a, b| {
                        Axiom::DifferentIndividuals((*a).clone(), (*b).clone())
                    }),
                    _ => {
                        let mut rs = Vec::new();
                        for i in items {
                            rs.push(self.role(i, used)?);
                        }
                        pairwise(&rs, |a, b| {
                            Axiom::RoleProperty(PropertyKind::Disj, vec![a.clone(), b.clone()])
                        })
                    }
                };
                Ok(Some((axioms, Vec::new())))
            }
            owl::INTERSECTION_OF | owl::UNION_OF | owl::COMPLEMENT_OF | owl::ONE_OF
                if s.is_iri() =>
            {
                let expr = self.class_expression(&[t], &mut vec![s], used)?;
                one(Axiom::ConceptEquiv(Concept::Atomic(s.clone()), expr))
            }
            rdfs::SUB_PROPERTY_OF | owl::SUB_PROPERTY_OF => {
                one(Axiom::RoleSub(self.role(s, used)?, self.role(o, used)?))
            }
            owl::EQUIVALENT_PROPERTY => {
                one(Axiom::RoleEquiv(self.role(s, used)?, self.role(o, used)?))
            }
            owl::PROPERTY_DISJOINT_WITH | owl::PROPERTY_DISJOINT_WITH_CAP => {
                one(Axiom::RoleProperty(
                    PropertyKind::Disj,
                    vec![self.role(s, used)?, self.role(o, used)?],
                ))
            }
            owl::INVERSE_OF if s.is_iri() => one(Axiom::RoleEquiv(
                Role::Atomic(s.clone()),
                Role::inverse(self.role(o, used)?),
            )),
            owl::PROPERTY_CHAIN_AXIOM => {
                let mut chain = Vec::new();
                for item in self.list(o, used)? {
                    chain.push(self.role(item, used)?);
                }
                let sup = self.role(s, used)?;
                match chain.len() {
                    0 => Err(Resolve::Malformed),
                    1 => one(Axiom::RoleSub(chain.pop().expect("one"), sup)),
                    _ => one(Axiom::ChainSub(chain, sup)),
                }
            }
            rdfs::DOMAIN => one(Axiom::ConceptSub(
                Concept::exists(self.role(s, used)?, Concept::Top),
                self.c(o, used)?,
            )),
            rdfs::RANGE => one(Axiom::ConceptSub(
                Concept::Top,
                Concept::forall(self.role(s, used)?, self.c(o, used)?),
            )),
            owl::SAME_AS => one(Axiom::SameIndividual(s.clone(), o.clone())),
            owl::DIFFERENT_FROM => one(Axiom::DifferentIndividuals(s.clone(), o.clone())),
            rdf::TYPE => {
                let ty = o.as_iri().unwrap_or("");
                if let Some(kind) = PropertyKind::from_type(ty) {
                    return one(Axiom::RoleProperty(kind, vec![self.role(s, used)?]));
                }
                if ty == owl::NEGATIVE_PROPERTY_ASSERTION {
                    return self.negative_assertion(t);
                }
                if DECLARATION_TYPES.contains(&ty) {
                    return Ok(None);
                }
                match self.c(o, used)? {
                    Concept::Not(inner) => one(Axiom::NegConceptAssert(*inner, s.clone())),
                    c => one(Axiom::ConceptAssert(c, s.clone())),
                }
            }
            _ if ANNOTATIONS.contains(&p)
                || in_reserved_namespace(p)
                || self.annotation_props.contains(t.predicate()) =>
            {
                Ok(None)
            }
            _ => one(Axiom::RoleAssert(
                Role::Atomic(t.predicate().clone()),
                s.clone(),
                o.clone(),
            )),
        }
    }

    fn negative_assertion(&self, t: &'g Triple) -> Result<Option<Mapped<'g>>, Resolve> {
        let node = t.subject();
        let pick = |preds: &[&str]| -> Result<&'g Triple, Resolve> {
            let hits: Vec<&'g Triple> = self
                .g
                .with_subject(node)
                .filter(|x| preds.iter().any(|p| x.predicate().is(p)))
                .collect();
            match hits.as_slice() {
                [one] => Ok(*one),
                _ => Err(Resolve::Malformed),
            }
        };
        let source = pick(&[owl::SOURCE_INDIVIDUAL])?;
        let property = pick(&[owl::ASSERTION_PROPERTY])?;
        let target = pick(&[owl::TARGET_INDIVIDUAL, owl::TARGET_VALUE])?;
        let mut used = Used::default();
        let role = self.role(property.object(), &mut used)?;
        let mut parts = vec![source, property, target];
        parts.extend(used.scaffold);
        Ok(Some((
            vec![Axiom::NegRoleAssert(
                role,
                source.object().clone(),
                target.object().clone(),
            )],
            parts,
        )))
    }
}

fn pairwise<T>(items: &[T], f: impl Fn(&T, &T) -> Axiom) -> Vec<Axiom> {
    let mut out = Vec::new();
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            out.push(f(&items[i], &items[j]));
        }
    }
    out
}

/// Lift the graph's triples into DL axioms.
pub fn extract_axioms(graph: &Graph) -> Result<ExtractionReport, ExtractionError> {
    let annotation_props: HashSet<&Term> = graph
        .with_object(&Term::named(owl::ANNOTATION_PROPERTY))
        .filter(|t| t.predicate().is(rdf::TYPE))
        .map(|t| t.subject())
        .collect();
    let ex = Extractor {
        g: graph,
        annotation_props,
    };
    let mut axioms = Vec::new();
    let mut consumed: BTreeSet<&Triple> = BTreeSet::new();
    let mut scaffold: BTreeSet<&Triple> = BTreeSet::new();
    for t in graph {
        if consumed.contains(t) {
            continue;
        }
        if t.predicate().is(rdf::TYPE)
            && t.object()
                .as_iri()
                .is_some_and(|o| DECLARATION_TYPES.contains(&o))
        {
            scaffold.insert(t);
            continue;
        }
        let mut used = Used::default();
        match ex.axioms_for(t, &mut used) {
            Ok(Some((found, extra))) => {
                axioms.extend(found);
                consumed.insert(t);
                consumed.extend(extra);
                scaffold.extend(used.scaffold);
            }
            Ok(None) | Err(Resolve::Malformed) => {}
            Err(Resolve::Fatal(e)) => return Err(e),
        }
    }
    let scaffold: BTreeSet<&Triple> = scaffold.difference(&consumed).copied().collect();
    let mut report = ExtractionReport {
        axioms,
        letters: expressivity_letters(graph),
        ..ExtractionReport::default()
    };
    for t in graph {
        if consumed.contains(t) {
            report.consumed.push(t.clone());
        } else if scaffold.contains(t) {
            report.scaffolding.push(t.clone());
        } else {
            report.unmapped.push(t.clone());
        }
    }
    Ok(report)
}

/// Expressivity letters from predicate and object occurrences.
pub fn expressivity_letters(graph: &Graph) -> BTreeSet<Letter> {
    let has_pred = |ps: &[&str]| {
        ps.iter()
            .any(|p| graph.with_predicate(&Term::named(p)).next().is_some())
    };
    let has_obj = |os: &[&str]| {
        os.iter()
            .any(|o| graph.with_object(&Term::named(o)).next().is_some())
    };
    let mut letters = BTreeSet::from([Letter::AL]);
    let c = has_pred(&[owl::COMPLEMENT_OF, owl::UNION_OF, owl::SOME_VALUES_FROM]);
    if c {
        letters.insert(Letter::C);
        if has_obj(&[owl::TRANSITIVE_PROPERTY]) {
            letters.insert(Letter::S);
        }
    }
    if has_pred(&[rdfs::SUB_PROPERTY_OF, owl::SUB_PROPERTY_OF]) {
        letters.insert(Letter::H);
    }
    if has_pred(&[owl::ONE_OF, owl::HAS_VALUE]) {
        letters.insert(Letter::O);
    }
    if has_pred(&[owl::INVERSE_OF]) {
        letters.insert(Letter::I);
    }
    if has_obj(&[owl::FUNCTIONAL_PROPERTY, owl::INVERSE_FUNCTIONAL_PROPERTY]) {
        letters.insert(Letter::F);
    }
    let q = has_pred(&[
        owl::ON_CLASS,
        owl::QUALIFIED_CARDINALITY,
        owl::MIN_QUALIFIED_CARDINALITY,
        owl::MAX_QUALIFIED_CARDINALITY,
    ]);
    if q {
        letters.insert(Letter::Q);
    } else if has_pred(&[owl::MIN_CARDINALITY, owl::MAX_CARDINALITY, owl::CARDINALITY]) {
        letters.insert(Letter::N);
    }
    if has_pred(&[
        owl::PROPERTY_CHAIN_AXIOM,
        owl::HAS_SELF,
        owl::PROPERTY_DISJOINT_WITH,
        owl::PROPERTY_DISJOINT_WITH_CAP,
    ]) || has_obj(&[
        owl::REFLEXIVE_PROPERTY,
        owl::IRREFLEXIVE_PROPERTY,
        owl::ASYMMETRIC_PROPERTY,
    ]) {
        letters.insert(Letter::R);
    }
    let datatype = [rdfs::DATATYPE, owl::DATATYPE_PROPERTY].iter().any(|d| {
        let t = Term::named(d);
        graph.with_object(&t).next().is_some() || graph.with_subject(&t).next().is_some()
    });
    if datatype {
        letters.insert(Letter::D);
    }
    letters
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Style {
    #[default]
    Unicode,
    Ascii,
}

struct Symbols {
    sub: &'static str,
    equiv: &'static str,
    and: &'static str,
    or: &'static str,
    not: &'static str,
    forall: &'static str,
    exists: &'static str,
    top: &'static str,
    bottom: &'static str,
    at_most: &'static str,
    at_least: &'static str,
    inverse: &'static str,
    compose: &'static str,
}

const UNICODE: Symbols = Symbols {
    sub: " ⊑ ",
    equiv: " ≡ ",
    and: " ⊓ ",
    or: " ⊔ ",
    not: "¬",
    forall: "∀",
    exists: "∃",
    top: "⊤",
    bottom: "⊥",
    at_most: "≤",
    at_least: "≥",
    inverse: "⁻",
    compose: " ∘ ",
};

const ASCII: Symbols = Symbols {
    sub: " <= ",
    equiv: " == ",
    and: " AND ",
    or: " OR ",
    not: "NOT ",
    forall: "FORALL ",
    exists: "EXISTS ",
    top: "TOP",
    bottom: "BOTTOM",
    at_most: "<=",
    at_least: ">=",
    inverse: "^-",
    compose: " o ",
};

/// Renders DL syntax, shortening names through an optional prefix map.
/// Names in the empty-prefix namespace are printed bare.
pub struct Renderer<'p> {
    prefixes: Option<&'p PrefixMap>,
    sym: &'static Symbols,
}

impl<'p> Renderer<'p> {
    pub fn new(prefixes: Option<&'p PrefixMap>, style: Style) -> Self {
        Renderer {
            prefixes,
            sym: match style {
                Style::Unicode => &UNICODE,
                Style::Ascii => &ASCII,
            },
        }
    }

    pub fn name(&self, t: &Term) -> String {
        match t {
            Term::Iri(iri) => match self.prefixes.and_then(|p| p.shorten(iri)) {
                Some((p, local)) if p.is_empty() => local,
                Some((p, local)) => format!("{p}:{local}"),
                None => format!("<{iri}>"),
            },
            Term::BlankNode(b) => format!("_:{b}"),
            Term::Literal(l) => format!("\"{}\"", l.lexical()),
        }
    }

    fn wrapped(&self, c: &Concept) -> String {
        if c.is_compound() {
            format!("({})", self.concept(c))
        } else {
            self.concept(c)
        }
    }

    pub fn concept(&self, c: &Concept) -> String {
        let s = self.sym;
        match c {
            Concept::Atomic(t) => self.name(t),
            Concept::Top => s.top.to_owned(),
            Concept::Bottom => s.bottom.to_owned(),
            Concept::Not(inner) => format!("{}{}", s.not, self.wrapped(inner)),
            Concept::And(ms) => ms
                .iter()
                .map(|m| self.wrapped(m))
                .collect::<Vec<_>>()
                .join(s.and),
            Concept::Or(ms) => ms
                .iter()
                .map(|m| self.wrapped(m))
                .collect::<Vec<_>>()
                .join(s.or),
            Concept::Nominal(items) => format!(
                "{{{}}}",
                items
                    .iter()
                    .map(|i| self.name(i))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            Concept::Exists(r, f) => format!("{}{}.{}", s.exists, self.role(r), self.wrapped(f)),
            Concept::Forall(r, f) => format!("{}{}.{}", s.forall, self.role(r), self.wrapped(f)),
            Concept::ExistsSelf(r) => format!("{}{}.Self", s.exists, self.role(r)),
            Concept::HasValue(r, a) => format!("{}{}.{{{}}}", s.exists, self.role(r), self.name(a)),
            Concept::AtMost(n, r, f) => self.cardinality(s.at_most, *n, r, f.as_deref()),
            Concept::AtLeast(n, r, f) => self.cardinality(s.at_least, *n, r, f.as_deref()),
        }
    }

    fn cardinality(&self, op: &str, n: u64, r: &Role, filler: Option<&Concept>) -> String {
        let sep = if self.sym.top == "TOP" { " " } else { "" };
        match filler {
            Some(f) => format!("{op}{n}{sep}{}.{}", self.role(r), self.wrapped(f)),
            None => format!("{op}{n}{sep}{}", self.role(r)),
        }
    }

    fn wrapped_role(&self, r: &Role) -> String {
        if r.is_simple() {
            self.role(r)
        } else {
            format!("({})", self.role(r))
        }
    }

    pub fn role(&self, r: &Role) -> String {
        let s = self.sym;
        match r {
            Role::Atomic(t) => self.name(t),
            Role::Universal => "U".to_owned(),
            Role::Empty => "N".to_owned(),
            Role::Inverse(inner) => format!("{}{}", self.wrapped_role(inner), s.inverse),
            Role::Not(inner) => format!("{}{}", s.not, self.wrapped_role(inner)),
            Role::And(a, b) => format!("{}{}{}", self.wrapped_role(a), s.and, self.wrapped_role(b)),
            Role::Or(a, b) => format!("{}{}{}", self.wrapped_role(a), s.or, self.wrapped_role(b)),
            Role::Chain(rs) => rs
                .iter()
                .map(|x| self.wrapped_role(x))
                .collect::<Vec<_>>()
                .join(s.compose),
            Role::TransClosure(inner) => format!("{}⁺", self.wrapped_role(inner)),
            Role::ReflTransClosure(inner) => format!("{}*", self.wrapped_role(inner)),
            Role::Restrict(inner, left, right) => {
                let side = |c: &Option<Box<Concept>>| {
                    c.as_deref().map(|c| self.wrapped(c)).unwrap_or_default()
                };
                format!(
                    "{}_{}|{}",
                    self.wrapped_role(inner),
                    side(left),
                    side(right)
                )
            }
            Role::Id(c) => format!("id({})", self.concept(c)),
            Role::Sym(inner) => format!("sym({})", self.role(inner)),
        }
    }

    pub fn axiom(&self, a: &Axiom) -> String {
        let s = self.sym;
        let assert_head = |c: &Concept| match c {
            Concept::Atomic(_) | Concept::Top | Concept::Bottom => self.concept(c),
            other => format!("({})", self.concept(other)),
        };
        match a {
            Axiom::ConceptEquiv(c, d) => {
                format!("{}{}{}", self.concept(c), s.equiv, self.concept(d))
            }
            Axiom::ConceptSub(c, d) => format!("{}{}{}", self.concept(c), s.sub, self.concept(d)),
            Axiom::RoleEquiv(r, q) => format!("{}{}{}", self.role(r), s.equiv, self.role(q)),
            Axiom::RoleSub(r, q) => format!("{}{}{}", self.role(r), s.sub, self.role(q)),
            Axiom::ChainSub(chain, q) => format!(
                "{}{}{}",
                self.role(&Role::Chain(chain.clone())),
                s.sub,
                self.role(q)
            ),
            Axiom::ConceptAssert(c, i) => format!("{}({})", assert_head(c), self.name(i)),
            Axiom::NegConceptAssert(c, i) => {
                format!("{}{}({})", s.not, assert_head(c), self.name(i))
            }
            Axiom::RoleAssert(r, a, b) => format!(
                "{}({}, {})",
                self.wrapped_role(r),
                self.name(a),
                self.name(b)
            ),
            Axiom::NegRoleAssert(r, a, b) => {
                format!(
                    "{}{}({}, {})",
                    s.not,
                    self.wrapped_role(r),
                    self.name(a),
                    self.name(b)
                )
            }
            Axiom::SameIndividual(a, b) => {
                format!("{{{}}}{}{{{}}}", self.name(a), s.equiv, self.name(b))
            }
            Axiom::DifferentIndividuals(a, b) => {
                format!("{{{}}}{}{}{{{}}}", self.name(a), s.sub, s.not, self.name(b))
            }
            Axiom::RoleProperty(kind, roles) => format!(
                "{}({})",
                kind.name(),
                roles
                    .iter()
                    .map(|r| self.role(r))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        }
    }
}

/// Render one axiom in Unicode DL syntax.
pub fn render_dl(axiom: &Axiom, prefixes: Option<&PrefixMap>) -> String {
    Renderer::new(prefixes, Style::Unicode).axiom(axiom)
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_dl(self, None))
    }
}
