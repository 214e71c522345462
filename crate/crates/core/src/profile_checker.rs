//! DL<∀₀^π> membership: one engine runs the embedded SPARQL query, the
//! other applies rules R1–R7 directly.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::dl_mapping::{dl_name, expressivity_letters};
use crate::rdf_model::{Graph, Term, Triple};
use crate::sparql::{eval, eval_numeric, parse_query, Algebra, Solution};
use crate::vocab::{owl, rdf, rdfs};

const EMBEDDED_QUERY: &str = include_str!("../resources/dl_forall0pi.rq");

/// The membership query shipped with the crate.
pub fn embedded_query_text() -> &'static str {
    EMBEDDED_QUERY
}

/// Parsed form of [`embedded_query_text`].
pub fn embedded_query() -> &'static Algebra {
    static PARSED: OnceLock<Algebra> = OnceLock::new();
    PARSED.get_or_init(|| parse_query(EMBEDDED_QUERY).expect("embedded query parses"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleId {
    #[serde(rename = "R1_EXISTENTIAL_MISPLACED")]
    R1ExistentialMisplaced,
    #[serde(rename = "R2_UNIVERSAL_MISPLACED")]
    R2UniversalMisplaced,
    #[serde(rename = "R3_MINCARD")]
    R3MinCard,
    #[serde(rename = "R4_DATATYPE")]
    R4Datatype,
    #[serde(rename = "R5_QUALIFIED")]
    R5Qualified,
    #[serde(rename = "R6_EXACT_CARD")]
    R6ExactCard,
    #[serde(rename = "R7_MAX_CARD")]
    R7MaxCard,
}

impl RuleId {
    pub const ALL: [RuleId; 7] = [
        RuleId::R1ExistentialMisplaced,
        RuleId::R2UniversalMisplaced,
        RuleId::R3MinCard,
        RuleId::R4Datatype,
        RuleId::R5Qualified,
        RuleId::R6ExactCard,
        RuleId::R7MaxCard,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::R1ExistentialMisplaced => "R1_EXISTENTIAL_MISPLACED",
            RuleId::R2UniversalMisplaced => "R2_UNIVERSAL_MISPLACED",
            RuleId::R3MinCard => "R3_MINCARD",
            RuleId::R4Datatype => "R4_DATATYPE",
            RuleId::R5Qualified => "R5_QUALIFIED",
            RuleId::R6ExactCard => "R6_EXACT_CARD",
            RuleId::R7MaxCard => "R7_MAX_CARD",
        }
    }

    /// Short code, `R1` to `R7`.
    pub fn code(self) -> &'static str {
        &self.as_str()[..2]
    }

    /// Accepts either the full identifier or the short code.
    pub fn parse(s: &str) -> Option<RuleId> {
        RuleId::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s) || r.code().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub rule: RuleId,
    pub focus: Term,
    pub evidence: Vec<Triple>,
    pub message: String,
}

impl Violation {
    fn new(
        rule: RuleId,
        focus: &Term,
        mut evidence: Vec<Triple>,
        message: impl Into<String>,
    ) -> Self {
        evidence.sort();
        evidence.dedup();
        Violation {
            rule,
            focus: focus.clone(),
            evidence,
            message: message.into(),
        }
    }

    pub fn to_record(&self) -> ViolationRecord {
        ViolationRecord {
            rule: self.rule,
            focus: self.focus.to_string(),
            evidence: self.evidence.iter().map(Triple::to_string).collect(),
            message: self.message.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Direct,
    Query,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Direct => "direct",
            Engine::Query => "query",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub member: bool,
    pub violations: Vec<Violation>,
    pub engine: Engine,
}

impl Verdict {
    fn from_violations(engine: Engine, mut violations: Vec<Violation>) -> Self {
        violations.sort();
        violations.dedup();
        Verdict {
            member: violations.is_empty(),
            violations,
            engine,
        }
    }

    /// Distinct rules that fired.
    pub fn rules(&self) -> BTreeSet<RuleId> {
        self.violations.iter().map(|v| v.rule).collect()
    }
}

/// Rule attributed to each top-level union arm of the embedded query.
const ARM_RULES: [RuleId; 8] = [
    RuleId::R1ExistentialMisplaced,
    RuleId::R2UniversalMisplaced,
    RuleId::R3MinCard,
    RuleId::R4Datatype,
    RuleId::R4Datatype,
    RuleId::R5Qualified,
    RuleId::R6ExactCard,
    RuleId::R7MaxCard,
];

const ARM_FOCUS: [&str; 8] = ["left", "restr", "left", "s", "s", "s", "s", "s"];

const ARM_MESSAGES: [&str; 8] = [
    "existential restriction outside the left side of a subsumption",
    "universal restriction outside the right side of a subsumption or domain",
    "minimum cardinality restriction rejected by the query",
    "datatype property declared",
    "datatype used",
    "qualified cardinality restriction",
    "exact cardinality restriction",
    "maximum cardinality restriction",
];

/// Run the embedded query. At most one violation is reported, built from
/// the first union arm that yields a solution.
pub fn check_query(graph: &Graph) -> Verdict {
    let query = embedded_query();
    let solutions = eval(graph, query);
    let Some(solution) = solutions.first() else {
        return Verdict::from_violations(Engine::Query, Vec::new());
    };
    let arms = query.body().union_arms();
    let index = arms
        .iter()
        .position(|arm| eval(graph, arm).first() == Some(solution))
        .expect("the query solution comes from one of its arms");
    let violation = arm_violation(graph, arms[index], index, solution);
    Verdict::from_violations(Engine::Query, vec![violation])
}

fn arm_violation(graph: &Graph, arm: &Algebra, index: usize, solution: &Solution) -> Violation {
    let evidence: Vec<Triple> = arm
        .positive_patterns()
        .into_iter()
        .filter_map(|p| {
            let tp = p.instantiate(solution);
            match (&tp.subject, &tp.predicate, &tp.object) {
                (Some(s), Some(p), Some(o)) => Triple::new(s.clone(), p.clone(), o.clone())
                    .ok()
                    .filter(|t| graph.contains(t)),
                _ => None,
            }
        })
        .collect();
    let focus = solution
        .get_name(ARM_FOCUS[index])
        .cloned()
        .or_else(|| evidence.first().map(|t| t.subject().clone()))
        .expect("arm binds its focus variable");
    Violation::new(ARM_RULES[index], &focus, evidence, ARM_MESSAGES[index])
}

const R1_FORBIDDEN_SUBJECT: &[&str] = &[
    owl::EQUIVALENT_CLASS,
    owl::DISJOINT_WITH,
    owl::MEMBERS,
    owl::DISJOINT_UNION_OF,
];
const R2_OBJECT_OF: &[&str] = &[rdfs::SUB_CLASS_OF, rdfs::DOMAIN];
const R2_SUBJECT_OF: &[&str] = &[rdf::TYPE, owl::ON_PROPERTY, owl::ALL_VALUES_FROM];
const R5_PREDICATES: &[&str] = &[
    owl::ON_CLASS,
    owl::QUALIFIED_CARDINALITY,
    owl::MIN_QUALIFIED_CARDINALITY,
    owl::MAX_QUALIFIED_CARDINALITY,
];

fn pred(iri: &str) -> Term {
    Term::named(iri)
}

/// Nodes carrying `predicate`, with their defining triples.
fn defined_by<'g>(graph: &'g Graph, predicate: &str) -> Vec<(&'g Term, Vec<Triple>)> {
    let mut out: Vec<(&Term, Vec<Triple>)> = Vec::new();
    for t in graph.with_predicate(&pred(predicate)) {
        match out.last_mut() {
            Some((node, defs)) if *node == t.subject() => defs.push(t.clone()),
            _ => out.push((t.subject(), vec![t.clone()])),
        }
    }
    out
}

/// Placement conditions shared by R1 and R3: subject of a subsumption,
/// never an object, never the subject of an equivalence-like triple.
fn left_placement(
    graph: &Graph,
    rule: RuleId,
    node: &Term,
    defs: &[Triple],
    what: &str,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let subclass = pred(rdfs::SUB_CLASS_OF);
    if !graph.with_subject(node).any(|t| t.predicate() == &subclass) {
        out.push(Violation::new(
            rule,
            node,
            defs.to_vec(),
            format!("{what} is not the subclass of any subsumption"),
        ));
    }
    let as_object: Vec<Triple> = graph.with_object(node).cloned().collect();
    if !as_object.is_empty() {
        let mut evidence = defs.to_vec();
        evidence.extend(as_object);
        out.push(Violation::new(
            rule,
            node,
            evidence,
            format!("{what} is used as the object of a triple"),
        ));
    }
    let forbidden: Vec<Triple> = graph
        .with_subject(node)
        .filter(|t| R1_FORBIDDEN_SUBJECT.iter().any(|p| t.predicate().is(p)))
        .cloned()
        .collect();
    if !forbidden.is_empty() {
        let mut evidence = defs.to_vec();
        evidence.extend(forbidden);
        out.push(Violation::new(
            rule,
            node,
            evidence,
            format!("{what} is the subject of an equivalence, disjointness or membership triple"),
        ));
    }
    out
}

fn rule_r1(graph: &Graph) -> Vec<Violation> {
    defined_by(graph, owl::SOME_VALUES_FROM)
        .into_iter()
        .flat_map(|(node, defs)| {
            left_placement(
                graph,
                RuleId::R1ExistentialMisplaced,
                node,
                &defs,
                "existential restriction",
            )
        })
        .collect()
}

fn rule_r2(graph: &Graph) -> Vec<Violation> {
    let mut out = Vec::new();
    for (node, defs) in defined_by(graph, owl::ALL_VALUES_FROM) {
        let bad_object: Vec<Triple> = graph
            .with_object(node)
            .filter(|t| !R2_OBJECT_OF.iter().any(|p| t.predicate().is(p)))
            .cloned()
            .collect();
        if !bad_object.is_empty() {
            let mut evidence = defs.clone();
            evidence.extend(bad_object);
            out.push(Violation::new(
                RuleId::R2UniversalMisplaced,
                node,
                evidence,
                "universal restriction is the object of a triple other than subClassOf or domain",
            ));
        }
        let bad_subject: Vec<Triple> = graph
            .with_subject(node)
            .filter(|t| !R2_SUBJECT_OF.iter().any(|p| t.predicate().is(p)))
            .cloned()
            .collect();
        if !bad_subject.is_empty() {
            let mut evidence = defs.clone();
            evidence.extend(bad_subject);
            out.push(Violation::new(
                RuleId::R2UniversalMisplaced,
                node,
                evidence,
                "universal restriction is the subject of a triple other than type, onProperty or allValuesFrom",
            ));
        }
    }
    out
}

fn rule_r3(graph: &Graph) -> Vec<Violation> {
    let mut out = Vec::new();
    for (node, defs) in defined_by(graph, owl::MIN_CARDINALITY) {
        out.extend(left_placement(
            graph,
            RuleId::R3MinCard,
            node,
            &defs,
            "minimum cardinality restriction",
        ));
        for def in &defs {
            match eval_numeric(def.object()) {
                Some(n) if n <= 1.0 => {}
                Some(_) => out.push(Violation::new(
                    RuleId::R3MinCard,
                    node,
                    vec![def.clone()],
                    "minimum cardinality greater than 1",
                )),
                None => out.push(Violation::new(
                    RuleId::R3MinCard,
                    node,
                    vec![def.clone()],
                    "unreadable cardinality",
                )),
            }
        }
    }
    out
}

/// Single-triple rules R4 to R7.
fn scan_rules(graph: &Graph) -> Vec<Violation> {
    let mut out = Vec::new();
    for t in graph {
        let rule = if t.object().is(owl::DATATYPE_PROPERTY) || t.object().is(rdfs::DATATYPE) {
            Some((RuleId::R4Datatype, "datatype property or datatype"))
        } else if R5_PREDICATES.iter().any(|p| t.predicate().is(p)) {
            Some((RuleId::R5Qualified, "qualified cardinality restriction"))
        } else if t.predicate().is(owl::CARDINALITY) {
            Some((RuleId::R6ExactCard, "exact cardinality restriction"))
        } else if t.predicate().is(owl::MAX_CARDINALITY) {
            Some((RuleId::R7MaxCard, "maximum cardinality restriction"))
        } else {
            None
        };
        if let Some((rule, message)) = rule {
            out.push(Violation::new(rule, t.subject(), vec![t.clone()], message));
        }
    }
    out
}

/// Apply rules R1–R7 and report every violation.
pub fn check_direct(graph: &Graph) -> Verdict {
    let mut violations = rule_r1(graph);
    violations.extend(rule_r2(graph));
    violations.extend(rule_r3(graph));
    violations.extend(scan_rules(graph));
    Verdict::from_violations(Engine::Direct, violations)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualVerdict {
    pub direct: Verdict,
    pub query: Verdict,
    pub divergence: bool,
}

/// Run both engines.
pub fn check_both(graph: &Graph) -> DualVerdict {
    let direct = check_direct(graph);
    let query = check_query(graph);
    DualVerdict {
        divergence: direct.member != query.member,
        direct,
        query,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub rule: RuleId,
    pub focus: String,
    pub evidence: Vec<String>,
    pub message: String,
}

/// JSON report for one checked source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub source: String,
    pub member_direct: bool,
    pub member_query: bool,
    pub divergence: bool,
    pub violations: Vec<ViolationRecord>,
    pub query_violations: Vec<ViolationRecord>,
    pub letters: Vec<String>,
    pub dl_name: String,
}

impl Report {
    pub fn new(source: impl Into<String>, graph: &Graph, verdicts: &DualVerdict) -> Self {
        let letters = expressivity_letters(graph);
        Report {
            source: source.into(),
            member_direct: verdicts.direct.member,
            member_query: verdicts.query.member,
            divergence: verdicts.divergence,
            violations: verdicts
                .direct
                .violations
                .iter()
                .map(Violation::to_record)
                .collect(),
            query_violations: verdicts
                .query
                .violations
                .iter()
                .map(Violation::to_record)
                .collect(),
            letters: letters.iter().map(|l| l.to_string()).collect(),
            dl_name: dl_name(&letters),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf_io::parse_turtle;

    fn load(body: &str) -> Graph {
        parse_turtle(&format!("@prefix : <http://example.org/> .\n{body}"), None)
            .unwrap()
            .0
    }

    #[test]
    fn embedded_query_shape() {
        let text = embedded_query_text();
        assert!(text
            .lines()
            .any(|l| l.trim() == "?left owl:someValuesFrom ?class ."));
        assert!(text.trim_end().ends_with("} LIMIT 1"));
        assert!(matches!(
            embedded_query(),
            Algebra::Limit(1, _) | Algebra::SelectAll(_)
        ));
        assert_eq!(embedded_query().body().union_arms().len(), 8);
    }

    #[test]
    fn empty_graph_is_member() {
        let v = check_both(&Graph::new());
        assert!(v.direct.member && v.query.member && !v.divergence);
    }

    #[test]
    fn existential_on_the_left() {
        let g = load("_:x owl:someValuesFrom :C ; owl:onProperty :R ; rdfs:subClassOf :D .");
        let v = check_both(&g);
        assert!(v.direct.member && v.query.member);
    }

    #[test]
    fn existential_on_the_right() {
        let g = load("_:x owl:someValuesFrom :C ; owl:onProperty :R . :D rdfs:subClassOf _:x .");
        let v = check_both(&g);
        assert!(!v.direct.member && !v.query.member);
        assert_eq!(
            v.direct.rules(),
            BTreeSet::from([RuleId::R1ExistentialMisplaced])
        );
        assert_eq!(v.query.violations[0].rule, RuleId::R1ExistentialMisplaced);
        assert!(v.query.violations[0].focus.is_blank());
    }

    #[test]
    fn universal_placements() {
        let g = load("_:x owl:allValuesFrom :C ; owl:onProperty :R . :D rdfs:subClassOf _:x .");
        assert!(check_both(&g).direct.member && check_both(&g).query.member);
        let g = load("_:x owl:allValuesFrom :C ; owl:onProperty :R . :R2 rdfs:domain _:x .");
        assert!(check_both(&g).direct.member && check_both(&g).query.member);
        let g = load("_:x owl:allValuesFrom :C ; owl:onProperty :R ; rdfs:subClassOf :D .");
        let v = check_both(&g);
        assert!(!v.direct.member && !v.query.member);
        assert_eq!(
            v.direct.rules(),
            BTreeSet::from([RuleId::R2UniversalMisplaced])
        );
    }

    #[test]
    fn min_cardinality_strict_divergence() {
        let g = load("_:x owl:minCardinality \"1\"^^xsd:nonNegativeInteger ; owl:onProperty :R ; rdfs:subClassOf :D .");
        let v = check_both(&g);
        assert!(v.direct.member);
        assert!(!v.query.member);
        assert!(v.divergence);
        assert_eq!(v.query.violations[0].rule, RuleId::R3MinCard);
    }

    #[test]
    fn min_cardinality_above_one() {
        let g = load("_:x owl:minCardinality 2 ; owl:onProperty :R ; rdfs:subClassOf :D .");
        let v = check_direct(&g);
        assert_eq!(v.rules(), BTreeSet::from([RuleId::R3MinCard]));
        let g = load("_:x owl:minCardinality \"many\" ; owl:onProperty :R ; rdfs:subClassOf :D .");
        assert_eq!(
            check_direct(&g).violations[0].message,
            "unreadable cardinality"
        );
    }

    #[test]
    fn datatype_and_cardinalities() {
        let g = load(":P a owl:DatatypeProperty .");
        let v = check_both(&g);
        assert!(!v.direct.member && !v.query.member && !v.divergence);
        assert_eq!(v.query.violations[0].rule, RuleId::R4Datatype);
        assert_eq!(v.query.violations[0].evidence.len(), 1);
        let g = load("_:x owl:maxCardinality \"2\"^^xsd:nonNegativeInteger ; owl:onProperty :R . :C rdfs:subClassOf _:x .");
        assert_eq!(
            check_direct(&g).rules(),
            BTreeSet::from([RuleId::R7MaxCard])
        );
        assert_eq!(check_query(&g).violations[0].rule, RuleId::R7MaxCard);
        let g = load("_:x owl:cardinality 1 ; owl:onProperty :R . :C rdfs:subClassOf _:x .");
        assert_eq!(
            check_direct(&g).rules(),
            BTreeSet::from([RuleId::R6ExactCard])
        );
    }

    #[test]
    fn right_sharing_corner() {
        let g = load("_:x owl:someValuesFrom :C ; owl:onProperty :R ; rdfs:subClassOf :D ; owl:equivalentClass :E .");
        let v = check_both(&g);
        assert!(!v.direct.member);
        assert!(v.query.member);
        let g = load("_:x owl:someValuesFrom :C ; owl:onProperty :R ; rdfs:subClassOf :D ; owl:equivalentClass :D .");
        let v = check_both(&g);
        assert!(!v.direct.member && !v.query.member);
    }

    #[test]
    fn direct_reports_everything() {
        let g = load(
            ":P a owl:DatatypeProperty . :Q a owl:DatatypeProperty . _:x owl:maxCardinality 3 ; owl:onProperty :P .",
        );
        let v = check_direct(&g);
        assert_eq!(
            v.violations
                .iter()
                .filter(|v| v.rule == RuleId::R4Datatype)
                .count(),
            2
        );
        assert_eq!(check_query(&g).violations.len(), 1);
    }

    #[test]
    fn query_violation_matches_full_query() {
        let g = load("_:x owl:allValuesFrom :C ; owl:onProperty :R . :C owl:equivalentClass _:x .");
        let v = check_query(&g);
        assert_eq!(v.violations[0].rule, RuleId::R2UniversalMisplaced);
        for t in &v.violations[0].evidence {
            assert!(g.contains(t));
        }
    }

    #[test]
    fn report_serializes() {
        let g = load(":P a owl:DatatypeProperty .");
        let r = Report::new("x.ttl", &g, &check_both(&g));
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["violations"][0]["rule"], "R4_DATATYPE");
        assert_eq!(json["letters"], serde_json::json!(["AL", "D"]));
        assert_eq!(json["member_direct"], false);
    }

    #[test]
    fn rule_ids_parse() {
        assert_eq!(RuleId::parse("r3"), Some(RuleId::R3MinCard));
        assert_eq!(RuleId::parse("R7_MAX_CARD"), Some(RuleId::R7MaxCard));
        assert_eq!(RuleId::parse("R9"), None);
    }
}
