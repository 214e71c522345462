//! Blank-node isomorphism by refinement plus backtracking.

use std::collections::{BTreeMap, HashMap};

use crate::rdf_model::{Graph, Term, Triple};

/// Colour of a blank node: its incident triples with other blank nodes
/// masked out. Isomorphic graphs must agree on colour multisets.
fn colours(g: &Graph) -> HashMap<String, Vec<String>> {
    let mask = |t: &Term, me: &str| match t {
        Term::BlankNode(b) if b == me => "@self".to_owned(),
        Term::BlankNode(_) => "@bnode".to_owned(),
        other => other.to_string(),
    };
    let mut out: HashMap<String, Vec<String>> = HashMap::new();
    for t in g {
        for (pos, term) in [("s", t.subject()), ("o", t.object())] {
            if let Term::BlankNode(b) = term {
                let sig = format!(
                    "{pos}|{}|{}|{}",
                    mask(t.subject(), b),
                    t.predicate(),
                    mask(t.object(), b)
                );
                out.entry(b.clone()).or_default().push(sig);
            }
        }
    }
    for sigs in out.values_mut() {
        sigs.sort();
    }
    out
}

fn rename(t: &Triple, map: &HashMap<&str, &str>) -> Option<Triple> {
    let f = |term: &Term| -> Option<Term> {
        match term {
            Term::BlankNode(b) => map
                .get(b.as_str())
                .map(|m| Term::BlankNode((*m).to_owned())),
            other => Some(other.clone()),
        }
    };
    Triple::new(f(t.subject())?, t.predicate().clone(), f(t.object())?).ok()
}

pub(crate) fn isomorphic(a: &Graph, b: &Graph) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let ground = |g: &Graph| -> Vec<Triple> {
        g.iter()
            .filter(|t| !t.subject().is_blank() && !t.object().is_blank())
            .cloned()
            .collect()
    };
    if ground(a) != ground(b) {
        return false;
    }
    let (ca, cb) = (colours(a), colours(b));
    if ca.len() != cb.len() {
        return false;
    }
    let mut classes_b: BTreeMap<&Vec<String>, Vec<&str>> = BTreeMap::new();
    for (n, c) in &cb {
        classes_b.entry(c).or_default().push(n.as_str());
    }
    let mut order: Vec<&str> = a.blank_nodes();
    // most constrained first
    order.sort_by_key(|n| classes_b.get(&ca[*n]).map_or(0, Vec::len));
    for n in &order {
        if !classes_b.contains_key(&ca[*n]) {
            return false;
        }
    }
    let blank_triples: Vec<&Triple> = a
        .iter()
        .filter(|t| t.subject().is_blank() || t.object().is_blank())
        .collect();
    let mut map: HashMap<&str, &str> = HashMap::new();
    let mut used: std::collections::HashSet<&str> = std::collections::HashSet::new();
    search(
        0,
        &order,
        &ca,
        &classes_b,
        &blank_triples,
        b,
        &mut map,
        &mut used,
    )
}

#[allow(clippy::too_many_arguments)]
fn search<'a>(
    depth: usize,
    order: &[&'a str],
    ca: &HashMap<String, Vec<String>>,
    classes_b: &BTreeMap<&Vec<String>, Vec<&'a str>>,
    triples: &[&Triple],
    b: &Graph,
    map: &mut HashMap<&'a str, &'a str>,
    used: &mut std::collections::HashSet<&'a str>,
) -> bool {
    if depth == order.len() {
        return true;
    }
    let node = order[depth];
    for &cand in &classes_b[&ca[node]] {
        if used.contains(cand) {
            continue;
        }
        map.insert(node, cand);
        used.insert(cand);
        let consistent = triples.iter().all(|t| match rename(t, map) {
            Some(r) => b.contains(&r),
            None => true,
        });
        if consistent && search(depth + 1, order, ca, classes_b, triples, b, map, used) {
            return true;
        }
        map.remove(node);
        used.remove(cand);
    }
    false
}
