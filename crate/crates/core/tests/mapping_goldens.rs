use std::fs;
use std::path::PathBuf;

use opa_core::dl_mapping::{extract_axioms, render_dl, Renderer, Style};
use opa_core::parse_turtle;

fn golden_files() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/mapping");
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "ttl"))
        .collect();
    paths.sort();
    paths
}

fn headers<'a>(text: &'a str, key: &str) -> Vec<&'a str> {
    text.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(':')))
        .map(str::trim)
        .collect()
}

#[test]
fn at_least_thirty_rows() {
    assert!(golden_files().len() >= 30);
}

#[test]
fn golden_renderings() {
    for path in golden_files() {
        let text = fs::read_to_string(&path).unwrap();
        let (graph, prefixes) = parse_turtle(&text, None).unwrap();
        let report = extract_axioms(&graph).unwrap();
        let mut got: Vec<String> = report
            .axioms
            .iter()
            .map(|a| render_dl(a, Some(&prefixes)))
            .collect();
        let mut want: Vec<String> = headers(&text, "expect")
            .into_iter()
            .map(str::to_owned)
            .collect();
        got.sort();
        want.sort();
        assert_eq!(got, want, "{}", path.display());
        let kind = headers(&text, "axiom")[0];
        assert!(
            report.axioms.iter().any(|a| a.kind() == kind),
            "{}: no {kind}",
            path.display()
        );
        assert!(
            report.unmapped.is_empty(),
            "{}: unmapped {:?}",
            path.display(),
            report.unmapped
        );
    }
}

#[test]
fn partition_covers_every_triple() {
    let corpus = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus");
    let mut paths = golden_files();
    paths.extend(
        fs::read_dir(corpus)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "ttl")),
    );
    for path in paths {
        let (graph, _) = parse_turtle(&fs::read_to_string(&path).unwrap(), None).unwrap();
        let r = extract_axioms(&graph).unwrap();
        assert_eq!(
            r.consumed.len() + r.scaffolding.len() + r.unmapped.len(),
            graph.len(),
            "{}",
            path.display()
        );
        let mut all: Vec<_> = r
            .consumed
            .iter()
            .chain(&r.scaffolding)
            .chain(&r.unmapped)
            .cloned()
            .collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), graph.len(), "{}", path.display());
    }
}

#[test]
fn ascii_rendering_has_no_unicode() {
    for path in golden_files() {
        let (graph, prefixes) = parse_turtle(&fs::read_to_string(&path).unwrap(), None).unwrap();
        let renderer = Renderer::new(Some(&prefixes), Style::Ascii);
        for a in extract_axioms(&graph).unwrap().axioms {
            let s = renderer.axiom(&a);
            assert!(s.is_ascii(), "{}: {s}", path.display());
        }
    }
}

#[test]
fn annotations_are_unmapped() {
    let (graph, _) = parse_turtle(
        "@prefix : <http://example.org/t#> .\n@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n:C rdfs:label \"C\" ; rdfs:subClassOf :D .",
        None,
    )
    .unwrap();
    let r = extract_axioms(&graph).unwrap();
    assert_eq!(r.axioms.len(), 1);
    assert_eq!(r.unmapped.len(), 1);
}
