//! Browser bindings: membership check, DL rendering and ad-hoc queries over
//! a Turtle document held in memory.

use opa_core::dl_mapping::{extract_axioms, Renderer, Style};
use opa_core::profile_checker::{check_both, Report};
use opa_core::sparql::{parse_query, solution_columns, Evaluator};
use opa_core::{parse_turtle, Graph, PrefixMap};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn load(turtle: &str) -> Result<(Graph, PrefixMap), String> {
    parse_turtle(turtle, None).map_err(|d| d.render("input"))
}

/// Membership report as JSON.
pub fn check_json(turtle: &str) -> Result<String, String> {
    let (graph, _) = load(turtle)?;
    let report = Report::new("input", &graph, &check_both(&graph));
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

/// Extracted axioms in DL syntax, one per line.
pub fn render_text(turtle: &str, ascii: bool) -> Result<String, String> {
    let (graph, prefixes) = load(turtle)?;
    let report = extract_axioms(&graph).map_err(|e| e.to_string())?;
    let style = if ascii { Style::Ascii } else { Style::Unicode };
    let r = Renderer::new(Some(&prefixes), style);
    Ok(report.axioms.iter().map(|a| r.axiom(a) + "\n").collect())
}

/// `{"columns": [...], "rows": [[...]]}` with unbound cells as null.
pub fn query_json(turtle: &str, query: &str) -> Result<String, String> {
    let (graph, _) = load(turtle)?;
    let algebra = parse_query(query).map_err(|e| format!("query:{e}"))?;
    let solutions: Vec<_> = Evaluator::new(&graph).solutions(&algebra).collect();
    let columns = solution_columns(&algebra, &solutions);
    let rows: Vec<Vec<Option<String>>> = solutions
        .iter()
        .map(|s| {
            columns
                .iter()
                .map(|v| s.get(v).map(|t| t.to_string()))
                .collect()
        })
        .collect();
    let names: Vec<&str> = columns.iter().map(|v| v.name()).collect();
    Ok(json!({ "columns": names, "rows": rows }).to_string())
}

#[wasm_bindgen]
pub fn check(turtle: &str) -> Result<String, JsError> {
    check_json(turtle).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn render(turtle: &str, ascii: bool) -> Result<String, JsError> {
    render_text(turtle, ascii).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn query(turtle: &str, query: &str) -> Result<String, JsError> {
    query_json(turtle, query).map_err(|e| JsError::new(&e))
}

/// The embedded membership query, for prefilling the query box.
#[wasm_bindgen]
pub fn builtin_query() -> String {
    opa_core::profile_checker::embedded_query_text().to_owned()
}
