use std::fmt;
use std::str::FromStr;

use opa_core::profile_checker::ViolationRecord;
use serde::{Deserialize, Serialize};

use crate::batch::RunReport;
use crate::corpus::SourceFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryJson {
    pub id: String,
    pub source: String,
    pub format: SourceFormat,
    pub parsed: bool,
    pub error: Option<String>,
    pub triples: Option<usize>,
    pub member_direct: Option<bool>,
    pub member_query: Option<bool>,
    pub divergence: Option<bool>,
    pub violations: Vec<ViolationRecord>,
    pub query_violations: Vec<ViolationRecord>,
    pub letters: Vec<String>,
    pub dl_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunJson {
    pub total: usize,
    pub parsed: usize,
    pub unreadable: usize,
    pub member_direct: usize,
    pub member_query: usize,
    pub divergent: usize,
    pub member_fraction_direct: Option<f64>,
    pub member_fraction_query: Option<f64>,
    pub entries: Vec<EntryJson>,
}

impl RunJson {
    pub fn new(report: &RunReport) -> Self {
        let entries = report
            .entries
            .iter()
            .map(|e| {
                let mut row = EntryJson {
                    id: e.entry.id.clone(),
                    source: e.entry.source.to_string(),
                    format: e.entry.format,
                    parsed: e.parsed(),
                    error: None,
                    triples: None,
                    member_direct: None,
                    member_query: None,
                    divergence: None,
                    violations: Vec::new(),
                    query_violations: Vec::new(),
                    letters: Vec::new(),
                    dl_name: None,
                };
                match &e.outcome {
                    Ok(a) => {
                        row.triples = Some(a.triples);
                        row.member_direct = Some(a.report.member_direct);
                        row.member_query = Some(a.report.member_query);
                        row.divergence = Some(a.report.divergence);
                        row.violations = a.report.violations.clone();
                        row.query_violations = a.report.query_violations.clone();
                        row.letters = a.report.letters.clone();
                        row.dl_name = Some(a.report.dl_name.clone());
                    }
                    Err(reason) => row.error = Some(reason.clone()),
                }
                row
            })
            .collect();
        RunJson {
            total: report.entries.len(),
            parsed: report.parsed_count,
            unreadable: report.unreadable_count,
            member_direct: report.member_count_direct,
            member_query: report.member_count_query,
            divergent: report.divergence_count,
            member_fraction_direct: report.member_fraction_direct,
            member_fraction_query: report.member_fraction_query,
            entries,
        }
    }
}

fn rules_fired(row: &EntryJson) -> String {
    let mut rules: Vec<&str> = row.violations.iter().map(|v| v.rule.as_str()).collect();
    rules.dedup();
    rules.join(" ")
}

fn flag(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "true",
        Some(false) => "false",
        None => "",
    }
}

/// `member (direct): 6/20 (30.0%)`, or a note when nothing parsed.
pub fn fraction_line(label: &str, members: usize, parsed: usize) -> String {
    if parsed == 0 {
        format!("member ({label}): 0/0 (undefined)")
    } else {
        format!(
            "member ({label}): {members}/{parsed} ({:.1}%)",
            100.0 * members as f64 / parsed as f64
        )
    }
}

pub fn emit_report(report: &RunReport, format: ReportFormat) -> String {
    let run = RunJson::new(report);
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&run).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "id",
                "parsed",
                "member_direct",
                "member_query",
                "divergence",
                "rules_fired",
                "letters",
            ])
            .expect("in-memory write");
            for row in &run.entries {
                let parsed = if row.parsed { "true" } else { "false" };
                let rules = rules_fired(row);
                let letters = row.letters.join(" ");
                w.write_record([
                    row.id.as_str(),
                    parsed,
                    flag(row.member_direct),
                    flag(row.member_query),
                    flag(row.divergence),
                    rules.as_str(),
                    letters.as_str(),
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 csv")
        }
        ReportFormat::Markdown => markdown(&run),
    }
}

fn cell(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

fn markdown(run: &RunJson) -> String {
    let mut out = String::from("| ID | Source | Triples | Member (direct) | Member (query) | Divergence | Rules fired | DL |\n");
    out.push_str("|---|---|---:|:---:|:---:|:---:|---|---|\n");
    for row in &run.entries {
        let id = if row.member_direct == Some(true) {
            format!("**{}**", cell(&row.id))
        } else {
            cell(&row.id)
        };
        let yes_no = |b: Option<bool>| match b {
            Some(true) => "yes",
            Some(false) => "no",
            None => "",
        };
        match &row.error {
            Some(reason) => out.push_str(&format!(
                "| {id} | {} | | | | | unreadable: {} | |\n",
                cell(&row.source),
                cell(reason)
            )),
            None => out.push_str(&format!(
                "| {id} | {} | {} | {} | {} | {} | {} | {} |\n",
                cell(&row.source),
                row.triples.unwrap_or(0),
                yes_no(row.member_direct),
                yes_no(row.member_query),
                if row.divergence == Some(true) {
                    "yes"
                } else {
                    ""
                },
                rules_fired(row),
                row.dl_name.as_deref().unwrap_or("")
            )),
        }
    }
    out.push('\n');
    out.push_str(&format!(
        "{}\n",
        fraction_line("direct", run.member_direct, run.parsed)
    ));
    out.push_str(&format!(
        "{}\n",
        fraction_line("query", run.member_query, run.parsed)
    ));
    out.push_str(&format!("unreadable: {}\n", run.unreadable));
    out
}
