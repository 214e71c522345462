use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use opa_core::dl_mapping::{expressivity_letters, Letter};
use opa_core::profile_checker::{check_both, DualVerdict, Report};
use opa_core::rdf_io::{parse_ntriples, parse_turtle, PrefixMap};
use opa_core::Graph;
use rayon::prelude::*;

use crate::corpus::{CorpusEntry, Source, SourceFormat};
use crate::fetch::Fetcher;

#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub jobs: usize,
    /// Budget for parsing and checking one entry.
    pub timeout: Duration,
    pub offline: bool,
    pub cache_dir: PathBuf,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            jobs: thread::available_parallelism().map_or(1, |n| n.get()),
            timeout: Duration::from_secs(30),
            offline: false,
            cache_dir: crate::fetch::default_cache_dir(None),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub triples: usize,
    pub verdicts: DualVerdict,
    pub letters: BTreeSet<Letter>,
    pub report: Report,
}

#[derive(Debug, Clone)]
pub struct EntryResult {
    pub entry: CorpusEntry,
    /// `Err` carries the reason the entry is unreadable.
    pub outcome: Result<Analysis, String>,
}

impl EntryResult {
    pub fn parsed(&self) -> bool {
        self.outcome.is_ok()
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub entries: Vec<EntryResult>,
    pub parsed_count: usize,
    pub unreadable_count: usize,
    pub member_count_direct: usize,
    pub member_count_query: usize,
    pub divergence_count: usize,
    /// Over parsed entries; `None` when nothing parsed.
    pub member_fraction_direct: Option<f64>,
    pub member_fraction_query: Option<f64>,
}

impl RunReport {
    pub fn from_entries(mut entries: Vec<EntryResult>) -> Self {
        entries.sort_by(|a, b| a.entry.id.cmp(&b.entry.id));
        let analyses: Vec<&Analysis> = entries
            .iter()
            .filter_map(|e| e.outcome.as_ref().ok())
            .collect();
        let parsed = analyses.len();
        let direct = analyses.iter().filter(|a| a.verdicts.direct.member).count();
        let query = analyses.iter().filter(|a| a.verdicts.query.member).count();
        let divergent = analyses.iter().filter(|a| a.verdicts.divergence).count();
        let fraction = |n: usize| (parsed > 0).then(|| n as f64 / parsed as f64);
        RunReport {
            unreadable_count: entries.len() - parsed,
            entries,
            parsed_count: parsed,
            member_count_direct: direct,
            member_count_query: query,
            divergence_count: divergent,
            member_fraction_direct: fraction(direct),
            member_fraction_query: fraction(query),
        }
    }
}

pub const RDF_XML_MESSAGE: &str =
    "RDF/XML is not supported; convert the ontology to Turtle or N-Triples first (for example with `riot --output=turtle`)";

fn looks_like_xml(text: &str) -> bool {
    let head = text.trim_start_matches('\u{feff}').trim_start();
    head.starts_with("<?xml") || head.starts_with("<rdf:RDF") || head.starts_with("<!DOCTYPE")
}

fn read_source(entry: &CorpusEntry, fetcher: &Fetcher) -> Result<Vec<u8>, String> {
    match &entry.source {
        Source::Path(p) => fs::read(p).map_err(|e| format!("cannot read {}: {e}", p.display())),
        Source::Url(u) => fetcher.fetch(u).map_err(|e| e.to_string()),
    }
}

fn base_iri(source: &Source) -> Option<String> {
    match source {
        Source::Url(u) => Some(u.clone()),
        Source::Path(p) => fs::canonicalize(p)
            .ok()
            .map(|abs| format!("file://{}", abs.to_string_lossy())),
    }
}

/// Decode and parse one document. `name` prefixes diagnostics.
pub fn parse_document(
    name: &str,
    format: SourceFormat,
    base: Option<&str>,
    bytes: &[u8],
) -> Result<(Graph, PrefixMap), String> {
    if format == SourceFormat::Unreadable {
        return Err(RDF_XML_MESSAGE.to_owned());
    }
    let text = std::str::from_utf8(bytes).map_err(|e| format!("{name}: not UTF-8: {e}"))?;
    if looks_like_xml(text) {
        return Err(RDF_XML_MESSAGE.to_owned());
    }
    match format {
        SourceFormat::Ntriples => parse_ntriples(text).map(|g| (g, PrefixMap::default())),
        _ => parse_turtle(text, base),
    }
    .map_err(|d| d.render(name))
}

/// Parse and check one document.
pub fn analyse(
    id: &str,
    source: &Source,
    format: SourceFormat,
    bytes: &[u8],
) -> Result<Analysis, String> {
    let (graph, _) = parse_document(id, format, base_iri(source).as_deref(), bytes)?;
    let verdicts = check_both(&graph);
    let report = Report::new(source.to_string(), &graph, &verdicts);
    Ok(Analysis {
        triples: graph.len(),
        letters: expressivity_letters(&graph),
        verdicts,
        report,
    })
}

fn process(entry: &CorpusEntry, fetcher: &Fetcher, timeout: Duration) -> EntryResult {
    let outcome = read_source(entry, fetcher).and_then(|bytes| {
        let (tx, rx) = mpsc::channel();
        let (id, source, format) = (entry.id.clone(), entry.source.clone(), entry.format);
        thread::spawn(move || {
            let _ = tx.send(analyse(&id, &source, format, &bytes));
        });
        rx.recv_timeout(timeout)
            .unwrap_or_else(|_| Err(format!("timed out after {} s", timeout.as_secs_f64())))
    });
    if let Err(reason) = &outcome {
        log::warn!("{}: {reason}", entry.id);
    }
    EntryResult {
        entry: entry.clone(),
        outcome,
    }
}

/// Check every entry, concurrently when `jobs > 1`.
pub fn run_batch(corpus: &[CorpusEntry], config: &BatchConfig) -> RunReport {
    let fetcher = Fetcher::new(&config.cache_dir, config.offline);
    run_batch_with(corpus, config, &fetcher)
}

pub fn run_batch_with(
    corpus: &[CorpusEntry],
    config: &BatchConfig,
    fetcher: &Fetcher,
) -> RunReport {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .expect("thread pool");
    let entries = pool.install(|| {
        corpus
            .par_iter()
            .map(|e| process(e, fetcher, config.timeout))
            .collect::<Vec<_>>()
    });
    RunReport::from_entries(entries)
}
