use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use opa_harness::{
    emit_report, load_corpus, run_batch, run_batch_with, BatchConfig, CorpusEntry, Fetcher,
    ReportFormat, RunJson, Source,
};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus")
}

fn config(jobs: usize, cache: &Path) -> BatchConfig {
    BatchConfig {
        jobs,
        timeout: Duration::from_secs(30),
        offline: true,
        cache_dir: cache.to_path_buf(),
    }
}

#[test]
fn bundled_corpus_is_thirty_percent() {
    let cache = tempfile::tempdir().unwrap();
    let corpus = load_corpus(&corpus_dir().join("manifest.tsv")).unwrap();
    assert_eq!(corpus.len(), 20);
    let report = run_batch(&corpus, &config(4, cache.path()));
    assert_eq!(report.parsed_count, 20);
    assert_eq!(report.member_count_direct, 6);
    assert_eq!(report.member_fraction_direct, Some(0.3));
    assert_eq!(report.divergence_count, 2);
}

#[test]
fn parallelism_does_not_change_reports() {
    let cache = tempfile::tempdir().unwrap();
    let corpus = load_corpus(&corpus_dir()).unwrap();
    for format in [
        ReportFormat::Json,
        ReportFormat::Csv,
        ReportFormat::Markdown,
    ] {
        let one = emit_report(&run_batch(&corpus, &config(1, cache.path())), format);
        let many = emit_report(&run_batch(&corpus, &config(8, cache.path())), format);
        assert_eq!(one, many, "{format}");
    }
}

#[test]
fn directory_and_manifest_agree() {
    let cache = tempfile::tempdir().unwrap();
    let by_dir = run_batch(
        &load_corpus(&corpus_dir()).unwrap(),
        &config(2, cache.path()),
    );
    let by_manifest = run_batch(
        &load_corpus(&corpus_dir().join("manifest.tsv")).unwrap(),
        &config(2, cache.path()),
    );
    let ids = |r: &opa_harness::RunReport| {
        r.entries
            .iter()
            .map(|e| e.entry.id.clone())
            .collect::<Vec<_>>()
    };
    assert_eq!(ids(&by_dir), ids(&by_manifest));
    assert_eq!(by_dir.member_count_direct, by_manifest.member_count_direct);
}

#[test]
fn json_round_trips() {
    let cache = tempfile::tempdir().unwrap();
    let report = run_batch(
        &load_corpus(&corpus_dir()).unwrap(),
        &config(2, cache.path()),
    );
    let text = emit_report(&report, ReportFormat::Json);
    let parsed: RunJson = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed, RunJson::new(&report));
    let recomputed = parsed
        .entries
        .iter()
        .filter(|e| e.member_direct == Some(true))
        .count() as f64
        / parsed.entries.iter().filter(|e| e.parsed).count() as f64;
    assert_eq!(parsed.member_fraction_direct, Some(recomputed));
}

#[test]
fn csv_has_one_row_per_entry() {
    let cache = tempfile::tempdir().unwrap();
    let report = run_batch(
        &load_corpus(&corpus_dir()).unwrap(),
        &config(2, cache.path()),
    );
    let text = emit_report(&report, ReportFormat::Csv);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        [
            "id",
            "parsed",
            "member_direct",
            "member_query",
            "divergence",
            "rules_fired",
            "letters"
        ]
    );
    assert_eq!(reader.records().count(), 20);
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn markdown_marks_exactly_the_members() {
    let cache = tempfile::tempdir().unwrap();
    let report = run_batch(
        &load_corpus(&corpus_dir()).unwrap(),
        &config(2, cache.path()),
    );
    let text = emit_report(&report, ReportFormat::Markdown);
    let marked: BTreeSet<String> = text
        .lines()
        .filter_map(|l| l.strip_prefix("| **"))
        .map(|l| l.split("**").next().unwrap().to_owned())
        .collect();
    let members: BTreeSet<String> = report
        .entries
        .iter()
        .filter(|e| e.outcome.as_ref().is_ok_and(|a| a.verdicts.direct.member))
        .map(|e| e.entry.id.clone())
        .collect();
    assert_eq!(marked, members);
    assert!(text.contains("member (direct): 6/20 (30.0%)"));
}

#[test]
fn empty_corpus_has_no_fraction() {
    let cache = tempfile::tempdir().unwrap();
    let report = run_batch(&[], &config(1, cache.path()));
    assert_eq!(report.member_fraction_direct, None);
    assert_eq!(report.unreadable_count, 0);
    let json: serde_json::Value =
        serde_json::from_str(&emit_report(&report, ReportFormat::Json)).unwrap();
    assert!(json["member_fraction_direct"].is_null());
}

#[test]
fn empty_ontology_is_a_member() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.ttl"), "").unwrap();
    let report = run_batch(&load_corpus(dir.path()).unwrap(), &config(1, dir.path()));
    assert_eq!(report.member_fraction_direct, Some(1.0));
}

#[test]
fn unreadable_entries_do_not_stop_the_batch() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("a.ttl"),
        "@prefix : <http://e/> . :a :b :c .",
    )
    .unwrap();
    fs::write(dir.path().join("b.ttl"), "this is not turtle").unwrap();
    fs::write(
        dir.path().join("c.owl"),
        "<?xml version=\"1.0\"?>\n<rdf:RDF/>",
    )
    .unwrap();
    fs::write(dir.path().join("d.rdf"), "<rdf:RDF/>").unwrap();
    let report = run_batch(&load_corpus(dir.path()).unwrap(), &config(2, dir.path()));
    assert_eq!(report.parsed_count, 1);
    assert_eq!(report.unreadable_count, 3);
    for e in &report.entries[2..] {
        assert!(e
            .outcome
            .as_ref()
            .unwrap_err()
            .contains("RDF/XML is not supported"));
    }
    assert!(report.entries[1]
        .outcome
        .as_ref()
        .unwrap_err()
        .starts_with("b:1:"));
}

#[test]
fn slow_entries_time_out() {
    let dir = tempfile::tempdir().unwrap();
    let mut big = String::from("@prefix : <http://e/> .\n");
    for i in 0..200_000 {
        big.push_str(&format!(":s{i} :p :o{i} .\n"));
    }
    fs::write(dir.path().join("big.ttl"), big).unwrap();
    let cfg = BatchConfig {
        timeout: Duration::from_millis(1),
        ..config(1, dir.path())
    };
    let report = run_batch(&load_corpus(dir.path()).unwrap(), &cfg);
    assert!(report.entries[0]
        .outcome
        .as_ref()
        .unwrap_err()
        .starts_with("timed out"));
}

/// Serves `/ok.ttl` and answers 404 for anything else.
fn serve() -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let mut stream = stream.unwrap();
            counter.fetch_add(1, Ordering::SeqCst);
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request = String::new();
            reader.read_line(&mut request).unwrap();
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
            }
            let (status, body) = if request.starts_with("GET /ok.ttl") {
                ("200 OK", "@prefix : <http://e/> . :a a :C .")
            } else {
                ("404 Not Found", "")
            };
            let _ = write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (format!("http://{addr}"), hits)
}

#[test]
fn fetch_uses_the_cache() {
    let (base, hits) = serve();
    let cache = tempfile::tempdir().unwrap();
    let fetcher = Fetcher::new(cache.path(), false);
    let url = format!("{base}/ok.ttl");
    let first = fetcher.fetch(&url).unwrap();
    let second = fetcher.fetch(&url).unwrap();
    assert_eq!(first, second);
    assert_eq!(fetcher.requests(), 1);
    assert_eq!(hits.load(Ordering::SeqCst), 1);
    let offline = Fetcher::new(cache.path(), true);
    assert_eq!(offline.fetch(&url).unwrap(), first);
}

#[test]
fn http_errors_mark_entries_unreadable() {
    let (base, _) = serve();
    let cache = tempfile::tempdir().unwrap();
    let corpus = vec![
        CorpusEntry::new("missing", Source::Url(format!("{base}/missing.ttl"))),
        CorpusEntry::new("ok", Source::Url(format!("{base}/ok.ttl"))),
    ];
    let cfg = BatchConfig {
        offline: false,
        ..config(2, cache.path())
    };
    let report = run_batch(&corpus, &cfg);
    assert_eq!(
        report.entries[0].outcome.as_ref().unwrap_err(),
        "HTTP status 404"
    );
    assert!(report.entries[1].parsed());
}

#[test]
fn offline_cold_cache_is_unreadable() {
    let cache = tempfile::tempdir().unwrap();
    let fetcher = Fetcher::new(cache.path(), true);
    let corpus = vec![CorpusEntry::new(
        "x",
        Source::Url("http://127.0.0.1:9/x.ttl".into()),
    )];
    let report = run_batch_with(&corpus, &config(1, cache.path()), &fetcher);
    assert!(report.entries[0]
        .outcome
        .as_ref()
        .unwrap_err()
        .contains("offline"));
    assert_eq!(fetcher.requests(), 0);
}

#[test]
fn api_key_is_substituted_but_not_cached_by_value() {
    let (base, _) = serve();
    let cache = tempfile::tempdir().unwrap();
    let url = format!("{base}/ok.ttl?apikey={{API_KEY}}");
    let without = Fetcher::new(cache.path(), false).with_api_key(None);
    assert!(without
        .fetch(&url)
        .unwrap_err()
        .to_string()
        .contains("OPA_API_KEY"));
    let with = Fetcher::new(cache.path(), false).with_api_key(Some("secret".into()));
    // The stub server only matches the path prefix, so any key works.
    with.fetch(&url).unwrap();
    assert!(with.cache_path(&url).exists());
    for entry in fs::read_dir(cache.path()).unwrap() {
        assert!(!entry
            .unwrap()
            .file_name()
            .to_string_lossy()
            .contains("secret"));
    }
}
