use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use opa_core::dl_mapping::{dl_name, extract_axioms, Renderer, Style};
use opa_core::profile_checker::{
    check_both, check_direct, check_query, embedded_query, Report, Verdict,
};
use opa_core::sparql::{parse_query, solution_columns, Evaluator};
use opa_core::{Graph, PrefixMap, Term};
use opa_harness::{
    emit_report, fetch, format_for, fraction_line, load_corpus, parse_document, run_batch,
    BatchConfig, ReportFormat, SourceFormat,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "opa", version, about = "Ontology profile analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide DL<∀₀^π> membership. Exit 0 for members, 1 otherwise.
    Check {
        /// Ontology file, or `-` for stdin (read as Turtle).
        path: String,
        #[arg(long, value_enum, default_value_t = EngineArg::Both)]
        engine: EngineArg,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        #[arg(long)]
        ascii: bool,
    },
    /// Count extracted axioms, unmapped triples and expressivity letters.
    Inventory {
        path: String,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        #[arg(long)]
        ascii: bool,
    },
    /// Evaluate a SPARQL query and print the solutions as a table.
    Query {
        path: String,
        /// Query file; omit with `--builtin`.
        #[arg(required_unless_present = "builtin", conflicts_with = "builtin")]
        query: Option<PathBuf>,
        /// Run the embedded membership query.
        #[arg(long)]
        builtin: bool,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Print every extracted axiom in DL syntax, one per line.
    Render {
        path: String,
        #[arg(long)]
        ascii: bool,
    },
    /// Check every ontology of a manifest or directory and write reports.
    Batch {
        /// Manifest file (`id<TAB>path-or-url` per line) or directory.
        corpus: PathBuf,
        /// Directory receiving `report.<ext>` files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Report formats, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "json")]
        format: Vec<ReportFormat>,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        /// Never touch the network; uncached URLs become unreadable.
        #[arg(long)]
        offline: bool,
        #[arg(long, env = fetch::CACHE_DIR_VAR)]
        cache_dir: Option<PathBuf>,
        /// Per-entry budget in seconds.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Direct,
    Query,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn style(ascii: bool) -> Style {
    if ascii {
        Style::Ascii
    } else {
        Style::Unicode
    }
}

struct Document {
    name: String,
    graph: Graph,
    prefixes: PrefixMap,
}

fn load(path: &str) -> Result<Document> {
    let (name, bytes, format, base) = if path == "-" {
        let mut buf = Vec::new();
        io::stdin()
            .read_to_end(&mut buf)
            .context("cannot read stdin")?;
        ("<stdin>".to_owned(), buf, SourceFormat::Turtle, None)
    } else {
        let bytes = fs::read(path).with_context(|| format!("cannot read {path}"))?;
        let base = fs::canonicalize(path)
            .ok()
            .map(|abs| format!("file://{}", abs.to_string_lossy()));
        (path.to_owned(), bytes, format_for(path), base)
    };
    let (graph, prefixes) =
        parse_document(&name, format, base.as_deref(), &bytes).map_err(|e| anyhow!(e))?;
    Ok(Document {
        name,
        graph,
        prefixes,
    })
}

fn print_verdict(
    out: &mut impl Write,
    verdict: &Verdict,
    doc: &Document,
    style: Style,
) -> io::Result<()> {
    let r = Renderer::new(Some(&doc.prefixes), style);
    let status = if verdict.member {
        "member"
    } else {
        "not a member"
    };
    writeln!(out, "{} engine: {status}", verdict.engine)?;
    for v in &verdict.violations {
        writeln!(
            out,
            "  {} at {}: {}",
            v.rule.as_str(),
            r.name(&v.focus),
            v.message
        )?;
        for t in &v.evidence {
            writeln!(
                out,
                "    {} {} {}",
                r.name(t.subject()),
                r.name(t.predicate()),
                r.name(t.object())
            )?;
        }
    }
    Ok(())
}

fn cmd_check(path: &str, engine: EngineArg, format: OutputFormat, ascii: bool) -> Result<u8> {
    let doc = load(path)?;
    let mut out = io::stdout().lock();
    let member = match engine {
        EngineArg::Both => {
            let dual = check_both(&doc.graph);
            match format {
                OutputFormat::Json => {
                    let report = Report::new(doc.name.clone(), &doc.graph, &dual);
                    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
                }
                OutputFormat::Text => {
                    writeln!(out, "{}", doc.name)?;
                    print_verdict(&mut out, &dual.direct, &doc, style(ascii))?;
                    print_verdict(&mut out, &dual.query, &doc, style(ascii))?;
                    writeln!(out, "divergence: {}", dual.divergence)?;
                }
            }
            dual.direct.member
        }
        single => {
            let verdict = if single == EngineArg::Direct {
                check_direct(&doc.graph)
            } else {
                check_query(&doc.graph)
            };
            match format {
                OutputFormat::Json => {
                    let body = json!({
                        "source": doc.name,
                        "engine": verdict.engine,
                        "member": verdict.member,
                        "violations": verdict.violations.iter().map(|v| v.to_record()).collect::<Vec<_>>(),
                    });
                    writeln!(out, "{}", serde_json::to_string_pretty(&body)?)?;
                }
                OutputFormat::Text => {
                    writeln!(out, "{}", doc.name)?;
                    print_verdict(&mut out, &verdict, &doc, style(ascii))?;
                }
            }
            verdict.member
        }
    };
    Ok(if member { 0 } else { 1 })
}

fn cmd_inventory(path: &str, format: OutputFormat, ascii: bool) -> Result<u8> {
    let doc = load(path)?;
    let report = extract_axioms(&doc.graph).map_err(|e| anyhow!("{}: {e}", doc.name))?;
    let r = Renderer::new(Some(&doc.prefixes), style(ascii));
    let counts = report.axiom_counts();
    let axioms: Vec<String> = report.axioms.iter().map(|a| r.axiom(a)).collect();
    let letters: Vec<String> = report.letters.iter().map(|l| l.to_string()).collect();
    let mut out = io::stdout().lock();
    match format {
        OutputFormat::Json => {
            let body = json!({
                "source": doc.name,
                "triples": doc.graph.len(),
                "axiom_count": report.axioms.len(),
                "axiom_counts": counts,
                "axioms": axioms,
                "consumed": report.consumed.len(),
                "scaffolding": report.scaffolding.len(),
                "unmapped": report.unmapped.len(),
                "letters": letters,
                "dl_name": dl_name(&report.letters),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&body)?)?;
        }
        OutputFormat::Text => {
            writeln!(out, "source: {}", doc.name)?;
            writeln!(out, "triples: {}", doc.graph.len())?;
            writeln!(out, "axioms: {}", report.axioms.len())?;
            for (kind, n) in &counts {
                writeln!(out, "  {kind}: {n}")?;
            }
            writeln!(out, "consumed: {}", report.consumed.len())?;
            writeln!(out, "scaffolding: {}", report.scaffolding.len())?;
            writeln!(out, "unmapped: {}", report.unmapped.len())?;
            writeln!(out, "letters: {}", letters.join(" "))?;
            writeln!(out, "dl: {}", dl_name(&report.letters))?;
            for a in &axioms {
                writeln!(out, "  {a}")?;
            }
        }
    }
    Ok(0)
}

fn cell(term: &Term, prefixes: &PrefixMap) -> String {
    match term {
        Term::Iri(iri) => match prefixes.shorten(iri) {
            Some((p, local)) => format!("{p}:{local}"),
            None => term.to_string(),
        },
        _ => term.to_string(),
    }
}

fn cmd_query(path: &str, query: Option<&Path>, builtin: bool, format: OutputFormat) -> Result<u8> {
    let doc = load(path)?;
    let parsed;
    let algebra = if builtin {
        embedded_query()
    } else {
        let qpath = query.ok_or_else(|| anyhow!("a query file or --builtin is required"))?;
        let text = fs::read_to_string(qpath)
            .with_context(|| format!("cannot read {}", qpath.display()))?;
        parsed = parse_query(&text).map_err(|e| anyhow!("{}:{e}", qpath.display()))?;
        &parsed
    };
    let evaluator = Evaluator::new(&doc.graph);
    let solutions: Vec<_> = evaluator.solutions(algebra).collect();
    let columns = solution_columns(algebra, &solutions);
    let rows: Vec<Vec<String>> = solutions
        .iter()
        .map(|s| {
            columns
                .iter()
                .map(|v| s.get(v).map(|t| cell(t, &doc.prefixes)).unwrap_or_default())
                .collect()
        })
        .collect();
    let mut out = io::stdout().lock();
    match format {
        OutputFormat::Json => {
            let body: Vec<serde_json::Map<String, serde_json::Value>> = solutions
                .iter()
                .map(|s| {
                    s.iter()
                        .map(|(v, t)| (v.name().to_owned(), json!(t.to_string())))
                        .collect()
                })
                .collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&body)?)?;
        }
        OutputFormat::Text => {
            let header: Vec<String> = columns.iter().map(|v| format!("?{}", v.name())).collect();
            let widths: Vec<usize> = (0..columns.len())
                .map(|i| {
                    rows.iter()
                        .map(|r| r[i].chars().count())
                        .chain([header[i].chars().count()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let line = |cells: &[String]| {
                cells
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:<w$}"))
                    .collect::<Vec<_>>()
                    .join(" | ")
                    .trim_end()
                    .to_owned()
            };
            writeln!(out, "{}", line(&header))?;
            writeln!(
                out,
                "{}",
                widths
                    .iter()
                    .map(|w| "-".repeat(*w))
                    .collect::<Vec<_>>()
                    .join("-+-")
            )?;
            for r in &rows {
                writeln!(out, "{}", line(r))?;
            }
            writeln!(
                out,
                "({} row{})",
                rows.len(),
                if rows.len() == 1 { "" } else { "s" }
            )?;
        }
    }
    Ok(0)
}

fn cmd_render(path: &str, ascii: bool) -> Result<u8> {
    let doc = load(path)?;
    let report = extract_axioms(&doc.graph).map_err(|e| anyhow!("{}: {e}", doc.name))?;
    let r = Renderer::new(Some(&doc.prefixes), style(ascii));
    let mut out = io::stdout().lock();
    for a in &report.axioms {
        writeln!(out, "{}", r.axiom(a))?;
    }
    Ok(0)
}

struct BatchArgs {
    corpus: PathBuf,
    out: PathBuf,
    formats: Vec<ReportFormat>,
    jobs: usize,
    offline: bool,
    cache_dir: Option<PathBuf>,
    timeout: f64,
}

fn cmd_batch(args: BatchArgs) -> Result<u8> {
    if !(args.timeout > 0.0 && args.timeout.is_finite()) {
        bail!("--timeout must be a positive number of seconds");
    }
    let corpus = load_corpus(&args.corpus)?;
    let config = BatchConfig {
        jobs: args.jobs.max(1),
        timeout: Duration::from_secs_f64(args.timeout),
        offline: args.offline,
        cache_dir: fetch::default_cache_dir(args.cache_dir.as_deref()),
    };
    let report = run_batch(&corpus, &config);
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut out = io::stdout().lock();
    for format in &args.formats {
        let file = args.out.join(format!("report.{}", format.extension()));
        fs::write(&file, emit_report(&report, *format))
            .with_context(|| format!("cannot write {}", file.display()))?;
        writeln!(out, "wrote {}", file.display())?;
    }
    writeln!(
        out,
        "{}",
        fraction_line("direct", report.member_count_direct, report.parsed_count)
    )?;
    writeln!(
        out,
        "{}",
        fraction_line("query", report.member_count_query, report.parsed_count)
    )?;
    writeln!(out, "divergent: {}", report.divergence_count)?;
    writeln!(out, "unreadable: {}", report.unreadable_count)?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check {
            path,
            engine,
            format,
            ascii,
        } => cmd_check(&path, engine, format, ascii),
        Command::Inventory {
            path,
            format,
            ascii,
        } => cmd_inventory(&path, format, ascii),
        Command::Query {
            path,
            query,
            builtin,
            format,
        } => cmd_query(&path, query.as_deref(), builtin, format),
        Command::Render { path, ascii } => cmd_render(&path, ascii),
        Command::Batch {
            corpus,
            out,
            format,
            jobs,
            offline,
            cache_dir,
            timeout,
        } => cmd_batch(BatchArgs {
            corpus,
            out,
            formats: format,
            jobs,
            offline,
            cache_dir,
            timeout,
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if e.downcast_ref::<io::Error>()
                .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
            {
                return ExitCode::from(0);
            }
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
