//! Batch membership runs over a corpus of ontologies.

use std::path::PathBuf;

use thiserror::Error;

pub mod batch;
pub mod corpus;
pub mod fetch;
pub mod report;

pub use batch::{
    analyse, parse_document, run_batch, run_batch_with, Analysis, BatchConfig, EntryResult,
    RunReport,
};
pub use corpus::{
    format_for, load_corpus, parse_manifest, read_manifest, scan_directory, CorpusEntry, Source,
    SourceFormat,
};
pub use fetch::{FetchError, Fetcher};
pub use report::{emit_report, fraction_line, ReportFormat, RunJson};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Manifest {
        path: String,
        line: usize,
        message: String,
    },
}
