use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Turtle,
    Ntriples,
    Unreadable,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Source {
    Path(PathBuf),
    Url(String),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Path(p) => write!(f, "{}", p.display()),
            Source::Url(u) => f.write_str(u),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CorpusEntry {
    pub id: String,
    pub source: Source,
    pub format: SourceFormat,
}

/// Guess the format from a file name or URL path.
pub fn format_for(name: &str) -> SourceFormat {
    let path = name
        .split(['?', '#'])
        .next()
        .unwrap_or(name)
        .to_ascii_lowercase();
    if path.ends_with(".nt") {
        SourceFormat::Ntriples
    } else if path.ends_with(".rdf") || path.ends_with(".xml") {
        SourceFormat::Unreadable
    } else {
        SourceFormat::Turtle
    }
}

fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}

impl CorpusEntry {
    pub fn new(id: impl Into<String>, source: Source) -> Self {
        let format = match &source {
            Source::Path(p) => format_for(&p.to_string_lossy()),
            Source::Url(u) => format_for(u),
        };
        CorpusEntry {
            id: id.into(),
            source,
            format,
        }
    }
}

/// Parse `id<TAB>source` lines. Relative paths resolve against `base_dir`.
pub fn parse_manifest(
    text: &str,
    base_dir: &Path,
    name: &str,
) -> Result<Vec<CorpusEntry>, HarnessError> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let bad = |message: String| HarnessError::Manifest {
            path: name.to_owned(),
            line: index + 1,
            message,
        };
        let (id, source) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected `id<TAB>source`".to_owned()))?;
        let (id, source) = (id.trim(), source.trim());
        if id.is_empty() || source.is_empty() {
            return Err(bad("empty id or source".to_owned()));
        }
        if !seen.insert(id.to_owned()) {
            return Err(bad(format!("duplicate id `{id}`")));
        }
        let source = if is_url(source) {
            Source::Url(source.to_owned())
        } else {
            Source::Path(base_dir.join(source))
        };
        entries.push(CorpusEntry::new(id, source));
    }
    Ok(entries)
}

pub fn read_manifest(path: &Path) -> Result<Vec<CorpusEntry>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, base, &path.display().to_string())
}

const ONTOLOGY_EXTENSIONS: &[&str] = &["ttl", "nt", "owl", "rdf", "xml"];

/// Every ontology file directly inside `dir`, with the file stem as id.
pub fn scan_directory(dir: &Path) -> Result<Vec<CorpusEntry>, HarnessError> {
    let io = |source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut entries = Vec::new();
    for item in fs::read_dir(dir).map_err(io)? {
        let path = item.map_err(io)?.path();
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        if path.is_file() && ONTOLOGY_EXTENSIONS.contains(&ext.as_str()) {
            let id = path
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            entries.push(CorpusEntry::new(id, Source::Path(path)));
        }
    }
    entries.sort_by(|a, b| {
        a.id.cmp(&b.id)
            .then_with(|| a.source.to_string().cmp(&b.source.to_string()))
    });
    let mut seen = HashSet::new();
    for e in &mut entries {
        if !seen.insert(e.id.clone()) {
            let ext = match &e.source {
                Source::Path(p) => p
                    .extension()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned(),
                Source::Url(_) => String::new(),
            };
            e.id = format!("{}.{ext}", e.id);
        }
    }
    Ok(entries)
}

/// A directory is scanned; a file is read as a manifest.
pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>, HarnessError> {
    if path.is_dir() {
        scan_directory(path)
    } else {
        read_manifest(path)
    }
}
