//! Turtle and N-Triples readers, canonical N-Triples writer.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::rdf_model::{Graph, GraphBuilder, Literal, Term, Triple};
use crate::vocab::{owl, rdf, rdfs, xsd};

/// Default cap on document size accepted by the parsers.
pub const DEFAULT_MAX_BYTES: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticKind {
    Syntax,
    Invariant,
    Limit,
}

/// A positioned parse error. Lines and columns are 1-based; columns count
/// characters.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub kind: DiagnosticKind,
}

impl ParseDiagnostic {
    /// `file:line:col: message`
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}:{}: {}", self.line, self.column, self.message)
    }
}

/// Prefix label to namespace IRI, plus an optional base IRI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixMap {
    prefixes: BTreeMap<String, String>,
    base: Option<String>,
}

impl Default for PrefixMap {
    fn default() -> Self {
        let prefixes = [
            ("rdf", rdf::NS),
            ("rdfs", rdfs::NS),
            ("owl", owl::NS),
            ("xsd", xsd::NS),
        ]
        .into_iter()
        .map(|(p, ns)| (p.to_owned(), ns.to_owned()))
        .collect();
        PrefixMap {
            prefixes,
            base: None,
        }
    }
}

impl PrefixMap {
    pub fn new() -> Self {
        PrefixMap::default()
    }

    pub fn insert(&mut self, prefix: impl Into<String>, namespace: impl Into<String>) {
        self.prefixes.insert(prefix.into(), namespace.into());
    }

    pub fn get(&self, prefix: &str) -> Option<&str> {
        self.prefixes.get(prefix).map(String::as_str)
    }

    pub fn expand(&self, prefix: &str, local: &str) -> Option<String> {
        self.get(prefix).map(|ns| format!("{ns}{local}"))
    }

    pub fn base(&self) -> Option<&str> {
        self.base.as_deref()
    }

    pub fn set_base(&mut self, base: Option<String>) {
        self.base = base;
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.prefixes.iter().map(|(p, n)| (p.as_str(), n.as_str()))
    }

    /// Shorten `iri` to `prefix:local` using the longest matching namespace.
    pub fn shorten(&self, iri: &str) -> Option<(String, String)> {
        self.prefixes
            .iter()
            .filter(|(_, ns)| {
                !ns.is_empty() && iri.len() > ns.len() && iri.starts_with(ns.as_str())
            })
            .max_by_key(|(_, ns)| ns.len())
            .map(|(p, ns)| (p.clone(), iri[ns.len()..].to_owned()))
            .filter(|(_, local)| is_simple_local(local))
    }
}

fn is_simple_local(local: &str) -> bool {
    !local.is_empty()
        && !local.ends_with('.')
        && local
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub base: Option<String>,
    pub max_bytes: usize,
    /// Namespace for blank node labels. Defaults to a digest of the document
    /// so that separate documents never share blank nodes while re-parsing the
    /// same bytes is reproducible.
    pub scope: Option<String>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            base: None,
            max_bytes: DEFAULT_MAX_BYTES,
            scope: None,
        }
    }
}

fn document_scope(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest[..4].iter().map(|b| format!("{b:02x}")).collect()
}

fn check_size(text: &str, max: usize) -> Result<(), ParseDiagnostic> {
    if text.len() > max {
        return Err(ParseDiagnostic {
            line: 1,
            column: 1,
            message: format!(
                "document of {} bytes exceeds the {max} byte limit",
                text.len()
            ),
            kind: DiagnosticKind::Limit,
        });
    }
    Ok(())
}

pub fn parse_turtle(text: &str, base: Option<&str>) -> Result<(Graph, PrefixMap), ParseDiagnostic> {
    parse_turtle_with(
        text,
        &ParseOptions {
            base: base.map(str::to_owned),
            ..ParseOptions::default()
        },
    )
}

pub fn parse_turtle_with(
    text: &str,
    options: &ParseOptions,
) -> Result<(Graph, PrefixMap), ParseDiagnostic> {
    check_size(text, options.max_bytes)?;
    let scope = options
        .scope
        .clone()
        .unwrap_or_else(|| document_scope(text));
    let mut prefixes = PrefixMap::new();
    prefixes.set_base(options.base.clone());
    let mut parser = TurtleParser {
        cur: Cursor::new(text),
        prefixes,
        scope,
        labels: HashMap::new(),
        fresh: 0,
        out: GraphBuilder::new(),
    };
    parser.document()?;
    Ok((parser.out.build(), parser.prefixes))
}

pub fn parse_ntriples(text: &str) -> Result<Graph, ParseDiagnostic> {
    parse_ntriples_with(text, &ParseOptions::default())
}

pub fn parse_ntriples_with(text: &str, options: &ParseOptions) -> Result<Graph, ParseDiagnostic> {
    check_size(text, options.max_bytes)?;
    let scope = options
        .scope
        .clone()
        .unwrap_or_else(|| document_scope(text));
    let mut out = GraphBuilder::new();
    for (idx, line) in text.lines().enumerate() {
        let mut cur = Cursor::new(line);
        cur.line = idx + 1;
        cur.skip_ws();
        if cur.eof() || cur.peek() == Some('#') {
            continue;
        }
        let subject = match cur.peek() {
            Some('<') => Term::Iri(nt_iri(&mut cur)?),
            Some('_') => Term::BlankNode(format!("{scope}-{}", cur.blank_label()?)),
            _ => return Err(cur.error("expected IRI or blank node as subject")),
        };
        cur.skip_ws();
        if cur.peek() != Some('<') {
            return Err(cur.error("expected IRI as predicate"));
        }
        let predicate = Term::Iri(nt_iri(&mut cur)?);
        cur.skip_ws();
        let object = match cur.peek() {
            Some('<') => Term::Iri(nt_iri(&mut cur)?),
            Some('_') => Term::BlankNode(format!("{scope}-{}", cur.blank_label()?)),
            Some('"') => {
                let lexical = cur.string_literal()?;
                let lit = match cur.peek() {
                    Some('@') => Literal::lang(lexical, cur.lang_tag()?),
                    Some('^') => {
                        cur.expect_str("^^")?;
                        if cur.peek() != Some('<') {
                            return Err(cur.error("expected datatype IRI"));
                        }
                        Literal::typed(lexical, nt_iri(&mut cur)?)
                    }
                    _ => Literal::plain(lexical),
                };
                Term::Literal(lit)
            }
            _ => return Err(cur.error("expected IRI, blank node or literal as object")),
        };
        cur.skip_ws();
        if cur.peek() != Some('.') {
            return Err(cur.error("expected '.' at end of triple"));
        }
        cur.bump();
        cur.skip_ws();
        if !cur.eof() && cur.peek() != Some('#') {
            return Err(cur.error("unexpected content after '.'"));
        }
        let (line, column) = (cur.line, 1);
        let t = Triple::new(subject, predicate, object).map_err(|e| ParseDiagnostic {
            line,
            column,
            message: e.to_string(),
            kind: DiagnosticKind::Invariant,
        })?;
        out.push(t);
    }
    Ok(out.build())
}

fn nt_iri(cur: &mut Cursor<'_>) -> Result<String, ParseDiagnostic> {
    let (line, column) = (cur.line, cur.col);
    let iri = cur.iri_ref()?;
    if !has_scheme(&iri) {
        return Err(ParseDiagnostic {
            line,
            column,
            message: format!("relative IRI <{iri}> is not allowed in N-Triples"),
            kind: DiagnosticKind::Syntax,
        });
    }
    Ok(iri)
}

/// Canonical N-Triples: sorted lines, blank nodes renamed `_:b0`, `_:b1`, ...
pub fn serialize_ntriples(graph: &Graph) -> String {
    let mask = |t: &Term| match t {
        Term::BlankNode(_) => "_:".to_owned(),
        other => other.to_string(),
    };
    let mut keyed: Vec<(String, &Triple)> = graph
        .iter()
        .map(|t| {
            (
                format!(
                    "{} {} {} .",
                    mask(t.subject()),
                    t.predicate(),
                    mask(t.object())
                ),
                t,
            )
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    let mut names: HashMap<&str, String> = HashMap::new();
    for (_, t) in &keyed {
        for term in [t.subject(), t.object()] {
            if let Term::BlankNode(b) = term {
                let next = names.len();
                names
                    .entry(b.as_str())
                    .or_insert_with(|| format!("b{next}"));
            }
        }
    }
    let render = |term: &Term| match term {
        Term::BlankNode(b) => format!("_:{}", names[b.as_str()]),
        other => other.to_string(),
    };
    let mut lines: Vec<String> = keyed
        .iter()
        .map(|(_, t)| {
            format!(
                "{} {} {} .",
                render(t.subject()),
                t.predicate(),
                render(t.object())
            )
        })
        .collect();
    lines.sort();
    let mut out = String::new();
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

fn has_scheme(iri: &str) -> bool {
    let mut chars = iri.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    for c in chars {
        if c == ':' {
            return true;
        }
        if !(c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')) {
            return false;
        }
    }
    false
}

/// Resolve `reference` against `base`. Supports absolute IRIs, empty and
/// fragment-only references, path-absolute and path-relative references.
pub fn resolve_iri(base: Option<&str>, reference: &str) -> Result<String, String> {
    if has_scheme(reference) {
        return Ok(reference.to_owned());
    }
    let base = base.ok_or_else(|| format!("relative IRI <{reference}> with no base IRI"))?;
    let base_no_frag = base.split('#').next().unwrap_or(base);
    if reference.is_empty() {
        return Ok(base_no_frag.to_owned());
    }
    if reference.starts_with('#') {
        return Ok(format!("{base_no_frag}{reference}"));
    }
    if reference.starts_with("//") || reference.starts_with('?') {
        return Err(format!("unsupported relative reference <{reference}>"));
    }
    let scheme_end = base
        .find(':')
        .ok_or_else(|| format!("base <{base}> has no scheme"))?;
    let after_scheme = &base_no_frag[scheme_end + 1..];
    let (authority, path) = if let Some(rest) = after_scheme.strip_prefix("//") {
        match rest.find('/') {
            Some(i) => (format!("//{}", &rest[..i]), rest[i..].to_owned()),
            None => (format!("//{rest}"), String::new()),
        }
    } else {
        (String::new(), after_scheme.to_owned())
    };
    let path = path.split('?').next().unwrap_or("").to_owned();
    let merged = if reference.starts_with('/') {
        reference.to_owned()
    } else if path.is_empty() && !authority.is_empty() {
        format!("/{reference}")
    } else {
        match path.rfind('/') {
            Some(i) => format!("{}{reference}", &path[..=i]),
            None => return Err(format!("cannot merge <{reference}> with base <{base}>")),
        }
    };
    let scheme = &base[..scheme_end];
    Ok(format!(
        "{scheme}:{authority}{}",
        remove_dot_segments(&merged)
    ))
}

fn remove_dot_segments(path: &str) -> String {
    let (path, suffix) = match path.find(['?', '#']) {
        Some(i) => (&path[..i], &path[i..]),
        None => (path, ""),
    };
    let mut out: Vec<&str> = Vec::new();
    let segments: Vec<&str> = path.split('/').collect();
    let last = segments.len() - 1;
    for (i, seg) in segments.iter().enumerate() {
        match *seg {
            "." => {
                if i == last {
                    out.push("");
                }
            }
            ".." => {
                if out.len() > 1 {
                    out.pop();
                }
                if i == last {
                    out.push("");
                }
            }
            s => out.push(s),
        }
    }
    format!("{}{suffix}", out.join("/"))
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor {
            src,
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn eof(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_nth(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> ParseDiagnostic {
        ParseDiagnostic {
            line: self.line,
            column: self.col,
            message: message.into(),
            kind: DiagnosticKind::Syntax,
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    /// Whitespace and `#` comments.
    fn skip_trivia(&mut self) {
        loop {
            self.skip_ws();
            if self.peek() == Some('#') {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn advance(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseDiagnostic> {
        if self.peek() == Some(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn expect_str(&mut self, s: &str) -> Result<(), ParseDiagnostic> {
        if self.rest().starts_with(s) {
            for _ in s.chars() {
                self.bump();
            }
            Ok(())
        } else {
            Err(self.error(format!("expected '{s}'")))
        }
    }

    fn starts_with_keyword(&self, kw: &str) -> bool {
        let rest = self.rest();
        rest.len() >= kw.len()
            && rest[..kw.len()].eq_ignore_ascii_case(kw)
            && rest[kw.len()..]
                .chars()
                .next()
                .is_none_or(|c| !is_name_char(c) && c != ':')
    }

    fn hex_escape(&mut self, digits: usize) -> Result<char, ParseDiagnostic> {
        let mut value = 0u32;
        for _ in 0..digits {
            let c = self.bump().ok_or_else(|| self.error("truncated escape"))?;
            value = value * 16
                + c.to_digit(16)
                    .ok_or_else(|| self.error("bad hex digit in escape"))?;
        }
        char::from_u32(value).ok_or_else(|| self.error("escape is not a valid code point"))
    }

    fn iri_ref(&mut self) -> Result<String, ParseDiagnostic> {
        self.expect('<')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error("unterminated IRI")),
                Some('>') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('u') => out.push(self.hex_escape(4)?),
                    Some('U') => out.push(self.hex_escape(8)?),
                    _ => return Err(self.error("invalid escape in IRI")),
                },
                Some(c)
                    if c.is_whitespace()
                        || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') =>
                {
                    return Err(self.error(format!("character {c:?} not allowed in IRI")));
                }
                Some(c) => out.push(c),
            }
        }
    }

    fn blank_label(&mut self) -> Result<String, ParseDiagnostic> {
        self.expect_str("_:")?;
        let mut label = String::new();
        match self.peek() {
            Some(c) if c.is_alphanumeric() || c == '_' => {
                label.push(c);
                self.bump();
            }
            _ => return Err(self.error("expected blank node label")),
        }
        while let Some(c) = self.peek() {
            if is_name_char(c) || (c == '.' && self.peek_nth(1).is_some_and(is_name_char)) {
                label.push(c);
                self.bump();
            } else {
                break;
            }
        }
        Ok(label)
    }

    fn lang_tag(&mut self) -> Result<String, ParseDiagnostic> {
        self.expect('@')?;
        let mut tag = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '-' {
                tag.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if tag.is_empty() || !tag.starts_with(|c: char| c.is_ascii_alphabetic()) {
            return Err(self.error("malformed language tag"));
        }
        Ok(tag)
    }

    fn string_escape(&mut self, out: &mut String) -> Result<(), ParseDiagnostic> {
        match self.bump() {
            Some('t') => out.push('\t'),
            Some('b') => out.push('\u{8}'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('f') => out.push('\u{c}'),
            Some('"') => out.push('"'),
            Some('\'') => out.push('\''),
            Some('\\') => out.push('\\'),
            Some('u') => out.push(self.hex_escape(4)?),
            Some('U') => out.push(self.hex_escape(8)?),
            _ => return Err(self.error("invalid string escape")),
        }
        Ok(())
    }

    /// Any of the four Turtle string forms; N-Triples only produces `"..."`.
    fn string_literal(&mut self) -> Result<String, ParseDiagnostic> {
        let quote = self.peek().ok_or_else(|| self.error("expected string"))?;
        let long: String = std::iter::repeat_n(quote, 3).collect();
        let mut out = String::new();
        if self.rest().starts_with(&long) {
            self.expect_str(&long)?;
            loop {
                if self.rest().starts_with(&long) {
                    // a closing triple quote may be preceded by up to two quotes
                    let mut n = 0;
                    while self.peek_nth(n) == Some(quote) {
                        n += 1;
                    }
                    for _ in 0..n - 3 {
                        out.push(quote);
                        self.bump();
                    }
                    self.expect_str(&long)?;
                    return Ok(out);
                }
                match self.bump() {
                    None => return Err(self.error("unterminated long string")),
                    Some('\\') => self.string_escape(&mut out)?,
                    Some(c) => out.push(c),
                }
            }
        }
        self.bump();
        loop {
            match self.bump() {
                None | Some('\n') | Some('\r') => return Err(self.error("unterminated string")),
                Some('\\') => self.string_escape(&mut out)?,
                Some(c) if c == quote => return Ok(out),
                Some(c) => out.push(c),
            }
        }
    }
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '\u{b7}')
}

struct TurtleParser<'a> {
    cur: Cursor<'a>,
    prefixes: PrefixMap,
    scope: String,
    labels: HashMap<String, Term>,
    fresh: usize,
    out: GraphBuilder,
}

impl TurtleParser<'_> {
    fn document(&mut self) -> Result<(), ParseDiagnostic> {
        loop {
            self.cur.skip_trivia();
            if self.cur.eof() {
                return Ok(());
            }
            self.statement()?;
        }
    }

    fn statement(&mut self) -> Result<(), ParseDiagnostic> {
        if self.cur.rest().starts_with("@prefix") {
            self.cur.expect_str("@prefix")?;
            self.prefix_decl()?;
            self.cur.skip_trivia();
            return self.cur.expect('.');
        }
        if self.cur.rest().starts_with("@base") {
            self.cur.expect_str("@base")?;
            self.base_decl()?;
            self.cur.skip_trivia();
            return self.cur.expect('.');
        }
        if self.cur.starts_with_keyword("PREFIX") {
            self.cur.advance(6);
            return self.prefix_decl();
        }
        if self.cur.starts_with_keyword("BASE") {
            self.cur.advance(4);
            return self.base_decl();
        }
        self.triples()?;
        self.cur.skip_trivia();
        self.cur.expect('.')
    }

    fn prefix_decl(&mut self) -> Result<(), ParseDiagnostic> {
        self.cur.skip_trivia();
        let mut prefix = String::new();
        while let Some(c) = self.cur.peek() {
            if c == ':' {
                break;
            }
            if !(is_name_char(c) || c == '.') {
                return Err(self.cur.error("malformed prefix name"));
            }
            prefix.push(c);
            self.cur.bump();
        }
        self.cur.expect(':')?;
        self.cur.skip_trivia();
        let iri = self.iri_ref_resolved()?;
        self.prefixes.insert(prefix, iri);
        Ok(())
    }

    fn base_decl(&mut self) -> Result<(), ParseDiagnostic> {
        self.cur.skip_trivia();
        let iri = self.iri_ref_resolved()?;
        self.prefixes.set_base(Some(iri));
        Ok(())
    }

    fn iri_ref_resolved(&mut self) -> Result<String, ParseDiagnostic> {
        let (line, column) = (self.cur.line, self.cur.col);
        let raw = self.cur.iri_ref()?;
        resolve_iri(self.prefixes.base(), &raw).map_err(|message| ParseDiagnostic {
            line,
            column,
            message,
            kind: DiagnosticKind::Syntax,
        })
    }

    fn emit(&mut self, s: Term, p: Term, o: Term) -> Result<(), ParseDiagnostic> {
        let t = Triple::new(s, p, o).map_err(|e| ParseDiagnostic {
            line: self.cur.line,
            column: self.cur.col,
            message: e.to_string(),
            kind: DiagnosticKind::Invariant,
        })?;
        self.out.push(t);
        Ok(())
    }

    fn fresh_blank(&mut self) -> Term {
        let t = Term::BlankNode(format!("{}-g{}", self.scope, self.fresh));
        self.fresh += 1;
        t
    }

    fn labelled_blank(&mut self, label: String) -> Term {
        let scope = &self.scope;
        self.labels
            .entry(label.clone())
            .or_insert_with(|| Term::BlankNode(format!("{scope}-l-{label}")))
            .clone()
    }

    fn triples(&mut self) -> Result<(), ParseDiagnostic> {
        if self.cur.peek() == Some('[') {
            let subject = self.blank_property_list()?;
            self.cur.skip_trivia();
            if self.cur.peek() != Some('.') {
                self.predicate_object_list(&subject)?;
            }
            return Ok(());
        }
        let subject = self.subject()?;
        self.cur.skip_trivia();
        self.predicate_object_list(&subject)
    }

    fn subject(&mut self) -> Result<Term, ParseDiagnostic> {
        match self.cur.peek() {
            Some('<') => Ok(Term::Iri(self.iri_ref_resolved()?)),
            Some('_') if self.cur.peek_nth(1) == Some(':') => {
                let label = self.cur.blank_label()?;
                Ok(self.labelled_blank(label))
            }
            Some('(') => self.collection(),
            Some('"') | Some('\'') => Err(self.cur.error("a literal cannot be a subject")),
            _ => Ok(Term::Iri(self.prefixed_name()?)),
        }
    }

    fn predicate(&mut self) -> Result<Term, ParseDiagnostic> {
        if self.cur.peek() == Some('a')
            && self
                .cur
                .peek_nth(1)
                .is_none_or(|c| !(is_name_char(c) || c == ':' || c == '.'))
        {
            self.cur.bump();
            return Ok(Term::named(rdf::TYPE));
        }
        match self.cur.peek() {
            Some('<') => Ok(Term::Iri(self.iri_ref_resolved()?)),
            Some('_') | Some('[') | Some('(') | Some('"') | Some('\'') => {
                Err(self.cur.error("predicate must be an IRI"))
            }
            _ => Ok(Term::Iri(self.prefixed_name()?)),
        }
    }

    fn predicate_object_list(&mut self, subject: &Term) -> Result<(), ParseDiagnostic> {
        loop {
            let predicate = self.predicate()?;
            loop {
                self.cur.skip_trivia();
                let object = self.object()?;
                self.emit(subject.clone(), predicate.clone(), object)?;
                self.cur.skip_trivia();
                if self.cur.peek() == Some(',') {
                    self.cur.bump();
                } else {
                    break;
                }
            }
            // one or more ';', possibly with nothing after the last
            let mut saw_semicolon = false;
            while self.cur.peek() == Some(';') {
                saw_semicolon = true;
                self.cur.bump();
                self.cur.skip_trivia();
            }
            if !saw_semicolon || matches!(self.cur.peek(), Some('.') | Some(']') | None) {
                return Ok(());
            }
        }
    }

    fn object(&mut self) -> Result<Term, ParseDiagnostic> {
        match self.cur.peek() {
            Some('<') => Ok(Term::Iri(self.iri_ref_resolved()?)),
            Some('_') if self.cur.peek_nth(1) == Some(':') => {
                let label = self.cur.blank_label()?;
                Ok(self.labelled_blank(label))
            }
            Some('[') => self.blank_property_list(),
            Some('(') => self.collection(),
            Some('"') | Some('\'') => self.rdf_literal(),
            Some(c) if c.is_ascii_digit() || matches!(c, '+' | '-' | '.') => self.numeric_literal(),
            None => Err(self.cur.error("unexpected end of input, expected object")),
            _ => {
                for (kw, value) in [("true", "true"), ("false", "false")] {
                    if self.cur.rest().starts_with(kw)
                        && self.cur.rest()[kw.len()..]
                            .chars()
                            .next()
                            .is_none_or(|c| !(is_name_char(c) || c == ':'))
                    {
                        self.cur.expect_str(kw)?;
                        return Ok(Term::Literal(Literal::typed(value, xsd::BOOLEAN)));
                    }
                }
                Ok(Term::Iri(self.prefixed_name()?))
            }
        }
    }

    fn blank_property_list(&mut self) -> Result<Term, ParseDiagnostic> {
        self.cur.expect('[')?;
        let node = self.fresh_blank();
        self.cur.skip_trivia();
        if self.cur.peek() != Some(']') {
            self.predicate_object_list(&node)?;
            self.cur.skip_trivia();
        }
        self.cur.expect(']')?;
        Ok(node)
    }

    fn collection(&mut self) -> Result<Term, ParseDiagnostic> {
        self.cur.expect('(')?;
        let mut items = Vec::new();
        loop {
            self.cur.skip_trivia();
            if self.cur.peek() == Some(')') {
                self.cur.bump();
                break;
            }
            items.push(self.object()?);
        }
        let mut head = Term::named(rdf::NIL);
        for item in items.into_iter().rev() {
            let cell = self.fresh_blank();
            self.emit(cell.clone(), Term::named(rdf::FIRST), item)?;
            self.emit(cell.clone(), Term::named(rdf::REST), head)?;
            head = cell;
        }
        // fresh labels were handed out back to front; that is fine since
        // they are only unique names
        Ok(head)
    }

    fn rdf_literal(&mut self) -> Result<Term, ParseDiagnostic> {
        let lexical = self.cur.string_literal()?;
        match self.cur.peek() {
            Some('@') => Ok(Term::Literal(Literal::lang(lexical, self.cur.lang_tag()?))),
            Some('^') => {
                self.cur.expect_str("^^")?;
                let dt = match self.cur.peek() {
                    Some('<') => self.iri_ref_resolved()?,
                    _ => self.prefixed_name()?,
                };
                Ok(Term::Literal(Literal::typed(lexical, dt)))
            }
            _ => Ok(Term::Literal(Literal::plain(lexical))),
        }
    }

    fn numeric_literal(&mut self) -> Result<Term, ParseDiagnostic> {
        let mut text = String::new();
        if let Some(c @ ('+' | '-')) = self.cur.peek() {
            text.push(c);
            self.cur.bump();
        }
        let mut digits_before = 0;
        while let Some(c) = self.cur.peek().filter(char::is_ascii_digit) {
            text.push(c);
            self.cur.bump();
            digits_before += 1;
        }
        let mut datatype = xsd::INTEGER;
        if self.cur.peek() == Some('.') && self.cur.peek_nth(1).is_some_and(|c| c.is_ascii_digit())
        {
            text.push('.');
            self.cur.bump();
            while let Some(c) = self.cur.peek().filter(char::is_ascii_digit) {
                text.push(c);
                self.cur.bump();
            }
            datatype = xsd::DECIMAL;
        } else if digits_before == 0 {
            return Err(self.cur.error("malformed numeric literal"));
        }
        if let Some(e @ ('e' | 'E')) = self.cur.peek() {
            text.push(e);
            self.cur.bump();
            if let Some(c @ ('+' | '-')) = self.cur.peek() {
                text.push(c);
                self.cur.bump();
            }
            let mut exp = 0;
            while let Some(c) = self.cur.peek().filter(char::is_ascii_digit) {
                text.push(c);
                self.cur.bump();
                exp += 1;
            }
            if exp == 0 {
                return Err(self.cur.error("malformed exponent"));
            }
            datatype = xsd::DOUBLE;
        }
        Ok(Term::Literal(Literal::typed(text, datatype)))
    }

    fn prefixed_name(&mut self) -> Result<String, ParseDiagnostic> {
        let (line, column) = (self.cur.line, self.cur.col);
        let mut prefix = String::new();
        while let Some(c) = self.cur.peek() {
            if c == ':' {
                break;
            }
            if is_name_char(c)
                || (c == '.'
                    && !prefix.is_empty()
                    && self
                        .cur
                        .peek_nth(1)
                        .is_some_and(|n| is_name_char(n) || n == ':'))
            {
                prefix.push(c);
                self.cur.bump();
            } else {
                return Err(self.cur.error(format!("unexpected character {c:?}")));
            }
        }
        if self.cur.peek() != Some(':') {
            return Err(self.cur.error("expected prefixed name"));
        }
        self.cur.bump();
        let mut local = String::new();
        loop {
            match self.cur.peek() {
                Some(c) if is_name_char(c) || c == ':' => {
                    local.push(c);
                    self.cur.bump();
                }
                Some('.')
                    if !local.is_empty()
                        && self
                            .cur
                            .peek_nth(1)
                            .is_some_and(|n| is_name_char(n) || matches!(n, ':' | '%' | '\\')) =>
                {
                    local.push('.');
                    self.cur.bump();
                }
                Some('%') => {
                    self.cur.bump();
                    local.push('%');
                    for _ in 0..2 {
                        match self.cur.bump() {
                            Some(h) if h.is_ascii_hexdigit() => local.push(h),
                            _ => return Err(self.cur.error("malformed percent escape")),
                        }
                    }
                }
                Some('\\') => {
                    self.cur.bump();
                    match self.cur.bump() {
                        Some(
                            c @ ('_' | '~' | '.' | '-' | '!' | '$' | '&' | '\'' | '(' | ')' | '*'
                            | '+' | ',' | ';' | '=' | '/' | '?' | '#' | '@' | '%'),
                        ) => local.push(c),
                        _ => return Err(self.cur.error("invalid local name escape")),
                    }
                }
                _ => break,
            }
        }
        self.prefixes
            .expand(&prefix, &local)
            .ok_or(ParseDiagnostic {
                line,
                column,
                message: format!("undeclared prefix '{prefix}:'"),
                kind: DiagnosticKind::Syntax,
            })
    }
}

impl fmt::Display for PrefixMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, ns) in &self.prefixes {
            writeln!(f, "@prefix {p}: <{ns}> .")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX: &str = "@prefix : <http://example.org/> .\n";

    fn ex(local: &str) -> Term {
        Term::Iri(format!("http://example.org/{local}"))
    }

    fn ttl(body: &str) -> Graph {
        parse_turtle(&format!("{EX}{body}"), None).unwrap().0
    }

    #[test]
    fn predicate_list_shares_subject() {
        let g = ttl(":s :p1 :o1 ; :p2 :o2 .");
        assert_eq!(g.len(), 2);
        assert!(g.iter().all(|t| t.subject() == &ex("s")));
    }

    #[test]
    fn object_list_shares_subject_and_predicate() {
        let g = ttl(":s :p :o1 , :o2 .");
        assert_eq!(g.len(), 2);
        assert!(g
            .iter()
            .all(|t| t.subject() == &ex("s") && t.predicate() == &ex("p")));
    }

    #[test]
    fn collection_expands_to_five_triples() {
        let g = ttl(":C owl:intersectionOf ( :A :B ) .");
        assert_eq!(g.len(), 5);
        assert_eq!(g.with_predicate(&Term::named(rdf::FIRST)).count(), 2);
        assert_eq!(g.with_predicate(&Term::named(rdf::REST)).count(), 2);
        assert_eq!(g.with_object(&Term::named(rdf::NIL)).count(), 1);
        let head = g
            .objects(&ex("C"), owl::INTERSECTION_OF)
            .next()
            .unwrap()
            .clone();
        assert_eq!(g.objects(&head, rdf::FIRST).next(), Some(&ex("A")));
    }

    #[test]
    fn empty_collection_is_nil() {
        let g = ttl(":s :p () .");
        assert_eq!(g.iter().next().unwrap().object(), &Term::named(rdf::NIL));
    }

    #[test]
    fn empty_document() {
        assert!(parse_turtle("", None).unwrap().0.is_empty());
        assert!(parse_turtle("# only a comment\n", None)
            .unwrap()
            .0
            .is_empty());
    }

    #[test]
    fn literals() {
        let g = ttl(
            r#":s :p "plain", "hi"@en-GB, "1"^^xsd:nonNegativeInteger, 42, -1.5, 1e3, true, '''a "long"
string''' ."#,
        );
        let objs: Vec<String> = g.iter().map(|t| t.object().to_string()).collect();
        assert!(objs.contains(&"\"plain\"".to_owned()));
        assert!(objs.contains(&"\"hi\"@en-gb".to_owned()));
        assert!(objs.contains(&format!("\"1\"^^<{}>", xsd::NON_NEGATIVE_INTEGER)));
        assert!(objs.contains(&format!("\"42\"^^<{}>", xsd::INTEGER)));
        assert!(objs.contains(&format!("\"-1.5\"^^<{}>", xsd::DECIMAL)));
        assert!(objs.contains(&format!("\"1e3\"^^<{}>", xsd::DOUBLE)));
        assert!(objs.contains(&format!("\"true\"^^<{}>", xsd::BOOLEAN)));
        assert!(objs.contains(&"\"a \\\"long\\\"\\nstring\"".to_owned()));
    }

    #[test]
    fn a_keyword_and_anonymous_nodes() {
        let g = ttl(":C rdfs:subClassOf [ a owl:Restriction ; owl:onProperty :R ; owl:someValuesFrom :D ] .");
        assert_eq!(g.len(), 4);
        assert_eq!(g.with_predicate(&Term::named(rdf::TYPE)).count(), 1);
        let g = ttl("[ :p :o ] .");
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn blank_labels_are_scoped() {
        let (a, _) = parse_turtle("_:x <http://e/p> _:x .", None).unwrap();
        let (b, _) = parse_turtle("_:x <http://e/p> _:x . ", None).unwrap();
        assert_ne!(
            a.iter().next().unwrap().subject(),
            b.iter().next().unwrap().subject()
        );
        let (c, _) = parse_turtle("_:x <http://e/p> _:x .", None).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn undeclared_prefix_is_positioned() {
        let err = parse_turtle("@prefix : <http://e/> .\n:s foo:p :o .", None).unwrap_err();
        assert_eq!((err.line, err.column), (2, 4));
        assert!(err.message.contains("foo"));
    }

    #[test]
    fn relative_iri_needs_base() {
        let err = parse_turtle("<s> <p> <o> .", None).unwrap_err();
        assert!(err.message.contains("no base"));
        let (g, _) = parse_turtle("<s> <#p> </o> .", Some("http://e.org/dir/doc")).unwrap();
        let t = g.iter().next().unwrap();
        assert_eq!(t.subject(), &Term::Iri("http://e.org/dir/s".into()));
        assert_eq!(t.predicate(), &Term::Iri("http://e.org/dir/doc#p".into()));
        assert_eq!(t.object(), &Term::Iri("http://e.org/o".into()));
        let (g, _) = parse_turtle("@base <http://e.org/a/b/> . <../c> <p> <./d> .", None).unwrap();
        let t = g.iter().next().unwrap();
        assert_eq!(t.subject(), &Term::Iri("http://e.org/a/c".into()));
        assert_eq!(t.object(), &Term::Iri("http://e.org/a/b/d".into()));
        assert!(parse_turtle("<//host/x> <p> <o> .", Some("http://e.org/")).is_err());
    }

    #[test]
    fn sparql_style_directives() {
        let g = parse_turtle("PREFIX ex: <http://e/>\nex:s ex:p ex:o .", None)
            .unwrap()
            .0;
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn literal_subject_is_error() {
        assert!(parse_turtle("\"x\" <http://e/p> <http://e/o> .", None).is_err());
    }

    #[test]
    fn local_names_with_dots() {
        let g = ttl(":a.b :p :c.");
        let t = g.iter().next().unwrap();
        assert_eq!(t.subject(), &ex("a.b"));
        assert_eq!(t.object(), &ex("c"));
    }

    #[test]
    fn size_limit() {
        let opts = ParseOptions {
            max_bytes: 4,
            ..ParseOptions::default()
        };
        let err = parse_turtle_with("<http://a> <http://b> <http://c> .", &opts).unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::Limit);
        assert!(parse_ntriples_with("<http://a> <http://b> <http://c> .", &opts).is_err());
    }

    #[test]
    fn ntriples_basics() {
        let line = "<http://e/s> <http://e/p> <http://e/o> .\n";
        assert_eq!(parse_ntriples(line).unwrap().len(), 1);
        assert_eq!(parse_ntriples(&line.repeat(2)).unwrap().len(), 1);
        let err = parse_ntriples("# c\n<http://e/s> <http://e/p> <http://e/o>\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.kind, DiagnosticKind::Syntax);
        let g = parse_ntriples("_:a <http://e/p> \"x\\ty\"@en .\n_:a <http://e/q> \"1\"^^<http://www.w3.org/2001/XMLSchema#int> .").unwrap();
        assert_eq!(g.len(), 2);
        assert!(parse_ntriples("<s> <http://e/p> <http://e/o> .").is_err());
    }

    #[test]
    fn serialize_canonical() {
        assert_eq!(serialize_ntriples(&Graph::new()), "");
        let a = parse_turtle(
            "_:x <http://e/p> <http://e/o> . _:y <http://e/q> _:x .",
            None,
        )
        .unwrap()
        .0;
        let b = parse_turtle(
            "_:m <http://e/q> _:n . _:n <http://e/p> <http://e/o> .",
            None,
        )
        .unwrap()
        .0;
        assert_eq!(serialize_ntriples(&a), serialize_ntriples(&b));
        let text = serialize_ntriples(&a);
        let lines: Vec<&str> = text.lines().collect();
        let mut sorted = lines.clone();
        sorted.sort();
        assert_eq!(lines, sorted);
        assert!(text.contains("_:b0"));
        let back = parse_ntriples(&text).unwrap();
        assert!(back.is_isomorphic(&a));
    }

    #[test]
    fn shorten_prefers_longest_namespace() {
        let mut pm = PrefixMap::new();
        pm.insert("", "http://example.org/");
        pm.insert("sub", "http://example.org/sub/");
        assert_eq!(
            pm.shorten("http://example.org/sub/X"),
            Some(("sub".into(), "X".into()))
        );
        assert_eq!(pm.shorten("http://example.org/a b"), None);
    }
}
