//! Turtle-subset parser and canonical N-Quads snapshots.
//!
//! Supported Turtle: `@prefix`/`@base` (and the SPARQL-style `PREFIX`/`BASE`),
//! the `a` keyword, absolute/relative/prefixed IRIs, string literals with
//! `^^datatype` or `@lang`, numeric and boolean shorthand, `;` and `,` lists,
//! labelled blank nodes and `[ ... ]` property lists, comments. Collections and
//! quoted triples are rejected.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::store::{is_absolute_iri, Dataset, Quad, StoreError, Term};
use crate::vocab::{self, SKOLEM_PREFIX};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for Diagnostic {}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub quads: Vec<Quad>,
    pub prefixes: BTreeMap<String, String>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseOutcome {
    pub fn is_ok(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

/// Character cursor with line/column bookkeeping shared by both parsers.
struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line_starts: Vec<usize>,
}

type PResult<T> = Result<T, (usize, String)>;

impl Cursor {
    fn new(text: &str) -> Self {
        let chars: Vec<char> = text.chars().collect();
        let mut line_starts = vec![0];
        for (i, c) in chars.iter().enumerate() {
            if *c == '\n' {
                line_starts.push(i + 1);
            }
        }
        Cursor {
            chars,
            pos: 0,
            line_starts,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c))
    }

    fn starts_with_keyword(&self, kw: &str) -> bool {
        self.starts_with(kw)
            && self
                .peek_at(kw.chars().count())
                .is_none_or(|c| !(c.is_alphanumeric() || c == '_' || c == ':' || c == '-'))
    }

    fn expect(&mut self, c: char) -> PResult<()> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(x) => Err((self.pos, format!("expected '{c}', found '{x}'"))),
            None => Err((self.pos, format!("expected '{c}', found end of input"))),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += 1;
            } else if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn line_col(&self, pos: usize) -> (usize, usize) {
        let line = match self.line_starts.binary_search(&pos) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        (line + 1, pos - self.line_starts[line] + 1)
    }

    fn diagnostic(&self, pos: usize, message: String) -> Diagnostic {
        let (line, column) = self.line_col(pos.min(self.chars.len()));
        Diagnostic { line, column, message }
    }

    fn read_hex(&mut self, n: usize) -> PResult<char> {
        let start = self.pos;
        let mut v = 0u32;
        for _ in 0..n {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or((start, "invalid unicode escape".to_string()))?;
            v = v * 16 + d;
        }
        char::from_u32(v).ok_or((start, "unicode escape is not a scalar value".to_string()))
    }

    /// Reads `<...>` and returns the raw (unresolved) IRI text.
    fn read_iriref(&mut self) -> PResult<String> {
        let start = self.pos;
        self.expect('<')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err((start, "unterminated IRI".into())),
                Some('>') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('u') => out.push(self.read_hex(4)?),
                    Some('U') => out.push(self.read_hex(8)?),
                    _ => return Err((self.pos - 1, "invalid escape in IRI".into())),
                },
                Some(c) if c <= ' ' || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') => {
                    return Err((self.pos - 1, format!("character {c:?} not allowed in IRI")))
                }
                Some(c) => out.push(c),
            }
        }
    }

    /// Reads a quoted string (short or long form, either quote character).
    fn read_string(&mut self) -> PResult<String> {
        let start = self.pos;
        let quote = self.bump().ok_or((start, "expected string".to_string()))?;
        let long = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if long {
            self.pos += 2;
        }
        let mut out = String::new();
        loop {
            let c = self
                .bump()
                .ok_or((start, "unterminated string literal".to_string()))?;
            match c {
                '\\' => {
                    let e = self
                        .bump()
                        .ok_or((start, "unterminated string literal".to_string()))?;
                    match e {
                        't' => out.push('\t'),
                        'b' => out.push('\u{8}'),
                        'n' => out.push('\n'),
                        'r' => out.push('\r'),
                        'f' => out.push('\u{c}'),
                        '"' => out.push('"'),
                        '\'' => out.push('\''),
                        '\\' => out.push('\\'),
                        'u' => out.push(self.read_hex(4)?),
                        'U' => out.push(self.read_hex(8)?),
                        other => return Err((self.pos - 1, format!("invalid string escape '\\{other}'"))),
                    }
                }
                c if c == quote => {
                    if !long {
                        return Ok(out);
                    }
                    if self.peek() == Some(quote) && self.peek_at(1) == Some(quote) {
                        // A long string may end with up to two extra quote characters.
                        while self.peek_at(2) == Some(quote) {
                            out.push(quote);
                            self.pos += 1;
                        }
                        self.pos += 2;
                        return Ok(out);
                    }
                    out.push(c);
                }
                '\n' | '\r' if !long => {
                    return Err((self.pos - 1, "line break in short string literal".into()))
                }
                c => out.push(c),
            }
        }
    }

    fn read_langtag(&mut self) -> PResult<String> {
        let start = self.pos;
        self.expect('@')?;
        let mut tag = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '-' {
                tag.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        if tag.is_empty() || !tag.starts_with(|c: char| c.is_ascii_alphabetic()) {
            return Err((start, "malformed language tag".into()));
        }
        Ok(tag.to_ascii_lowercase())
    }
}

fn doc_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(&digest[..8])
}

/// Resolves `rel` against an absolute `base` IRI.
pub fn resolve_iri(base: &str, rel: &str) -> String {
    if is_absolute_iri(rel) {
        return rel.to_string();
    }
    let no_frag = base.split('#').next().unwrap_or(base);
    if rel.is_empty() {
        return no_frag.to_string();
    }
    if rel.starts_with('#') {
        return format!("{no_frag}{rel}");
    }
    let scheme_end = base.find(':').map(|i| i + 1).unwrap_or(0);
    let scheme = &base[..scheme_end];
    if rel.starts_with("//") {
        return format!("{scheme}{rel}");
    }
    let after_scheme = &no_frag[scheme_end..];
    let (authority, path_query) = if let Some(rest) = after_scheme.strip_prefix("//") {
        let end = rest.find('/').unwrap_or(rest.len());
        (format!("//{}", &rest[..end]), &rest[end..])
    } else {
        (String::new(), after_scheme)
    };
    let path = path_query.split('?').next().unwrap_or("");
    if rel.starts_with('?') {
        return format!("{scheme}{authority}{path}{rel}");
    }
    let merged = if rel.starts_with('/') {
        rel.to_string()
    } else {
        match path.rfind('/') {
            Some(i) => format!("{}{}", &path[..=i], rel),
            None if !authority.is_empty() => format!("/{rel}"),
            None => rel.to_string(),
        }
    };
    format!("{scheme}{authority}{}", remove_dot_segments(&merged))
}

fn remove_dot_segments(path: &str) -> String {
    let (body, tail) = match path.find(['?', '#']) {
        Some(i) => (&path[..i], &path[i..]),
        None => (path, ""),
    };
    let mut out: Vec<&str> = Vec::new();
    let segments: Vec<&str> = body.split('/').collect();
    let last = segments.len().saturating_sub(1);
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
    format!("{}{}", out.join("/"), tail)
}

struct TurtleParser {
    cur: Cursor,
    graph: Term,
    base: Option<String>,
    prefixes: BTreeMap<String, String>,
    doc_id: String,
    bnode_counter: usize,
    bnode_labels: HashMap<String, Term>,
    pending: Vec<Quad>,
}

/// Parses Turtle text into quads in `target_graph`.
///
/// Blank nodes become skolem nodes `doc<hash>:b<n>`, where the hash is taken
/// over the input text, so the same text always yields the same node ids.
/// Statements containing an error are dropped and parsing resumes after the
/// next `.`.
pub fn parse_turtle(text: &str, target_graph: &Term) -> ParseOutcome {
    let mut p = TurtleParser {
        cur: Cursor::new(text),
        graph: target_graph.clone(),
        base: None,
        prefixes: BTreeMap::new(),
        doc_id: format!("doc{}", doc_hash(text)),
        bnode_counter: 0,
        bnode_labels: HashMap::new(),
        pending: Vec::new(),
    };
    let mut out = ParseOutcome::default();
    if let Err(e) = target_graph.validate() {
        out.diagnostics.push(p.cur.diagnostic(0, format!("invalid target graph: {e}")));
        return out;
    }
    loop {
        p.cur.skip_ws();
        if p.cur.peek().is_none() {
            break;
        }
        p.pending.clear();
        match p.statement() {
            Ok(()) => out.quads.append(&mut p.pending),
            Err((pos, msg)) => {
                out.diagnostics.push(p.cur.diagnostic(pos, msg));
                p.recover();
            }
        }
    }
    out.prefixes = p.prefixes;
    out
}

impl TurtleParser {
    fn recover(&mut self) {
        while let Some(c) = self.cur.bump() {
            match c {
                '"' | '\'' => {
                    self.cur.pos -= 1;
                    if self.cur.read_string().is_err() {
                        self.cur.pos = self.cur.chars.len();
                    }
                }
                '<' if self.cur.peek() != Some('<') => {
                    self.cur.pos -= 1;
                    if self.cur.read_iriref().is_err() {
                        self.cur.pos += 1;
                    }
                }
                '.' if self.cur.peek().is_none_or(|c| c.is_whitespace() || c == '#') => return,
                _ => {}
            }
        }
    }

    fn statement(&mut self) -> PResult<()> {
        if self.cur.starts_with("@prefix") {
            self.cur.pos += "@prefix".len();
            self.prefix_decl()?;
            self.cur.skip_ws();
            return self.cur.expect('.');
        }
        if self.cur.starts_with("@base") {
            self.cur.pos += "@base".len();
            self.base_decl()?;
            self.cur.skip_ws();
            return self.cur.expect('.');
        }
        if self.cur.starts_with_keyword("PREFIX") || self.cur.starts_with_keyword("prefix") {
            self.cur.pos += "PREFIX".len();
            return self.prefix_decl();
        }
        if self.cur.starts_with_keyword("BASE") || self.cur.starts_with_keyword("base") {
            self.cur.pos += "BASE".len();
            return self.base_decl();
        }
        self.triples()?;
        self.cur.skip_ws();
        self.cur.expect('.')
    }

    fn prefix_decl(&mut self) -> PResult<()> {
        self.cur.skip_ws();
        let start = self.cur.pos;
        let mut name = String::new();
        while let Some(c) = self.cur.peek() {
            if c == ':' {
                break;
            }
            if c.is_alphanumeric() || c == '_' || c == '-' || c == '.' {
                name.push(c);
                self.cur.pos += 1;
            } else {
                return Err((self.cur.pos, format!("unexpected '{c}' in prefix name")));
            }
        }
        if self.cur.peek() != Some(':') {
            return Err((start, "expected prefix name ending in ':'".into()));
        }
        self.cur.pos += 1;
        self.cur.skip_ws();
        let iri = self.iri_ref()?;
        self.prefixes.insert(name, iri);
        Ok(())
    }

    fn base_decl(&mut self) -> PResult<()> {
        self.cur.skip_ws();
        let iri = self.iri_ref()?;
        self.base = Some(iri);
        Ok(())
    }

    /// `<...>` resolved against the current base.
    fn iri_ref(&mut self) -> PResult<String> {
        let start = self.cur.pos;
        let raw = self.cur.read_iriref()?;
        if is_absolute_iri(&raw) {
            return Ok(raw);
        }
        match &self.base {
            Some(base) => Ok(resolve_iri(base, &raw)),
            None => Err((start, format!("relative IRI <{raw}> with no @base"))),
        }
    }

    fn fresh_bnode(&mut self) -> Term {
        self.bnode_counter += 1;
        Term::skolem(format!("{}:b{}", self.doc_id, self.bnode_counter))
    }

    fn emit(&mut self, s: Term, p: Term, o: Term, pos: usize) -> PResult<()> {
        let q = Quad::new(s, p, o, self.graph.clone()).map_err(|e| (pos, e.to_string()))?;
        self.pending.push(q);
        Ok(())
    }

    fn triples(&mut self) -> PResult<()> {
        let start = self.cur.pos;
        if self.cur.peek() == Some('[') {
            let subject = self.blank_node_property_list()?;
            self.cur.skip_ws();
            if self.cur.peek() != Some('.') {
                self.predicate_object_list(&subject)?;
            }
            return Ok(());
        }
        let subject = self.subject()?;
        if subject.is_literal() {
            return Err((start, "a literal cannot be a subject".into()));
        }
        self.cur.skip_ws();
        self.predicate_object_list(&subject)
    }

    fn subject(&mut self) -> PResult<Term> {
        match self.cur.peek() {
            Some('<') if self.cur.peek_at(1) == Some('<') => {
                Err((self.cur.pos, "quoted triples are not supported".into()))
            }
            Some('<') => Ok(Term::iri(self.iri_ref()?)),
            Some('(') => Err((self.cur.pos, "collections are not supported".into())),
            Some('_') if self.cur.peek_at(1) == Some(':') => self.labelled_bnode(),
            Some(_) => {
                let pos = self.cur.pos;
                let t = self.name_term()?;
                match t {
                    NameTerm::Iri(i) => Ok(Term::iri(i)),
                    NameTerm::A | NameTerm::Bool(_) => {
                        Err((pos, "expected a subject (IRI or blank node)".into()))
                    }
                }
            }
            None => Err((self.cur.pos, "expected a subject, found end of input".into())),
        }
    }

    fn predicate_object_list(&mut self, subject: &Term) -> PResult<()> {
        loop {
            self.cur.skip_ws();
            let ppos = self.cur.pos;
            let predicate = self.verb()?;
            self.cur.skip_ws();
            loop {
                let opos = self.cur.pos;
                let object = self.object()?;
                self.emit(subject.clone(), predicate.clone(), object, opos.max(ppos))?;
                self.cur.skip_ws();
                if self.cur.peek() == Some(',') {
                    self.cur.pos += 1;
                    self.cur.skip_ws();
                    continue;
                }
                break;
            }
            if self.cur.peek() != Some(';') {
                return Ok(());
            }
            while self.cur.peek() == Some(';') {
                self.cur.pos += 1;
                self.cur.skip_ws();
            }
            // A trailing ';' may close the list.
            if matches!(self.cur.peek(), Some('.') | Some(']') | None) {
                return Ok(());
            }
        }
    }

    fn verb(&mut self) -> PResult<Term> {
        match self.cur.peek() {
            Some('<') => Ok(Term::iri(self.iri_ref()?)),
            Some(_) => {
                let pos = self.cur.pos;
                match self.name_term()? {
                    NameTerm::A => Ok(Term::iri(vocab::rdf::TYPE)),
                    NameTerm::Iri(i) => Ok(Term::iri(i)),
                    NameTerm::Bool(_) => Err((pos, "expected a predicate".into())),
                }
            }
            None => Err((self.cur.pos, "expected a predicate, found end of input".into())),
        }
    }

    fn object(&mut self) -> PResult<Term> {
        let pos = self.cur.pos;
        match self.cur.peek() {
            Some('<') if self.cur.peek_at(1) == Some('<') => {
                Err((pos, "quoted triples are not supported".into()))
            }
            Some('<') => Ok(Term::iri(self.iri_ref()?)),
            Some('(') => Err((pos, "collections are not supported".into())),
            Some('[') => self.blank_node_property_list(),
            Some('_') if self.cur.peek_at(1) == Some(':') => self.labelled_bnode(),
            Some('"') | Some('\'') => self.literal(),
            Some(c) if c.is_ascii_digit() || matches!(c, '+' | '-') => self.numeric(),
            Some('.') if self.cur.peek_at(1).is_some_and(|c| c.is_ascii_digit()) => self.numeric(),
            Some(_) => match self.name_term()? {
                NameTerm::Iri(i) => Ok(Term::iri(i)),
                NameTerm::Bool(b) => Ok(Term::literal(b.to_string(), vocab::xsd::BOOLEAN)),
                NameTerm::A => Err((pos, "'a' is only allowed as a predicate".into())),
            },
            None => Err((pos, "expected an object, found end of input".into())),
        }
    }

    fn blank_node_property_list(&mut self) -> PResult<Term> {
        self.cur.expect('[')?;
        let node = self.fresh_bnode();
        self.cur.skip_ws();
        if self.cur.peek() == Some(']') {
            self.cur.pos += 1;
            return Ok(node);
        }
        self.predicate_object_list(&node)?;
        self.cur.skip_ws();
        self.cur.expect(']')?;
        Ok(node)
    }

    fn labelled_bnode(&mut self) -> PResult<Term> {
        let start = self.cur.pos;
        self.cur.pos += 2;
        let mut label = String::new();
        while let Some(c) = self.cur.peek() {
            if c.is_alphanumeric() || c == '_' || c == '-' || (c == '.' && self.name_continues()) {
                label.push(c);
                self.cur.pos += 1;
            } else {
                break;
            }
        }
        if label.is_empty() {
            return Err((start, "empty blank node label".into()));
        }
        if let Some(t) = self.bnode_labels.get(&label) {
            return Ok(t.clone());
        }
        let t = self.fresh_bnode();
        self.bnode_labels.insert(label, t.clone());
        Ok(t)
    }

    /// True if the '.' at the cursor is followed by another name character.
    fn name_continues(&self) -> bool {
        self.cur
            .peek_at(1)
            .is_some_and(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '%'))
    }

    fn literal(&mut self) -> PResult<Term> {
        let lexical = self.cur.read_string()?;
        match self.cur.peek() {
            Some('@') => {
                let tag = self.cur.read_langtag()?;
                Ok(Term::lang_string(lexical, tag))
            }
            Some('^') if self.cur.peek_at(1) == Some('^') => {
                self.cur.pos += 2;
                let pos = self.cur.pos;
                let dt = match self.cur.peek() {
                    Some('<') => self.iri_ref()?,
                    _ => match self.name_term()? {
                        NameTerm::Iri(i) => i,
                        _ => return Err((pos, "expected a datatype IRI".into())),
                    },
                };
                if dt == vocab::rdf::LANG_STRING {
                    return Err((pos, "rdf:langString requires a language tag".into()));
                }
                Ok(Term::literal(lexical, dt))
            }
            _ => Ok(Term::string(lexical)),
        }
    }

    fn numeric(&mut self) -> PResult<Term> {
        let start = self.cur.pos;
        let mut s = String::new();
        if let Some(c @ ('+' | '-')) = self.cur.peek() {
            s.push(c);
            self.cur.pos += 1;
        }
        let mut digits = 0;
        while let Some(c) = self.cur.peek().filter(|c| c.is_ascii_digit()) {
            s.push(c);
            digits += 1;
            self.cur.pos += 1;
        }
        let mut decimal = false;
        if self.cur.peek() == Some('.') && self.cur.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            decimal = true;
            s.push('.');
            self.cur.pos += 1;
            while let Some(c) = self.cur.peek().filter(|c| c.is_ascii_digit()) {
                s.push(c);
                digits += 1;
                self.cur.pos += 1;
            }
        }
        let mut double = false;
        if let Some(e @ ('e' | 'E')) = self.cur.peek() {
            double = true;
            s.push(e);
            self.cur.pos += 1;
            if let Some(c @ ('+' | '-')) = self.cur.peek() {
                s.push(c);
                self.cur.pos += 1;
            }
            let mut exp_digits = 0;
            while let Some(c) = self.cur.peek().filter(|c| c.is_ascii_digit()) {
                s.push(c);
                exp_digits += 1;
                self.cur.pos += 1;
            }
            if exp_digits == 0 {
                return Err((start, "malformed exponent".into()));
            }
        }
        if digits == 0 {
            return Err((start, "malformed number".into()));
        }
        let dt = if double {
            vocab::xsd::DOUBLE
        } else if decimal {
            vocab::xsd::DECIMAL
        } else {
            vocab::xsd::INTEGER
        };
        Ok(Term::literal(s, dt))
    }

    /// Prefixed name or keyword.
    fn name_term(&mut self) -> PResult<NameTerm> {
        let start = self.cur.pos;
        let mut raw = String::new();
        while let Some(c) = self.cur.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '%') {
                raw.push(c);
                self.cur.pos += 1;
            } else if c == '.' && self.name_continues() {
                raw.push(c);
                self.cur.pos += 1;
            } else if c == '\\' {
                match self.cur.peek_at(1) {
                    Some(e) if "_~.-!$&'()*+,;=/?#@%".contains(e) => {
                        raw.push(e);
                        self.cur.pos += 2;
                    }
                    _ => return Err((self.cur.pos, "invalid escape in local name".into())),
                }
            } else {
                break;
            }
        }
        if raw.is_empty() {
            let c = self.cur.peek().unwrap_or(' ');
            return Err((start, format!("unexpected character '{c}'")));
        }
        match raw.as_str() {
            "a" => return Ok(NameTerm::A),
            "true" => return Ok(NameTerm::Bool(true)),
            "false" => return Ok(NameTerm::Bool(false)),
            _ => {}
        }
        let Some(colon) = raw.find(':') else {
            return Err((start, format!("unexpected token '{raw}'")));
        };
        let (prefix, local) = (&raw[..colon], &raw[colon + 1..]);
        match self.prefixes.get(prefix) {
            Some(ns) => Ok(NameTerm::Iri(format!("{ns}{local}"))),
            None => Err((start, format!("undeclared prefix '{prefix}:'"))),
        }
    }
}

enum NameTerm {
    Iri(String),
    A,
    Bool(bool),
}

/// Canonical N-Quads: one quad per LF-terminated line, bytewise sorted, no
/// duplicates.
pub fn serialize_nquads<'a>(quads: impl IntoIterator<Item = &'a Quad>) -> String {
    let lines: BTreeSet<String> = quads.into_iter().map(Quad::canonical_line).collect();
    let mut out = String::new();
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

/// Parses N-Quads as written by [`serialize_nquads`]. IRIs under
/// `urn:skolem:` become skolem nodes again. Every line needs a graph term.
pub fn parse_nquads(text: &str) -> Result<Vec<Quad>, Diagnostic> {
    let mut cur = Cursor::new(text);
    let mut out = Vec::new();
    loop {
        cur.skip_ws();
        if cur.peek().is_none() {
            return Ok(out);
        }
        let start = cur.pos;
        let quad = nquads_line(&mut cur).map_err(|(p, m)| cur.diagnostic(p, m))?;
        let quad = quad.map_err(|e: StoreError| cur.diagnostic(start, e.to_string()))?;
        out.push(quad);
    }
}

fn nquads_line(cur: &mut Cursor) -> PResult<Result<Quad, StoreError>> {
    let mut terms = Vec::with_capacity(4);
    for _ in 0..4 {
        skip_inline_ws(cur);
        terms.push(nquads_term(cur)?);
    }
    skip_inline_ws(cur);
    cur.expect('.')?;
    skip_inline_ws(cur);
    if cur.peek() == Some('#') {
        while cur.peek().is_some_and(|c| c != '\n') {
            cur.pos += 1;
        }
    }
    match cur.peek() {
        None | Some('\n') | Some('\r') => {}
        Some(c) => return Err((cur.pos, format!("unexpected '{c}' after end of quad"))),
    }
    let g = terms.pop().unwrap();
    let o = terms.pop().unwrap();
    let p = terms.pop().unwrap();
    let s = terms.pop().unwrap();
    Ok(Quad::new(s, p, o, g))
}

fn skip_inline_ws(cur: &mut Cursor) {
    while matches!(cur.peek(), Some(' ') | Some('\t')) {
        cur.pos += 1;
    }
}

fn nquads_term(cur: &mut Cursor) -> PResult<Term> {
    match cur.peek() {
        Some('<') => {
            let pos = cur.pos;
            let iri = cur.read_iriref()?;
            if let Some(id) = iri.strip_prefix(SKOLEM_PREFIX) {
                return Ok(Term::skolem(id));
            }
            if !is_absolute_iri(&iri) {
                return Err((pos, format!("relative IRI <{iri}> in N-Quads")));
            }
            Ok(Term::iri(iri))
        }
        Some('"') => {
            let lexical = cur.read_string()?;
            match cur.peek() {
                Some('@') => Ok(Term::lang_string(lexical, cur.read_langtag()?)),
                Some('^') if cur.peek_at(1) == Some('^') => {
                    cur.pos += 2;
                    Ok(Term::literal(lexical, cur.read_iriref()?))
                }
                _ => Ok(Term::string(lexical)),
            }
        }
        Some(c) => Err((cur.pos, format!("unexpected '{c}' in N-Quads term"))),
        None => Err((cur.pos, "unexpected end of input in quad".into())),
    }
}

/// Full-dataset snapshot text.
pub fn snapshot(ds: &Dataset) -> String {
    serialize_nquads(ds.iter())
}

pub fn load_snapshot(text: &str) -> Result<Dataset, Diagnostic> {
    let mut ds = Dataset::new();
    for q in parse_nquads(text)? {
        // Quads from parse_nquads are already validated.
        ds.insert(q).expect("validated quad");
    }
    Ok(ds)
}

/// Hex SHA-256 of the snapshot; used to detect state changes.
pub fn snapshot_hash(ds: &Dataset) -> String {
    hex::encode(Sha256::digest(snapshot(ds).as_bytes()))
}
