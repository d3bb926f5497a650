//! In-memory quad store with set semantics.
//!
//! Quads are keyed by their canonical N-Quads line, so iteration and every
//! pattern match come back in bytewise-sorted canonical order. Reads take
//! `&Dataset` and may run concurrently; mutation needs `&mut Dataset`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::vocab::{self, SKOLEM_PREFIX};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("IRI <{iri}> is not absolute (missing scheme)")]
    RelativeIri { iri: String },
    #[error("IRI <{iri}> contains forbidden character {ch:?}")]
    ForbiddenIriChar { iri: String, ch: char },
    #[error("IRI <{iri}> uses the reserved skolem prefix")]
    ReservedIri { iri: String },
    #[error("skolem node id must be nonempty and free of forbidden characters: {id:?}")]
    InvalidSkolem { id: String },
    #[error("language tag requires the rdf:langString datatype (literal {lexical:?})")]
    LanguageTagMismatch { lexical: String },
    #[error("quad subject must not be a literal")]
    LiteralSubject,
    #[error("quad predicate must be an IRI")]
    NonIriPredicate,
    #[error("quad graph must be an IRI")]
    NonIriGraph,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Literal {
    pub lexical: String,
    pub datatype: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}

/// An RDF term. Blank nodes never appear: parsed and generated anonymous
/// nodes are skolemized.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Term {
    Iri { value: String },
    Literal(Literal),
    Skolem { id: String },
}

impl Term {
    pub fn iri(value: impl Into<String>) -> Self {
        Term::Iri { value: value.into() }
    }

    pub fn skolem(id: impl Into<String>) -> Self {
        Term::Skolem { id: id.into() }
    }

    pub fn literal(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Term::Literal(Literal {
            lexical: lexical.into(),
            datatype: datatype.into(),
            language: None,
        })
    }

    /// A plain `xsd:string` literal.
    pub fn string(lexical: impl Into<String>) -> Self {
        Term::literal(lexical, vocab::xsd::STRING)
    }

    pub fn lang_string(lexical: impl Into<String>, language: impl Into<String>) -> Self {
        Term::Literal(Literal {
            lexical: lexical.into(),
            datatype: vocab::rdf::LANG_STRING.to_string(),
            language: Some(language.into().to_ascii_lowercase()),
        })
    }

    pub fn integer(value: i64) -> Self {
        Term::literal(value.to_string(), vocab::xsd::INTEGER)
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri { value } => Some(value),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            _ => None,
        }
    }

    /// Lexical form of a literal, `None` for nodes.
    pub fn lexical(&self) -> Option<&str> {
        self.as_literal().map(|l| l.lexical.as_str())
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    pub fn is_node(&self) -> bool {
        !self.is_literal()
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        match self {
            Term::Iri { value } => {
                validate_iri_chars(value)?;
                if !is_absolute_iri(value) {
                    return Err(StoreError::RelativeIri { iri: value.clone() });
                }
                if value.starts_with(SKOLEM_PREFIX) {
                    return Err(StoreError::ReservedIri { iri: value.clone() });
                }
                Ok(())
            }
            Term::Skolem { id } => {
                if id.is_empty() || validate_iri_chars(id).is_err() {
                    return Err(StoreError::InvalidSkolem { id: id.clone() });
                }
                Ok(())
            }
            Term::Literal(l) => {
                validate_iri_chars(&l.datatype)?;
                if !is_absolute_iri(&l.datatype) {
                    return Err(StoreError::RelativeIri { iri: l.datatype.clone() });
                }
                let is_lang = l.datatype == vocab::rdf::LANG_STRING;
                match (&l.language, is_lang) {
                    (Some(tag), true) if !tag.is_empty() => Ok(()),
                    (None, false) => Ok(()),
                    _ => Err(StoreError::LanguageTagMismatch {
                        lexical: l.lexical.clone(),
                    }),
                }
            }
        }
    }

    /// Canonical N-Quads rendering of the term.
    pub fn to_nquads(&self) -> String {
        let mut out = String::new();
        write_term(&mut out, self);
        out
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_nquads())
    }
}

/// Renders a node as a plain string: the IRI itself, or `urn:skolem:<id>`.
pub fn node_str(t: &Term) -> String {
    match t {
        Term::Iri { value } => value.clone(),
        Term::Skolem { id } => format!("{SKOLEM_PREFIX}{id}"),
        Term::Literal(l) => l.lexical.clone(),
    }
}

/// Inverse of [`node_str`] for nodes.
pub fn node_from_str(s: &str) -> Term {
    match s.strip_prefix(SKOLEM_PREFIX) {
        Some(id) => Term::skolem(id),
        None => Term::iri(s),
    }
}

pub fn is_absolute_iri(iri: &str) -> bool {
    let Some(colon) = iri.find(':') else {
        return false;
    };
    let scheme = &iri[..colon];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

fn validate_iri_chars(iri: &str) -> Result<(), StoreError> {
    match iri
        .chars()
        .find(|&c| c <= ' ' || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\'))
    {
        Some(ch) => Err(StoreError::ForbiddenIriChar {
            iri: iri.to_string(),
            ch,
        }),
        None => Ok(()),
    }
}

fn write_term(out: &mut String, term: &Term) {
    match term {
        Term::Iri { value } => {
            out.push('<');
            out.push_str(value);
            out.push('>');
        }
        Term::Skolem { id } => {
            out.push('<');
            out.push_str(SKOLEM_PREFIX);
            out.push_str(id);
            out.push('>');
        }
        Term::Literal(l) => {
            out.push('"');
            for c in l.lexical.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\r' => out.push_str("\\r"),
                    '\t' => out.push_str("\\t"),
                    c if (c as u32) < 0x20 || c == '\u{7f}' => {
                        out.push_str(&format!("\\u{:04X}", c as u32));
                    }
                    c => out.push(c),
                }
            }
            out.push('"');
            if let Some(lang) = &l.language {
                out.push('@');
                out.push_str(lang);
            } else if l.datatype != vocab::xsd::STRING {
                out.push_str("^^<");
                out.push_str(&l.datatype);
                out.push('>');
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Quad {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
    pub graph: Term,
}

impl Quad {
    /// Builds a quad, checking every term and position invariant.
    pub fn new(subject: Term, predicate: Term, object: Term, graph: Term) -> Result<Self, StoreError> {
        let q = Quad {
            subject,
            predicate,
            object,
            graph,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        if self.subject.is_literal() {
            return Err(StoreError::LiteralSubject);
        }
        if self.predicate.as_iri().is_none() {
            return Err(StoreError::NonIriPredicate);
        }
        if self.graph.as_iri().is_none() {
            return Err(StoreError::NonIriGraph);
        }
        self.subject.validate()?;
        self.predicate.validate()?;
        self.object.validate()?;
        self.graph.validate()
    }

    /// The canonical N-Quads line, without the trailing line feed.
    pub fn canonical_line(&self) -> String {
        let mut out = String::new();
        write_term(&mut out, &self.subject);
        out.push(' ');
        write_term(&mut out, &self.predicate);
        out.push(' ');
        write_term(&mut out, &self.object);
        out.push(' ');
        write_term(&mut out, &self.graph);
        out.push_str(" .");
        out
    }
}

/// A quad pattern; `None` positions are wildcards.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QuadPattern {
    pub subject: Option<Term>,
    pub predicate: Option<Term>,
    pub object: Option<Term>,
    pub graph: Option<Term>,
}

impl QuadPattern {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn subject(mut self, t: Term) -> Self {
        self.subject = Some(t);
        self
    }

    pub fn predicate(mut self, t: Term) -> Self {
        self.predicate = Some(t);
        self
    }

    pub fn object(mut self, t: Term) -> Self {
        self.object = Some(t);
        self
    }

    pub fn graph(mut self, t: Term) -> Self {
        self.graph = Some(t);
        self
    }

    pub fn matches(&self, q: &Quad) -> bool {
        fn pos(p: &Option<Term>, t: &Term) -> bool {
            p.as_ref().is_none_or(|p| p == t)
        }
        pos(&self.subject, &q.subject)
            && pos(&self.predicate, &q.predicate)
            && pos(&self.object, &q.object)
            && pos(&self.graph, &q.graph)
    }
}

type Key = Arc<str>;

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    quads: BTreeMap<Key, Quad>,
    by_subject: HashMap<Term, BTreeSet<Key>>,
    by_predicate: HashMap<Term, BTreeSet<Key>>,
    by_object: HashMap<Term, BTreeSet<Key>>,
    by_graph: HashMap<Term, BTreeSet<Key>>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }

    /// Inserts a quad; returns `true` iff it was not already present.
    pub fn insert(&mut self, q: Quad) -> Result<bool, StoreError> {
        q.validate()?;
        let key: Key = Arc::from(q.canonical_line());
        if self.quads.contains_key(&key) {
            return Ok(false);
        }
        for (index, term) in [
            (&mut self.by_subject, &q.subject),
            (&mut self.by_predicate, &q.predicate),
            (&mut self.by_object, &q.object),
            (&mut self.by_graph, &q.graph),
        ] {
            index.entry(term.clone()).or_default().insert(key.clone());
        }
        self.quads.insert(key, q);
        Ok(true)
    }

    /// Convenience for building a quad from parts and inserting it.
    pub fn add(&mut self, s: Term, p: Term, o: Term, g: &Term) -> Result<bool, StoreError> {
        self.insert(Quad::new(s, p, o, g.clone())?)
    }

    pub fn contains(&self, q: &Quad) -> bool {
        self.quads.contains_key(q.canonical_line().as_str())
    }

    pub fn remove(&mut self, q: &Quad) -> bool {
        let line = q.canonical_line();
        let Some((key, q)) = self.quads.remove_entry(line.as_str()) else {
            return false;
        };
        for (index, term) in [
            (&mut self.by_subject, &q.subject),
            (&mut self.by_predicate, &q.predicate),
            (&mut self.by_object, &q.object),
            (&mut self.by_graph, &q.graph),
        ] {
            if let Some(set) = index.get_mut(term) {
                set.remove(&key);
                if set.is_empty() {
                    index.remove(term);
                }
            }
        }
        true
    }

    pub fn remove_graph(&mut self, graph: &Term) -> usize {
        let doomed: Vec<Quad> = self
            .iter_matching(&QuadPattern::any().graph(graph.clone()))
            .cloned()
            .collect();
        for q in &doomed {
            self.remove(q);
        }
        doomed.len()
    }

    /// All quads in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = &Quad> {
        self.quads.values()
    }

    /// Quads matching `pattern`, in canonical order.
    pub fn iter_matching<'a>(&'a self, pattern: &'a QuadPattern) -> Box<dyn Iterator<Item = &'a Quad> + 'a> {
        let candidates = [
            (self.by_subject.get_or_empty(&pattern.subject)),
            (self.by_predicate.get_or_empty(&pattern.predicate)),
            (self.by_object.get_or_empty(&pattern.object)),
            (self.by_graph.get_or_empty(&pattern.graph)),
        ]
        .into_iter()
        .flatten()
        .min_by_key(|set| set.map_or(0, |s| s.len()));
        match candidates {
            None => Box::new(self.quads.values().filter(move |q| pattern.matches(q))),
            Some(None) => Box::new(std::iter::empty()),
            Some(Some(keys)) => Box::new(
                keys.iter()
                    .map(move |k| &self.quads[k])
                    .filter(move |q| pattern.matches(q)),
            ),
        }
    }

    pub fn match_pattern(&self, pattern: &QuadPattern) -> Vec<Quad> {
        self.iter_matching(pattern).cloned().collect()
    }

    /// True if the triple is present in any graph.
    pub fn contains_triple(&self, s: &Term, p: &Term, o: &Term) -> bool {
        let pat = QuadPattern {
            subject: Some(s.clone()),
            predicate: Some(p.clone()),
            object: Some(o.clone()),
            graph: None,
        };
        let found = self.iter_matching(&pat).next().is_some();
        found
    }

    /// Distinct objects of `(s, p, *)` across all graphs, sorted.
    pub fn objects(&self, s: &Term, p: &str) -> Vec<Term> {
        let pat = QuadPattern::any().subject(s.clone()).predicate(Term::iri(p));
        let set: BTreeSet<Term> = self.iter_matching(&pat).map(|q| q.object.clone()).collect();
        set.into_iter().collect()
    }

    pub fn object(&self, s: &Term, p: &str) -> Option<Term> {
        self.objects(s, p).into_iter().next()
    }

    /// Distinct subjects of `(*, p, o)` across all graphs, sorted.
    pub fn subjects(&self, p: &str, o: &Term) -> Vec<Term> {
        let pat = QuadPattern::any().predicate(Term::iri(p)).object(o.clone());
        let set: BTreeSet<Term> = self.iter_matching(&pat).map(|q| q.subject.clone()).collect();
        set.into_iter().collect()
    }

    pub fn graphs(&self) -> Vec<Term> {
        let set: BTreeSet<Term> = self.by_graph.keys().cloned().collect();
        set.into_iter().collect()
    }
}

trait IndexLookup {
    /// `None` if the position is a wildcard, `Some(None)` if bound to a term
    /// with no quads, `Some(Some(set))` otherwise.
    fn get_or_empty(&self, term: &Option<Term>) -> Option<Option<&BTreeSet<Key>>>;
}

impl IndexLookup for HashMap<Term, BTreeSet<Key>> {
    fn get_or_empty(&self, term: &Option<Term>) -> Option<Option<&BTreeSet<Key>>> {
        term.as_ref().map(|t| self.get(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iri(s: &str) -> Term {
        Term::iri(s)
    }

    fn quad(s: &str, p: &str, o: &str, g: &str) -> Quad {
        Quad::new(iri(s), iri(p), iri(o), iri(g)).unwrap()
    }

    #[test]
    fn insert_is_set_semantics() {
        let mut ds = Dataset::new();
        assert!(ds.insert(quad("ex:s", "ex:p", "ex:o", "ex:g")).unwrap());
        assert_eq!(ds.len(), 1);
        assert!(!ds.insert(quad("ex:s", "ex:p", "ex:o", "ex:g")).unwrap());
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn schema_mapping_quad_is_matchable() {
        let mut ds = Dataset::new();
        let q = quad(
            vocab::skos::CONCEPT,
            vocab::rdfs::SUB_CLASS_OF,
            vocab::sism::KNOWLEDGE_ENTITY,
            vocab::graph::SCHEMA,
        );
        ds.insert(q.clone()).unwrap();
        let found = ds.match_pattern(&QuadPattern::any().predicate(iri(vocab::rdfs::SUB_CLASS_OF)));
        assert_eq!(found, vec![q]);
    }

    #[test]
    fn malformed_quads_are_rejected() {
        let lit = Term::string("x");
        assert_eq!(
            Quad::new(lit.clone(), iri("ex:p"), iri("ex:o"), iri("ex:g")),
            Err(StoreError::LiteralSubject)
        );
        assert!(matches!(
            Quad::new(iri("relative/path"), iri("ex:p"), iri("ex:o"), iri("ex:g")),
            Err(StoreError::RelativeIri { .. })
        ));
        assert_eq!(
            Quad::new(iri("ex:s"), lit, iri("ex:o"), iri("ex:g")),
            Err(StoreError::NonIriPredicate)
        );
        let bad_lang = Term::Literal(Literal {
            lexical: "x".into(),
            datatype: vocab::xsd::STRING.into(),
            language: Some("fr".into()),
        });
        assert!(matches!(
            Quad::new(iri("ex:s"), iri("ex:p"), bad_lang, iri("ex:g")),
            Err(StoreError::LanguageTagMismatch { .. })
        ));
        assert!(matches!(
            Quad::new(iri("urn:skolem:x"), iri("ex:p"), iri("ex:o"), iri("ex:g")),
            Err(StoreError::ReservedIri { .. })
        ));
    }

    #[test]
    fn empty_store_matches_nothing() {
        assert!(Dataset::new().match_pattern(&QuadPattern::any()).is_empty());
    }

    #[test]
    fn predicate_match_is_sorted() {
        let mut ds = Dataset::new();
        for s in ["ex:c", "ex:a", "ex:b"] {
            ds.insert(quad(s, "ex:p", "ex:o", "ex:g")).unwrap();
        }
        ds.insert(quad("ex:a", "ex:other", "ex:o", "ex:g")).unwrap();
        let subjects: Vec<_> = ds
            .match_pattern(&QuadPattern::any().predicate(iri("ex:p")))
            .into_iter()
            .map(|q| q.subject)
            .collect();
        assert_eq!(subjects, vec![iri("ex:a"), iri("ex:b"), iri("ex:c")]);
    }

    #[test]
    fn remove_graph_counts() {
        let mut ds = Dataset::new();
        assert_eq!(ds.remove_graph(&iri("ex:none")), 0);
        ds.insert(quad("ex:a", "ex:p", "ex:o", "ex:g")).unwrap();
        ds.insert(quad("ex:b", "ex:p", "ex:o", "ex:g")).unwrap();
        ds.insert(quad("ex:b", "ex:p", "ex:o", "ex:h")).unwrap();
        assert_eq!(ds.remove_graph(&iri("ex:g")), 2);
        assert_eq!(ds.len(), 1);
        assert!(ds.match_pattern(&QuadPattern::any().graph(iri("ex:g"))).is_empty());
    }

    fn small_term() -> impl Strategy<Value = Term> {
        prop_oneof![
            (0..5u8).prop_map(|i| Term::iri(format!("ex:n{i}"))),
            (0..3u8).prop_map(|i| Term::skolem(format!("b{i}"))),
            (0..3u8).prop_map(|i| Term::string(format!("v{i}"))),
        ]
    }

    fn small_quad() -> impl Strategy<Value = Quad> {
        (
            prop_oneof![
                (0..5u8).prop_map(|i| Term::iri(format!("ex:n{i}"))),
                (0..3u8).prop_map(|i| Term::skolem(format!("b{i}")))
            ],
            (0..3u8).prop_map(|i| Term::iri(format!("ex:p{i}"))),
            small_term(),
            (0..3u8).prop_map(|i| Term::iri(format!("ex:g{i}"))),
        )
            .prop_map(|(s, p, o, g)| Quad::new(s, p, o, g).unwrap())
    }

    fn pattern() -> impl Strategy<Value = QuadPattern> {
        (
            proptest::option::of(small_term()),
            proptest::option::of((0..3u8).prop_map(|i| Term::iri(format!("ex:p{i}")))),
            proptest::option::of(small_term()),
            proptest::option::of((0..3u8).prop_map(|i| Term::iri(format!("ex:g{i}")))),
        )
            .prop_map(|(subject, predicate, object, graph)| QuadPattern {
                subject,
                predicate,
                object,
                graph,
            })
    }

    proptest! {
        #[test]
        fn insert_twice_same_size(qs in proptest::collection::vec(small_quad(), 0..50)) {
            let mut once = Dataset::new();
            let mut twice = Dataset::new();
            for q in &qs {
                once.insert(q.clone()).unwrap();
                twice.insert(q.clone()).unwrap();
                twice.insert(q.clone()).unwrap();
            }
            prop_assert_eq!(once.len(), twice.len());
            let distinct: BTreeSet<_> = qs.iter().cloned().collect();
            prop_assert_eq!(once.len(), distinct.len());
        }

        #[test]
        fn match_equals_brute_force(
            qs in proptest::collection::vec(small_quad(), 0..200),
            pat in pattern(),
        ) {
            let mut ds = Dataset::new();
            for q in &qs {
                ds.insert(q.clone()).unwrap();
            }
            let mut expected: Vec<Quad> = qs
                .iter()
                .filter(|q| pat.matches(q))
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            expected.sort_by_key(|q| q.canonical_line());
            prop_assert_eq!(ds.match_pattern(&pat), expected);
        }

        #[test]
        fn removed_graph_is_empty(
            qs in proptest::collection::vec(small_quad(), 0..60),
            g in 0..3u8,
        ) {
            let mut ds = Dataset::new();
            for q in &qs {
                ds.insert(q.clone()).unwrap();
            }
            let graph = Term::iri(format!("ex:g{g}"));
            let before = ds.len();
            let removed = ds.remove_graph(&graph);
            prop_assert_eq!(ds.len(), before - removed);
            prop_assert!(ds.match_pattern(&QuadPattern::any().graph(graph)).is_empty());
        }
    }
}
