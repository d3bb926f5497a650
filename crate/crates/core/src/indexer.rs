//! Semantic indexing of transcriptions against terminologies.
//!
//! Words and multi-word expressions of a transcription are matched against
//! the lexical forms of every imported term entry (longest match first). Each
//! candidate sense gets
//!
//! ```text
//! score = (1 - lambda) * sim + lambda * tau
//! ```
//!
//! where `sim` is the best cosine similarity between the bag of content words
//! around the occurrence and a context of use of the entry, and `tau` is 1, 0
//! or 0.5 depending on whether the manuscript's writing time overlaps the
//! period in which its author used the entry's terminology (0.5 when either is
//! unknown). Senses scoring above `theta` are stored as proposed associations
//! for expert review.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;

use crate::kres::{self, fold_lexical, TermEntry};
use crate::rules::read_interval;
use crate::store::{node_from_str, node_str, Dataset, QuadPattern, StoreError, Term};
use crate::temporal::{fluents_for, Interval};
use crate::vocab::{self, graph, model, sism, xsd};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords-fr.txt");

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("unknown transcription {0}")]
    UnknownTranscription(String),
    #[error("transcription {existing} already covers manuscript {manuscript}, surface {surface:?}, zone {zone:?}")]
    DuplicateZone {
        existing: String,
        manuscript: String,
        surface: String,
        zone: String,
    },
    #[error("unknown association {0}")]
    UnknownAssociation(String),
    #[error("association {0} is already decided")]
    AlreadyDecided(String),
    #[error("invalid verdict {0:?} (expected accepted or rejected)")]
    InvalidVerdict(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("transcriptions line {line}: {message}")]
    Jsonl { line: usize, message: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcription {
    pub id: String,
    pub manuscript: String,
    pub surface: String,
    pub zone: String,
    pub seq: i64,
    pub text: String,
}

/// Reads one transcription per line; blank lines are skipped.
pub fn parse_transcriptions_jsonl(text: &str) -> Result<Vec<Transcription>, IndexError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| IndexError::Jsonl {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn text_term(ds: &Dataset, node: &Term, p: &str) -> Option<String> {
    ds.object(node, p).and_then(|t| t.lexical().map(str::to_string))
}

fn read_transcription(ds: &Dataset, node: &Term) -> Option<Transcription> {
    Some(Transcription {
        id: node_str(node),
        manuscript: node_str(&ds.object(node, sism::OF_MANUSCRIPT)?),
        surface: text_term(ds, node, sism::SURFACE)?,
        zone: text_term(ds, node, sism::ZONE)?,
        seq: text_term(ds, node, sism::SEQUENCE)?.parse().ok()?,
        text: text_term(ds, node, sism::TEXT)?,
    })
}

pub fn transcription(ds: &Dataset, id: &str) -> Option<Transcription> {
    read_transcription(ds, &node_from_str(id))
}

/// All transcriptions ordered by manuscript, then sequence index.
pub fn transcriptions(ds: &Dataset) -> Vec<Transcription> {
    let mut out: Vec<Transcription> = ds
        .subjects(vocab::rdf::TYPE, &Term::iri(sism::TRANSCRIPTION))
        .iter()
        .filter_map(|n| read_transcription(ds, n))
        .collect();
    out.sort_by(|a, b| (&a.manuscript, a.seq, &a.id).cmp(&(&b.manuscript, b.seq, &b.id)));
    out
}

/// Stores (or replaces) a transcription in `<sys:documents>`.
pub fn add_transcription(ds: &mut Dataset, t: &Transcription) -> Result<(), IndexError> {
    if let Some(other) = transcriptions(ds)
        .into_iter()
        .find(|o| o.id != t.id && o.manuscript == t.manuscript && o.surface == t.surface && o.zone == t.zone)
    {
        return Err(IndexError::DuplicateZone {
            existing: other.id,
            manuscript: t.manuscript.clone(),
            surface: t.surface.clone(),
            zone: t.zone.clone(),
        });
    }
    let node = node_from_str(&t.id);
    let g = Term::iri(graph::DOCUMENTS);
    let quads = [
        (vocab::rdf::TYPE, Term::iri(sism::TRANSCRIPTION)),
        (sism::OF_MANUSCRIPT, node_from_str(&t.manuscript)),
        (sism::SURFACE, Term::string(&t.surface)),
        (sism::ZONE, Term::string(&t.zone)),
        (sism::SEQUENCE, Term::integer(t.seq)),
        (sism::TEXT, Term::string(&t.text)),
    ];
    let quads = quads
        .into_iter()
        .map(|(p, o)| crate::store::Quad::new(node.clone(), Term::iri(p), o, g.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    for q in ds.match_pattern(&QuadPattern::any().subject(node.clone()).graph(g.clone())) {
        ds.remove(&q);
    }
    for q in quads {
        ds.insert(q)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    /// Offsets in Unicode scalar values.
    pub start: usize,
    pub end: usize,
    pub surface: String,
    /// NFC, lowercased.
    pub folded: String,
}

/// Splits text into runs of letters, digits and combining marks. Everything
/// else, apostrophes and hyphens included, separates tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current: Option<(usize, String)> = None;
    for (i, c) in text.chars().enumerate() {
        let word = c.is_alphanumeric() || (is_combining_mark(c) && current.is_some());
        match (&mut current, word) {
            (Some((_, s)), true) => s.push(c),
            (None, true) => current = Some((i, c.to_string())),
            (Some(_), false) => {
                let (start, s) = current.take().unwrap();
                tokens.push(token(start, s));
            }
            (None, false) => {}
        }
    }
    if let Some((start, s)) = current {
        tokens.push(token(start, s));
    }
    tokens
}

fn token(start: usize, surface: String) -> Token {
    Token {
        start,
        end: start + surface.chars().count(),
        folded: fold_lexical(&surface),
        surface,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Occurrence {
    pub transcription: String,
    pub start: usize,
    pub end: usize,
    pub surface_form: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub occurrence: Occurrence,
    /// Token index range of the occurrence.
    pub tokens: std::ops::Range<usize>,
    /// Every concept whose lexical form matches, sorted.
    pub concepts: Vec<String>,
}

/// Folded token sequences of every term entry's lexical form.
struct Lexicon {
    forms: HashMap<Vec<String>, Vec<String>>,
    longest: usize,
}

impl Lexicon {
    fn build(entries: &[TermEntry]) -> Self {
        let mut forms: HashMap<Vec<String>, Vec<String>> = HashMap::new();
        for e in entries {
            let key: Vec<String> = tokenize(&e.lexical_form).into_iter().map(|t| t.folded).collect();
            if !key.is_empty() {
                forms.entry(key).or_default().push(e.concept.clone());
            }
        }
        for concepts in forms.values_mut() {
            concepts.sort();
            concepts.dedup();
        }
        let longest = forms.keys().map(Vec::len).max().unwrap_or(0);
        Lexicon { forms, longest }
    }
}

fn scan(lexicon: &Lexicon, t: &Transcription, tokens: &[Token]) -> Vec<Candidate> {
    let chars: Vec<char> = t.text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let max = lexicon.longest.min(tokens.len() - i);
        let hit = (1..=max).rev().find_map(|len| {
            let key: Vec<String> = tokens[i..i + len].iter().map(|t| t.folded.clone()).collect();
            lexicon.forms.get(&key).map(|c| (len, c))
        });
        match hit {
            Some((len, concepts)) => {
                let (start, end) = (tokens[i].start, tokens[i + len - 1].end);
                out.push(Candidate {
                    occurrence: Occurrence {
                        transcription: t.id.clone(),
                        start,
                        end,
                        surface_form: chars[start..end].iter().collect(),
                    },
                    tokens: i..i + len,
                    concepts: concepts.clone(),
                });
                i += len;
            }
            None => i += 1,
        }
    }
    out
}

/// Longest-match scan of the transcription against all term entries.
pub fn find_candidates(ds: &Dataset, t: &Transcription) -> Vec<Candidate> {
    let lexicon = Lexicon::build(&kres::term_entries(ds));
    scan(&lexicon, t, &tokenize(&t.text))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexConfig {
    pub theta: f64,
    pub lambda: f64,
    pub window: usize,
    pub stopwords: Arc<BTreeSet<String>>,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            theta: 0.35,
            lambda: 0.3,
            window: 5,
            stopwords: Arc::new(parse_stopwords(DEFAULT_STOPWORDS)),
        }
    }
}

impl IndexConfig {
    pub fn validate(&self) -> Result<(), IndexError> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(IndexError::InvalidConfig(format!("theta {} outside [0, 1]", self.theta)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(IndexError::InvalidConfig(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if self.window == 0 {
            return Err(IndexError::InvalidConfig("window must be at least 1".into()));
        }
        Ok(())
    }
}

/// One token per line; `#` starts a comment line.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(fold_lexical)
        .collect()
}

type Bag = BTreeMap<String, f64>;

fn bag<'a>(tokens: impl IntoIterator<Item = &'a Token>, stopwords: &BTreeSet<String>) -> Bag {
    let mut b = Bag::new();
    for t in tokens {
        if !stopwords.contains(&t.folded) {
            *b.entry(t.folded.clone()).or_default() += 1.0;
        }
    }
    b
}

/// Cosine of two term-frequency bags; 0 if either is empty.
pub fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

/// Content-word bag of the tokens within `window` tokens of the occurrence,
/// the occurrence itself included.
pub fn window_bag(tokens: &[Token], occ: &std::ops::Range<usize>, window: usize, stopwords: &BTreeSet<String>) -> BTreeMap<String, f64> {
    let lo = occ.start.saturating_sub(window);
    let hi = (occ.end + window).min(tokens.len());
    bag(&tokens[lo..hi], stopwords)
}

/// Best cosine between the window bag and any context of use of the entry.
pub fn context_similarity(window: &BTreeMap<String, f64>, entry: &TermEntry, stopwords: &BTreeSet<String>) -> f64 {
    entry
        .contexts_of_use
        .iter()
        .map(|c| cosine(window, &bag(&tokenize(c), stopwords)))
        .fold(0.0, f64::max)
}

/// Explicit `:writingTime`, else `:inferredWritingTime`.
pub fn writing_time(ds: &Dataset, manuscript: &Term) -> Option<Interval> {
    [model::WRITING_TIME, model::INFERRED_WRITING_TIME]
        .iter()
        .find_map(|p| ds.object(manuscript, p))
        .and_then(|node| read_interval(ds, &node))
}

/// The temporal plausibility factor: 1 if the writing time overlaps a period
/// in which the manuscript's author `uses` the terminology, 0 if it overlaps
/// none of them, 0.5 if either side is unknown.
pub fn temporal_factor(ds: &Dataset, manuscript: &Term, terminology: &Term) -> f64 {
    let Some(written) = writing_time(ds, manuscript) else {
        return 0.5;
    };
    let usage: Vec<Interval> = ds
        .objects(manuscript, model::AUTHOR)
        .iter()
        .flat_map(|a| fluents_for(ds, a, &Term::iri(model::USES), terminology))
        .map(|f| f.during)
        .collect();
    if usage.is_empty() {
        0.5
    } else if usage.iter().any(|u| u.overlaps_with(&written)) {
        1.0
    } else {
        0.0
    }
}

pub fn combine(sim: f64, tau: f64, lambda: f64) -> f64 {
    ((1.0 - lambda) * sim + lambda * tau).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociationStatus {
    Proposed,
    Accepted,
    Rejected,
}

impl AssociationStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            AssociationStatus::Proposed => "proposed",
            AssociationStatus::Accepted => "accepted",
            AssociationStatus::Rejected => "rejected",
        }
    }
}

impl FromStr for AssociationStatus {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proposed" => Ok(AssociationStatus::Proposed),
            "accepted" => Ok(AssociationStatus::Accepted),
            "rejected" => Ok(AssociationStatus::Rejected),
            other => Err(IndexError::InvalidVerdict(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Association {
    pub id: String,
    pub occurrence: Occurrence,
    pub concept: String,
    pub score: f64,
    pub status: AssociationStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decided_by: Option<String>,
}

fn association_id(occ: &Occurrence, concept: &str) -> String {
    let key = format!("{}\n{}\n{}\n{concept}", occ.transcription, occ.start, occ.end);
    let digest = Sha256::digest(key.as_bytes());
    format!("assoc-{}", hex::encode(&digest[..8]))
}

fn read_association(ds: &Dataset, node: &Term) -> Option<Association> {
    let Term::Skolem { id } = node else { return None };
    let int = |p| text_term(ds, node, p).and_then(|s| s.parse::<usize>().ok());
    Some(Association {
        id: id.clone(),
        occurrence: Occurrence {
            transcription: node_str(&ds.object(node, sism::IN_TRANSCRIPTION)?),
            start: int(sism::START_OFFSET)?,
            end: int(sism::END_OFFSET)?,
            surface_form: text_term(ds, node, sism::SURFACE_FORM)?,
        },
        concept: node_str(&ds.object(node, sism::CONCEPT)?),
        score: text_term(ds, node, sism::SCORE)?.parse().ok()?,
        status: text_term(ds, node, sism::STATUS)?.parse().ok()?,
        decided_by: text_term(ds, node, sism::DECIDED_BY),
    })
}

fn write_association(ds: &mut Dataset, a: &Association) -> Result<(), StoreError> {
    let node = Term::skolem(&a.id);
    let g = Term::iri(graph::INDEX);
    let mut quads = vec![
        (vocab::rdf::TYPE, Term::iri(sism::ASSOCIATION)),
        (sism::IN_TRANSCRIPTION, node_from_str(&a.occurrence.transcription)),
        (sism::START_OFFSET, Term::integer(a.occurrence.start as i64)),
        (sism::END_OFFSET, Term::integer(a.occurrence.end as i64)),
        (sism::SURFACE_FORM, Term::string(&a.occurrence.surface_form)),
        (sism::CONCEPT, node_from_str(&a.concept)),
        (sism::SCORE, Term::literal(format!("{}", a.score), xsd::DOUBLE)),
        (sism::STATUS, Term::string(a.status.as_str())),
    ];
    if let Some(d) = &a.decided_by {
        quads.push((sism::DECIDED_BY, Term::string(d)));
    }
    for q in ds.match_pattern(&QuadPattern::any().subject(node.clone()).graph(g.clone())) {
        ds.remove(&q);
    }
    for (p, o) in quads {
        ds.add(node.clone(), Term::iri(p), o, &g)?;
    }
    Ok(())
}

pub fn association(ds: &Dataset, id: &str) -> Option<Association> {
    read_association(ds, &Term::skolem(id))
}

fn sort_associations(v: &mut [Association]) {
    v.sort_by(|a, b| {
        (&a.occurrence.transcription, a.occurrence.start)
            .cmp(&(&b.occurrence.transcription, b.occurrence.start))
            .then(b.score.total_cmp(&a.score))
            .then(a.concept.cmp(&b.concept))
    });
}

/// Stored associations, optionally filtered by status; ordered by
/// transcription, offset, descending score, then concept.
pub fn associations(ds: &Dataset, status: Option<AssociationStatus>) -> Vec<Association> {
    let mut out: Vec<Association> = ds
        .subjects(vocab::rdf::TYPE, &Term::iri(sism::ASSOCIATION))
        .iter()
        .filter_map(|n| read_association(ds, n))
        .filter(|a| status.is_none_or(|s| a.status == s))
        .collect();
    sort_associations(&mut out);
    out
}

pub fn associations_for(ds: &Dataset, transcription: &str) -> Vec<Association> {
    let mut out: Vec<Association> = ds
        .subjects(sism::IN_TRANSCRIPTION, &node_from_str(transcription))
        .iter()
        .filter_map(|n| read_association(ds, n))
        .collect();
    sort_associations(&mut out);
    out
}

/// Scores every candidate sense of one transcription without touching the
/// store. Nothing is filtered by `theta`.
pub fn score_candidates(ds: &Dataset, t: &Transcription, config: &IndexConfig) -> Vec<Association> {
    let entries = kres::term_entries(ds);
    let by_concept: HashMap<&str, &TermEntry> = entries.iter().map(|e| (e.concept.as_str(), e)).collect();
    let lexicon = Lexicon::build(&entries);
    let tokens = tokenize(&t.text);
    let manuscript = node_from_str(&t.manuscript);
    let mut out = Vec::new();
    for cand in scan(&lexicon, t, &tokens) {
        let window = window_bag(&tokens, &cand.tokens, config.window, &config.stopwords);
        for concept in &cand.concepts {
            let entry = by_concept[concept.as_str()];
            let sim = context_similarity(&window, entry, &config.stopwords);
            let tau = temporal_factor(ds, &manuscript, &node_from_str(&entry.terminology));
            out.push(Association {
                id: association_id(&cand.occurrence, concept),
                occurrence: cand.occurrence.clone(),
                concept: concept.clone(),
                score: combine(sim, tau, config.lambda),
                status: AssociationStatus::Proposed,
                decided_by: None,
            });
        }
    }
    sort_associations(&mut out);
    out
}

/// Indexes one transcription: replaces its proposed associations with the
/// candidates scoring above `theta`. Decided associations are never touched.
pub fn index_transcription(ds: &mut Dataset, id: &str, config: &IndexConfig) -> Result<Vec<Association>, IndexError> {
    config.validate()?;
    let t = transcription(ds, id).ok_or_else(|| IndexError::UnknownTranscription(id.to_string()))?;
    let scored = score_candidates(ds, &t, config);
    let mut work = ds.clone();
    let decided: BTreeSet<String> = associations_for(&work, id)
        .into_iter()
        .filter(|a| a.status != AssociationStatus::Proposed)
        .map(|a| a.id)
        .collect();
    for old in associations_for(&work, id) {
        if old.status == AssociationStatus::Proposed {
            for q in work.match_pattern(&QuadPattern::any().subject(Term::skolem(&old.id))) {
                work.remove(&q);
            }
        }
    }
    let mut kept = Vec::new();
    for a in scored {
        if a.score > config.theta && !decided.contains(&a.id) {
            write_association(&mut work, &a)?;
            kept.push(a);
        }
    }
    *ds = work;
    Ok(kept)
}

/// Indexes every stored transcription, in order.
pub fn index_all(ds: &mut Dataset, config: &IndexConfig) -> Result<Vec<Association>, IndexError> {
    let mut out = Vec::new();
    for t in transcriptions(ds) {
        out.extend(index_transcription(ds, &t.id, config)?);
    }
    Ok(out)
}

/// Records an expert verdict on a proposed association.
pub fn decide(ds: &mut Dataset, id: &str, verdict: AssociationStatus, decider: &str) -> Result<Association, IndexError> {
    if verdict == AssociationStatus::Proposed {
        return Err(IndexError::InvalidVerdict(verdict.as_str().into()));
    }
    let mut a = association(ds, id).ok_or_else(|| IndexError::UnknownAssociation(id.to_string()))?;
    if a.status != AssociationStatus::Proposed {
        return Err(IndexError::AlreadyDecided(id.to_string()));
    }
    a.status = verdict;
    a.decided_by = Some(decider.to_string());
    write_association(ds, &a)?;
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kres::{import_resource, ImportOptions, KresConfig, ResourceKind};
    use crate::rdf_io::parse_turtle;
    use crate::temporal::{assert_fluent, FluentSpec, Instant};
    use proptest::prelude::*;

    fn spans(text: &str) -> Vec<(usize, usize, String)> {
        tokenize(text).into_iter().map(|t| (t.start, t.end, t.surface)).collect()
    }

    #[test]
    fn tokenizer_examples() {
        assert!(tokenize("").is_empty());
        assert_eq!(
            spans("la phonation des sons"),
            vec![
                (0, 2, "la".into()),
                (3, 12, "phonation".into()),
                (13, 16, "des".into()),
                (17, 21, "sons".into())
            ]
        );
        let words: Vec<String> = tokenize("l'arbitraire du signe").into_iter().map(|t| t.surface).collect();
        assert_eq!(words, vec!["l", "arbitraire", "du", "signe"]);
        let t = tokenize("Système");
        assert_eq!(t[0].folded, "système");
        // Decomposed e + combining grave stays one token and folds to NFC.
        let t = tokenize("syste\u{300}me x");
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].folded, "système");
        assert_eq!(t[0].end, 8);
    }

    const TERMS: &str = "@prefix sism: <http://fluentkb.org/sism#> .\n";

    fn term(lex: &str, contexts: &[&str]) -> String {
        let ctx: String = contexts.iter().map(|c| format!(" ; sism:contextOfUse \"{c}\"")).collect();
        format!("[] a sism:TermEntry ; sism:lexicalForm \"{lex}\" ; sism:definition \"d\"{ctx} .\n")
    }

    fn import_terms(ds: &mut Dataset, id: &str, body: &str) {
        let out = parse_turtle(&format!("{TERMS}{body}"), &Term::iri(id));
        assert!(out.is_ok(), "{:?}", out.diagnostics);
        import_resource(ds, out.quads, ResourceKind::Terminology, id, &ImportOptions::default(), &KresConfig::default())
            .unwrap();
    }

    fn ms(ds: &mut Dataset, text: &str) -> Transcription {
        let t = Transcription {
            id: "ex:t1".into(),
            manuscript: "ex:m1".into(),
            surface: "1r".into(),
            zone: "z1".into(),
            seq: 1,
            text: text.into(),
        };
        add_transcription(ds, &t).unwrap();
        t
    }

    #[test]
    fn longest_match_wins() {
        let mut ds = Dataset::new();
        import_terms(&mut ds, "t:a", &(term("valeur", &["x"]) + &term("valeur linguistique", &["y"])));
        let t = ms(&mut ds, "la Valeur linguistique du signe");
        let c = find_candidates(&ds, &t);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].occurrence.surface_form, "Valeur linguistique");
        assert_eq!((c[0].occurrence.start, c[0].occurrence.end), (3, 22));
        assert_eq!(c[0].concepts, vec!["t:a/concept/valeur-linguistique".to_string()]);
    }

    #[test]
    fn similarity_examples() {
        let cfg = IndexConfig::default();
        let tokens = tokenize("la phonation des sons");
        let w = window_bag(&tokens, &(1..2), 5, &cfg.stopwords);
        let entry = |c: &str| TermEntry {
            concept: "c".into(),
            lexical_form: "phonation".into(),
            definition: String::new(),
            contexts_of_use: vec![c.into()],
            terminology: "t".into(),
        };
        let oracle = 2.0 / (2f64.sqrt() * 3f64.sqrt());
        assert!((context_similarity(&w, &entry("phonation des sons laryngés"), &cfg.stopwords) - oracle).abs() < 1e-12);
        let oracle = 1.0 / (2f64.sqrt() * 3f64.sqrt());
        assert!((context_similarity(&w, &entry("phonation comme acte psychique"), &cfg.stopwords) - oracle).abs() < 1e-12);
        assert!((context_similarity(&w, &entry("la phonation des sons"), &cfg.stopwords) - 1.0).abs() < 1e-12);
        let none = TermEntry {
            contexts_of_use: vec![],
            ..entry("")
        };
        assert_eq!(context_similarity(&w, &none, &cfg.stopwords), 0.0);
    }

    #[test]
    fn combine_examples() {
        let sim = 2.0 / 6f64.sqrt();
        assert!((combine(sim, 1.0, 0.3) - 0.871).abs() < 1e-3);
        assert!((combine(sim, 0.0, 0.3) - 0.571).abs() < 1e-3);
        assert!((combine(0.0, 0.5, 0.3) - 0.15).abs() < 1e-12);
    }

    fn dated_fixture() -> Dataset {
        let mut ds = Dataset::new();
        import_terms(&mut ds, "t:1891", &term("phonation", &["phonation comme acte psychique", "la phonation des sons articulés"]));
        import_terms(&mut ds, "t:1896", &term("phonation", &["la phonation des sons laryngés"]));
        let n = |s: &str| Term::iri(format!("{}{s}", vocab::MODEL));
        let uses = |ds: &mut Dataset, t: &str, b, e| {
            let during = Interval::new(b, e).unwrap();
            assert_fluent(ds, FluentSpec::new(n("saussure"), n("uses"), Term::iri(t), during)).unwrap();
        };
        uses(&mut ds, "t:1891", Instant::ymd(1891, 1, 1), Instant::ymd(1893, 12, 31));
        uses(&mut ds, "t:1896", Instant::ymd(1894, 1, 1), Instant::ymd(1899, 12, 31));
        let g = Term::iri("ex:data");
        let m = Term::iri("ex:m1");
        ds.add(m.clone(), n("author"), n("saussure"), &g).unwrap();
        ds.add(m, n("writingTime"), Term::skolem("w1"), &g).unwrap();
        ds.add(Term::skolem("w1"), Term::iri(vocab::time::HAS_BEGINNING), Term::literal("1894-03-01", xsd::DATE), &g)
            .unwrap();
        ds.add(Term::skolem("w1"), Term::iri(vocab::time::HAS_END), Term::literal("1894-03-31", xsd::DATE), &g)
            .unwrap();
        ms(&mut ds, "la phonation des sons");
        ds
    }

    #[test]
    fn era_correct_sense_ranks_first() {
        let mut ds = dated_fixture();
        let kept = index_transcription(&mut ds, "ex:t1", &IndexConfig::default()).unwrap();
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].concept, "t:1896/concept/phonation");
        let sim = 2.0 / 6f64.sqrt();
        assert!((kept[0].score - (0.7 * sim + 0.3)).abs() < 1e-12);
        assert!((kept[1].score - 0.7 * sim).abs() < 1e-12);

        let strict = IndexConfig {
            theta: 0.6,
            ..IndexConfig::default()
        };
        let kept = index_transcription(&mut ds, "ex:t1", &strict).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(associations(&ds, None).len(), 1);
    }

    #[test]
    fn decisions_survive_reindex() {
        let mut ds = dated_fixture();
        let kept = index_transcription(&mut ds, "ex:t1", &IndexConfig::default()).unwrap();
        let a1 = decide(&mut ds, &kept[0].id, AssociationStatus::Accepted, "expert-1").unwrap();
        assert_eq!(a1.status, AssociationStatus::Accepted);
        assert!(matches!(
            decide(&mut ds, &kept[0].id, AssociationStatus::Rejected, "expert-2"),
            Err(IndexError::AlreadyDecided(_))
        ));
        assert!(matches!(decide(&mut ds, "assoc-none", AssociationStatus::Accepted, "x"), Err(IndexError::UnknownAssociation(_))));
        let again = index_transcription(&mut ds, "ex:t1", &IndexConfig::default()).unwrap();
        assert_eq!(again.len(), 1);
        assert_eq!(association(&ds, &kept[0].id), Some(a1));
        assert_eq!(associations(&ds, Some(AssociationStatus::Proposed)).len(), 1);
    }

    #[test]
    fn no_candidates_and_unknown_date() {
        let mut ds = Dataset::new();
        import_terms(&mut ds, "t:1", &term("phonation", &[]));
        let t = ms(&mut ds, "rien à signaler");
        assert!(find_candidates(&ds, &t).is_empty());
        assert!(index_transcription(&mut ds, "ex:t1", &IndexConfig::default()).unwrap().is_empty());
        let t = ms(&mut ds, "phonation");
        let scored = score_candidates(&ds, &t, &IndexConfig::default());
        assert!((scored[0].score - 0.15).abs() < 1e-12);
    }

    #[test]
    fn zone_uniqueness() {
        let mut ds = Dataset::new();
        let t = ms(&mut ds, "a");
        let other = Transcription { id: "ex:t2".into(), ..t };
        assert!(matches!(add_transcription(&mut ds, &other), Err(IndexError::DuplicateZone { .. })));
    }

    #[test]
    fn jsonl_input() {
        let text = "{\"id\":\"ex:t1\",\"manuscript\":\"ex:m1\",\"surface\":\"1r\",\"zone\":\"a\",\"seq\":1,\"text\":\"x\"}\n\n";
        assert_eq!(parse_transcriptions_jsonl(text).unwrap().len(), 1);
        assert!(matches!(parse_transcriptions_jsonl("{"), Err(IndexError::Jsonl { line: 1, .. })));
    }

    fn bag_strategy() -> impl Strategy<Value = BTreeMap<String, f64>> {
        proptest::collection::btree_map("[a-e]", 1..5u32, 0..5).prop_map(|m| m.into_iter().map(|(k, v)| (k, v as f64)).collect())
    }

    proptest! {
        #[test]
        fn offsets_slice_to_surface(text in "[a-zé' ,.-]{0,40}") {
            let chars: Vec<char> = text.chars().collect();
            for t in tokenize(&text) {
                prop_assert!(t.start < t.end && t.end <= chars.len());
                prop_assert_eq!(chars[t.start..t.end].iter().collect::<String>(), t.surface);
            }
        }

        #[test]
        fn cosine_bounds_and_scale_invariance(a in bag_strategy(), b in bag_strategy(), k in 1..10u32) {
            let c = cosine(&a, &b);
            prop_assert!((0.0..=1.0).contains(&c));
            let scaled: BTreeMap<String, f64> = a.iter().map(|(w, x)| (w.clone(), x * k as f64)).collect();
            prop_assert!((cosine(&scaled, &b) - c).abs() < 1e-9);
        }

        #[test]
        fn score_is_bounded_and_monotone(s1 in 0.0..=1.0f64, s2 in 0.0..=1.0f64, tau in prop_oneof![Just(0.0), Just(0.5), Just(1.0)], l in 0.0..=1.0f64) {
            let (a, b) = (combine(s1, tau, l), combine(s2, tau, l));
            prop_assert!((0.0..=1.0).contains(&a));
            if s1 <= s2 {
                prop_assert!(a <= b);
            }
        }
    }
}
