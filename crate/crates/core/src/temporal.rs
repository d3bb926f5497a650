//! Day-granularity time model and reified fluents.
//!
//! A fluent `(s, p, o)` holding during `[b, e]` is stored in `<sys:fluents>` as
//!
//! ```text
//! s p N .  N a :FluentRelation ; p o ; :during I ; :provenance "..." .
//! I a time:Interval ; time:hasBeginning b ; time:hasEnd e .
//! ```
//!
//! where `N` and `I` are skolem nodes derived from `(s, p, o, b, e)`. Dates are
//! `xsd:date` literals, the open ends are `:start-of-considered-period` and
//! `:end-of-considered-period`.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::store::{Dataset, QuadPattern, StoreError, Term};
use crate::vocab::{self, graph, model, time, xsd};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemporalError {
    #[error("interval begin {begin} is after its end {end}")]
    InvalidInterval { begin: Instant, end: Instant },
    #[error("fluent property must be an IRI")]
    NonIriProperty,
    #[error("fluent subject must not be a literal")]
    LiteralSubject,
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// A point on the day-granularity time line, bracketed by the two sentinels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Instant {
    Start,
    Date(NaiveDate),
    End,
}

impl Instant {
    pub fn ymd(y: i32, m: u32, d: u32) -> Self {
        Instant::Date(NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date"))
    }

    /// January 1st of `year`.
    pub fn year(year: i32) -> Self {
        Instant::ymd(year, 1, 1)
    }

    /// Interprets a term as an instant: a date-like literal, one of the two
    /// sentinel IRIs, or a node carrying `time:inXSDDate`.
    pub fn from_term(ds: &Dataset, term: &Term) -> Option<Instant> {
        match term {
            Term::Literal(l) => parse_date_lexical(&l.lexical, &l.datatype).map(|(d, _)| Instant::Date(d)),
            Term::Iri { value } if value == model::START_OF_PERIOD => Some(Instant::Start),
            Term::Iri { value } if value == model::END_OF_PERIOD => Some(Instant::End),
            node => ds
                .objects(node, time::IN_XSD_DATE)
                .iter()
                .find_map(|t| t.as_literal().and_then(|l| parse_date_lexical(&l.lexical, &l.datatype)))
                .map(|(d, _)| Instant::Date(d)),
        }
    }

    pub fn to_term(self) -> Term {
        match self {
            Instant::Start => Term::iri(model::START_OF_PERIOD),
            Instant::End => Term::iri(model::END_OF_PERIOD),
            Instant::Date(d) => Term::literal(d.format("%Y-%m-%d").to_string(), xsd::DATE),
        }
    }
}

/// Parses a date-like lexical form. Returns the date and whether the source
/// only had year precision.
pub fn parse_date_lexical(lexical: &str, datatype: &str) -> Option<(NaiveDate, bool)> {
    let s = lexical.trim();
    let year_only = |s: &str| -> Option<(NaiveDate, bool)> {
        let digits = s.strip_prefix('-').unwrap_or(s);
        if digits.len() < 4 || !digits.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let y: i32 = s.parse().ok()?;
        NaiveDate::from_ymd_opt(y, 1, 1).map(|d| (d, true))
    };
    let full_date = |s: &str| -> Option<(NaiveDate, bool)> {
        let head = s.get(..10)?;
        let rest = &s[10..];
        // Tolerate a time zone or, for dateTime, a time part.
        if !(rest.is_empty() || rest.starts_with(['Z', '+', '-', 'T'])) {
            return None;
        }
        NaiveDate::parse_from_str(head, "%Y-%m-%d").ok().map(|d| (d, false))
    };
    match datatype {
        xsd::G_YEAR => year_only(s),
        xsd::DATE | xsd::DATE_TIME => full_date(s),
        xsd::STRING | xsd::INTEGER => full_date(s).or_else(|| year_only(s)),
        _ => None,
    }
}

impl fmt::Display for Instant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instant::Start => f.write_str("START"),
            Instant::End => f.write_str("END"),
            Instant::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
        }
    }
}

impl FromStr for Instant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "START" => Ok(Instant::Start),
            "END" => Ok(Instant::End),
            _ => parse_date_lexical(s, xsd::STRING)
                .map(|(d, _)| Instant::Date(d))
                .ok_or_else(|| format!("not a date: {s:?}")),
        }
    }
}

impl Serialize for Instant {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A closed interval `[begin, end]` with `begin <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Interval {
    begin: Instant,
    end: Instant,
}

impl Interval {
    pub fn new(begin: Instant, end: Instant) -> Result<Self, TemporalError> {
        if begin > end {
            return Err(TemporalError::InvalidInterval { begin, end });
        }
        Ok(Interval { begin, end })
    }

    /// January 1st to December 31st of `year`.
    pub fn whole_year(year: i32) -> Self {
        Interval {
            begin: Instant::ymd(year, 1, 1),
            end: Instant::ymd(year, 12, 31),
        }
    }

    pub fn begin(&self) -> Instant {
        self.begin
    }

    pub fn end(&self) -> Instant {
        self.end
    }

    pub fn contains_instant(&self, t: Instant) -> bool {
        self.begin <= t && t <= self.end
    }

    /// True if the two intervals share at least one day.
    pub fn overlaps_with(&self, other: &Interval) -> bool {
        self.begin <= other.end && other.begin <= self.end
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.begin, self.end)
    }
}

/// True iff `candidate` lies within `existing` (equality included).
pub fn subsumes(existing: &Interval, candidate: &Interval) -> bool {
    existing.begin <= candidate.begin && candidate.end <= existing.end
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AllenRelation {
    Before,
    Meets,
    Overlaps,
    Starts,
    During,
    Finishes,
    Equals,
    FinishedBy,
    Contains,
    StartedBy,
    OverlappedBy,
    MetBy,
    After,
}

impl AllenRelation {
    pub const ALL: [AllenRelation; 13] = [
        AllenRelation::Before,
        AllenRelation::Meets,
        AllenRelation::Overlaps,
        AllenRelation::Starts,
        AllenRelation::During,
        AllenRelation::Finishes,
        AllenRelation::Equals,
        AllenRelation::FinishedBy,
        AllenRelation::Contains,
        AllenRelation::StartedBy,
        AllenRelation::OverlappedBy,
        AllenRelation::MetBy,
        AllenRelation::After,
    ];

    pub fn inverse(self) -> Self {
        use AllenRelation::*;
        match self {
            Before => After,
            Meets => MetBy,
            Overlaps => OverlappedBy,
            Starts => StartedBy,
            During => Contains,
            Finishes => FinishedBy,
            Equals => Equals,
            FinishedBy => Finishes,
            Contains => During,
            StartedBy => Starts,
            OverlappedBy => Overlaps,
            MetBy => Meets,
            After => Before,
        }
    }
}

/// The Allen relation of `a` to `b`.
///
/// Point intervals are allowed; a shared endpoint only counts as `meets` when
/// both intervals are proper, otherwise the start/finish relations apply.
pub fn interval_compare(a: &Interval, b: &Interval) -> AllenRelation {
    use AllenRelation::*;
    let (b1, e1, b2, e2) = (a.begin, a.end, b.begin, b.end);
    if b1 == b2 && e1 == e2 {
        return Equals;
    }
    if e1 < b2 {
        return Before;
    }
    if b1 > e2 {
        return After;
    }
    if b1 == b2 {
        return if e1 < e2 { Starts } else { StartedBy };
    }
    if e1 == e2 {
        return if b1 > b2 { Finishes } else { FinishedBy };
    }
    if e1 == b2 {
        return Meets;
    }
    if b1 == e2 {
        return MetBy;
    }
    match (b1 < b2, e1 < e2) {
        (true, true) => Overlaps,
        (true, false) => Contains,
        (false, true) => During,
        (false, false) => OverlappedBy,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", content = "rule", rename_all = "snake_case")]
pub enum Provenance {
    Asserted,
    Rule(String),
}

impl Provenance {
    fn to_term(&self) -> Term {
        match self {
            Provenance::Asserted => Term::string("asserted"),
            Provenance::Rule(id) => Term::string(format!("rule:{id}")),
        }
    }

    fn from_term(t: &Term) -> Provenance {
        match t.lexical().and_then(|l| l.strip_prefix("rule:")) {
            Some(id) => Provenance::Rule(id.to_string()),
            None => Provenance::Asserted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FluentRelation {
    pub node: Term,
    pub subject: Term,
    pub property: Term,
    pub object: Term,
    pub during: Interval,
    pub provenance: Provenance,
    pub initiated_by: Option<Term>,
    pub terminated_by: Option<Term>,
}

/// Input to [`assert_fluent`].
#[derive(Debug, Clone)]
pub struct FluentSpec {
    pub subject: Term,
    pub property: Term,
    pub object: Term,
    pub during: Interval,
    pub provenance: Provenance,
    pub initiated_by: Option<Term>,
    pub terminated_by: Option<Term>,
}

impl FluentSpec {
    pub fn new(subject: Term, property: Term, object: Term, during: Interval) -> Self {
        FluentSpec {
            subject,
            property,
            object,
            during,
            provenance: Provenance::Asserted,
            initiated_by: None,
            terminated_by: None,
        }
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FluentOutcome {
    Inserted(Term),
    BlockedSubsumed(Term),
}

/// Reads `time:hasBeginning` / `time:hasEnd` of an interval node. Either side
/// may be missing.
pub fn read_interval_bounds(ds: &Dataset, node: &Term) -> (Option<Instant>, Option<Instant>) {
    let read = |p: &str| {
        ds.objects(node, p)
            .iter()
            .filter_map(|t| Instant::from_term(ds, t))
            .next()
    };
    (read(time::HAS_BEGINNING), read(time::HAS_END))
}

fn read_fluent(ds: &Dataset, subject: &Term, property: &Term, node: &Term) -> Option<FluentRelation> {
    let p = property.as_iri()?;
    if !ds.contains_triple(node, &Term::iri(vocab::rdf::TYPE), &Term::iri(model::FLUENT_RELATION)) {
        return None;
    }
    let object = ds.object(node, p)?;
    let interval_node = ds.object(node, model::DURING)?;
    let (begin, end) = read_interval_bounds(ds, &interval_node);
    let during = Interval::new(begin?, end?).ok()?;
    Some(FluentRelation {
        node: node.clone(),
        subject: subject.clone(),
        property: property.clone(),
        object,
        during,
        provenance: ds
            .object(node, model::PROVENANCE)
            .map(|t| Provenance::from_term(&t))
            .unwrap_or(Provenance::Asserted),
        initiated_by: ds.object(node, model::INITIATED_BY),
        terminated_by: ds.object(node, model::TERMINATED_BY),
    })
}

/// All fluents on `(subject, property, object)`, from any graph.
pub fn fluents_for(ds: &Dataset, subject: &Term, property: &Term, object: &Term) -> Vec<FluentRelation> {
    let pat = QuadPattern::any().subject(subject.clone()).predicate(property.clone());
    let mut out: Vec<FluentRelation> = ds
        .iter_matching(&pat)
        .filter(|q| q.object.is_node())
        .filter_map(|q| read_fluent(ds, subject, property, &q.object))
        .filter(|f| &f.object == object)
        .collect();
    out.sort_by(|a, b| a.node.cmp(&b.node));
    out.dedup_by(|a, b| a.node == b.node);
    out
}

/// Every readable fluent in the dataset, sorted by node.
pub fn all_fluents(ds: &Dataset) -> Vec<FluentRelation> {
    let mut out = Vec::new();
    for node in ds.subjects(vocab::rdf::TYPE, &Term::iri(model::FLUENT_RELATION)) {
        let pat = QuadPattern::any().object(node.clone());
        let mut seen = std::collections::BTreeSet::new();
        for q in ds.iter_matching(&pat) {
            if q.predicate.as_iri() == Some(model::DURING) || !seen.insert((q.subject.clone(), q.predicate.clone())) {
                continue;
            }
            if let Some(f) = read_fluent(ds, &q.subject, &q.predicate, &node) {
                out.push(f);
            }
        }
    }
    out.sort_by(|a, b| a.node.cmp(&b.node));
    out
}

fn fluent_node_id(subject: &Term, property: &Term, object: &Term, during: &Interval) -> String {
    let key = format!("{subject}\n{property}\n{object}\n{}\n{}", during.begin, during.end);
    let digest = Sha256::digest(key.as_bytes());
    format!("fluent-{}", hex::encode(&digest[..8]))
}

/// Adds a fluent unless an existing fluent on the same `(s, p, o)` already
/// covers its interval. Existing narrower fluents are left in place.
pub fn assert_fluent(ds: &mut Dataset, spec: FluentSpec) -> Result<FluentOutcome, TemporalError> {
    let Some(p_iri) = spec.property.as_iri().map(str::to_string) else {
        return Err(TemporalError::NonIriProperty);
    };
    if spec.subject.is_literal() {
        return Err(TemporalError::LiteralSubject);
    }
    spec.subject.validate()?;
    spec.property.validate()?;
    spec.object.validate()?;

    if let Some(existing) = fluents_for(ds, &spec.subject, &spec.property, &spec.object)
        .into_iter()
        .find(|f| subsumes(&f.during, &spec.during))
    {
        return Ok(FluentOutcome::BlockedSubsumed(existing.node));
    }

    let id = fluent_node_id(&spec.subject, &spec.property, &spec.object, &spec.during);
    let node = Term::skolem(id.clone());
    let interval = Term::skolem(format!("{id}-during"));
    let g = Term::iri(graph::FLUENTS);
    let rdf_type = Term::iri(vocab::rdf::TYPE);

    // Validate every quad before the first insert.
    let mut quads = vec![
        (spec.subject.clone(), spec.property.clone(), node.clone()),
        (node.clone(), rdf_type.clone(), Term::iri(model::FLUENT_RELATION)),
        (node.clone(), Term::iri(p_iri), spec.object.clone()),
        (node.clone(), Term::iri(model::DURING), interval.clone()),
        (node.clone(), Term::iri(model::PROVENANCE), spec.provenance.to_term()),
        (interval.clone(), rdf_type, Term::iri(time::INTERVAL)),
        (interval.clone(), Term::iri(time::HAS_BEGINNING), spec.during.begin.to_term()),
        (interval, Term::iri(time::HAS_END), spec.during.end.to_term()),
    ];
    if let Some(ev) = spec.initiated_by {
        quads.push((node.clone(), Term::iri(model::INITIATED_BY), ev));
    }
    if let Some(ev) = spec.terminated_by {
        quads.push((node.clone(), Term::iri(model::TERMINATED_BY), ev));
    }
    let quads = quads
        .into_iter()
        .map(|(s, p, o)| crate::store::Quad::new(s, p, o, g.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    for q in quads {
        ds.insert(q)?;
    }
    Ok(FluentOutcome::Inserted(node))
}

/// True iff some fluent on `(s, p, o)` has `t` inside its interval.
pub fn holds_at(ds: &Dataset, subject: &Term, property: &Term, object: &Term, t: Instant) -> bool {
    fluents_for(ds, subject, property, object)
        .iter()
        .any(|f| f.during.contains_instant(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(b: i32, e: i32) -> Interval {
        Interval::new(Instant::year(b), Instant::year(e)).unwrap()
    }

    fn n(s: &str) -> Term {
        Term::iri(format!("{}{s}", vocab::MODEL))
    }

    #[test]
    fn instant_order_brackets_dates() {
        assert!(Instant::Start < Instant::year(1));
        assert!(Instant::year(1857) < Instant::ymd(1857, 1, 2));
        assert!(Instant::year(3000) < Instant::End);
    }

    #[test]
    fn invalid_interval_rejected() {
        assert!(Interval::new(Instant::End, Instant::Start).is_err());
        assert!(Interval::new(Instant::year(1900), Instant::year(1899)).is_err());
    }

    #[test]
    fn allen_examples() {
        assert_eq!(interval_compare(&iv(1876, 1881), &iv(1876, 1881)), AllenRelation::Equals);
        assert_eq!(interval_compare(&iv(1876, 1881), &iv(1878, 1879)), AllenRelation::Contains);
        assert_eq!(interval_compare(&iv(1876, 1881), &iv(1881, 1890)), AllenRelation::Meets);
    }

    #[test]
    fn subsumes_examples() {
        let open = |y| Interval::new(Instant::year(y), Instant::End).unwrap();
        assert!(subsumes(&open(1870), &open(1891)));
        assert!(subsumes(&iv(1876, 1881), &iv(1876, 1881)));
        assert!(!subsumes(&iv(1876, 1881), &iv(1875, 1881)));
    }

    #[test]
    fn germany_fluent() {
        let mut ds = Dataset::new();
        let (s, p, o) = (n("saussure"), n("livedIn"), n("Germany"));
        let spec = FluentSpec::new(s.clone(), p.clone(), o.clone(), iv(1876, 1881));
        let first = assert_fluent(&mut ds, spec.clone()).unwrap();
        let FluentOutcome::Inserted(node) = first else {
            panic!("expected insertion");
        };
        assert_eq!(
            assert_fluent(&mut ds, spec).unwrap(),
            FluentOutcome::BlockedSubsumed(node.clone())
        );
        let narrower = FluentSpec::new(s.clone(), p.clone(), o.clone(), iv(1877, 1880));
        assert_eq!(assert_fluent(&mut ds, narrower).unwrap(), FluentOutcome::BlockedSubsumed(node));
        assert!(holds_at(&ds, &s, &p, &o, Instant::year(1878)));
        assert!(!holds_at(&ds, &s, &p, &o, Instant::year(1885)));
        assert!(!holds_at(&Dataset::new(), &s, &p, &o, Instant::year(1878)));
    }

    #[test]
    fn wider_fluent_keeps_narrower() {
        let mut ds = Dataset::new();
        let (s, p, o) = (n("a"), n("knows"), n("b"));
        assert_fluent(&mut ds, FluentSpec::new(s.clone(), p.clone(), o.clone(), iv(1880, 1885))).unwrap();
        let out = assert_fluent(&mut ds, FluentSpec::new(s.clone(), p.clone(), o.clone(), iv(1870, 1890))).unwrap();
        assert!(matches!(out, FluentOutcome::Inserted(_)));
        assert_eq!(fluents_for(&ds, &s, &p, &o).len(), 2);
        assert_eq!(all_fluents(&ds).len(), 2);
    }

    #[test]
    fn fluent_reads_back() {
        let mut ds = Dataset::new();
        let mut spec = FluentSpec::new(n("a"), n("uses"), Term::iri("t:1896"), iv(1894, 1899))
            .with_provenance(Provenance::Rule("r1".into()));
        spec.initiated_by = Some(n("event1"));
        assert_fluent(&mut ds, spec).unwrap();
        let f = &all_fluents(&ds)[0];
        assert_eq!(f.object, Term::iri("t:1896"));
        assert_eq!(f.during, iv(1894, 1899));
        assert_eq!(f.provenance, Provenance::Rule("r1".into()));
        assert_eq!(f.initiated_by, Some(n("event1")));
        assert_eq!(f.terminated_by, None);
    }

    #[test]
    fn instants_from_terms() {
        let ds = Dataset::new();
        assert_eq!(
            Instant::from_term(&ds, &Term::literal("1894-01-04", xsd::DATE)),
            Some(Instant::ymd(1894, 1, 4))
        );
        assert_eq!(Instant::from_term(&ds, &Term::literal("1857", xsd::G_YEAR)), Some(Instant::year(1857)));
        assert_eq!(Instant::from_term(&ds, &Term::string("1857")), Some(Instant::year(1857)));
        assert_eq!(Instant::from_term(&ds, &Term::iri(model::END_OF_PERIOD)), Some(Instant::End));
        assert_eq!(Instant::from_term(&ds, &Term::string("soon")), None);
        assert_eq!("END".parse::<Instant>(), Ok(Instant::End));
    }

    #[test]
    fn instant_via_in_xsd_date() {
        let mut ds = Dataset::new();
        let node = Term::skolem("t1");
        ds.add(
            node.clone(),
            Term::iri(time::IN_XSD_DATE),
            Term::literal("1894-01-04", xsd::DATE),
            &Term::iri("ex:g"),
        )
        .unwrap();
        assert_eq!(Instant::from_term(&ds, &node), Some(Instant::ymd(1894, 1, 4)));
    }

    fn instant() -> impl Strategy<Value = Instant> {
        prop_oneof![
            1 => Just(Instant::Start),
            1 => Just(Instant::End),
            6 => (1850..1915i32, 1..=12u32, 1..=28u32).prop_map(|(y, m, d)| Instant::ymd(y, m, d)),
        ]
    }

    fn interval() -> impl Strategy<Value = Interval> {
        (instant(), instant()).prop_map(|(a, b)| Interval::new(a.min(b), a.max(b)).unwrap())
    }

    proptest! {
        #[test]
        fn allen_inverse_is_consistent(a in interval(), b in interval()) {
            prop_assert_eq!(interval_compare(&a, &b).inverse(), interval_compare(&b, &a));
        }

        #[test]
        fn subsumes_is_a_partial_order(a in interval(), b in interval(), c in interval()) {
            prop_assert!(subsumes(&a, &a));
            if subsumes(&a, &b) && subsumes(&b, &a) {
                prop_assert_eq!(a, b);
            }
            if subsumes(&a, &b) && subsumes(&b, &c) {
                prop_assert!(subsumes(&a, &c));
            }
        }

        #[test]
        fn holds_at_is_monotone(
            intervals in proptest::collection::vec(interval(), 1..8),
            probes in proptest::collection::vec(instant(), 1..10),
        ) {
            let mut ds = Dataset::new();
            let (s, p, o) = (n("a"), n("p"), n("b"));
            let mut before: Vec<bool> = probes.iter().map(|t| holds_at(&ds, &s, &p, &o, *t)).collect();
            for i in intervals {
                assert_fluent(&mut ds, FluentSpec::new(s.clone(), p.clone(), o.clone(), i)).unwrap();
                let after: Vec<bool> = probes.iter().map(|t| holds_at(&ds, &s, &p, &o, *t)).collect();
                for (b, a) in before.iter().zip(&after) {
                    prop_assert!(!b || *a);
                }
                before = after;
            }
        }

        #[test]
        fn skolem_ids_are_deterministic(intervals in proptest::collection::vec(interval(), 0..6)) {
            let run = || {
                let mut ds = Dataset::new();
                for i in &intervals {
                    assert_fluent(&mut ds, FluentSpec::new(n("a"), n("p"), n("b"), *i)).unwrap();
                }
                crate::rdf_io::snapshot(&ds)
            };
            prop_assert_eq!(run(), run());
        }
    }
}
