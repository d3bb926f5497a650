//! Knowledge resources: import of SKOS thesauri, OWL ontologies and dated
//! terminologies into the common `KnowledgeResource` / `KnowledgeEntity`
//! abstraction, cross-resource alignments, and consistency checking.
//!
//! Each resource lives in its own named graph, whose IRI is the resource id.
//! The abstraction mappings (`skos:Concept rdfs:subClassOf sism:KnowledgeEntity`
//! and friends) are stored as data in `<sys:schema>` so that rule saturation can
//! use them.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::store::{node_from_str, node_str, Dataset, Quad, QuadPattern, StoreError, Term};
use crate::vocab::{self, graph, owl, rdfs, sism, skos};

#[derive(Debug, Error)]
pub enum KresError {
    #[error("resource <{0}> is already registered")]
    DuplicateResource(String),
    #[error("unknown resource kind {0:?} (expected owl, skos or terminology)")]
    UnknownKind(String),
    #[error("import of <{}> rejected: {} clash(es)", .0.resource, .0.clashes.len())]
    Rejected(ImportReport),
    #[error("lexical form must not be empty")]
    EmptyLexicalForm,
    #[error("term entry {node} has no sism:lexicalForm")]
    MissingLexicalForm { node: String },
    #[error("two term entries share the lexical form {lexical:?}")]
    DuplicateLexicalForm { lexical: String },
    #[error("entity <{iri}> already belongs to resource <{resource}>")]
    EntityCollision { iri: String, resource: String },
    #[error("unknown knowledge entity <{0}>")]
    UnknownEntity(String),
    #[error("a correspondence must relate two different entities")]
    ReflexiveCorrespondence,
    #[error("confidence {0} is outside [0, 1]")]
    ConfidenceOutOfRange(f64),
    #[error("unknown correspondence relation {0:?}")]
    UnknownRelation(String),
    #[error("alignment CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    OwlOntology,
    SkosThesaurus,
    Terminology,
}

impl ResourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ResourceKind::OwlOntology => "owl_ontology",
            ResourceKind::SkosThesaurus => "skos_thesaurus",
            ResourceKind::Terminology => "terminology",
        }
    }
}

impl FromStr for ResourceKind {
    type Err = KresError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "owl" | "owl_ontology" => Ok(ResourceKind::OwlOntology),
            "skos" | "skos_thesaurus" => Ok(ResourceKind::SkosThesaurus),
            "terminology" => Ok(ResourceKind::Terminology),
            other => Err(KresError::UnknownKind(other.to_string())),
        }
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KresConfig {
    /// Correspondences below this confidence are navigation aids only and are
    /// ignored by the consistency checker.
    pub alignment_trust: f64,
}

impl Default for KresConfig {
    fn default() -> Self {
        KresConfig { alignment_trust: 0.8 }
    }
}

/// The abstraction mapping table applied for a resource kind:
/// `(native term, rdfs:subClassOf | rdfs:subPropertyOf, sism term)`.
pub fn mapping_table(kind: ResourceKind) -> &'static [(&'static str, &'static str, &'static str)] {
    use sism::{IN_KNOWLEDGE_RESOURCE, KNOWLEDGE_ENTITY as KE, KNOWLEDGE_RESOURCE as KR};
    const SC: &str = rdfs::SUB_CLASS_OF;
    const SP: &str = rdfs::SUB_PROPERTY_OF;
    match kind {
        ResourceKind::SkosThesaurus => &[
            (skos::CONCEPT_SCHEME, SC, KR),
            (skos::CONCEPT, SC, KE),
            (skos::IN_SCHEME, SP, IN_KNOWLEDGE_RESOURCE),
            (skos::SCHEME, SC, KR),
            (skos::SEMANTIC_RELATION, SP, sism::SEMANTIC_RELATION),
        ],
        ResourceKind::OwlOntology => &[
            (owl::ONTOLOGY, SC, KR),
            (owl::NAMED_INDIVIDUAL, SC, KE),
            (owl::CLASS, SC, KE),
            (owl::OBJECT_PROPERTY, SC, KE),
            (owl::DATATYPE_PROPERTY, SC, KE),
        ],
        ResourceKind::Terminology => &[(sism::TERMINOLOGY, SC, KR), (sism::TERM_ENTRY, SC, KE)],
    }
}

fn native_classes(kind: ResourceKind, target: &str) -> HashSet<&'static str> {
    mapping_table(kind)
        .iter()
        .filter(|(_, p, t)| *p == rdfs::SUB_CLASS_OF && *t == target)
        .map(|(c, _, _)| *c)
        .collect()
}

/// Writes all mapping tables into `<sys:schema>`. Returns the number of new quads.
pub fn install_schema(ds: &mut Dataset) -> Result<usize, StoreError> {
    let g = Term::iri(graph::SCHEMA);
    let mut added = 0;
    for kind in [ResourceKind::SkosThesaurus, ResourceKind::OwlOntology, ResourceKind::Terminology] {
        for (s, p, o) in mapping_table(kind) {
            added += ds.add(Term::iri(*s), Term::iri(*p), Term::iri(*o), &g)? as usize;
        }
    }
    Ok(added)
}

/// Case-folded NFC form used for every lexical comparison.
pub fn fold_lexical(s: &str) -> String {
    s.nfc().collect::<String>().to_lowercase().nfc().collect()
}

/// Deterministic concept IRI for a lexical form within `resource`.
///
/// The form is trimmed, NFC-normalized and lowercased; whitespace runs become
/// `-`; every other byte outside `[a-z0-9]` (a literal `-` included) is
/// percent-encoded.
pub fn mint_uri(lexical: &str, resource: &str) -> Result<String, KresError> {
    let folded = fold_lexical(lexical.trim());
    if folded.is_empty() {
        return Err(KresError::EmptyLexicalForm);
    }
    let mut slug = String::new();
    let mut in_ws = false;
    for c in folded.chars() {
        if c.is_whitespace() {
            if !in_ws {
                slug.push('-');
            }
            in_ws = true;
            continue;
        }
        in_ws = false;
        if c.is_ascii_lowercase() || c.is_ascii_digit() {
            slug.push(c);
        } else {
            let mut buf = [0u8; 4];
            for b in c.encode_utf8(&mut buf).bytes() {
                slug.push_str(&format!("%{b:02X}"));
            }
        }
    }
    Ok(format!("{resource}/concept/{slug}"))
}

#[derive(Debug, Clone, Default)]
pub struct ImportOptions {
    /// Replace an already registered resource with the same id.
    pub replace: bool,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportReport {
    pub resource: String,
    pub kind: ResourceKind,
    pub entity_count: usize,
    pub clashes: Vec<Clash>,
}

fn is_registered(ds: &Dataset, id: &Term) -> bool {
    ds.object(id, sism::RESOURCE_KIND).is_some()
}

/// Imports parsed resource quads as resource `id`.
///
/// Term entries of a terminology that only have lexical identity get minted
/// IRIs; every native entity is typed `sism:KnowledgeEntity` and linked to the
/// resource with `sism:inKnowledgeResource`. The import is rejected, and the
/// store left untouched, if it introduces consistency clashes that were not
/// already present.
pub fn import_resource(
    ds: &mut Dataset,
    quads: Vec<Quad>,
    kind: ResourceKind,
    id: &str,
    options: &ImportOptions,
    config: &KresConfig,
) -> Result<ImportReport, KresError> {
    let rid = Term::iri(id);
    rid.validate()?;
    if is_registered(ds, &rid) && !options.replace {
        return Err(KresError::DuplicateResource(id.to_string()));
    }
    let mut work = ds.clone();
    work.remove_graph(&rid);
    install_schema(&mut work)?;

    let mut quads: Vec<Quad> = quads
        .into_iter()
        .map(|mut q| {
            q.graph = rid.clone();
            q
        })
        .collect();
    let rdf_type = Term::iri(vocab::rdf::TYPE);

    if kind == ResourceKind::Terminology {
        quads = mint_term_entries(quads, id)?;
    }

    let entity_classes = native_classes(kind, sism::KNOWLEDGE_ENTITY);
    let resource_classes = native_classes(kind, sism::KNOWLEDGE_RESOURCE);
    let mut entities = BTreeSet::new();
    let mut schemes = BTreeSet::new();
    for q in &quads {
        if q.predicate != rdf_type {
            continue;
        }
        if let Some(class) = q.object.as_iri() {
            if entity_classes.contains(class) {
                entities.insert(q.subject.clone());
            }
            if resource_classes.contains(class) {
                schemes.insert(q.subject.clone());
            }
        }
    }

    for e in &entities {
        if let Some(other) = work
            .objects(e, sism::IN_KNOWLEDGE_RESOURCE)
            .into_iter()
            .find(|r| r != &rid)
        {
            return Err(KresError::EntityCollision {
                iri: node_str(e),
                resource: node_str(&other),
            });
        }
    }

    let label = options
        .label
        .clone()
        .or_else(|| {
            quads
                .iter()
                .find(|q| {
                    q.subject == rid
                        && matches!(q.predicate.as_iri(), Some(rdfs::LABEL) | Some(skos::PREF_LABEL))
                })
                .and_then(|q| q.object.lexical().map(str::to_string))
        })
        .unwrap_or_else(|| id.to_string());

    let mut extra = vec![
        (rid.clone(), rdf_type.clone(), Term::iri(sism::KNOWLEDGE_RESOURCE)),
        (rid.clone(), Term::iri(sism::RESOURCE_KIND), Term::string(kind.as_str())),
        (rid.clone(), Term::iri(rdfs::LABEL), Term::string(label)),
    ];
    if kind == ResourceKind::Terminology {
        extra.push((rid.clone(), rdf_type.clone(), Term::iri(sism::TERMINOLOGY)));
    }
    for s in &schemes {
        extra.push((s.clone(), rdf_type.clone(), Term::iri(sism::KNOWLEDGE_RESOURCE)));
    }
    // Thesauri state membership through skos:inScheme; ontologies only through
    // graph membership. Either way the link targets the registered resource.
    for e in &entities {
        extra.push((e.clone(), rdf_type.clone(), Term::iri(sism::KNOWLEDGE_ENTITY)));
        extra.push((e.clone(), Term::iri(sism::IN_KNOWLEDGE_RESOURCE), rid.clone()));
    }
    for (s, p, o) in extra {
        quads.push(Quad::new(s, p, o, rid.clone())?);
    }

    let before: BTreeSet<Clash> = check_dataset(&work, config).into_iter().collect();
    for q in &quads {
        work.insert(q.clone())?;
    }
    let clashes: Vec<Clash> = check_dataset(&work, config)
        .into_iter()
        .filter(|c| !before.contains(c))
        .collect();
    let report = ImportReport {
        resource: id.to_string(),
        kind,
        entity_count: entities.len(),
        clashes,
    };
    if !report.clashes.is_empty() {
        return Err(KresError::Rejected(report));
    }
    *ds = work;
    Ok(report)
}

fn mint_term_entries(quads: Vec<Quad>, resource: &str) -> Result<Vec<Quad>, KresError> {
    let entry_class = Term::iri(sism::TERM_ENTRY);
    let rdf_type = Term::iri(vocab::rdf::TYPE);
    let entries: BTreeSet<Term> = quads
        .iter()
        .filter(|q| q.predicate == rdf_type && q.object == entry_class)
        .map(|q| q.subject.clone())
        .collect();
    let mut renames: HashMap<Term, Term> = HashMap::new();
    let mut minted: HashMap<String, String> = HashMap::new();
    for entry in entries.iter().filter(|e| matches!(e, Term::Skolem { .. })) {
        let lexical = quads
            .iter()
            .find(|q| &q.subject == entry && q.predicate.as_iri() == Some(sism::LEXICAL_FORM))
            .and_then(|q| q.object.lexical())
            .ok_or_else(|| KresError::MissingLexicalForm { node: node_str(entry) })?;
        let iri = mint_uri(lexical, resource)?;
        if minted.insert(iri.clone(), lexical.to_string()).is_some() {
            return Err(KresError::DuplicateLexicalForm {
                lexical: lexical.to_string(),
            });
        }
        renames.insert(entry.clone(), Term::iri(iri));
    }
    let rename = |t: Term| renames.get(&t).cloned().unwrap_or(t);
    quads
        .into_iter()
        .map(|q| Ok(Quad::new(rename(q.subject), q.predicate, rename(q.object), q.graph)?))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Equivalent,
    Subsumes,
    SubsumedBy,
    Related,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Equivalent => "equivalent",
            Relation::Subsumes => "subsumes",
            Relation::SubsumedBy => "subsumed_by",
            Relation::Related => "related",
        }
    }
}

impl FromStr for Relation {
    type Err = KresError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "equivalent" => Ok(Relation::Equivalent),
            "subsumes" => Ok(Relation::Subsumes),
            "subsumed_by" => Ok(Relation::SubsumedBy),
            "related" => Ok(Relation::Related),
            other => Err(KresError::UnknownRelation(other.to_string())),
        }
    }
}

/// `(entity1, entity2, relation, confidence)`; stored in `<sys:alignments>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub entity1: String,
    pub entity2: String,
    pub relation: Relation,
    pub confidence: f64,
}

fn correspondence_node(e1: &str, e2: &str, rel: Relation) -> Term {
    let digest = Sha256::digest(format!("{e1}\n{e2}\n{}", rel.as_str()).as_bytes());
    Term::skolem(format!("align-{}", hex::encode(&digest[..8])))
}

fn is_entity(ds: &Dataset, t: &Term) -> bool {
    ds.object(t, sism::IN_KNOWLEDGE_RESOURCE).is_some()
}

/// Stores a correspondence, replacing the confidence of an existing one with
/// the same `(entity1, entity2, relation)`. Returns `true` if the store changed.
pub fn add_correspondence(ds: &mut Dataset, c: &Correspondence) -> Result<bool, KresError> {
    if c.entity1 == c.entity2 {
        return Err(KresError::ReflexiveCorrespondence);
    }
    if !(0.0..=1.0).contains(&c.confidence) {
        return Err(KresError::ConfidenceOutOfRange(c.confidence));
    }
    let (e1, e2) = (node_from_str(&c.entity1), node_from_str(&c.entity2));
    for (t, s) in [(&e1, &c.entity1), (&e2, &c.entity2)] {
        if !is_entity(ds, t) {
            return Err(KresError::UnknownEntity(s.clone()));
        }
    }
    let node = correspondence_node(&c.entity1, &c.entity2, c.relation);
    let g = Term::iri(graph::ALIGNMENTS);
    let confidence = Term::literal(format!("{}", c.confidence), vocab::xsd::DOUBLE);
    let old = ds.match_pattern(
        &QuadPattern::any()
            .subject(node.clone())
            .predicate(Term::iri(sism::CONFIDENCE))
            .graph(g.clone()),
    );
    if old.len() == 1 && old[0].object == confidence {
        return Ok(false);
    }
    for q in &old {
        ds.remove(q);
    }
    let quads = [
        (Term::iri(vocab::rdf::TYPE), Term::iri(sism::CORRESPONDENCE)),
        (Term::iri(sism::ENTITY1), e1),
        (Term::iri(sism::ENTITY2), e2),
        (Term::iri(sism::RELATION), Term::string(c.relation.as_str())),
        (Term::iri(sism::CONFIDENCE), confidence),
    ];
    for (p, o) in quads {
        ds.add(node.clone(), p, o, &g)?;
    }
    Ok(true)
}

/// All stored correspondences, sorted by `(entity1, entity2, relation)`.
pub fn correspondences(ds: &Dataset) -> Vec<Correspondence> {
    let mut out = Vec::new();
    for node in ds.subjects(vocab::rdf::TYPE, &Term::iri(sism::CORRESPONDENCE)) {
        let get = |p| ds.object(&node, p);
        let (Some(e1), Some(e2), Some(rel), Some(conf)) = (
            get(sism::ENTITY1),
            get(sism::ENTITY2),
            get(sism::RELATION),
            get(sism::CONFIDENCE),
        ) else {
            continue;
        };
        let (Some(Ok(relation)), Some(Ok(confidence))) = (
            rel.lexical().map(Relation::from_str),
            conf.lexical().map(str::parse::<f64>),
        ) else {
            continue;
        };
        out.push(Correspondence {
            entity1: node_str(&e1),
            entity2: node_str(&e2),
            relation,
            confidence,
        });
    }
    out.sort_by(|a, b| {
        (&a.entity1, &a.entity2, a.relation).cmp(&(&b.entity1, &b.entity2, b.relation))
    });
    out
}

/// Reads `entity1,entity2,relation,confidence` rows (with header).
pub fn parse_alignment_csv(text: &str) -> Result<Vec<Correspondence>, KresError> {
    #[derive(Deserialize)]
    struct Row {
        entity1: String,
        entity2: String,
        relation: String,
        confidence: f64,
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row?;
        out.push(Correspondence {
            entity1: row.entity1,
            entity2: row.entity2,
            relation: row.relation.parse()?,
            confidence: row.confidence,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Clash {
    /// An individual falls into two classes declared `owl:disjointWith`.
    DisjointTypes { individual: Term, class1: Term, class2: Term },
    /// Entities declared `owl:differentFrom` end up equivalent.
    DifferentButEquivalent { entity1: Term, entity2: Term },
    /// A functional property has two different literal values on one subject.
    FunctionalConflict {
        subject: Term,
        property: Term,
        value1: Term,
        value2: Term,
    },
}

impl fmt::Display for Clash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clash::DisjointTypes { individual, class1, class2 } => {
                write!(f, "{individual} is an instance of disjoint classes {class1} and {class2}")
            }
            Clash::DifferentButEquivalent { entity1, entity2 } => {
                write!(f, "{entity1} and {entity2} are declared different but aligned as equivalent")
            }
            Clash::FunctionalConflict { subject, property, value1, value2 } => {
                write!(f, "functional property {property} of {subject} has values {value1} and {value2}")
            }
        }
    }
}

struct UnionFind {
    ids: HashMap<Term, usize>,
    parent: Vec<usize>,
}

impl UnionFind {
    fn new() -> Self {
        UnionFind {
            ids: HashMap::new(),
            parent: Vec::new(),
        }
    }

    fn id(&mut self, t: &Term) -> usize {
        if let Some(&i) = self.ids.get(t) {
            return i;
        }
        let i = self.parent.len();
        self.parent.push(i);
        self.ids.insert(t.clone(), i);
        i
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn root(&mut self, t: &Term) -> usize {
        let i = self.id(t);
        self.find(i)
    }

    fn union(&mut self, a: &Term, b: &Term) {
        let (ra, rb) = (self.root(a), self.root(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Checks `ds` together with `candidate` without modifying `ds`.
pub fn check_consistency(ds: &Dataset, candidate: &[Quad], config: &KresConfig) -> Result<Vec<Clash>, StoreError> {
    if candidate.is_empty() {
        return Ok(check_dataset(ds, config));
    }
    let mut work = ds.clone();
    for q in candidate {
        work.insert(q.clone())?;
    }
    Ok(check_dataset(&work, config))
}

/// Clash detection over the closure of `rdfs:subClassOf`, `owl:equivalentClass`,
/// `owl:sameAs` and trusted alignment correspondences. Sorted, no duplicates.
pub fn check_dataset(ds: &Dataset, config: &KresConfig) -> Vec<Clash> {
    let by_pred = |p: &str| ds.match_pattern(&QuadPattern::any().predicate(Term::iri(p)));
    let mut uf = UnionFind::new();
    let mut sub_edges: Vec<(Term, Term)> = Vec::new();

    for q in by_pred(owl::EQUIVALENT_CLASS).into_iter().chain(by_pred(owl::SAME_AS)) {
        uf.union(&q.subject, &q.object);
    }
    for q in by_pred(rdfs::SUB_CLASS_OF) {
        sub_edges.push((q.subject, q.object));
    }
    for c in correspondences(ds) {
        if c.confidence < config.alignment_trust {
            continue;
        }
        let (e1, e2) = (node_from_str(&c.entity1), node_from_str(&c.entity2));
        match c.relation {
            Relation::Equivalent => uf.union(&e1, &e2),
            Relation::Subsumes => sub_edges.push((e2, e1)),
            Relation::SubsumedBy => sub_edges.push((e1, e2)),
            Relation::Related => {}
        }
    }

    let mut supers: HashMap<usize, Vec<usize>> = HashMap::new();
    for (sub, sup) in &sub_edges {
        let (a, b) = (uf.root(sub), uf.root(sup));
        supers.entry(a).or_default().push(b);
    }
    let mut clashes = BTreeSet::new();

    // (a) disjoint classes
    let disjoint = by_pred(owl::DISJOINT_WITH);
    if !disjoint.is_empty() {
        let mut direct_types: BTreeMap<Term, Vec<usize>> = BTreeMap::new();
        for q in by_pred(vocab::rdf::TYPE) {
            let r = uf.root(&q.object);
            direct_types.entry(q.subject).or_default().push(r);
        }
        // Individuals that are equivalent share their types.
        let mut by_root: HashMap<usize, Vec<usize>> = HashMap::new();
        for (ind, types) in &direct_types {
            let r = uf.root(ind);
            by_root.entry(r).or_default().extend(types);
        }
        for ind in direct_types.keys() {
            let r = uf.root(ind);
            let mut reach: HashSet<usize> = HashSet::new();
            let mut stack: Vec<usize> = by_root[&r].clone();
            while let Some(c) = stack.pop() {
                if reach.insert(c) {
                    stack.extend(supers.get(&c).into_iter().flatten().copied());
                }
            }
            for q in &disjoint {
                let (a, b) = (uf.root(&q.subject), uf.root(&q.object));
                if reach.contains(&a) && reach.contains(&b) {
                    let (c1, c2) = if q.subject <= q.object {
                        (q.subject.clone(), q.object.clone())
                    } else {
                        (q.object.clone(), q.subject.clone())
                    };
                    clashes.insert(Clash::DisjointTypes {
                        individual: ind.clone(),
                        class1: c1,
                        class2: c2,
                    });
                }
            }
        }
    }

    // (b) different individuals aligned as equivalent
    for q in by_pred(owl::DIFFERENT_FROM) {
        if uf.root(&q.subject) == uf.root(&q.object) {
            let (a, b) = if q.subject <= q.object {
                (q.subject, q.object)
            } else {
                (q.object, q.subject)
            };
            clashes.insert(Clash::DifferentButEquivalent { entity1: a, entity2: b });
        }
    }

    // (c) functional properties with two literal values
    for prop in ds.subjects(vocab::rdf::TYPE, &Term::iri(owl::FUNCTIONAL_PROPERTY)) {
        let mut values: BTreeMap<Term, BTreeSet<Term>> = BTreeMap::new();
        for q in ds.iter_matching(&QuadPattern::any().predicate(prop.clone())) {
            if q.object.is_literal() {
                values.entry(q.subject.clone()).or_default().insert(q.object.clone());
            }
        }
        for (subject, vals) in values {
            let vals: Vec<Term> = vals.into_iter().collect();
            for i in 0..vals.len() {
                for j in i + 1..vals.len() {
                    clashes.insert(Clash::FunctionalConflict {
                        subject: subject.clone(),
                        property: prop.clone(),
                        value1: vals[i].clone(),
                        value2: vals[j].clone(),
                    });
                }
            }
        }
    }
    clashes.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Label {
    pub value: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KnowledgeEntity {
    pub iri: String,
    pub resource: String,
    pub labels: Vec<Label>,
    /// The native class the entity was imported as, e.g. `skos:Concept`.
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TermEntry {
    pub concept: String,
    pub lexical_form: String,
    pub definition: String,
    pub contexts_of_use: Vec<String>,
    pub terminology: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResourceDescriptor {
    pub id: String,
    pub kind: ResourceKind,
    pub label: String,
    pub entity_count: usize,
}

const LABEL_PREDICATES: [&str; 4] = [rdfs::LABEL, skos::PREF_LABEL, skos::ALT_LABEL, sism::LEXICAL_FORM];

fn native_kind(ds: &Dataset, node: &Term) -> String {
    let known: HashSet<&str> = [ResourceKind::SkosThesaurus, ResourceKind::OwlOntology, ResourceKind::Terminology]
        .iter()
        .flat_map(|k| native_classes(*k, sism::KNOWLEDGE_ENTITY))
        .collect();
    ds.objects(node, vocab::rdf::TYPE)
        .iter()
        .filter_map(Term::as_iri)
        .find(|c| known.contains(c))
        .unwrap_or(sism::KNOWLEDGE_ENTITY)
        .to_string()
}

fn read_entity(ds: &Dataset, node: &Term) -> Option<KnowledgeEntity> {
    let resource = ds.object(node, sism::IN_KNOWLEDGE_RESOURCE)?;
    let mut labels = Vec::new();
    for p in LABEL_PREDICATES {
        for t in ds.objects(node, p) {
            if let Some(l) = t.as_literal() {
                labels.push(Label {
                    value: l.lexical.clone(),
                    language: l.language.clone(),
                });
            }
        }
    }
    labels.dedup();
    Some(KnowledgeEntity {
        iri: node_str(node),
        resource: node_str(&resource),
        labels,
        kind: native_kind(ds, node),
    })
}

pub fn entity(ds: &Dataset, iri: &str) -> Option<KnowledgeEntity> {
    read_entity(ds, &node_from_str(iri))
}

pub fn term_entry(ds: &Dataset, concept: &str) -> Option<TermEntry> {
    let node = node_from_str(concept);
    if !ds.contains_triple(&node, &Term::iri(vocab::rdf::TYPE), &Term::iri(sism::TERM_ENTRY)) {
        return None;
    }
    let text = |p| ds.object(&node, p).and_then(|t| t.lexical().map(str::to_string));
    Some(TermEntry {
        concept: concept.to_string(),
        lexical_form: text(sism::LEXICAL_FORM)?,
        definition: text(sism::DEFINITION).unwrap_or_default(),
        contexts_of_use: ds
            .objects(&node, sism::CONTEXT_OF_USE)
            .iter()
            .filter_map(|t| t.lexical().map(str::to_string))
            .collect(),
        terminology: node_str(&ds.object(&node, sism::IN_KNOWLEDGE_RESOURCE)?),
    })
}

/// Every term entry of every imported terminology, sorted by
/// `(terminology, concept)`.
pub fn term_entries(ds: &Dataset) -> Vec<TermEntry> {
    let mut out: Vec<TermEntry> = ds
        .subjects(vocab::rdf::TYPE, &Term::iri(sism::TERM_ENTRY))
        .iter()
        .filter_map(|n| term_entry(ds, &node_str(n)))
        .collect();
    out.sort_by(|a, b| (&a.terminology, &a.concept).cmp(&(&b.terminology, &b.concept)));
    out
}

/// Registered resources, sorted by id.
pub fn resources(ds: &Dataset) -> Vec<ResourceDescriptor> {
    let mut out = Vec::new();
    let pat = QuadPattern::any().predicate(Term::iri(sism::RESOURCE_KIND));
    for q in ds.iter_matching(&pat) {
        let Some(Ok(kind)) = q.object.lexical().map(ResourceKind::from_str) else {
            continue;
        };
        let id = &q.subject;
        out.push(ResourceDescriptor {
            id: node_str(id),
            kind,
            label: ds
                .object(id, rdfs::LABEL)
                .and_then(|t| t.lexical().map(str::to_string))
                .unwrap_or_else(|| node_str(id)),
            entity_count: ds.subjects(sism::IN_KNOWLEDGE_RESOURCE, id).len(),
        });
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

/// Entities of one resource, sorted by IRI.
pub fn resource_entities(ds: &Dataset, id: &str) -> Vec<KnowledgeEntity> {
    ds.subjects(sism::IN_KNOWLEDGE_RESOURCE, &Term::iri(id))
        .iter()
        .filter_map(|n| read_entity(ds, n))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntityMatch {
    pub entity: KnowledgeEntity,
    pub resource: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub term: Option<TermEntry>,
}

/// Case-insensitive exact lookup over labels and term lexical forms across all
/// resources, sorted by resource id.
pub fn find_entities(ds: &Dataset, lexical: &str) -> Vec<EntityMatch> {
    let wanted = fold_lexical(lexical.trim());
    if wanted.is_empty() {
        return Vec::new();
    }
    let mut nodes = BTreeSet::new();
    for p in LABEL_PREDICATES {
        for q in ds.iter_matching(&QuadPattern::any().predicate(Term::iri(p))) {
            if q.object.lexical().is_some_and(|l| fold_lexical(l.trim()) == wanted) {
                nodes.insert(q.subject.clone());
            }
        }
    }
    let mut out: Vec<EntityMatch> = nodes
        .iter()
        .filter_map(|n| read_entity(ds, n))
        .map(|entity| EntityMatch {
            resource: entity.resource.clone(),
            term: term_entry(ds, &entity.iri),
            entity,
        })
        .collect();
    out.sort_by(|a, b| (&a.resource, &a.entity.iri).cmp(&(&b.resource, &b.entity.iri)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf_io::parse_turtle;
    use proptest::prelude::*;

    const P: &str = "@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n\
        @prefix owl: <http://www.w3.org/2002/07/owl#> .\n\
        @prefix skos: <http://www.w3.org/2004/02/skos/core#> .\n\
        @prefix sism: <http://fluentkb.org/sism#> .\n\
        @prefix ex: <http://ex.org/> .\n";

    fn import(ds: &mut Dataset, ttl: &str, kind: ResourceKind, id: &str) -> Result<ImportReport, KresError> {
        let out = parse_turtle(&format!("{P}{ttl}"), &Term::iri(id));
        assert!(out.is_ok(), "{:?}", out.diagnostics);
        import_resource(ds, out.quads, kind, id, &ImportOptions::default(), &KresConfig::default())
    }

    fn terminology(lexical: &str, context: &str) -> String {
        format!("[] a sism:TermEntry ; sism:lexicalForm \"{lexical}\" ; sism:definition \"def\" ; sism:contextOfUse \"{context}\" .")
    }

    #[test]
    fn mint_examples() {
        assert_eq!(mint_uri("phonation", "t:1896").unwrap(), "t:1896/concept/phonation");
        assert_eq!(mint_uri("Phonation", "t:1896").unwrap(), "t:1896/concept/phonation");
        assert_eq!(mint_uri("système", "t:1896").unwrap(), "t:1896/concept/syst%C3%A8me");
        assert_eq!(
            mint_uri("valeur  linguistique", "t:1896").unwrap(),
            "t:1896/concept/valeur-linguistique"
        );
        assert_eq!(mint_uri("a-b", "t:1").unwrap(), "t:1/concept/a%2Db");
        assert!(matches!(mint_uri("  ", "t:1"), Err(KresError::EmptyLexicalForm)));
    }

    #[test]
    fn empty_resource_imports_cleanly() {
        let mut ds = Dataset::new();
        let r = import(&mut ds, "", ResourceKind::SkosThesaurus, "t:empty").unwrap();
        assert_eq!(r.entity_count, 0);
        assert!(r.clashes.is_empty());
        assert!(matches!(
            import(&mut ds, "", ResourceKind::SkosThesaurus, "t:empty"),
            Err(KresError::DuplicateResource(_))
        ));
    }

    #[test]
    fn skos_concepts_are_mapped() {
        let mut ds = Dataset::new();
        let ttl = "<t:th> a skos:ConceptScheme .\n\
            ex:c1 a skos:Concept ; skos:inScheme <t:th> ; skos:prefLabel \"langue\"@fr .\n\
            ex:c2 a skos:Concept ; skos:inScheme <t:th> ; skos:prefLabel \"parole\"@fr .\n\
            ex:c3 a skos:Concept ; skos:inScheme <t:th> ; skos:prefLabel \"signe\"@fr .";
        let r = import(&mut ds, ttl, ResourceKind::SkosThesaurus, "t:th").unwrap();
        assert_eq!(r.entity_count, 3);
        for c in ["ex:c1", "ex:c2", "ex:c3"] {
            let c = Term::iri(c.replace("ex:", "http://ex.org/"));
            let typing = ds.match_pattern(
                &QuadPattern::any()
                    .subject(c.clone())
                    .predicate(Term::iri(vocab::rdf::TYPE))
                    .object(Term::iri(sism::KNOWLEDGE_ENTITY)),
            );
            assert_eq!(typing.len(), 1);
            let member = ds.match_pattern(
                &QuadPattern::any().subject(c).predicate(Term::iri(sism::IN_KNOWLEDGE_RESOURCE)),
            );
            assert_eq!(member.len(), 1);
        }
        assert_eq!(resources(&ds)[0].entity_count, 3);
    }

    #[test]
    fn two_terminologies_share_a_word() {
        let mut ds = Dataset::new();
        import(&mut ds, &terminology("phonation", "a"), ResourceKind::Terminology, "t:1891").unwrap();
        import(&mut ds, &terminology("Phonation", "b"), ResourceKind::Terminology, "t:1896").unwrap();
        let hits = find_entities(&ds, "phonation");
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].entity.iri, "t:1891/concept/phonation");
        assert_eq!(hits[1].entity.iri, "t:1896/concept/phonation");
        assert_eq!(hits[1].term.as_ref().unwrap().contexts_of_use, vec!["b".to_string()]);
        assert_eq!(find_entities(&ds, "PHONATION"), hits);
        assert!(find_entities(&ds, "inconnu").is_empty());
    }

    #[test]
    fn duplicate_lexical_form_in_one_terminology() {
        let mut ds = Dataset::new();
        let ttl = format!("{}\n{}", terminology("signe", "a"), terminology("Signe", "b"));
        assert!(matches!(
            import(&mut ds, &ttl, ResourceKind::Terminology, "t:x"),
            Err(KresError::DuplicateLexicalForm { .. })
        ));
        assert!(ds.is_empty());
    }

    #[test]
    fn owl_membership_from_graph() {
        let mut ds = Dataset::new();
        let ttl = "<o:people> a owl:Ontology .\nex:Person a owl:Class .\nex:saussure a owl:NamedIndividual, ex:Person .";
        let r = import(&mut ds, ttl, ResourceKind::OwlOntology, "o:people").unwrap();
        assert_eq!(r.entity_count, 2);
        let e = entity(&ds, "http://ex.org/saussure").unwrap();
        assert_eq!(e.resource, "o:people");
        assert_eq!(e.kind, owl::NAMED_INDIVIDUAL);
    }

    #[test]
    fn entity_collision_across_resources() {
        let mut ds = Dataset::new();
        import(&mut ds, "ex:C a owl:Class .", ResourceKind::OwlOntology, "o:a").unwrap();
        let before = ds.len();
        assert!(matches!(
            import(&mut ds, "ex:C a owl:Class .", ResourceKind::OwlOntology, "o:b"),
            Err(KresError::EntityCollision { .. })
        ));
        assert_eq!(ds.len(), before);
    }

    #[test]
    fn replace_reimports() {
        let mut ds = Dataset::new();
        import(&mut ds, "ex:C a owl:Class .", ResourceKind::OwlOntology, "o:a").unwrap();
        let out = parse_turtle(&format!("{P}ex:C a owl:Class . ex:D a owl:Class ."), &Term::iri("o:a"));
        let opts = ImportOptions {
            replace: true,
            label: Some("People".into()),
        };
        let r = import_resource(&mut ds, out.quads, ResourceKind::OwlOntology, "o:a", &opts, &KresConfig::default())
            .unwrap();
        assert_eq!(r.entity_count, 2);
        assert_eq!(resources(&ds)[0].label, "People");
    }

    fn align_fixture() -> Dataset {
        let mut ds = Dataset::new();
        import(&mut ds, "ex:C1 a owl:Class . ex:C2 a owl:Class . ex:C1 owl:disjointWith ex:C2 .", ResourceKind::OwlOntology, "o:a")
            .unwrap();
        import(&mut ds, "ex:C1b a owl:Class .", ResourceKind::OwlOntology, "o:b").unwrap();
        ds
    }

    #[test]
    fn correspondence_upsert() {
        let mut ds = align_fixture();
        let mut c = Correspondence {
            entity1: "http://ex.org/C1".into(),
            entity2: "http://ex.org/C1b".into(),
            relation: Relation::Related,
            confidence: 1.0,
        };
        assert!(add_correspondence(&mut ds, &c).unwrap());
        c.confidence = 0.7;
        assert!(add_correspondence(&mut ds, &c).unwrap());
        assert!(!add_correspondence(&mut ds, &c).unwrap());
        let all = correspondences(&ds);
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].confidence, 0.7);
        let reflexive = Correspondence {
            entity2: c.entity1.clone(),
            ..c.clone()
        };
        assert!(matches!(add_correspondence(&mut ds, &reflexive), Err(KresError::ReflexiveCorrespondence)));
        let unknown = Correspondence {
            entity2: "http://ex.org/none".into(),
            ..c
        };
        assert!(matches!(add_correspondence(&mut ds, &unknown), Err(KresError::UnknownEntity(_))));
    }

    #[test]
    fn disjoint_clash_through_alignment() {
        let mut ds = align_fixture();
        let c = Correspondence {
            entity1: "http://ex.org/C1b".into(),
            entity2: "http://ex.org/C2".into(),
            relation: Relation::Equivalent,
            confidence: 1.0,
        };
        add_correspondence(&mut ds, &c).unwrap();
        let x = Term::iri("http://ex.org/x");
        let g = Term::iri("ex:data");
        let ty = Term::iri(vocab::rdf::TYPE);
        let candidate = vec![
            Quad::new(x.clone(), ty.clone(), Term::iri("http://ex.org/C1"), g.clone()).unwrap(),
            Quad::new(x.clone(), ty, Term::iri("http://ex.org/C1b"), g).unwrap(),
        ];
        let clashes = check_consistency(&ds, &candidate, &KresConfig::default()).unwrap();
        assert_eq!(
            clashes,
            vec![Clash::DisjointTypes {
                individual: x,
                class1: Term::iri("http://ex.org/C1"),
                class2: Term::iri("http://ex.org/C2"),
            }]
        );
        // Below the trust threshold the alignment is not an axiom.
        let weak = KresConfig { alignment_trust: 1.01 };
        assert!(check_consistency(&ds, &candidate, &weak).unwrap().is_empty());
    }

    #[test]
    fn functional_property_clash() {
        let ttl = format!(
            "{P}ex:birthYear a owl:FunctionalProperty .\nex:saussure ex:birthYear \"1857\", \"1858\" ."
        );
        let quads = parse_turtle(&ttl, &Term::iri("ex:g")).quads;
        let clashes = check_consistency(&Dataset::new(), &quads, &KresConfig::default()).unwrap();
        assert_eq!(clashes.len(), 1);
        assert!(matches!(clashes[0], Clash::FunctionalConflict { .. }));
    }

    #[test]
    fn different_but_equivalent_clash() {
        let ttl = format!("{P}ex:a owl:differentFrom ex:b .\nex:a owl:sameAs ex:b .");
        let quads = parse_turtle(&ttl, &Term::iri("ex:g")).quads;
        let clashes = check_consistency(&Dataset::new(), &quads, &KresConfig::default()).unwrap();
        assert_eq!(clashes.len(), 1);
    }

    #[test]
    fn independent_vocabularies_never_clash() {
        let mut ds = Dataset::new();
        import(&mut ds, "ex:A a owl:Class . ex:B a owl:Class . ex:A owl:disjointWith ex:B .", ResourceKind::OwlOntology, "o:1")
            .unwrap();
        import(&mut ds, &terminology("langue", "x"), ResourceKind::Terminology, "t:1").unwrap();
        assert!(check_dataset(&ds, &KresConfig::default()).is_empty());
    }

    #[test]
    fn rejected_import_leaves_store_unchanged() {
        let mut ds = Dataset::new();
        import(&mut ds, "ex:P a owl:FunctionalProperty . ex:s ex:P \"1\" .", ResourceKind::OwlOntology, "o:1")
            .unwrap();
        let before = crate::rdf_io::snapshot(&ds);
        let err = import(&mut ds, "<x:s2> a owl:Class . ex:s ex:P \"2\" .", ResourceKind::OwlOntology, "o:2").unwrap_err();
        let KresError::Rejected(report) = err else {
            panic!("expected rejection");
        };
        assert_eq!(report.clashes.len(), 1);
        assert_eq!(crate::rdf_io::snapshot(&ds), before);
    }

    #[test]
    fn alignment_csv() {
        let text = "entity1,entity2,relation,confidence\nex:a, ex:b ,equivalent,0.9\nex:c,ex:d,subsumes,0.5\n";
        let rows = parse_alignment_csv(text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].entity2, "ex:b");
        assert_eq!(rows[1].relation, Relation::Subsumes);
        assert!(parse_alignment_csv("entity1,entity2,relation,confidence\na,b,kinda,1\n").is_err());
    }

    fn ws_norm(s: &str) -> String {
        fold_lexical(s.trim()).split_whitespace().collect::<Vec<_>>().join(" ")
    }

    fn small_ttl_fact() -> impl Strategy<Value = Quad> {
        let node = (0..4u8).prop_map(|i| Term::iri(format!("http://ex.org/n{i}")));
        let pred = prop_oneof![
            Just(vocab::rdf::TYPE),
            Just(rdfs::SUB_CLASS_OF),
            Just(owl::DISJOINT_WITH),
            Just(owl::SAME_AS),
            Just(owl::DIFFERENT_FROM),
            Just("http://ex.org/f"),
        ];
        let obj = prop_oneof![
            (0..4u8).prop_map(|i| Term::iri(format!("http://ex.org/n{i}"))),
            Just(Term::iri(owl::FUNCTIONAL_PROPERTY)),
            (0..3u8).prop_map(|i| Term::string(format!("{i}"))),
        ];
        (node, pred, obj).prop_map(|(s, p, o)| Quad::new(s, Term::iri(p), o, Term::iri("ex:g")).unwrap())
    }

    proptest! {
        #[test]
        fn mint_is_injective(a in "[a-zé -]{1,8}", b in "[a-zé -]{1,8}") {
            prop_assume!(!ws_norm(&a).is_empty() && !ws_norm(&b).is_empty());
            let (ia, ib) = (mint_uri(&a, "t:1").unwrap(), mint_uri(&b, "t:1").unwrap());
            prop_assert_eq!(ws_norm(&a) == ws_norm(&b), ia == ib);
        }

        #[test]
        fn consistency_is_monotone(
            base in proptest::collection::vec(small_ttl_fact(), 0..25),
            more in proptest::collection::vec(small_ttl_fact(), 0..10),
        ) {
            let cfg = KresConfig::default();
            let small = check_consistency(&Dataset::new(), &base, &cfg).unwrap();
            let mut all = base.clone();
            all.extend(more);
            let big: BTreeSet<Clash> = check_consistency(&Dataset::new(), &all, &cfg).unwrap().into_iter().collect();
            for c in small {
                prop_assert!(big.contains(&c));
            }
        }
    }
}
