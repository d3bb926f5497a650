//! Namespaces and well-known IRIs.

pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const SKOS: &str = "http://www.w3.org/2004/02/skos/core#";
pub const TIME: &str = "http://www.w3.org/2006/time#";
/// Knowledge-resource abstraction vocabulary.
pub const SISM: &str = "http://fluentkb.org/sism#";
/// Model vocabulary (fluents, writing times, dating bounds). Bound to the empty
/// prefix in rule files.
pub const MODEL: &str = "http://fluentkb.org/ns#";

/// Prefix under which skolem nodes are written in snapshots.
pub const SKOLEM_PREFIX: &str = "urn:skolem:";

pub mod graph {
    pub const SCHEMA: &str = "sys:schema";
    pub const FLUENTS: &str = "sys:fluents";
    pub const INDEX: &str = "sys:index";
    pub const ALIGNMENTS: &str = "sys:alignments";
    pub const INFERRED: &str = "sys:inferred";
    pub const PROVENANCE: &str = "sys:provenance";
    pub const DOCUMENTS: &str = "sys:documents";
    pub const RULES: &str = "sys:rules";
}

pub mod rdf {
    pub const TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
}

pub mod rdfs {
    pub const SUB_CLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
    pub const SUB_PROPERTY_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subPropertyOf";
    pub const LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
}

pub mod owl {
    pub const ONTOLOGY: &str = "http://www.w3.org/2002/07/owl#Ontology";
    pub const NAMED_INDIVIDUAL: &str = "http://www.w3.org/2002/07/owl#NamedIndividual";
    pub const CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
    pub const OBJECT_PROPERTY: &str = "http://www.w3.org/2002/07/owl#ObjectProperty";
    pub const DATATYPE_PROPERTY: &str = "http://www.w3.org/2002/07/owl#DatatypeProperty";
    pub const FUNCTIONAL_PROPERTY: &str = "http://www.w3.org/2002/07/owl#FunctionalProperty";
    pub const EQUIVALENT_CLASS: &str = "http://www.w3.org/2002/07/owl#equivalentClass";
    pub const DISJOINT_WITH: &str = "http://www.w3.org/2002/07/owl#disjointWith";
    pub const DIFFERENT_FROM: &str = "http://www.w3.org/2002/07/owl#differentFrom";
    pub const SAME_AS: &str = "http://www.w3.org/2002/07/owl#sameAs";
}

pub mod xsd {
    pub const STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
    pub const INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
    pub const DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
    pub const DOUBLE: &str = "http://www.w3.org/2001/XMLSchema#double";
    pub const BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";
    pub const DATE: &str = "http://www.w3.org/2001/XMLSchema#date";
    pub const DATE_TIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";
    pub const G_YEAR: &str = "http://www.w3.org/2001/XMLSchema#gYear";
}

pub mod skos {
    pub const CONCEPT_SCHEME: &str = "http://www.w3.org/2004/02/skos/core#ConceptScheme";
    pub const CONCEPT: &str = "http://www.w3.org/2004/02/skos/core#Concept";
    pub const IN_SCHEME: &str = "http://www.w3.org/2004/02/skos/core#inScheme";
    pub const SCHEME: &str = "http://www.w3.org/2004/02/skos/core#Scheme";
    pub const SEMANTIC_RELATION: &str = "http://www.w3.org/2004/02/skos/core#semanticRelation";
    pub const PREF_LABEL: &str = "http://www.w3.org/2004/02/skos/core#prefLabel";
    pub const ALT_LABEL: &str = "http://www.w3.org/2004/02/skos/core#altLabel";
}

pub mod time {
    pub const INTERVAL: &str = "http://www.w3.org/2006/time#Interval";
    pub const HAS_BEGINNING: &str = "http://www.w3.org/2006/time#hasBeginning";
    pub const HAS_END: &str = "http://www.w3.org/2006/time#hasEnd";
    pub const IN_XSD_DATE: &str = "http://www.w3.org/2006/time#inXSDDate";
}

pub mod sism {
    pub const KNOWLEDGE_RESOURCE: &str = "http://fluentkb.org/sism#KnowledgeResource";
    pub const KNOWLEDGE_ENTITY: &str = "http://fluentkb.org/sism#KnowledgeEntity";
    pub const IN_KNOWLEDGE_RESOURCE: &str = "http://fluentkb.org/sism#inKnowledgeResource";
    pub const SEMANTIC_RELATION: &str = "http://fluentkb.org/sism#semanticRelation";
    pub const TERMINOLOGY: &str = "http://fluentkb.org/sism#Terminology";
    pub const TERM_ENTRY: &str = "http://fluentkb.org/sism#TermEntry";
    pub const LEXICAL_FORM: &str = "http://fluentkb.org/sism#lexicalForm";
    pub const DEFINITION: &str = "http://fluentkb.org/sism#definition";
    pub const CONTEXT_OF_USE: &str = "http://fluentkb.org/sism#contextOfUse";
    pub const RESOURCE_KIND: &str = "http://fluentkb.org/sism#resourceKind";

    pub const CORRESPONDENCE: &str = "http://fluentkb.org/sism#Correspondence";
    pub const ENTITY1: &str = "http://fluentkb.org/sism#entity1";
    pub const ENTITY2: &str = "http://fluentkb.org/sism#entity2";
    pub const RELATION: &str = "http://fluentkb.org/sism#relation";
    pub const CONFIDENCE: &str = "http://fluentkb.org/sism#confidence";

    pub const TRANSCRIPTION: &str = "http://fluentkb.org/sism#Transcription";
    pub const OF_MANUSCRIPT: &str = "http://fluentkb.org/sism#ofManuscript";
    pub const SURFACE: &str = "http://fluentkb.org/sism#surface";
    pub const ZONE: &str = "http://fluentkb.org/sism#zone";
    pub const SEQUENCE: &str = "http://fluentkb.org/sism#sequence";
    pub const TEXT: &str = "http://fluentkb.org/sism#text";

    pub const ASSOCIATION: &str = "http://fluentkb.org/sism#Association";
    pub const IN_TRANSCRIPTION: &str = "http://fluentkb.org/sism#inTranscription";
    pub const START_OFFSET: &str = "http://fluentkb.org/sism#startOffset";
    pub const END_OFFSET: &str = "http://fluentkb.org/sism#endOffset";
    pub const SURFACE_FORM: &str = "http://fluentkb.org/sism#surfaceForm";
    pub const CONCEPT: &str = "http://fluentkb.org/sism#concept";
    pub const SCORE: &str = "http://fluentkb.org/sism#score";
    pub const STATUS: &str = "http://fluentkb.org/sism#status";
    pub const DECIDED_BY: &str = "http://fluentkb.org/sism#decidedBy";

    pub const DERIVATION: &str = "http://fluentkb.org/sism#Derivation";
    pub const DERIVED_SUBJECT: &str = "http://fluentkb.org/sism#derivedSubject";
    pub const DERIVED_PREDICATE: &str = "http://fluentkb.org/sism#derivedPredicate";
    pub const DERIVED_OBJECT: &str = "http://fluentkb.org/sism#derivedObject";
    pub const DERIVED_BY: &str = "http://fluentkb.org/sism#derivedBy";

    pub const RULE_SOURCE: &str = "http://fluentkb.org/sism#ruleSource";
}

pub mod model {
    pub const FLUENT_RELATION: &str = "http://fluentkb.org/ns#FluentRelation";
    pub const DURING: &str = "http://fluentkb.org/ns#during";
    pub const PROVENANCE: &str = "http://fluentkb.org/ns#provenance";
    pub const INITIATED_BY: &str = "http://fluentkb.org/ns#initiatedBy";
    pub const TERMINATED_BY: &str = "http://fluentkb.org/ns#terminatedBy";
    pub const START_OF_PERIOD: &str = "http://fluentkb.org/ns#start-of-considered-period";
    pub const END_OF_PERIOD: &str = "http://fluentkb.org/ns#end-of-considered-period";
    pub const WRITING_TIME: &str = "http://fluentkb.org/ns#writingTime";
    pub const INFERRED_WRITING_TIME: &str = "http://fluentkb.org/ns#inferredWritingTime";
    pub const NOT_BEFORE: &str = "http://fluentkb.org/ns#notBefore";
    pub const NOT_AFTER: &str = "http://fluentkb.org/ns#notAfter";
    pub const USES: &str = "http://fluentkb.org/ns#uses";
    pub const AUTHOR: &str = "http://fluentkb.org/ns#author";
}

/// Prefixes understood by the rule language and the CLI query syntax without
/// an explicit declaration.
pub fn default_prefixes() -> Vec<(&'static str, &'static str)> {
    vec![
        ("", MODEL),
        ("rdf", RDF),
        ("rdfs", RDFS),
        ("owl", OWL),
        ("xsd", XSD),
        ("skos", SKOS),
        ("time", TIME),
        ("sism", SISM),
    ]
}
