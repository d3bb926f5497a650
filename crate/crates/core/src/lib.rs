//! Knowledge base engine for historical manuscripts.
//!
//! The crate is organised bottom-up:
//!
//! * [`store`] – the in-memory quad store every other module reads and writes through.
//! * [`rdf_io`] – Turtle-subset parser and canonical N-Quads snapshots.
//! * [`kres`] – knowledge resources (SKOS thesauri, OWL ontologies, dated terminologies),
//!   alignments and consistency checking.
//! * [`temporal`] – instants, intervals, Allen relations and reified fluents.
//! * [`rules`] – the rule language, alternating saturation and writing-time bounds.
//! * [`indexer`] – semantic indexing of transcriptions and the expert review loop.

pub mod indexer;
pub mod kres;
pub mod rdf_io;
pub mod rules;
pub mod store;
pub mod temporal;
pub mod vocab;

pub use indexer::{Association, AssociationStatus, IndexConfig, Occurrence, Transcription};
pub use kres::{Clash, Correspondence, ImportReport, KnowledgeEntity, ResourceKind, TermEntry};
pub use rdf_io::{parse_nquads, parse_turtle, serialize_nquads, ParseOutcome};
pub use rules::{Rule, SaturationReport};
pub use store::{Dataset, Quad, QuadPattern, StoreError, Term};
pub use temporal::{AllenRelation, FluentOutcome, Instant, Interval};
