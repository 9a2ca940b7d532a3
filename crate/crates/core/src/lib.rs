//! Corpus engineering for biomedical named-entity recognition and relation
//! extraction.
//!
//! The crate covers the non-neural half of a two-stage NER + RE system:
//!
//! - [`records`]: streaming, format-agnostic field tools (`self`, `delf`, `count`).
//! - [`corpus`]: documents, mentions, relations and their file formats
//!   (challenge TSV, brat standoff, CoNLL/BIO).
//! - [`bio`]: mention-aware tokenization and lossless BIO projection/decoding.
//! - [`merge`]: type-mapped merging of many corpora into one BIO file per type.
//! - [`ontology`]: OBO / MeSH tree hierarchies and ancestor linking.
//! - [`baselines`]: gazetteer NER and co-occurrence RE stand-ins for the models.
//! - [`postprocess`]: short-mention filtering, novelty resolution, submission files.
//! - [`score`]: document-averaged Jaccard for mentions and relations.
//! - [`pipeline`]: declarative configuration and the end-to-end run.

pub mod baselines;
pub mod bio;
pub mod corpus;
mod error;
pub mod merge;
pub mod ontology;
pub mod pipeline;
pub mod postprocess;
pub mod records;
pub mod score;

pub use error::{Error, Result};
