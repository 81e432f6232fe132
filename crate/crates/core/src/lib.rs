//! Graded disease-symptom relation mining and evaluation.
//!
//! The crate is organized along the pipeline:
//!
//! * [`vocab`]: the disease and symptom universe, with term normalization.
//! * [`corpus`]: streaming JSON-lines article reader.
//! * [`tagger`]: dictionary concept tagging of title, keywords and body.
//! * [`miner`]: co-occurrence indexes and ISF-weighted relation scores.
//! * [`embedding`]: cosine similarity over externally trained vectors.
//! * [`collection`]: graded judgment collections, majority voting, Fleiss' kappa.
//! * [`eval`]: nDCG/P/R at cutoffs, macro averages, paired t-tests, reports.
//! * [`pipeline`]: parallel tag-and-count over an article stream.

pub mod collection;
pub mod corpus;
pub mod embedding;
pub mod eval;
pub mod miner;
pub mod pipeline;
pub mod tagger;
pub mod vocab;

pub use corpus::{Article, CorpusStats};
pub use miner::{CooccurrenceIndex, Method, Regime, RelationScore};
pub use tagger::{ConceptMatcher, SectionTags};
pub use vocab::{normalize_term, Concept, ConceptIdx, ConceptKind, Vocabulary};
