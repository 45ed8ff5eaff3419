//! Alternative answer sets for open-ended visual question answering.
//!
//! Candidate alternatives for each ground-truth answer are gathered from
//! WordNet, ConceptNet and two word-vector tables, scored by textual
//! entailment against questions that mention the answer, filtered, and cut
//! to the top `k`. The resulting sets drive a semantic accuracy metric, a
//! human-agreement IoU check, and soft training targets.

pub mod answer;
pub mod artifact;
pub mod augment;
pub mod builder;
pub mod conceptnet;
pub mod dataset;
pub mod entailment;
pub mod error;
pub mod http;
pub mod metrics;
pub mod vectors;
pub mod wordnet;

pub use answer::{normalize, AnswerSet, Label, ScoredCandidate, Source};
pub use error::{Error, Result};
