//! Detection core for short-text jihadist hate speech.
//!
//! Everything here is pure computation over in-memory data and builds
//! without `std` (only `alloc` is required). File formats, the CLI and the
//! HTTP service live in the companion `tripwire` crate.
//!
//! The pipeline is: [`text::normalize`] → [`text::trigrams`] →
//! [`vocab::Vocabulary`] / [`vocab::SparseVector`] → [`svm::train`] →
//! [`model::LinearModel::predict`]. Around it sit [`eval`] (cross-validation
//! and metrics), [`keywords`] (chi-squared keyword bias, word trees, place
//! mentions) and [`graph`] (eigenvector centrality and influencer filtering).
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod cues;
mod error;
pub mod eval;
pub mod graph;
pub mod keywords;
pub mod model;
pub mod svm;
pub mod text;
pub mod vocab;

pub use corpus::{balance, Corpus, CorpusBuilder, DocumentRecord, Label, LabelCounts, Pushed};
pub use cues::{username_cues, Cue, CueReport};
pub use error::{Error, Result};
pub use eval::{
    cross_domain_eval, cross_validate, macro_metrics, metrics, ClassMatrices, ConfusionMatrix,
    CvReport, DomainReport, Metrics,
};
pub use model::{LinearModel, Prediction, FORMAT_VERSION};
pub use svm::{train, LinearSvm, TrainConfig};
pub use text::{normalize, trigrams};
pub use vocab::{fit_vocabulary, vectorize, SparseVector, Vocabulary};
