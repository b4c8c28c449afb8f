use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::Label;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("corpus has no {0} records")]
    MissingClass(Label),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("record {0} has empty text")]
    EmptyText(u64),
    #[error("record {0} has an empty author")]
    EmptyAuthor(u64),
    #[error("duplicate record id {0}")]
    DuplicateId(u64),
    #[error("{vectors} vectors but {labels} labels")]
    LengthMismatch { vectors: usize, labels: usize },
    #[error("feature index {index} out of range for dimension {dim}")]
    DimensionMismatch { index: u32, dim: usize },
    #[error("fold count {k} invalid: need 2 <= k <= {max}")]
    InvalidFoldCount { k: usize, max: usize },
    #[error("records without a label: {0:?}")]
    UnlabeledRecords(Vec<u64>),
    #[error("no folds to average")]
    EmptyFoldList,
    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
