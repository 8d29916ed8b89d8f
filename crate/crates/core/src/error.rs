use alloc::boxed::Box;
use alloc::string::String;

use crate::trace::RunTrace;

#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("empty group")]
    EmptyGroup,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("record {index} has {found} features, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The sparse-vector mechanism was stepped after its stopping rule fired.
    #[error("halted")]
    Halted,

    /// A learner hit its update cap. The partial trace is attached.
    #[error("update cap of {cap} exceeded (theoretical cap {theoretical_cap:?})")]
    MaxIterations {
        cap: usize,
        theoretical_cap: Option<usize>,
        trace: Box<RunTrace>,
    },

    #[error("datasets are not neighbors: {0}")]
    NotNeighbors(String),

    #[error("trace is incomplete")]
    IncompleteTrace,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
