use std::io;
use std::path::PathBuf;

use multigroup_core::learners::Method;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] multigroup_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// Bad flags or configuration values; maps to exit code 2.
    #[error("{0}")]
    Usage(String),

    #[error("{method}, run {run}: {source}")]
    Learner {
        method: Method,
        run: usize,
        #[source]
        source: multigroup_core::Error,
    },

    #[error("every group is empty in the validation set")]
    NoValidationGroups,
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> Self {
        let path = path.into();
        move |source| Error::Csv { path, source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
