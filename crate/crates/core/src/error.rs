use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rank-deficient configuration: {0}")]
    RankDeficient(String),

    #[error("singular covariance (smallest eigenvalue {0:e})")]
    SingularCovariance(f64),

    #[error("no correspondences left after trimming")]
    NoCorrespondence,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of the numerical kind (degenerate geometry, singular
    /// statistics, empty matchings) as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient(_) | Error::SingularCovariance(_) | Error::NoCorrespondence
        )
    }
}
