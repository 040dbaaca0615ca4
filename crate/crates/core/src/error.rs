use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("data-quality error: column `{column}` has {missing} of {rows} values missing (limit 5%)")]
    DataQuality {
        column: String,
        missing: usize,
        rows: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("SMO did not converge after {iterations} iterations (KKT violation {violation:.3e})")]
    Convergence { iterations: usize, violation: f64 },

    #[error("exact Shapley enumeration over {0} features is intractable (max 20)")]
    Intractable(usize),

    #[error("outlier correction impossible: every point is flagged")]
    CorrectionImpossible,

    #[error("finite-difference probe produced a non-finite value at coordinate {0}")]
    Probe(usize),

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Schema(_) => "schema",
            Error::Format(_) => "format",
            Error::DataQuality { .. } => "data_quality",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Parameter(_) => "parameter",
            Error::Contract(_) => "contract",
            Error::NonFinite(_) => "non_finite",
            Error::Convergence { .. } => "convergence",
            Error::Intractable(_) => "intractable",
            Error::CorrectionImpossible => "correction_impossible",
            Error::Probe(_) => "probe",
            Error::Diverged { .. } => "diverged",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::InFile { source, .. } => source.kind(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches a file path to errors that do not already carry one.
    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        match self {
            e @ (Error::Io { .. } | Error::InFile { .. }) => e,
            other => Error::InFile {
                path: path.into(),
                source: Box::new(other),
            },
        }
    }
}
