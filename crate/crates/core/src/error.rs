use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is missing, unknown, or out of range.
    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    /// An operation received a parameter outside its domain.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Input data is malformed (broken symmetry, bad file layout).
    #[error("data error at offset {offset}: {message}")]
    Data { offset: usize, message: String },

    /// Scalar carries a nonzero mean where the mean-zero gauge is required.
    #[error("gauge error: mean coefficient {0:e} exceeds tolerance")]
    Gauge(f64),

    /// Non-finite values appeared during time integration.
    #[error("blow-up detected at t = {t}")]
    BlowUp { t: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn data(offset: usize, message: impl Into<String>) -> Self {
        Error::Data {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
