use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("control is not strictly monotone on [{s}, {t}]: {reason}")]
    NonMonotoneControl { s: f64, t: f64, reason: String },

    #[error("extension did not converge on [{s}, {t}] after K = {max_order} (last increment {last_increment:e})")]
    NotConverged {
        s: f64,
        t: f64,
        max_order: u32,
        last_increment: f64,
    },

    #[error("invalid case: {0}")]
    InvalidCase(String),

    #[error("theorem holds vacuously: epsilon {epsilon} >= 2 * omega^(delta/p) = {threshold}")]
    VacuousCutoff { epsilon: f64, threshold: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(path: impl AsRef<std::path::Path>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            message: message.to_string(),
        }
    }
}
