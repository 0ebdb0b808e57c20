use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid size {n}: {reason}")]
    InvalidGrid { n: usize, reason: &'static str },

    #[error("lattice mismatch: expected n={expected}, found n={found}")]
    LatticeMismatch { expected: usize, found: usize },

    #[error("non-finite sample in {what}")]
    NonFinite { what: &'static str },

    #[error("overflow in convection pipeline at step `{step}`")]
    Overflow { step: &'static str },

    #[error("blow-up at t={t}, step {step}: max|u| = {max_speed}")]
    BlowUp { t: f64, step: u64, max_speed: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// `line` is 1-based; `None` for whole-file problems such as a missing key.
    #[error("config{}: {message}", line_suffix(*.line))]
    Config {
        line: Option<usize>,
        message: String,
    },

    #[error("snapshot {path}: {message}")]
    Snapshot { path: PathBuf, message: String },

    #[error("snapshot truncated: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("bad magic {found:?}, expected \"QRNSFLD1\"")]
    BadMagic { found: [u8; 8] },

    #[error("records CSV line {line}: {message}")]
    Records { line: usize, message: String },

    #[error("audit input: {0}")]
    AuditInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(" line {l}")).unwrap_or_default()
}
