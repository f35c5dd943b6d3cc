use thiserror::Error;

use crate::detector::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Fock dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("level index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("state is not normalized (norm or trace {0})")]
    NotNormalized(f64),

    #[error("null outcome `{label}`: Tr(Π) = {trace:e} is below the trace floor")]
    NullOutcome { label: String, trace: f64 },

    #[error("probability {0} lies outside [0, 1] beyond tolerance")]
    ProbabilityOutOfRange(f64),

    #[error("outcome `{label}` is unreachable from the probe ensemble (Pr = {probability:e})")]
    UnreachableOutcome { label: String, probability: f64 },

    #[error("herald impossible: success probability {0:e} is below the trace floor")]
    HeraldImpossible(f64),

    #[error(
        "truncation inadequate: λ = {lambda} at dim {dim} leaves tail weight {tail:e} > {limit:e}"
    )]
    TailViolation {
        lambda: f64,
        dim: usize,
        tail: f64,
        limit: f64,
    },

    #[error("sum of POVM elements exceeds identity (max eigenvalue excess {0:e})")]
    ExceedsIdentity(f64),

    #[error("duplicate outcome label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown outcome label `{0}`")]
    UnknownOutcome(String),

    #[error("POVM failed validation: {0}")]
    InvalidPovm(Box<ValidationReport>),

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

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
