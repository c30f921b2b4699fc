use std::fmt;

use thiserror::Error;

/// Which density-matrix invariant a candidate state violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateCheck {
    Shape,
    Hermiticity,
    Trace,
    Positivity,
}

impl fmt::Display for StateCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            StateCheck::Shape => "shape",
            StateCheck::Hermiticity => "Hermiticity",
            StateCheck::Trace => "trace",
            StateCheck::Positivity => "PSD",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("matrix is not Hermitian (max |m - m†| = {0:e})")]
    NotHermitian(f64),

    #[error("negative eigenvalue {0:e} beyond PSD tolerance")]
    NotPositive(f64),

    #[error("invalid density matrix: {check} check failed ({detail})")]
    InvalidState { check: StateCheck, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no measurements configured (all rates are zero)")]
    NoMeasurements,

    #[error("steady state is not unique: {multiplicity} eigenvalues below {threshold:e} (|λ| = {magnitudes:?})")]
    DegenerateNullSpace {
        multiplicity: usize,
        threshold: f64,
        magnitudes: Vec<f64>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("outcome probability {0} outside [0, 1]")]
    Probability(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-parsable category, used as the CLI error prefix.
    pub fn category(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. }
            | Error::NotHermitian(_)
            | Error::NotPositive(_)
            | Error::InvalidState { .. } => "validation",
            Error::InvalidParameter(_) => "config",
            Error::NoMeasurements | Error::DegenerateNullSpace { .. } => "protocol",
            Error::Numerical(_) | Error::Probability(_) => "numerical",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn dims(expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            expected: expected.into(),
            got: got.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
