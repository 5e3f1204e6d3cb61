use thiserror::Error;

/// Errors raised by the numerical core and the test procedures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("not a unit vector: norm {norm} deviates from 1 by more than {tol:e}")]
    NotUnit { norm: f64, tol: f64 },

    /// The resultant vector vanishes, so the spherical mean direction is undefined.
    #[error("degenerate resultant{}: length {length:e} is below {tol:e}, mean direction undefined", sample_label(*.sample))]
    DegenerateResultant {
        sample: Option<usize>,
        length: f64,
        tol: f64,
    },

    /// The resultant length is numerically one, so the concentration estimate blows up.
    #[error("near-degenerate resultant{}: length {length} is within {tol:e} of 1, concentration estimate diverges", sample_label(*.sample))]
    NearDegenerateResultant {
        sample: Option<usize>,
        length: f64,
        tol: f64,
    },

    #[error("tangent sign undefined: point is colinear with the direction")]
    UndefinedSign,

    #[error("unknown test id `{0}` (expected one-sample, rayleigh or homogeneity)")]
    UnknownTest(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

fn sample_label(sample: Option<usize>) -> String {
    match sample {
        Some(i) => format!(" in sample {i}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Attach a sample index to a resultant-related error.
    pub fn in_sample(self, index: usize) -> Self {
        match self {
            Error::DegenerateResultant { length, tol, .. } => Error::DegenerateResultant {
                sample: Some(index),
                length,
                tol,
            },
            Error::NearDegenerateResultant { length, tol, .. } => Error::NearDegenerateResultant {
                sample: Some(index),
                length,
                tol,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
