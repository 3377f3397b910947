//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors reported by constructors, solvers and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or map was supplied with the wrong dimension.
    #[error("{context}: expected dimension {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A parameter failed validation; the message names the parameter and the constraint.
    #[error("{0}")]
    Invalid(String),

    /// The linear map annihilates every vector, so no Landweber step size exists.
    #[error("operator norm is zero: the map sends every vector to zero")]
    ZeroOperatorNorm,

    /// A step-size hypothesis of the form `product < limit` failed.
    #[error("step-size hypothesis violated: {name} = {value} must be < {limit}")]
    StepHypothesis {
        name: &'static str,
        value: f64,
        limit: f64,
    },

    /// An error raised while iterating, tagged with the iteration index.
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    /// Malformed PGM/PPM data; `offset` is the byte position of the defect.
    #[error("image parse error at byte {offset}: {message}")]
    ImageParse { offset: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Convenience constructor for [`Error::Invalid`].
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Tags `self` with the iteration at which it occurred.
    pub fn at_iteration(self, iteration: usize) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}
