//! Error type shared by construction, evaluation and the benchmark driver.

use std::fmt;

/// Everything that can go wrong while building or deciding an expression.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum EvalError {
    /// A divisor was decided to be exactly zero.
    DivisionByZero,
    /// An even root was taken of a value decided to be negative.
    NegativeRadicand,
    /// A leaf was constructed from a NaN or infinite double.
    NonFiniteInput,
    /// A root index below 2 was requested.
    InvalidRootIndex(u32),
    /// The sign loop reached the configured accuracy cap without separating
    /// the value from zero (only possible under the assume-nonzero policy).
    IterationLimit {
        /// Accuracy exponent reached when the loop gave up.
        accuracy: i64,
    },
    /// The algebraic-degree bound does not fit a machine word, so no usable
    /// separation bound exists for this expression.
    DegreeOverflow,
    /// A magnitude bound required by precision propagation is unavailable;
    /// indicates a divisor or radicand that was never separated from zero.
    MissingMagnitudeBound,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::DivisionByZero => write!(f, "division by a value that is exactly zero"),
            EvalError::NegativeRadicand => write!(f, "even root of a negative value"),
            EvalError::NonFiniteInput => write!(f, "leaf constructed from a non-finite double"),
            EvalError::InvalidRootIndex(k) => write!(f, "root index {k} is below 2"),
            EvalError::IterationLimit { accuracy } => {
                write!(f, "sign undecided at accuracy 2^{accuracy}; value is a probable zero")
            }
            EvalError::DegreeOverflow => {
                write!(f, "algebraic-degree bound overflows; no separation bound available")
            }
            EvalError::MissingMagnitudeBound => {
                write!(f, "magnitude bound missing for a divisor or radicand")
            }
        }
    }
}

impl std::error::Error for EvalError {}
