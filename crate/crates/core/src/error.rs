use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two operands (or an operand and a parameter) disagree on shape.
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    /// An input value lies outside the domain of a function.
    Domain { op: &'static str, value: f64 },
    /// Reduction along an axis of length zero or past the tensor rank.
    BadAxis { axis: usize, rank: usize },
    /// Sequence shorter than what the operation needs.
    SequenceTooShort { len: usize, needed: usize },
    /// A configuration value violated its declared range.
    InvalidParameter { name: &'static str, reason: String },
    /// Training produced a NaN or infinite loss.
    NonFiniteLoss { epoch: usize, batch: usize },
    /// Hydrodynamic system matrix is singular or too ill-conditioned to trust.
    IllConditioned { omega: f64, condition: f64 },
    /// The objective returned a non-finite value at a simplex vertex.
    NonFiniteObjective { vertex: Vec<f64> },
    /// A search domain or grid with nothing in it.
    EmptyGrid(&'static str),
    /// Every candidate cell of a landscape scan violates the spacing constraint.
    NoFeasibleCell,
    /// Sea-state occurrence probabilities do not sum to one.
    OccurrenceSum { sum: f64 },
    /// Lengths of paired inputs differ.
    LengthMismatch { left: usize, right: usize },
    /// Not enough data for the requested operation.
    TooFewSamples { got: usize, needed: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { op, left, right } => {
                write!(f, "{op}: shape mismatch {left:?} vs {right:?}")
            }
            Error::Domain { op, value } => write!(f, "{op}: value {value} outside domain"),
            Error::BadAxis { axis, rank } => {
                write!(f, "axis {axis} invalid for tensor of rank {rank} (or empty)")
            }
            Error::SequenceTooShort { len, needed } => {
                write!(f, "sequence of length {len} shorter than required {needed}")
            }
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::NonFiniteLoss { epoch, batch } => {
                write!(f, "non-finite loss at epoch {epoch}, batch {batch}")
            }
            Error::IllConditioned { omega, condition } => write!(
                f,
                "system matrix ill-conditioned at omega = {omega} rad/s (condition estimate {condition:e})"
            ),
            Error::NonFiniteObjective { vertex } => {
                write!(f, "objective is not finite at vertex {vertex:?}")
            }
            Error::EmptyGrid(what) => write!(f, "empty grid: {what}"),
            Error::NoFeasibleCell => write!(f, "no feasible cell"),
            Error::OccurrenceSum { sum } => {
                write!(f, "sea-state occurrences sum to {sum}, expected 1")
            }
            Error::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            Error::TooFewSamples { got, needed } => {
                write!(f, "need at least {needed} samples, got {got}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
