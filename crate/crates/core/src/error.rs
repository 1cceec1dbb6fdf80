//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Errors reported by the numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A matrix did not have the expected dimensions.
    DimensionMismatch { expected: usize, got: usize },
    /// A matrix fails the Lorentz-form membership test beyond repair.
    NotInGroup { residual: f64 },
    /// The stereographic chart was evaluated at the point at infinity.
    PointAtInfinity,
    /// A direction argument was (numerically) zero.
    ZeroVector,
    /// An operation on sampled sets received an empty set.
    EmptySet,
    /// A sampler would exceed its point budget; carries the required count.
    ResolutionTooFine { required: usize, budget: usize },
    /// A sequence expected to diverge stays bounded.
    NonDivergent,
    /// Tail limits did not stabilize; pass a subsequence or assert limits.
    LimitsNotStabilized { what: &'static str, variation: f64 },
    /// The requested avoidance margin cannot be met by any subcap.
    MarginAdjustment { requested: f64, available: f64 },
    /// Two grid nodes are not connected at the current resolution.
    Unreachable,
    /// An enumeration exceeded its element budget.
    BudgetExceeded { limit: usize },
    /// A path transition lies outside the matrix-log convergence region.
    TransitionTooLarge { norm: f64 },
    /// The matrix logarithm did not converge.
    LogFailed,
    /// A least-squares fit was degenerate.
    DegenerateFit,
    /// The fixture name or description is not recognized.
    UnknownFixture,
    /// Generic precondition violation with context.
    InvalidParameter(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NotInGroup { residual } => {
                write!(f, "matrix is not in O(1,n+1): residual {residual:e}")
            }
            Error::PointAtInfinity => write!(f, "chart undefined at the point at infinity"),
            Error::ZeroVector => write!(f, "zero vector rejected"),
            Error::EmptySet => write!(f, "empty sampled set rejected"),
            Error::ResolutionTooFine { required, budget } => {
                write!(f, "sampling needs {required} points, budget {budget}")
            }
            Error::NonDivergent => write!(f, "sequence does not diverge along the schedule"),
            Error::LimitsNotStabilized { what, variation } => {
                write!(f, "{what} did not stabilize (tail variation {variation:e}); pass a subsequence")
            }
            Error::MarginAdjustment { requested, available } => {
                write!(f, "avoidance margin {requested} infeasible; at most {available} available")
            }
            Error::Unreachable => write!(f, "points not connected at this grid resolution"),
            Error::BudgetExceeded { limit } => write!(f, "element budget {limit} exceeded"),
            Error::TransitionTooLarge { norm } => {
                write!(f, "path transition outside log region (|t - id| = {norm:e})")
            }
            Error::LogFailed => write!(f, "matrix logarithm did not converge"),
            Error::DegenerateFit => write!(f, "degenerate least-squares fit"),
            Error::UnknownFixture => write!(f, "unknown fixture"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
