use std::fmt;

/// Errors surfaced by the calculus and its preconditions.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// A constructor or operation was handed an out-of-contract parameter.
    InvalidParameter(String),
    /// Two operands live on different boxes / weights / orders.
    Mismatch(String),
    /// An operation that requires an M-elliptic symbol got one whose measured
    /// ellipticity constant is below threshold.
    NotElliptic { constant: f64 },
    /// A denominator vanished at a grid point.
    ZeroDenominator { point: Vec<i64>, x_index: usize },
    /// An internal consistency identity failed beyond tolerance.
    CheckFailed(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            CoreError::Mismatch(msg) => write!(f, "operand mismatch: {msg}"),
            CoreError::NotElliptic { constant } => {
                write!(f, "symbol is not M-elliptic (measured constant {constant:.3e})")
            }
            CoreError::ZeroDenominator { point, x_index } => {
                write!(f, "denominator vanishes at k = {point:?}, frequency index {x_index}")
            }
            CoreError::CheckFailed(msg) => write!(f, "consistency check failed: {msg}"),
        }
    }
}

impl std::error::Error for CoreError {}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
