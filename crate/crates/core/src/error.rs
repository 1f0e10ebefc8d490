use thiserror::Error;

pub type Result<T> = std::result::Result<T, FradeError>;

/// Errors raised by the numerical routines.
///
/// The variants are grouped so that front ends can map them onto exit
/// statuses: [`FradeError::is_hypothesis_violation`] marks inputs that break
/// a stated assumption of an estimate, [`FradeError::is_numerical`] marks
/// solver breakdowns.
#[derive(Debug, Error)]
pub enum FradeError {
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Weight family does not match the operation (e.g. SUB weight with alpha >= 1/2).
    #[error("weight family mismatch: {0}")]
    FamilyMismatch(String),
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    /// An assumption of the estimate being exercised does not hold.
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),
    /// Singular or badly conditioned linear algebra.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FradeError {
    pub fn is_hypothesis_violation(&self) -> bool {
        matches!(self, FradeError::Hypothesis(_) | FradeError::FamilyMismatch(_))
    }

    pub fn is_numerical(&self) -> bool {
        matches!(self, FradeError::Numerical(_))
    }
}

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)+) => {
        // negated so that a NaN operand fails the check
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err($crate::error::FradeError::$variant(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
