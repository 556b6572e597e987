use thiserror::Error;

/// Every failure the engine can report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("model has nonzero drift")]
    NonzeroDrift,
    #[error("model is degenerate: all steps lie in a closed half-space")]
    DegenerateModel,
    #[error("operation requires small steps in two dimensions")]
    NotSmallSteps,
    #[error("group closure not reached within {0} elements")]
    GroupInfinite(usize),
    #[error("model is not orbit-summable: {0}")]
    NotOrbitSummable(String),
    #[error("numerator is singular at the dominant saddle point")]
    NumeratorSingularAtSaddle,
    #[error("numerator is not homogeneous under the twist {0}")]
    NumeratorNotTwistHomogeneous(String),
    #[error("exponent mismatch: {0}")]
    ExponentMismatch(String),
    #[error("quadratic form is not positive definite")]
    NotPositiveDefinite,
    #[error("division by zero")]
    DivisionByZero,
    #[error("pole at evaluation point")]
    PoleAtPoint,
    #[error("series constant term is not admissible: {0}")]
    NonUnitConstantTerm(String),
    #[error("degree bound violated: {0}")]
    DegreeBoundViolated(String),
    #[error("no solution within degree bound {0}")]
    NoSolutionWithinDegreeBound(usize),
    #[error("decomposition infeasible: {0}")]
    DecompositionInfeasible(String),
    #[error("precision insufficient: {0}")]
    PrecisionInsufficient(String),
    #[error("value is not exact: {0}")]
    Inexact(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
