use thiserror::Error;

pub use crate::jets::JetError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KzbError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("theta series did not reach tolerance within radius {radius}")]
    TruncationFailure { radius: f64 },
    #[error("period matrix is not symmetric with positive definite imaginary part")]
    InvalidPeriodMatrix,
    #[error("integration path passes too close to a branch point")]
    PathThroughBranchPoint,
    #[error("branch points must be distinct and of count 2g+1 or 2g+2 with g >= 1")]
    BadBranchPoints,
    #[error("argument coincides with a kernel singularity")]
    Singular,
    #[error("kernel evaluated at one of its poles")]
    PoleAtArgument,
    #[error("twist is not generic: the twisted kernel degenerates")]
    NonGenericTwist,
    #[error("divisor must be effective of degree {expected}")]
    BadDivisorDegree { expected: usize },
    #[error("series fit is ill-conditioned")]
    FitIllConditioned,
    #[error("jet order {got} is too small, need {needed}")]
    InsufficientJetOrder { needed: usize, got: usize },
    #[error("evaluation points coincide")]
    CoincidentPoints,
    #[error("section does not have the expected monodromy")]
    MonodromyMismatch,
    #[error("sampled basis is numerically degenerate")]
    DegenerateBasis,
    #[error("residue fit failed")]
    ResidueFitFailure,
    #[error("leading coefficient cannot be extracted at a shared support point")]
    CoincidentSupportWithoutLeadingCoefficient,
    #[error("zero or pole lies on the integration cycle")]
    SupportOnCycle,
    #[error("winding integral {raw} is not an integer")]
    NonIntegerWinding { raw: f64 },
    #[error("no admissible offset found")]
    NoAdmissibleShift,
    #[error("function is identically zero")]
    ZeroFunction,
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, KzbError>;
