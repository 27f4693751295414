use thiserror::Error;

/// Errors raised by the numerical checks and constructions in this crate.
///
/// Variants that correspond to a failed scientific check carry a short
/// human-readable explanation; the CLI maps them to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("decay violation: {0}")]
    DecayViolation(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("ellipticity violation: {0}")]
    EllipticityViolation(String),
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("log-equivalence violation: {0}")]
    EquivalenceViolation(String),
    #[error("point out of domain: {0}")]
    OutOfDomain(String),
    #[error("decaying branch contaminated: {0}")]
    BranchContamination(String),
    #[error("uniform asymptotics failure: {0}")]
    HypothesisFailure(String),
    #[error("perturbation too large: {0}")]
    PerturbationTooLarge(String),
    #[error("eigen family too sparse: {0}")]
    FamilyTooSparse(String),
    #[error("bound violation: {0}")]
    BoundViolation(String),
    #[error("cone violation: {0}")]
    ConeViolation(String),
    #[error("unstable scheme: {0}")]
    UnstableScheme(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("history missing: {0}")]
    HistoryMissing(String),
    #[error("parameter violation: {0}")]
    ParameterViolation(String),
    #[error("obstacle bounds violation: {0}")]
    ObstacleBoundsViolation(String),
    #[error("jacobian violation: {0}")]
    JacobianViolation(String),
    #[error("inversion failure: {0}")]
    InversionFailure(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that signal a failed numerical/scientific check, as
    /// opposed to bad input or I/O trouble.
    pub fn is_check_failure(&self) -> bool {
        !matches!(self, Error::InvalidInput(_) | Error::Io(_) | Error::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
