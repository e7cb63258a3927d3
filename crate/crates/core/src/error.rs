//! Error type shared by every numerical stage.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),
    #[error("integrator step too large: {0}")]
    StepTooLarge(String),
    #[error("trajectory ordering violated: {0}")]
    OrderingViolated(String),
    #[error("window too short: {0}")]
    WindowTooShort(String),
    #[error("asymptotic fit unresolved: {0}")]
    FitUnresolved(String),
    #[error("continuation stalled: {0}")]
    ContinuationStalled(String),
    #[error("bifurcation not found: {0}")]
    BifurcationNotFound(String),
    #[error("grid too small: {0}")]
    GridTooSmall(String),
    #[error("linear solver failed: {0}")]
    SolverSingular(String),
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("resonant right-hand side: {0}")]
    ResonantRHS(String),
    #[error("fundamental matrix ill-conditioned: {0}")]
    FundamentalMatrixIllConditioned(String),
    #[error("orthogonality condition violated: {0}")]
    OrthogonalityViolated(String),
    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),
    #[error("contraction failed: {0}")]
    ContractionFailed(String),
    #[error("newton iteration diverged: {0}")]
    Diverged(String),
    #[error("positivity lost: {0}")]
    PositivityLost(String),
    #[error("boundary contaminated: {0}")]
    BoundaryContaminated(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
}

impl Error {
    /// Exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigInvalid(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
