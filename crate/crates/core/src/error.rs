use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("weighted degrees of the composite terms sum to {0}, expected 1")]
    DegreeMismatch(String),
    #[error("composite term has a zero denominator")]
    ZeroDenominator,
    #[error("composite expression is not continuous: {0}")]
    NotContinuous(String),
    #[error("unknown Green function `{0}`")]
    UnknownName(String),
    #[error("no enclosure available for Green function `{0}`")]
    EnclosureUnavailable(String),
    #[error("degree {degree} exceeds the supported maximum {max}")]
    DegreeTooLarge { degree: usize, max: usize },
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("polynomial parse error: {0}")]
    Parse(String),
    #[error("root finding did not converge after {iterations} iterations (theta = {theta:?})")]
    NonConvergence { iterations: usize, theta: Option<f64> },
    #[error("degenerate polynomial family: {0}")]
    DegenerateFamily(String),
    #[error("quadrature tolerance {tol:e} not met: value {value}, estimate {estimate:e}")]
    ToleranceNotMet { value: f64, estimate: f64, tol: f64 },
    #[error("integrand is singular on the support of the measure")]
    SingularIntegrand,
    #[error("inadmissible measure: {0}")]
    InadmissibleMeasure(String),
    #[error("linear program is infeasible")]
    LpInfeasible,
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("point is not in the upper half plane: {0}")]
    NotInUpperHalfPlane(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("checkpoint green-function hash mismatch: expected {expected}, found {found}")]
    HashMismatch { expected: String, found: String },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("weak duality violated: lower {lower} > upper {upper}")]
    LedgerInvariant { lower: f64, upper: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
