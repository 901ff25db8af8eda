use thiserror::Error;

/// Errors raised by targets, kernels and the verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eigenvalue {index} must be positive, got {value}")]
    NonPositiveEigenvalue { index: usize, value: f64 },

    #[error("cosine perturbation amplitude must satisfy |a| < 1, got {0}")]
    PerturbationTooLarge(f64),

    #[error("smoothness profile violated at q = {point:?}: {detail}")]
    ProfileInvalid { point: Vec<f64>, detail: String },

    #[error("non-finite gradient at q = {q:?}")]
    NonFiniteGradient { q: Vec<f64> },

    #[error("step-size policy unavailable: {0}")]
    PolicyUnavailable(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("unsupported target: {0}")]
    UnsupportedTarget(String),

    #[error("grid covers only {coverage:.3e} of the target mass (need >= 1 - 1e-6)")]
    GridTooSmall { coverage: f64 },

    #[error("no subset S satisfies {s} < pi(S) < 1 - {s}")]
    UndefinedConductance { s: f64 },

    #[error("warm start violates warmness at state {state}: ratio {ratio} > M = {warmness}")]
    WarmnessViolated {
        state: usize,
        ratio: f64,
        warmness: f64,
    },

    #[error("need at least {need} replicas, got {got}")]
    TooFewReplicas { got: usize, need: usize },

    #[error("finite chain invariant violated: {0}")]
    ChainInvariant(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by floating-point breakdown rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFiniteGradient { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
