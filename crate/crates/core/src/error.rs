use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported spatial dimension {0} (expected 1 or 2)")]
    UnsupportedDimension(usize),

    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("index {index} out of range for {what} (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coefficient is not finite on element {element} (exp overflow for extreme z)")]
    NonFiniteCoefficient { element: usize },

    #[error("linear solver breakdown: {0}")]
    SolverBreakdown(String),

    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("monotonicity violated: phi_0(z) = {phi0:e} <= 0 at z = {z:?}")]
    MonotonicityViolated { phi0: f64, z: Vec<f64> },

    #[error("weight function too weak: exponential weight with mu = {mu} requires mu > {theta} for a finite integral")]
    WeightFunctionTooWeak { mu: f64, theta: f64 },

    #[error("the pdf needs preintegration: the Dirac delta cannot be evaluated pointwise")]
    PdfWithoutPreintegration,

    #[error("empty sample set")]
    EmptySamples,

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
