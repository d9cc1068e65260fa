use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("symbol is not normalized (norm {0})")]
    NonNormalizedSymbol(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("phase precision loss: |phase| = {0:e}")]
    PhasePrecisionLoss(f64),
    #[error("p = {p} and q = {q} are not coprime")]
    NotCoprime { p: i64, q: i64 },
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),
    #[error("truncation: discarded mass {0:e}")]
    TruncationWarning(f64),
    #[error("overflow guard: {0}")]
    OverflowGuard(String),
    #[error("energy drift {0:e} exceeds tolerance")]
    EnergyDriftExceeded(f64),
    #[error("fixed point is not hyperbolic: {0}")]
    NotHyperbolic(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("degenerate decomposition: {0}")]
    DegenerateDecomposition(String),
    #[error("boundary mass leak {0:e}")]
    BoundaryMassLeak(f64),
    #[error("step size not converged: difference {0:e}")]
    StepUnconverged(f64),
    #[error("dimension {0} too large for dense eigendecomposition")]
    DimensionTooLarge(usize),
    #[error("unsupported symbol form: {0}")]
    UnsupportedSymbolForm(String),
    #[error("quadrature did not converge: {0}")]
    QuadratureUnconverged(String),
    #[error("peak not found: {0}")]
    PeakNotFound(String),
    #[error("too many paths: {0}")]
    TooManyPaths(u128),
    #[error("support truncated: lost mass {0:e}")]
    SupportTruncated(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Non-fatal conditions reported alongside a result.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    Truncation { context: &'static str, mass: f64 },
    IterationDepth { n: usize, bound: f64 },
    NormDeviation(f64),
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::Truncation { context, mass } => write!(f, "{context}: truncated mass {mass:e}"),
            Warning::IterationDepth { n, bound } => {
                write!(f, "iteration depth {n} exceeds log(1/ħ)/log log(1/ħ) = {bound:.3}")
            }
            Warning::NormDeviation(d) => write!(f, "norm deviation {d:e}"),
        }
    }
}

/// A value together with the warnings raised while computing it.
#[derive(Debug, Clone)]
pub struct Diagnosed<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

impl<T> Diagnosed<T> {
    pub fn clean(value: T) -> Self {
        Diagnosed { value, warnings: Vec::new() }
    }
}
