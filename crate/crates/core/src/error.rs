use thiserror::Error;

/// Errors surfaced by the certification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature failed to reach tolerance (best estimate {value}, error {error_estimate}) after {subdivisions} subdivisions")]
    QuadratureFailure {
        value: f64,
        error_estimate: f64,
        subdivisions: usize,
    },
    #[error("computed lower comparison constant {value} is not positive; the window is incompatible with the kernel")]
    NonPositiveC1 { value: f64 },
    #[error("kernel exceeds its envelope at (t, s) = ({t}, {s}): |k| = {kernel}, envelope = {envelope}")]
    EnvelopeViolated {
        t: f64,
        s: f64,
        kernel: f64,
        envelope: f64,
    },
    #[error("window [{a}, {b}] is degenerate")]
    DegenerateWindow { a: f64, b: f64 },
    #[error("psi function {index} of the {family} family leaves the cone: min over the window is {min} but c * norm is {required}")]
    PsiNotInCone {
        family: &'static str,
        index: usize,
        min: f64,
        required: f64,
    },
    #[error("psi function {index} of the {family} family is numerically zero")]
    PsiZero { family: &'static str, index: usize },
    #[error("kernel functional is negative at s = {s}: {value}")]
    NegativeKphi { s: f64, value: f64 },
    #[error("functional {index} of the upper family carries no norm bound")]
    MissingNormBound { index: usize },
    #[error("cross matrix entry ({row}, {col}) is negative: {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("power iteration did not converge; last Rayleigh interval [{lower}, {upper}]")]
    NoConvergence { lower: f64, upper: f64 },
    #[error("spectral radius {radius} of the scaled cross matrix is not below 1")]
    SpectralRadiusTooLarge { radius: f64 },
    #[error("Lipschitz bound {q_star} is not below 1; Id - Q is not certified invertible")]
    NotContractive { q_star: f64 },
    #[error("asymptotic limits are unavailable: {0}")]
    MissingLimits(String),
    #[error("sampled ratio for {which} diverges and no infinite limit was declared")]
    NonFinite { which: &'static str },
    #[error("deviation map leaves [0, 1]: eta({t}) = {value}")]
    DomainViolation { t: f64, value: f64 },
    #[error("iteration diverged: norm reached {norm} after {iterations} iterations")]
    Diverged { norm: f64, iterations: usize },
    #[error(
        "fixed-point iteration stalled: residual {residual} after {iterations} iterations"
    )]
    SolverStalled { residual: f64, iterations: usize },
    #[error("functional validation failed: {0}")]
    FunctionalValidation(String),
    #[error("expression error: {0}")]
    Expr(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
