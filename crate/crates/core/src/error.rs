use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter {theta:?} lies outside the domain of family `{family}`")]
    OutOfDomain { family: String, theta: Vec<f64> },

    #[error("flow integration diverged for sample {sample} at theta = {theta}")]
    IntegrationDiverged { sample: usize, theta: f64 },

    #[error("quadrature failed to converge after {panels} panels (last two iterates {previous:?} and {last:?})")]
    QuadratureNonConvergence {
        panels: usize,
        previous: Vec<f64>,
        last: Vec<f64>,
    },

    #[error("non-finite estimator value when perturbing sample point {index}")]
    PerturbationFailure { index: usize },

    #[error("estimator gradient undefined on {failed} of {reps} replicates")]
    DegenerateGradient { failed: usize, reps: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("no minimizer bracketed in the window [{lo}, {hi}]")]
    EstimationWindow { lo: f64, hi: f64 },

    #[error("degenerate base: quantile function has zero norm")]
    DegenerateBase,

    #[error("degenerate information: {0}")]
    DegenerateInformation(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("sites {first} and {second} coincide")]
    DegenerateSites { first: usize, second: usize },

    #[error("dual solver did not converge in {iterations} iterations (gradient norm {grad_norm:e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command line front end: 2 for bad input
    /// (config, files, a parameter outside Θ, an unsupported combination), 3 for
    /// numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::OutOfDomain { .. }
            | Error::Unsupported(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
