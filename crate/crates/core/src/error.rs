use thiserror::Error;

/// Errors surfaced by the sampler, the oracles and the config layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("descent flow did not converge within {max_steps} steps (|∇U| = {grad_norm:.3e})")]
    FlowNotConverged { max_steps: usize, grad_norm: f64 },

    #[error("descent flow landed at {point:?}, not within snap radius of any declared minimum")]
    NoNearbyMinimum { point: Vec<f64> },

    #[error("no saddle found between minima {lo} and {hi}")]
    NoSaddleFound { lo: usize, hi: usize },

    #[error("degenerate saddle at {point:?}: Hessian sign pattern is not index one")]
    DegenerateSaddle { point: Vec<f64> },

    #[error("landscape summary requires at least two declared minima, found {found}")]
    TooFewMinima { found: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("trajectory diverged: |x| exceeded guard radius {guard_radius} at step {step}")]
    Diverged { guard_radius: f64, step: usize },

    #[error("non-finite state encountered (step size too large?)")]
    NonFinite,

    #[error("all resampling weights are -inf: total weight collapse")]
    WeightCollapse,

    #[error("plan exceeds budget cap: {steps} total Langevin steps > {cap}")]
    BudgetExceeded { steps: u128, cap: u128 },

    #[error("quadrature refinement did not converge: relative change {rel_change:.3e} after {levels} doublings")]
    QuadratureNotConverged { levels: usize, rel_change: f64 },

    #[error("quadrature and spectral oracles support d <= {max}, got d = {got}")]
    UnsupportedDimension { max: usize, got: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("kernel density bandwidth is degenerate ({0})")]
    DegenerateBandwidth(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown potential id {id:?}; valid ids: {valid}")]
    UnknownPotential { id: String, valid: String },

    #[error("fixture {path} was generated for config hash {found}, expected {expected}")]
    FixtureHashMismatch {
        path: String,
        found: String,
        expected: String,
    },

    #[error("run {run_id} aborted: {source}")]
    RunAborted {
        run_id: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
