use thiserror::Error;

/// Errors raised across the solver pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instance evaluation error: {what} is not finite at {at}")]
    InstanceEvaluation { what: String, at: f64 },

    #[error("truncation insufficient: tail bound {tail:.3e} exceeds tolerance {tol:.3e} at radius {radius}")]
    TruncationInsufficient { radius: f64, tail: f64, tol: f64 },

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("antiderivative failure at s = {at}: {reason}")]
    Antiderivative { at: f64, reason: String },

    #[error("quadrature order insufficient: Gram deviation {deviation:.3e} with {nodes} nodes")]
    QuadratureOrder { deviation: f64, nodes: usize },

    #[error("lambda too large for certificate: rho1 = {rho1:.6e} <= 0")]
    LambdaTooLarge { rho1: f64 },

    #[error("weight vanishes on interval: inf a1 = {0:.3e}")]
    WeightVanishes(f64),

    #[error("threshold undefined: {0}")]
    ThresholdUndefined(String),

    #[error("assembly failure: non-finite {term} at t = {at}")]
    Assembly { term: &'static str, at: f64 },

    #[error("solver exhausted: no root found after {starts} starts (best residual {best_residual:.3e})")]
    SolverExhausted { starts: usize, best_residual: f64 },

    #[error("hypothesis breach: A(u) = {value:.6e} below gamma/2 at t = {at}")]
    HypothesisBreach { at: f64, value: f64 },

    #[error("k-continuation stalled after {levels} levels (last drift {last_drift:.3e}, last f_k gap {last_gap:.3e})")]
    KContinuationStalled { levels: usize, last_drift: f64, last_gap: f64 },

    #[error("no numerical homoclinic at lambda = {lambda}: {reason}")]
    NoHomoclinic { lambda: f64, reason: String },

    #[error("asymptotic bound breach at lambda = {lambda}: |u|^2 = {norm_sq:.6e} > {bound:.6e}")]
    AsymptoticBoundBreach { lambda: f64, norm_sq: f64, bound: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
