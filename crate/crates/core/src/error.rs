use thiserror::Error;

/// Errors raised by metric evaluation, integration and front queries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vector outside the conic domain: {0}")]
    DomainViolation(String),
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),
    #[error("navigation data is not mild at this point (lambda = {lambda})")]
    NotMild { lambda: f64 },
    #[error("one-form norm {norm} violates the Randers bound")]
    NotRanders { norm: f64 },
    #[error("Lorentzian signature condition fails (Lambda + |omega|^2 = {value})")]
    SignatureViolation { value: f64 },
    #[error("vector within the non-smooth guard cone around the time axis")]
    SmoothnessViolation,
    #[error("trajectory left the domain at t = {t}")]
    DomainExit { t: f64 },
    #[error("integration step produced non-finite values at t = {t}")]
    StepRejected { t: f64 },
    #[error("initial velocity is not lightlike (|G| = {residual})")]
    NotLightlike { residual: f64 },
    #[error("no lightlike direction is orthogonal to the front at s = {s}")]
    NoSolution { s: f64 },
    #[error("orthogonal direction is tangent to the front at s = {s}")]
    AmbiguousSide { s: f64 },
    #[error("query time {t} outside the propagated horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },
    #[error("target is unreachable")]
    Unreachable,
    #[error("shooting did not converge (best candidate: heading {heading}, arrival {time}, miss {miss})")]
    ShootingStalled { miss: f64, time: f64, heading: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
