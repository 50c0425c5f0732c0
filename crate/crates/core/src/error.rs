use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("not a probability vector: {0}")]
    NotProbability(String),
    #[error("offspring law is not critical: mean = {0}")]
    NotCritical(f64),
    #[error("offspring law is degenerate (zero variance)")]
    Degenerate,
    #[error("polynomial root finding failed: {0}")]
    RootFindingFailure(String),
    #[error("argument outside domain: {0}")]
    DomainError(String),
    #[error("argument {0} is within tolerance of a lattice pole")]
    PoleError(String),
    #[error("no convergence: {0}")]
    ConvergenceError(String),
    #[error("could not bracket the initial slope: {0}")]
    ShootingBracketError(String),
    #[error("integrator exceeded {0} steps")]
    StiffnessError(usize),
    #[error("pinching precondition fails: {0}")]
    RegionError(String),
    #[error("c^2 - 1 = {0:.3e} is too close to zero for the closed-form tail; use the series route")]
    NearSingularParameter(f64),
    #[error("precision loss: {0}")]
    PrecisionLoss(String),
    #[error("kappa has zeros in the punctured disk |z| <= 2: {0}")]
    HypothesisViolated(String),
    #[error("integral-equation inversion failed: {0}")]
    InversionFailure(String),
    #[error("{truncated} of {runs} runs hit the birth cap (limit 1%)")]
    ExcessTruncation { truncated: usize, runs: usize },
}
