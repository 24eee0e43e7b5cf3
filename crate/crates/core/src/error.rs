use thiserror::Error;

use crate::model::ModelParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("non-finite interaction weights {0}")]
    NonFinite(ModelParams),
    #[error("cubic coefficient u = {0} must be non-negative")]
    NegativeCubic(f64),
    #[error("inadmissible interaction {params}: {reason}")]
    Inadmissible { params: ModelParams, reason: &'static str },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge within {panels} panels (best {best:e} +/- {abs_error:e})")]
    NotConverged { best: f64, abs_error: f64, panels: usize },
    #[error("integrand returned NaN at s = {abscissa}")]
    NaN { abscissa: f64 },
    #[error("relative tolerance {0:e} outside [1e-13, 1e-3]")]
    InvalidTolerance(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{what}: no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("{what}: singular Jacobian (det = {det:e})")]
    SingularJacobian { what: &'static str, det: f64 },
    #[error("{what}: verification failed: {detail}")]
    Verification { what: &'static str, detail: String },
    #[error("ambiguous classification: {0}")]
    AmbiguousClassification(String),
    #[error("root isolation failed: {0}")]
    RootIsolation(String),
    #[error("boundary tracing stopped at g = {g}: {source}")]
    TraceStopped { g: f64, source: Box<Error> },
    #[error("approach sample s = {s:e} landed in the wrong region: {detail}")]
    WrongRegion { s: f64, detail: String },
    #[error("missing witness: {0}")]
    MissingWitness(&'static str),
    #[error("Monte Carlo weight does not decay: {0}")]
    NonDecayingWeight(String),
}

impl Error {
    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Model(_) | Error::InvalidArgument(_) | Error::Quadrature(QuadError::InvalidTolerance(_))
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
