use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{what} is singular or not positive definite")]
    Singular { what: &'static str },

    #[error("root finder did not converge for mode {mode}")]
    RootNotConverged { mode: usize },

    #[error("LQR design failed: {0}")]
    Design(String),

    #[error("integration failed at t = {t}: non-finite state derivative")]
    Integration { t: f64 },

    #[error("simulation diverged at t = {t}: |q_r| = {magnitude} exceeds bound {bound}")]
    Divergence { t: f64, magnitude: f64, bound: f64 },

    #[error("trace: {0}")]
    Trace(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn dim(context: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            got,
        }
    }
}
