use std::path::PathBuf;

use thiserror::Error;

use crate::model::Trajectory;

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{what} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        what: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("malformed table {path}: {reason}")]
    Table { path: PathBuf, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("degenerate refinement study: {0}")]
    Degenerate(String),

    #[error("blow-up guard tripped at t = {t} day (|C| = {magnitude:e} > {limit:e})")]
    BlowUp {
        t: f64,
        magnitude: f64,
        limit: f64,
        partial: Box<Trajectory>,
    },

    #[error(
        "Picard iteration did not converge on slab {slab} (t = {t} day) after {iterations} iterations; \
         residuals {residuals:?}, contraction bound {contraction_bound:.3e}"
    )]
    PicardNonConvergence {
        slab: usize,
        t: f64,
        iterations: usize,
        residuals: Vec<f64>,
        contraction_bound: f64,
        partial: Box<Trajectory>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ModelError {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        ModelError::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    /// Trajectory computed before a run aborted, if any.
    pub fn partial_trajectory(&self) -> Option<&Trajectory> {
        match self {
            ModelError::BlowUp { partial, .. } | ModelError::PicardNonConvergence { partial, .. } => {
                Some(partial)
            }
            _ => None,
        }
    }
}
