//! Minimal differentiable numeric kernels: dense layers, a gated recurrent
//! cell, Gaussian/Bernoulli likelihood terms, and the Adam optimizer, with
//! reverse-mode gradients over a per-evaluation tape.

pub mod adam;
pub mod fdcheck;
pub mod ops;
pub mod params;
pub mod tape;

pub use adam::{AdamConfig, AdamState};
pub use ops::{dense_forward, gru_step, reparam_sample, Activation, BoundParams, GruVars};
pub use params::{init_dense, ParamSet};
pub use tape::{Tape, VarId, EPS_P};

use thiserror::Error;

/// Floor added to every σ head output.
pub const SIGMA_MIN: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum NumgradError {
    #[error("dimension error: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("missing parameter `{0}`")]
    MissingParam(String),
}
