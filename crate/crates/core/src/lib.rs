//! Action-conditioned world model and anomaly detection toolkit for a toy
//! 2D driving environment.
//!
//! Layers, bottom to top:
//! - [`tensor`] / [`numgrad`]: flat tensors and reverse-mode kernels
//! - [`container`]: the WMAD binary tensor file format
//! - [`sim`]: deterministic driving simulator, rendering, anomaly injection,
//!   dataset construction
//! - [`wm`]: the world model (embedding, transition, decoding, rollout)
//! - [`train`]: variational training loop and checkpoints
//! - [`score`]: the five anomaly scorer families
//! - [`eval`]: detection metrics and the applicability report

pub mod container;
pub mod eval;
pub mod numgrad;
pub mod rng;
pub mod score;
pub mod sim;
pub mod tensor;
pub mod train;
pub mod wm;
