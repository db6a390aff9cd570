//! Adam with global-norm gradient clipping.

use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use super::NumgradError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub clip_norm: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: 100.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    m: ParamSet,
    v: ParamSet,
}

impl AdamState {
    pub fn new(params: &ParamSet) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    /// One bias-corrected update, `step` starting at 1. Gradients are clipped
    /// to `clip_norm` by global norm before the moment update.
    pub fn update(
        &mut self,
        cfg: &AdamConfig,
        params: &mut ParamSet,
        grads: &ParamSet,
        step: u64,
    ) -> Result<(), NumgradError> {
        params.check_aligned(grads)?;
        params.check_aligned(&self.m)?;
        assert!(step >= 1, "adam step must be >= 1");

        let total_sq: f64 = grads.iter().map(|(_, g)| g.sq_norm()).sum();
        let norm = total_sq.sqrt();
        let scale = if norm > cfg.clip_norm {
            cfg.clip_norm / norm
        } else {
            1.0
        };

        let bc1 = 1.0 - cfg.beta1.powi(step as i32);
        let bc2 = 1.0 - cfg.beta2.powi(step as i32);

        for (((_, p), (_, g)), ((_, m), (_, v))) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for i in 0..p.numel() {
                let gi = g.data()[i] * scale;
                let mi = cfg.beta1 * m.data()[i] + (1.0 - cfg.beta1) * gi;
                let vi = cfg.beta2 * v.data()[i] + (1.0 - cfg.beta2) * gi * gi;
                m.data_mut()[i] = mi;
                v.data_mut()[i] = vi;
                let m_hat = mi / bc1;
                let v_hat = vi / bc2;
                p.data_mut()[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        }
        Ok(())
    }
}
