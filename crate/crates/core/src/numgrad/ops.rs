//! Composite differentiable kernels built from tape primitives, plus eager
//! (non-differentiable) evaluations of the likelihood terms for scoring.

use crate::tensor::Tensor;

use super::params::ParamSet;
use super::tape::{Tape, VarId, EPS_P};
use super::NumgradError;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Tanh,
    Sigmoid,
    Softplus,
}

/// Binds a ParamSet onto a tape as leaves so gradients can be read back by name.
pub struct BoundParams {
    vars: BTreeMap<String, VarId>,
}

impl BoundParams {
    pub fn bind(tape: &mut Tape, params: &ParamSet) -> Self {
        let mut vars = BTreeMap::new();
        for (name, t) in params.iter() {
            vars.insert(name.clone(), tape.leaf(t.clone()));
        }
        BoundParams { vars }
    }

    pub fn var(&self, name: &str) -> Result<VarId, NumgradError> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| NumgradError::MissingParam(name.to_string()))
    }

    /// Collect gradients from a backward pass into a ParamSet shaped like the
    /// bound parameters, accumulating into `out`.
    pub fn accumulate_grads(
        &self,
        grads: &[Option<Tensor>],
        out: &mut ParamSet,
    ) -> Result<(), NumgradError> {
        for (name, &var) in &self.vars {
            if let Some(g) = grads[var].as_ref() {
                match out.get_mut(name) {
                    Some(acc) => acc.add_assign(g),
                    None => {
                        return Err(NumgradError::MissingParam(name.clone()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// y = act(x W^T + b) with W stored as [out, in].
pub fn dense_forward(
    tape: &mut Tape,
    w: VarId,
    b: VarId,
    x: VarId,
    act: Activation,
) -> Result<VarId, NumgradError> {
    let z = tape.matmul_nt(x, w)?;
    let z = tape.add_row(z, b)?;
    Ok(match act {
        Activation::Linear => z,
        Activation::Tanh => tape.tanh(z),
        Activation::Sigmoid => tape.sigmoid(z),
        Activation::Softplus => tape.softplus_floor(z, 0.0),
    })
}

/// Variable ids for the six weight matrices and three biases of a GRU cell.
pub struct GruVars {
    pub wz: VarId,
    pub uz: VarId,
    pub bz: VarId,
    pub wr: VarId,
    pub ur: VarId,
    pub br: VarId,
    pub wg: VarId,
    pub ug: VarId,
    pub bg: VarId,
}

impl GruVars {
    pub fn bind(bound: &BoundParams, prefix: &str) -> Result<Self, NumgradError> {
        Ok(GruVars {
            wz: bound.var(&format!("{prefix}.wz"))?,
            uz: bound.var(&format!("{prefix}.uz"))?,
            bz: bound.var(&format!("{prefix}.bz"))?,
            wr: bound.var(&format!("{prefix}.wr"))?,
            ur: bound.var(&format!("{prefix}.ur"))?,
            br: bound.var(&format!("{prefix}.br"))?,
            wg: bound.var(&format!("{prefix}.wg"))?,
            ug: bound.var(&format!("{prefix}.ug"))?,
            bg: bound.var(&format!("{prefix}.bg"))?,
        })
    }
}

/// Gated recurrent cell:
///   z = σ(Wz x + Uz h + bz)
///   r = σ(Wr x + Ur h + br)
///   g = tanh(Wg x + Ug (r⊙h) + bg)
///   h' = (1−z)⊙h + z⊙g
pub fn gru_step(tape: &mut Tape, p: &GruVars, h: VarId, x: VarId) -> Result<VarId, NumgradError> {
    let gate = |tape: &mut Tape, w, u, b, hin, xin| -> Result<VarId, NumgradError> {
        let a = tape.matmul_nt(xin, w)?;
        let c = tape.matmul_nt(hin, u)?;
        let s = tape.add(a, c)?;
        tape.add_row(s, b)
    };
    let z_pre = gate(tape, p.wz, p.uz, p.bz, h, x)?;
    let z = tape.sigmoid(z_pre);
    let r_pre = gate(tape, p.wr, p.ur, p.br, h, x)?;
    let r = tape.sigmoid(r_pre);
    let rh = tape.mul(r, h)?;
    let g_pre = gate(tape, p.wg, p.ug, p.bg, rh, x)?;
    let g = tape.tanh(g_pre);
    let omz = tape.one_minus(z);
    let keep = tape.mul(omz, h)?;
    let update = tape.mul(z, g)?;
    tape.add(keep, update)
}

/// s = μ + σ⊙ε with a fixed noise tensor ε.
pub fn reparam_sample(
    tape: &mut Tape,
    mu: VarId,
    sigma: VarId,
    eps: Tensor,
) -> Result<VarId, NumgradError> {
    let scaled = tape.mul_const(sigma, eps)?;
    tape.add(mu, scaled)
}

/// Eager closed-form diagonal-Gaussian KL, summed over all entries.
pub fn gaussian_kl_eager(
    mq: &Tensor,
    sq: &Tensor,
    mp: &Tensor,
    sp: &Tensor,
) -> Result<f64, NumgradError> {
    if mq.shape() != sq.shape() || mq.shape() != mp.shape() || mq.shape() != sp.shape() {
        return Err(NumgradError::Shape(
            "gaussian_kl: parameter shapes differ".into(),
        ));
    }
    if sq.data().iter().chain(sp.data()).any(|&v| v <= 0.0) {
        return Err(NumgradError::Domain("gaussian_kl: nonpositive sigma".into()));
    }
    let mut acc = 0.0;
    for i in 0..mq.numel() {
        let dm = mq.data()[i] - mp.data()[i];
        let (q, p) = (sq.data()[i], sp.data()[i]);
        acc += (p / q).ln() + (q * q + dm * dm) / (2.0 * p * p) - 0.5;
    }
    Ok(acc)
}

/// Eager Bernoulli log-likelihood of x under probabilities p (clamped).
pub fn bernoulli_loglik_eager(p: &Tensor, x: &Tensor) -> Result<f64, NumgradError> {
    if p.shape() != x.shape() {
        return Err(NumgradError::Shape(
            "bernoulli_loglik: shapes differ".into(),
        ));
    }
    let mut acc = 0.0;
    for i in 0..p.numel() {
        let pc = p.data()[i].clamp(EPS_P, 1.0 - EPS_P);
        let xv = x.data()[i];
        acc += xv * pc.ln() + (1.0 - xv) * (1.0 - pc).ln();
    }
    Ok(acc)
}
