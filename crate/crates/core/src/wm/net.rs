//! Tape graph builders for the world-model networks, shared by the eager
//! inference API and the training loss.

use rand_distr::{Distribution, Normal};

use crate::numgrad::{
    dense_forward, gru_step, init_dense, Activation, BoundParams, GruVars, NumgradError, ParamSet,
    Tape, VarId, SIGMA_MIN,
};
use crate::rng::substream;
use crate::tensor::Tensor;

use super::ModelConfig;

/// (name, out_dim, in_dim) of every dense layer, in initialization order.
pub fn dense_specs(cfg: &ModelConfig) -> Vec<(String, usize, usize)> {
    let o = cfg.obs_dim();
    let (e, h, s, w) = (cfg.embed_dim, cfg.hidden_dim, cfg.state_dim, cfg.width);
    vec![
        ("enc.l0".into(), w, o),
        ("enc.l1".into(), w, w),
        ("enc.out".into(), e, w),
        ("prior.l0".into(), w, h),
        ("prior.mu".into(), s, w),
        ("prior.sigma".into(), s, w),
        ("post.l0".into(), w, h + e),
        ("post.mu".into(), s, w),
        ("post.sigma".into(), s, w),
        ("dec.l0".into(), w, s + h),
        ("dec.out".into(), o, w),
    ]
}

/// Gaussian fan-in initialization for all weights, zero biases. GRU gates
/// use the tape naming convention (`gru.wz`, `gru.uz`, `gru.bz`, ...).
pub fn init_params(cfg: &ModelConfig, seed: u64) -> ParamSet {
    let mut rng = substream(seed, "model_init", 0);
    let mut p = ParamSet::new();
    for (name, out, inp) in dense_specs(cfg) {
        p.insert(format!("{name}.w"), init_dense(&mut rng, out, inp));
        p.insert(format!("{name}.b"), Tensor::zeros(&[out]));
    }
    let (h, s, a) = (cfg.hidden_dim, cfg.state_dim, cfg.action_dim);
    for gate in ["z", "r", "g"] {
        p.insert(format!("gru.w{gate}"), init_dense(&mut rng, h, s + a));
        p.insert(format!("gru.u{gate}"), init_dense(&mut rng, h, h));
        p.insert(format!("gru.b{gate}"), Tensor::zeros(&[h]));
    }
    p
}

/// Standard-normal noise tensor of shape [1, dim].
pub fn draw_eps(rng: &mut impl rand::Rng, dim: usize) -> Tensor {
    let dist = Normal::new(0.0, 1.0).unwrap();
    Tensor::new(vec![1, dim], (0..dim).map(|_| dist.sample(rng)).collect()).unwrap()
}

fn dense(
    tape: &mut Tape,
    bound: &BoundParams,
    name: &str,
    x: VarId,
    act: Activation,
) -> Result<VarId, NumgradError> {
    let w = bound.var(&format!("{name}.w"))?;
    let b = bound.var(&format!("{name}.b"))?;
    dense_forward(tape, w, b, x, act)
}

/// Observation embedding: two tanh layers then a linear projection to E.
pub fn encode(tape: &mut Tape, bound: &BoundParams, o: VarId) -> Result<VarId, NumgradError> {
    let x = dense(tape, bound, "enc.l0", o, Activation::Tanh)?;
    let x = dense(tape, bound, "enc.l1", x, Activation::Tanh)?;
    dense(tape, bound, "enc.out", x, Activation::Linear)
}

/// Deterministic path: h' = GRU(h, [s, a]).
pub fn core_step(
    tape: &mut Tape,
    bound: &BoundParams,
    h: VarId,
    s: VarId,
    a: VarId,
) -> Result<VarId, NumgradError> {
    let x = tape.concat_cols(s, a)?;
    let gru = GruVars::bind(bound, "gru")?;
    gru_step(tape, &gru, h, x)
}

fn gaussian_head(
    tape: &mut Tape,
    bound: &BoundParams,
    prefix: &str,
    x: VarId,
) -> Result<(VarId, VarId), NumgradError> {
    let hid = dense(tape, bound, &format!("{prefix}.l0"), x, Activation::Tanh)?;
    let mu = dense(tape, bound, &format!("{prefix}.mu"), hid, Activation::Linear)?;
    let raw = dense(tape, bound, &format!("{prefix}.sigma"), hid, Activation::Linear)?;
    let sigma = tape.softplus_floor(raw, SIGMA_MIN);
    Ok((mu, sigma))
}

/// Prior transition parameters from the deterministic state alone.
pub fn prior_head(
    tape: &mut Tape,
    bound: &BoundParams,
    h: VarId,
) -> Result<(VarId, VarId), NumgradError> {
    gaussian_head(tape, bound, "prior", h)
}

/// Posterior parameters from the deterministic state and the embedding.
pub fn posterior_head(
    tape: &mut Tape,
    bound: &BoundParams,
    h: VarId,
    e: VarId,
) -> Result<(VarId, VarId), NumgradError> {
    let x = tape.concat_cols(h, e)?;
    gaussian_head(tape, bound, "post", x)
}

/// Per-cell Bernoulli logits from [sample, h].
pub fn decode_logits(
    tape: &mut Tape,
    bound: &BoundParams,
    s: VarId,
    h: VarId,
) -> Result<VarId, NumgradError> {
    let x = tape.concat_cols(s, h)?;
    let hid = dense(tape, bound, "dec.l0", x, Activation::Tanh)?;
    dense(tape, bound, "dec.out", hid, Activation::Linear)
}
