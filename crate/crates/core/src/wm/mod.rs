//! Action-conditioned recurrent state-space world model.
//!
//! One deterministic recurrent path plus one diagonal-Gaussian stochastic
//! path. Filtering conditions the stochastic state on observations through an
//! encoder; prediction samples it from the deterministic state alone; a
//! decoder maps both back to per-cell occupancy probabilities.

pub mod net;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numgrad::{reparam_sample, BoundParams, NumgradError, ParamSet, Tape, VarId, EPS_P};
use crate::rng::substream;
use crate::sim::{Action, Observation};
use crate::tensor::Tensor;

#[derive(Debug, Error)]
pub enum WmError {
    #[error("dimension error: {0}")]
    Shape(String),
    #[error("sequence error: {0}")]
    Sequence(String),
    #[error(transparent)]
    Numgrad(#[from] NumgradError),
}

/// Network hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub channels: usize,
    pub grid_size: usize,
    pub action_dim: usize,
    /// Observation embedding width E.
    pub embed_dim: usize,
    /// Deterministic recurrent state width H.
    pub hidden_dim: usize,
    /// Stochastic state width S.
    pub state_dim: usize,
    /// Hidden width of the encoder, head, and decoder MLPs.
    pub width: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            channels: 3,
            grid_size: 16,
            action_dim: 2,
            embed_dim: 32,
            hidden_dim: 64,
            state_dim: 32,
            width: 64,
        }
    }
}

impl ModelConfig {
    pub fn obs_dim(&self) -> usize {
        self.channels * self.grid_size * self.grid_size
    }
}

/// Filtered or predicted latent state at one step.
///
/// All tensors are [1, D] rows so they feed the batched kernels directly.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentBelief {
    pub h: Tensor,
    pub mu: Tensor,
    pub sigma: Tensor,
    pub sample: Tensor,
}

impl LatentBelief {
    /// Zero-state boundary convention: h = 0, sample = 0.
    pub fn initial(cfg: &ModelConfig) -> Self {
        LatentBelief {
            h: Tensor::zeros(&[1, cfg.hidden_dim]),
            mu: Tensor::zeros(&[1, cfg.state_dim]),
            sigma: Tensor::full(&[1, cfg.state_dim], 1.0),
            sample: Tensor::zeros(&[1, cfg.state_dim]),
        }
    }
}

/// How stochastic-path noise is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    /// ε ≡ 0: mode-following (sample = μ everywhere).
    Zero,
    /// Standard normal draws from tagged substreams of this seed.
    Seeded(u64),
}

/// One sampled future from [`WorldModel::rollout`].
#[derive(Debug, Clone, PartialEq)]
pub struct Future {
    /// T+1 beliefs: the start followed by one per predicted step.
    pub beliefs: Vec<LatentBelief>,
    /// T decoded per-cell probability grids.
    pub probs: Vec<Observation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldModel {
    cfg: ModelConfig,
    params: ParamSet,
}

impl WorldModel {
    pub fn init(cfg: ModelConfig, seed: u64) -> Self {
        let params = net::init_params(&cfg, seed);
        WorldModel { cfg, params }
    }

    pub fn from_parts(cfg: ModelConfig, params: ParamSet) -> Result<Self, WmError> {
        let expected = net::init_params(&cfg, 0);
        expected
            .check_aligned(&params)
            .map_err(|e| WmError::Shape(format!("parameters do not match config: {e}")))?;
        Ok(WorldModel { cfg, params })
    }

    pub fn cfg(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn check_obs(&self, o: &Observation) -> Result<(), WmError> {
        if o.channels != self.cfg.channels || o.grid_size != self.cfg.grid_size {
            return Err(WmError::Shape(format!(
                "observation {}x{}x{} does not match model {}x{}x{}",
                o.channels,
                o.grid_size,
                o.grid_size,
                self.cfg.channels,
                self.cfg.grid_size,
                self.cfg.grid_size
            )));
        }
        Ok(())
    }

    fn obs_leaf(&self, tape: &mut Tape, o: &Observation) -> Result<VarId, WmError> {
        self.check_obs(o)?;
        let t = Tensor::new(vec![1, o.len()], o.data.clone())
            .map_err(|e| WmError::Shape(e.to_string()))?;
        Ok(tape.leaf(t))
    }

    fn action_leaf(&self, tape: &mut Tape, a: &Action) -> VarId {
        tape.leaf(Tensor::new(vec![1, 2], vec![a.acc, a.steering]).unwrap())
    }

    fn belief_leaves(&self, tape: &mut Tape, b: &LatentBelief) -> (VarId, VarId) {
        (tape.leaf(b.h.clone()), tape.leaf(b.sample.clone()))
    }

    /// Deterministic embedding of one observation.
    pub fn embed(&self, o: &Observation) -> Result<Tensor, WmError> {
        let mut tape = Tape::new();
        let bound = BoundParams::bind(&mut tape, &self.params);
        let ov = self.obs_leaf(&mut tape, o)?;
        let e = net::encode(&mut tape, &bound, ov)?;
        Ok(tape.value(e).clone())
    }

    /// One prediction step: advance the deterministic state with the previous
    /// sample and action, then sample the next stochastic state from the
    /// prior with the given noise row ε.
    pub fn prior_step(
        &self,
        prev: &LatentBelief,
        a: &Action,
        eps: &Tensor,
    ) -> Result<LatentBelief, WmError> {
        let mut tape = Tape::new();
        let bound = BoundParams::bind(&mut tape, &self.params);
        let (h, s) = self.belief_leaves(&mut tape, prev);
        let av = self.action_leaf(&mut tape, a);
        let h2 = net::core_step(&mut tape, &bound, h, s, av)?;
        let (mu, sigma) = net::prior_head(&mut tape, &bound, h2)?;
        let sample = reparam_sample(&mut tape, mu, sigma, eps.clone())?;
        Ok(LatentBelief {
            h: tape.value(h2).clone(),
            mu: tape.value(mu).clone(),
            sigma: tape.value(sigma).clone(),
            sample: tape.value(sample).clone(),
        })
    }

    /// One filtering step. Returns the posterior belief plus the prior
    /// parameters (μ, σ) of the same step for the divergence term.
    pub fn posterior_step(
        &self,
        prev: &LatentBelief,
        a: &Action,
        o: &Observation,
        eps: &Tensor,
    ) -> Result<(LatentBelief, (Tensor, Tensor)), WmError> {
        let mut tape = Tape::new();
        let bound = BoundParams::bind(&mut tape, &self.params);
        let (h, s) = self.belief_leaves(&mut tape, prev);
        let av = self.action_leaf(&mut tape, a);
        let ov = self.obs_leaf(&mut tape, o)?;
        let h2 = net::core_step(&mut tape, &bound, h, s, av)?;
        let (mup, sigp) = net::prior_head(&mut tape, &bound, h2)?;
        let e = net::encode(&mut tape, &bound, ov)?;
        let (muq, sigq) = net::posterior_head(&mut tape, &bound, h2, e)?;
        let sample = reparam_sample(&mut tape, muq, sigq, eps.clone())?;
        Ok((
            LatentBelief {
                h: tape.value(h2).clone(),
                mu: tape.value(muq).clone(),
                sigma: tape.value(sigq).clone(),
                sample: tape.value(sample).clone(),
            },
            (tape.value(mup).clone(), tape.value(sigp).clone()),
        ))
    }

    /// Per-cell occupancy probabilities of a belief, clamped into (0, 1).
    pub fn decode(&self, belief: &LatentBelief) -> Result<Observation, WmError> {
        let mut tape = Tape::new();
        let bound = BoundParams::bind(&mut tape, &self.params);
        let (h, s) = self.belief_leaves(&mut tape, belief);
        let logits = net::decode_logits(&mut tape, &bound, s, h)?;
        let probs = tape
            .value(logits)
            .data()
            .iter()
            .map(|&z| {
                let p = 1.0 / (1.0 + (-z).exp());
                p.clamp(EPS_P, 1.0 - EPS_P)
            })
            .collect();
        Ok(Observation {
            channels: self.cfg.channels,
            grid_size: self.cfg.grid_size,
            data: probs,
        })
    }

    /// Filter a sequence of K observations into K posterior beliefs.
    ///
    /// `actions[t]` is the action taken between observation t and t+1, so
    /// `actions.len() == obs.len() - 1`; the step into the first observation
    /// uses the zero action from the zero initial state.
    pub fn filter_sequence(
        &self,
        obs: &[Observation],
        actions: &[Action],
        noise: Noise,
    ) -> Result<(Vec<LatentBelief>, Vec<(Tensor, Tensor)>), WmError> {
        if obs.is_empty() {
            return Err(WmError::Sequence("need at least one observation".into()));
        }
        if actions.len() + 1 != obs.len() {
            return Err(WmError::Sequence(format!(
                "got {} observations but {} actions (want K-1)",
                obs.len(),
                actions.len()
            )));
        }
        let mut rng = match noise {
            Noise::Seeded(seed) => Some(substream(seed, "filter", 0)),
            Noise::Zero => None,
        };
        let mut prev = LatentBelief::initial(&self.cfg);
        let mut beliefs = Vec::with_capacity(obs.len());
        let mut priors = Vec::with_capacity(obs.len());
        for (t, o) in obs.iter().enumerate() {
            let a = if t == 0 { Action::ZERO } else { actions[t - 1] };
            let eps = match rng.as_mut() {
                Some(r) => net::draw_eps(r, self.cfg.state_dim),
                None => Tensor::zeros(&[1, self.cfg.state_dim]),
            };
            let (post, prior) = self.posterior_step(&prev, &a, o, &eps)?;
            prev = post.clone();
            beliefs.push(post);
            priors.push(prior);
        }
        Ok((beliefs, priors))
    }

    /// Predict N futures of `actions.len()` steps each from `start`.
    ///
    /// Each future uses its own noise substream indexed by its position, so a
    /// rollout with smaller N is a prefix of one with larger N under the same
    /// seed, and the futures are independent of evaluation order.
    pub fn rollout(
        &self,
        start: &LatentBelief,
        actions: &[Action],
        n: usize,
        noise: Noise,
    ) -> Result<Vec<Future>, WmError> {
        if n == 0 {
            return Err(WmError::Sequence("need at least one future".into()));
        }
        let mut futures = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = match noise {
                Noise::Seeded(seed) => Some(substream(seed, "rollout", i as u64)),
                Noise::Zero => None,
            };
            let mut beliefs = vec![start.clone()];
            let mut probs = Vec::with_capacity(actions.len());
            for a in actions {
                let eps = match rng.as_mut() {
                    Some(r) => net::draw_eps(r, self.cfg.state_dim),
                    None => Tensor::zeros(&[1, self.cfg.state_dim]),
                };
                let next = self.prior_step(beliefs.last().unwrap(), a, &eps)?;
                probs.push(self.decode(&next)?);
                beliefs.push(next);
            }
            futures.push(Future { beliefs, probs });
        }
        Ok(futures)
    }
}
