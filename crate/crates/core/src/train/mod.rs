//! Variational training of the world model on normal driving episodes:
//! subsequence minibatching, the evidence-bound objective, the optimization
//! loop, and checkpointing.

pub mod checkpoint;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numgrad::{AdamConfig, AdamState, BoundParams, NumgradError, ParamSet, Tape};
use crate::rng::substream;
use crate::sim::dataset::{entry_path, read_episode, DatasetManifest, Split};
use crate::sim::{hex_digest, EpisodeRecord, SimError};
use crate::tensor::Tensor;
use crate::wm::{net, WmError, WorldModel};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("configuration conflict: {0}")]
    ConfigConflict(String),
    #[error("normality violation: {0}")]
    NormalityViolation(String),
    #[error("non-finite {term} term at step {step}")]
    NonFinite { term: &'static str, step: usize },
    #[error(transparent)]
    Wm(#[from] WmError),
    #[error(transparent)]
    Numgrad(#[from] NumgradError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Container(#[from] crate::container::ContainerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Optimization hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Subsequence length K sampled from each episode.
    pub seq_len: usize,
    pub steps: usize,
    pub learning_rate: f64,
    /// Weight β on the divergence term.
    pub kl_beta: f64,
    /// Divergence is free below this many nats.
    pub free_nats: f64,
    pub clip_norm: f64,
    pub seed: u64,
    /// Validation / metrics interval in steps.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 8,
            seq_len: 16,
            steps: 20_000,
            learning_rate: 1e-3,
            kl_beta: 1.0,
            free_nats: 30.0,
            clip_norm: 100.0,
            seed: 0,
            eval_every: 250,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 || self.seq_len == 0 || self.steps == 0 || self.eval_every == 0 {
            return Err(TrainError::Config(
                "batch_size, seq_len, steps, eval_every must be positive".into(),
            ));
        }
        if self.learning_rate <= 0.0 || self.clip_norm <= 0.0 {
            return Err(TrainError::Config(
                "learning_rate and clip_norm must be positive".into(),
            ));
        }
        if self.kl_beta < 0.0 || self.free_nats < 0.0 {
            return Err(TrainError::Config(
                "kl_beta and free_nats must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        hex_digest(&serde_json::to_vec(self).expect("config serializes"))
    }
}

/// One minibatch of aligned subsequences, already stacked into [B, ·] rows.
#[derive(Debug, Clone)]
pub struct Batch {
    /// K observation targets [B, D].
    pub obs: Vec<Tensor>,
    /// K−1 actions [B, 2]; the step into obs[0] uses the zero action.
    pub acts: Vec<Tensor>,
}

impl Batch {
    /// Stack `batch_size` subsequences of length `seq_len`, positions seeded.
    pub fn sample(
        episodes: &[EpisodeRecord],
        batch_size: usize,
        seq_len: usize,
        rng: &mut impl Rng,
    ) -> Result<Batch, TrainError> {
        if episodes.is_empty() {
            return Err(TrainError::Config("no episodes to sample from".into()));
        }
        let d = episodes[0].observations[0].len();
        let mut obs = vec![Vec::with_capacity(batch_size * d); seq_len];
        let mut acts = vec![Vec::with_capacity(batch_size * 2); seq_len.saturating_sub(1)];
        for _ in 0..batch_size {
            let ep = &episodes[rng.gen_range(0..episodes.len())];
            let l = ep.len();
            if seq_len > l {
                return Err(TrainError::Config(format!(
                    "seq_len {seq_len} exceeds episode length {l}"
                )));
            }
            let start = rng.gen_range(0..=l - seq_len);
            for k in 0..seq_len {
                obs[k].extend_from_slice(&ep.observations[start + k].data);
                if k + 1 < seq_len {
                    let a = ep.actions[start + k];
                    acts[k].extend_from_slice(&[a.acc, a.steering]);
                }
            }
        }
        Ok(Batch {
            obs: obs
                .into_iter()
                .map(|v| Tensor::new(vec![batch_size, d], v).unwrap())
                .collect(),
            acts: acts
                .into_iter()
                .map(|v| Tensor::new(vec![batch_size, 2], v).unwrap())
                .collect(),
        })
    }
}

/// Scalar terms of one objective evaluation, all averaged per subsequence
/// frame (over batch and time).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboTerms {
    pub loss: f64,
    pub recon_nll: f64,
    pub kl: f64,
}

/// Evidence-bound objective over a batch:
/// mean over batch and time of [ −log p(o_t | s_t, h_t) + β·max(KL_t − F, 0) ].
///
/// `eps` supplies the K reparameterization noise rows [B, S]. Returns the
/// terms and the parameter gradients.
pub fn elbo_loss(
    model: &WorldModel,
    batch: &Batch,
    kl_beta: f64,
    free_nats: f64,
    eps: &[Tensor],
) -> Result<(ElboTerms, ParamSet), TrainError> {
    let k = batch.obs.len();
    if k == 0 {
        return Err(TrainError::Config("empty batch".into()));
    }
    if batch.acts.len() + 1 != k || eps.len() != k {
        return Err(TrainError::Config(format!(
            "batch arity mismatch: {} obs, {} acts, {} eps",
            k,
            batch.acts.len(),
            eps.len()
        )));
    }
    let cfg = model.cfg();
    let (b, _) = batch.obs[0].dims2();

    let mut tape = Tape::new();
    let bound = BoundParams::bind(&mut tape, model.params());
    let mut h = tape.leaf(Tensor::zeros(&[b, cfg.hidden_dim]));
    let mut s = tape.leaf(Tensor::zeros(&[b, cfg.state_dim]));
    let zero_act = tape.leaf(Tensor::zeros(&[b, cfg.action_dim]));

    let mut recon_sum = 0.0;
    let mut kl_sum = 0.0;
    let mut per_step = Vec::with_capacity(k);
    for t in 0..k {
        let a = if t == 0 {
            zero_act
        } else {
            tape.leaf(batch.acts[t - 1].clone())
        };
        let h2 = net::core_step(&mut tape, &bound, h, s, a)?;
        let (mup, sigp) = net::prior_head(&mut tape, &bound, h2)?;
        let ov = tape.leaf(batch.obs[t].clone());
        let e = net::encode(&mut tape, &bound, ov)?;
        let (muq, sigq) = net::posterior_head(&mut tape, &bound, h2, e)?;
        let sample = crate::numgrad::reparam_sample(&mut tape, muq, sigq, eps[t].clone())?;
        let logits = net::decode_logits(&mut tape, &bound, sample, h2)?;
        let nll = tape.bernoulli_nll_logits(logits, batch.obs[t].clone())?;
        let kl = tape.gaussian_kl(muq, sigq, mup, sigp)?;
        let hinge = tape.free_nats_hinge(kl, free_nats);
        let weighted = tape.scale(hinge, kl_beta);
        let step = tape.add(nll, weighted)?;
        per_step.push(step);

        recon_sum += tape.value(nll).data().iter().sum::<f64>();
        kl_sum += tape.value(kl).data().iter().sum::<f64>();
        h = h2;
        s = sample;
    }
    let mut total = per_step[0];
    for &p in &per_step[1..] {
        total = tape.add(total, p)?;
    }
    let mean_b = tape.mean_all(total);
    let loss = tape.scale(mean_b, 1.0 / k as f64);

    let frames = (b * k) as f64;
    let terms = ElboTerms {
        loss: tape.value(loss).item(),
        recon_nll: recon_sum / frames,
        kl: kl_sum / frames,
    };
    if !terms.recon_nll.is_finite() {
        return Err(TrainError::NonFinite { term: "reconstruction", step: 0 });
    }
    if !terms.kl.is_finite() {
        return Err(TrainError::NonFinite { term: "divergence", step: 0 });
    }

    let grads_raw = tape.backward(loss);
    let mut grads = model.params().zeros_like();
    bound.accumulate_grads(&grads_raw, &mut grads)?;
    Ok((terms, grads))
}

fn draw_eps_batch(cfg: &crate::wm::ModelConfig, b: usize, k: usize, rng: &mut impl Rng) -> Vec<Tensor> {
    use rand_distr::{Distribution, Normal};
    let dist = Normal::new(0.0, 1.0).unwrap();
    (0..k)
        .map(|_| {
            Tensor::new(
                vec![b, cfg.state_dim],
                (0..b * cfg.state_dim).map(|_| dist.sample(rng)).collect(),
            )
            .unwrap()
        })
        .collect()
}

/// Result paths and summary of one training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub steps: usize,
    pub final_loss: f64,
    pub best_val_loss: f64,
    pub metrics_path: PathBuf,
    pub best_path: PathBuf,
    pub final_path: PathBuf,
}

/// Load the manifest's training split, verifying that every episode is a
/// normal-split episode with exclusively normal frame labels. Shared by the
/// optimization loop and by latent feature-model fitting.
pub fn load_training_episodes(
    manifest_dir: &Path,
    manifest: &DatasetManifest,
) -> Result<Vec<EpisodeRecord>, TrainError> {
    let anomalous: Vec<&str> = manifest
        .entries
        .iter()
        .filter(|e| e.level.is_some() || e.injection.is_some())
        .map(|e| e.id.as_str())
        .collect();
    let train_entries: Vec<_> = manifest.entries_for(Split::Train).collect();
    if train_entries.is_empty() {
        if !anomalous.is_empty() {
            return Err(TrainError::NormalityViolation(format!(
                "manifest has no normal training split but contains anomalous episodes ({})",
                anomalous.join(", ")
            )));
        }
        return Err(TrainError::Config("manifest has no training episodes".into()));
    }
    let mut episodes = Vec::with_capacity(train_entries.len());
    for e in train_entries {
        // the loop must never touch eval-split files
        assert_eq!(e.split, Split::Train);
        if e.level.is_some() || e.injection.is_some() {
            return Err(TrainError::NormalityViolation(format!(
                "training entry {} carries an injected anomaly",
                e.id
            )));
        }
        let (rec, _, inj) = read_episode(&entry_path(manifest_dir, e))?;
        if inj.is_some() || rec.labels.iter().any(|l| l.is_anomalous()) {
            return Err(TrainError::NormalityViolation(format!(
                "training episode {} contains anomalous frames",
                e.id
            )));
        }
        episodes.push(rec);
    }
    Ok(episodes)
}

/// Run the optimization loop over the manifest's training split.
///
/// Writes `metrics.csv`, `best.wmad` (lowest held-out validation loss), and
/// `final.wmad` under `out_dir`. A tenth of the episodes (at least one, when
/// there are at least two) is held out for validation.
pub fn train(
    model: &mut WorldModel,
    manifest_dir: &Path,
    manifest: &DatasetManifest,
    cfg: &TrainConfig,
    out_dir: &Path,
) -> Result<TrainReport, TrainError> {
    cfg.validate()?;
    let mut episodes = load_training_episodes(manifest_dir, manifest)?;

    // deterministic validation hold-out
    let n_val = if episodes.len() >= 2 {
        (episodes.len() / 10).max(1)
    } else {
        0
    };
    let mut order: Vec<usize> = (0..episodes.len()).collect();
    let mut split_rng = substream(cfg.seed, "valsplit", 0);
    for i in (1..order.len()).rev() {
        order.swap(i, split_rng.gen_range(0..=i));
    }
    let mut val_idx: Vec<usize> = order[..n_val].to_vec();
    // remove by descending index so earlier removals don't shift later ones
    val_idx.sort_unstable_by(|a, b| b.cmp(a));
    let mut val_eps = Vec::new();
    for &i in &val_idx {
        val_eps.push(episodes.remove(i));
    }
    let train_eps = episodes;

    fs::create_dir_all(out_dir)?;
    let metrics_path = out_dir.join("metrics.csv");
    let best_path = out_dir.join("best.wmad");
    let final_path = out_dir.join("final.wmad");
    let mut metrics = fs::File::create(&metrics_path)?;
    writeln!(metrics, "step,loss,recon_nll,kl,wall_time_s")?;

    let manifest_digest = hex_digest(&serde_json::to_vec(manifest).expect("manifest serializes"));
    let meta = CheckpointMeta {
        model: model.cfg().clone(),
        train_config_digest: Some(cfg.digest()),
        manifest_digest: Some(manifest_digest),
    };

    let adam_cfg = AdamConfig {
        lr: cfg.learning_rate,
        clip_norm: cfg.clip_norm,
        ..AdamConfig::default()
    };
    let mut adam = AdamState::new(model.params());
    let start = Instant::now();
    let mut best_val = f64::INFINITY;
    let mut last_loss = f64::NAN;

    // fixed validation batches so the selection criterion is comparable
    // across evaluations
    let val_batches: Vec<(Batch, Vec<Tensor>)> = if val_eps.is_empty() {
        Vec::new()
    } else {
        let mut vrng = substream(cfg.seed, "valbatch", 0);
        (0..2)
            .map(|_| {
                let b = Batch::sample(&val_eps, cfg.batch_size, cfg.seq_len, &mut vrng)?;
                let eps = draw_eps_batch(model.cfg(), cfg.batch_size, cfg.seq_len, &mut vrng);
                Ok((b, eps))
            })
            .collect::<Result<_, TrainError>>()?
    };

    for step in 1..=cfg.steps {
        let mut rng = substream(cfg.seed, "batch", step as u64);
        let batch = Batch::sample(&train_eps, cfg.batch_size, cfg.seq_len, &mut rng)?;
        let eps = draw_eps_batch(model.cfg(), cfg.batch_size, cfg.seq_len, &mut rng);
        let (terms, grads) = elbo_loss(model, &batch, cfg.kl_beta, cfg.free_nats, &eps)
            .map_err(|e| match e {
                TrainError::NonFinite { term, .. } => TrainError::NonFinite { term, step },
                other => other,
            })?;
        adam.update(&adam_cfg, model.params_mut(), &grads, step as u64)?;
        last_loss = terms.loss;

        if step % cfg.eval_every == 0 || step == cfg.steps {
            let wall = start.elapsed().as_secs_f64();
            writeln!(
                metrics,
                "{step},{:.6},{:.6},{:.6},{wall:.3}",
                terms.loss, terms.recon_nll, terms.kl
            )?;
            let val_loss = if val_batches.is_empty() {
                terms.loss
            } else {
                let mut acc = 0.0;
                for (vb, veps) in &val_batches {
                    let (vt, _) = elbo_loss(model, vb, cfg.kl_beta, cfg.free_nats, veps)?;
                    acc += vt.loss;
                }
                acc / val_batches.len() as f64
            };
            if val_loss < best_val {
                best_val = val_loss;
                save_checkpoint(model, &meta, &best_path)?;
            }
        }
    }
    save_checkpoint(model, &meta, &final_path)?;
    if !best_path.exists() {
        save_checkpoint(model, &meta, &best_path)?;
    }
    Ok(TrainReport {
        steps: cfg.steps,
        final_loss: last_loss,
        best_val_loss: best_val,
        metrics_path,
        best_path,
        final_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numgrad::fdcheck::{max_rel_error, numeric_grad};
    use crate::sim::dataset::{build_dataset, DatasetSpec};
    use crate::sim::{Action, Observation, WorldConfig};
    use crate::wm::{ModelConfig, Noise};
    use tempfile::tempdir;

    fn tiny_cfg() -> ModelConfig {
        ModelConfig {
            channels: 1,
            grid_size: 4,
            action_dim: 2,
            embed_dim: 3,
            hidden_dim: 4,
            state_dim: 2,
            width: 5,
        }
    }

    fn synthetic_batch(cfg: &ModelConfig, b: usize, k: usize, seed: u64) -> Batch {
        let mut rng = substream(seed, "synthetic", 0);
        let d = cfg.obs_dim();
        Batch {
            obs: (0..k)
                .map(|_| {
                    Tensor::new(
                        vec![b, d],
                        (0..b * d).map(|_| f64::from(rng.gen_bool(0.3))).collect(),
                    )
                    .unwrap()
                })
                .collect(),
            acts: (0..k - 1)
                .map(|_| {
                    Tensor::new(
                        vec![b, 2],
                        (0..b * 2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    )
                    .unwrap()
                })
                .collect(),
        }
    }

    #[test]
    fn untrained_reconstruction_is_near_chance_level() {
        let cfg = tiny_cfg();
        let model = WorldModel::init(cfg.clone(), 0);
        let batch = synthetic_batch(&cfg, 4, 3, 1);
        let eps: Vec<Tensor> = (0..3).map(|_| Tensor::zeros(&[4, cfg.state_dim])).collect();
        let (terms, _) = elbo_loss(&model, &batch, 1.0, 3.0, &eps).unwrap();
        let chance = cfg.obs_dim() as f64 * std::f64::consts::LN_2;
        assert!(
            (terms.recon_nll - chance).abs() / chance < 0.10,
            "recon {} vs chance {chance}",
            terms.recon_nll
        );
    }

    #[test]
    fn zero_beta_reduces_to_pure_reconstruction() {
        use crate::numgrad::ops::bernoulli_loglik_eager;
        let cfg = tiny_cfg();
        let model = WorldModel::init(cfg.clone(), 2);
        let k = 3;
        let batch = synthetic_batch(&cfg, 1, k, 3);
        let eps: Vec<Tensor> = (0..k).map(|_| Tensor::zeros(&[1, cfg.state_dim])).collect();
        let (terms, _) = elbo_loss(&model, &batch, 0.0, 0.0, &eps).unwrap();
        assert!((terms.loss - terms.recon_nll).abs() < 1e-9);

        // cross-check against the sequential filter + decode path
        let obs: Vec<Observation> = batch
            .obs
            .iter()
            .map(|t| Observation {
                channels: cfg.channels,
                grid_size: cfg.grid_size,
                data: t.data().to_vec(),
            })
            .collect();
        let actions: Vec<Action> = batch
            .acts
            .iter()
            .map(|t| Action {
                acc: t.data()[0],
                steering: t.data()[1],
            })
            .collect();
        let (beliefs, _) = model.filter_sequence(&obs, &actions, Noise::Zero).unwrap();
        let mut nll = 0.0;
        for (b, o) in beliefs.iter().zip(&obs) {
            let probs = model.decode(b).unwrap();
            let pt = Tensor::from_vec(probs.data.clone());
            let xt = Tensor::from_vec(o.data.clone());
            nll -= bernoulli_loglik_eager(&pt, &xt).unwrap();
        }
        let independent = nll / k as f64;
        assert!(
            (terms.loss - independent).abs() < 1e-9,
            "{} vs {independent}",
            terms.loss
        );
    }

    #[test]
    fn elbo_gradient_matches_finite_differences() {
        let cfg = tiny_cfg();
        let model = WorldModel::init(cfg.clone(), 5);
        let b = 2;
        let k = 3;
        let batch = synthetic_batch(&cfg, b, k, 7);
        let mut erng = substream(7, "eps", 0);
        let eps = draw_eps_batch(&cfg, b, k, &mut erng);

        let (_, analytic) = elbo_loss(&model, &batch, 1.0, 0.5, &eps).unwrap();
        let numeric = numeric_grad(model.params(), |p| {
            let m = WorldModel::from_parts(cfg.clone(), p.clone()).unwrap();
            let (t, _) = elbo_loss(&m, &batch, 1.0, 0.5, &eps).unwrap();
            t.loss
        });
        assert!(max_rel_error(&analytic, &numeric) < 1e-4);
    }

    #[test]
    fn overfitting_a_fixed_batch_halves_the_loss() {
        let cfg = tiny_cfg();
        let mut model = WorldModel::init(cfg.clone(), 8);
        let batch = synthetic_batch(&cfg, 4, 4, 9);
        let eps: Vec<Tensor> = (0..4).map(|_| Tensor::zeros(&[4, cfg.state_dim])).collect();
        let adam_cfg = AdamConfig {
            lr: 1e-2,
            ..AdamConfig::default()
        };
        let mut adam = AdamState::new(model.params());
        let mut losses = Vec::with_capacity(500);
        for step in 1..=500u64 {
            let (t, g) = elbo_loss(&model, &batch, 1.0, 3.0, &eps).unwrap();
            adam.update(&adam_cfg, model.params_mut(), &g, step).unwrap();
            losses.push(t.loss);
        }
        assert!(
            losses[499] < 0.5 * losses[0],
            "loss {} -> {}",
            losses[0],
            losses[499]
        );
        // window-50 smoothed loss never increases by more than 5%
        let smoothed: Vec<f64> = losses
            .windows(50)
            .map(|w| w.iter().sum::<f64>() / 50.0)
            .collect();
        for pair in smoothed.windows(2) {
            assert!(pair[1] <= pair[0] * 1.05, "{} -> {}", pair[0], pair[1]);
        }
    }

    fn tiny_dataset(dir: &Path, seed: u64) -> DatasetManifest {
        let spec = DatasetSpec {
            base: WorldConfig {
                episode_len: 30,
                ..WorldConfig::default()
            },
            n_train: 3,
            n_eval_normal: 1,
            n_eval_per_level: 1,
            seed,
            ..DatasetSpec::default()
        };
        build_dataset(&spec, dir).unwrap()
    }

    fn small_model() -> WorldModel {
        WorldModel::init(
            ModelConfig {
                embed_dim: 8,
                hidden_dim: 8,
                state_dim: 4,
                width: 8,
                ..ModelConfig::default()
            },
            0,
        )
    }

    #[test]
    fn training_is_reproducible_up_to_wall_time() {
        let data = tempdir().unwrap();
        let manifest = tiny_dataset(data.path(), 1);
        let cfg = TrainConfig {
            steps: 6,
            batch_size: 2,
            seq_len: 5,
            eval_every: 2,
            ..TrainConfig::default()
        };
        let read_metrics = |p: &Path| -> Vec<Vec<f32>> {
            fs::read_to_string(p)
                .unwrap()
                .lines()
                .skip(1)
                .map(|l| {
                    // drop the wall_time_s column
                    let cols: Vec<&str> = l.split(',').collect();
                    cols[..cols.len() - 1]
                        .iter()
                        .map(|c| c.parse::<f32>().unwrap())
                        .collect()
                })
                .collect()
        };
        let o1 = tempdir().unwrap();
        let o2 = tempdir().unwrap();
        let mut m1 = small_model();
        let mut m2 = small_model();
        train(&mut m1, data.path(), &manifest, &cfg, o1.path()).unwrap();
        train(&mut m2, data.path(), &manifest, &cfg, o2.path()).unwrap();
        assert_eq!(m1.params().numel(), m2.params().numel());
        assert_eq!(
            read_metrics(&o1.path().join("metrics.csv")),
            read_metrics(&o2.path().join("metrics.csv"))
        );
        assert_eq!(
            fs::read(o1.path().join("final.wmad")).unwrap(),
            fs::read(o2.path().join("final.wmad")).unwrap()
        );
    }

    #[test]
    fn anomalous_manifest_is_rejected() {
        let data = tempdir().unwrap();
        let manifest = tiny_dataset(data.path(), 2);
        // an eval-only manifest still containing the anomalous entries
        let eval_only = DatasetManifest {
            entries: manifest
                .entries
                .iter()
                .filter(|e| e.split == Split::Eval)
                .cloned()
                .collect(),
            ..manifest.clone()
        };
        let out = tempdir().unwrap();
        let mut model = small_model();
        let cfg = TrainConfig {
            steps: 1,
            batch_size: 1,
            seq_len: 4,
            eval_every: 1,
            ..TrainConfig::default()
        };
        let err = train(&mut model, data.path(), &eval_only, &cfg, out.path()).unwrap_err();
        assert!(matches!(err, TrainError::NormalityViolation(_)));

        // an anomalous entry mislabeled as training split is also rejected
        let mut mislabeled = manifest.clone();
        for e in mislabeled.entries.iter_mut() {
            if e.level.is_some() {
                e.split = Split::Train;
            }
        }
        let err = train(&mut model, data.path(), &mislabeled, &cfg, out.path()).unwrap_err();
        assert!(matches!(err, TrainError::NormalityViolation(_)));
    }
}
