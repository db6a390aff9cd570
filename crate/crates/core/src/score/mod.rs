//! The five anomaly-scorer families. Every scorer maps an episode's
//! observations and actions (never its labels) to one real score per frame,
//! oriented so that larger means more anomalous.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::dataset::DatasetManifest;
use crate::sim::{Action, Observation};
use crate::train::{load_training_episodes, TrainError};
use crate::wm::{Noise, WmError, WorldModel};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("scoring error: {0}")]
    Scoring(String),
    #[error("ensemble error: {0}")]
    Ensemble(String),
    #[error(transparent)]
    Wm(#[from] WmError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-frame scores of one scorer on one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSeries {
    pub episode_id: String,
    pub scorer: String,
    /// Digest binding the scores to the model/scorer configuration.
    pub cfg_digest: String,
    pub scores: Vec<f64>,
    /// False where a scorer produced a placeholder instead of a prediction.
    pub valid: Vec<bool>,
}

impl ScoreSeries {
    fn dense(episode_id: &str, scorer: &str, cfg_digest: &str, scores: Vec<f64>) -> Self {
        let valid = vec![true; scores.len()];
        ScoreSeries {
            episode_id: episode_id.to_string(),
            scorer: scorer.to_string(),
            cfg_digest: cfg_digest.to_string(),
            scores,
            valid,
        }
    }
}

/// Filter the episode with zero noise and decode every posterior belief.
fn posterior_reconstructions(
    model: &WorldModel,
    obs: &[Observation],
    actions: &[Action],
) -> Result<Vec<Observation>, ScoreError> {
    let (beliefs, _) = model.filter_sequence(obs, actions, Noise::Zero)?;
    let mut out = Vec::with_capacity(beliefs.len());
    for b in &beliefs {
        out.push(model.decode(b)?);
    }
    Ok(out)
}

/// Mean per-cell squared reconstruction error per frame, plus the per-cell
/// error maps for qualitative inspection.
pub fn score_reconstructive(
    model: &WorldModel,
    episode_id: &str,
    cfg_digest: &str,
    obs: &[Observation],
    actions: &[Action],
) -> Result<(ScoreSeries, Vec<Vec<f64>>), ScoreError> {
    let recons = posterior_reconstructions(model, obs, actions)?;
    let mut scores = Vec::with_capacity(obs.len());
    let mut maps = Vec::with_capacity(obs.len());
    for (o, r) in obs.iter().zip(&recons) {
        let map: Vec<f64> = o
            .data
            .iter()
            .zip(&r.data)
            .map(|(&x, &p)| (x - p) * (x - p))
            .collect();
        scores.push(map.iter().sum::<f64>() / map.len() as f64);
        maps.push(map);
    }
    Ok((
        ScoreSeries::dense(episode_id, "reconstructive", cfg_digest, scores),
        maps,
    ))
}

/// Per-cell Bernoulli negative log-likelihood of each frame under its
/// decoded posterior reconstruction.
pub fn score_generative(
    model: &WorldModel,
    episode_id: &str,
    cfg_digest: &str,
    obs: &[Observation],
    actions: &[Action],
) -> Result<ScoreSeries, ScoreError> {
    use crate::numgrad::ops::bernoulli_loglik_eager;
    use crate::tensor::Tensor;
    let recons = posterior_reconstructions(model, obs, actions)?;
    let mut scores = Vec::with_capacity(obs.len());
    for (o, r) in obs.iter().zip(&recons) {
        let p = Tensor::from_vec(r.data.clone());
        let x = Tensor::from_vec(o.data.clone());
        let ll = bernoulli_loglik_eager(&p, &x).map_err(|e| ScoreError::Scoring(e.to_string()))?;
        scores.push(-ll / o.len() as f64);
    }
    Ok(ScoreSeries::dense(episode_id, "generative", cfg_digest, scores))
}

/// PSNR cap in dB for a zero prediction error.
pub const PSNR_CAP: f64 = 100.0;
/// Placeholder score for frames without a prediction.
pub const NO_PREDICTION_SCORE: f64 = -PSNR_CAP;

/// −PSNR of a mean-squared prediction error over unit-range grids.
pub fn psnr_score(mse: f64) -> f64 {
    if mse <= 0.0 {
        return -PSNR_CAP;
    }
    let psnr = 10.0 * (1.0 / mse).log10();
    -psnr.min(PSNR_CAP)
}

/// Prediction-based scoring: filter `context` frames, then roll out
/// `horizon` futures `samples` times along the episode's recorded actions.
/// Each predicted frame scores −PSNR of the best (minimum) per-future MSE
/// against the actual observation. Frames outside the prediction window get
/// the maximally normal placeholder and are flagged invalid.
pub fn score_predictive(
    model: &WorldModel,
    episode_id: &str,
    cfg_digest: &str,
    obs: &[Observation],
    actions: &[Action],
    context: usize,
    horizon: usize,
    samples: usize,
    seed: u64,
) -> Result<ScoreSeries, ScoreError> {
    if context == 0 {
        return Err(ScoreError::Scoring("context must be >= 1".into()));
    }
    if obs.len() < context + 1 {
        return Err(ScoreError::Scoring(format!(
            "episode has {} frames but {} context frames plus one predicted frame are needed",
            obs.len(),
            context
        )));
    }
    let t_max = horizon.min(obs.len() - context);
    let (beliefs, _) = model.filter_sequence(
        &obs[..context],
        &actions[..context - 1],
        Noise::Zero,
    )?;
    let start = beliefs.last().unwrap();
    let future_actions = &actions[context - 1..context - 1 + t_max];
    let futures = model.rollout(start, future_actions, samples, Noise::Seeded(seed))?;

    let mut scores = vec![NO_PREDICTION_SCORE; obs.len()];
    let mut valid = vec![false; obs.len()];
    for t in 0..t_max {
        let actual = &obs[context + t];
        let mse = futures
            .iter()
            .map(|f| {
                let p = &f.probs[t];
                actual
                    .data
                    .iter()
                    .zip(&p.data)
                    .map(|(&x, &q)| (x - q) * (x - q))
                    .sum::<f64>()
                    / actual.data.len() as f64
            })
            .fold(f64::INFINITY, f64::min);
        scores[context + t] = psnr_score(mse);
        valid[context + t] = true;
    }
    Ok(ScoreSeries {
        episode_id: episode_id.to_string(),
        scorer: "predictive".to_string(),
        cfg_digest: cfg_digest.to_string(),
        scores,
        valid,
    })
}

/// Ensemble disagreement: mean per-cell variance across the M decoded
/// posterior-mean reconstructions.
pub fn score_confidence(
    models: &[WorldModel],
    episode_id: &str,
    cfg_digest: &str,
    obs: &[Observation],
    actions: &[Action],
) -> Result<ScoreSeries, ScoreError> {
    let m = models.len();
    if m < 2 {
        return Err(ScoreError::Ensemble(format!(
            "need at least 2 ensemble members, got {m}"
        )));
    }
    let mut recons = Vec::with_capacity(m);
    for model in models {
        recons.push(posterior_reconstructions(model, obs, actions)?);
    }
    let d = obs[0].len();
    let mut scores = Vec::with_capacity(obs.len());
    for t in 0..obs.len() {
        let mut acc = 0.0;
        for i in 0..d {
            // exact zero for duplicated members: skip the mean round trip
            // when every member agrees bit-for-bit
            let first = recons[0][t].data[i];
            if recons.iter().all(|r| r[t].data[i] == first) {
                continue;
            }
            let mean: f64 = recons.iter().map(|r| r[t].data[i]).sum::<f64>() / m as f64;
            let var: f64 = recons
                .iter()
                .map(|r| (r[t].data[i] - mean).powi(2))
                .sum::<f64>()
                / m as f64;
            acc += var;
        }
        scores.push(acc / d as f64);
    }
    Ok(ScoreSeries::dense(episode_id, "confidence", cfg_digest, scores))
}

/// Diagonal Gaussian over posterior means of the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureModel {
    pub mean: Vec<f64>,
    /// Per-dimension variance, already inflated by the shrinkage λ.
    pub var: Vec<f64>,
    pub lambda: f64,
    pub fit_digest: String,
}

impl FeatureModel {
    /// Squared Mahalanobis distance of one latent mean row.
    pub fn mahalanobis_sq(&self, mu: &[f64]) -> f64 {
        mu.iter()
            .zip(&self.mean)
            .zip(&self.var)
            .map(|((&x, &m), &v)| (x - m) * (x - m) / v)
            .sum()
    }
}

/// Moment fit over latent rows with variance shrinkage λ > 0.
pub fn fit_from_latents(
    latents: &[Vec<f64>],
    lambda: f64,
    fit_digest: &str,
) -> Result<FeatureModel, ScoreError> {
    if lambda <= 0.0 {
        return Err(ScoreError::Scoring("shrinkage lambda must be positive".into()));
    }
    if latents.is_empty() {
        return Err(ScoreError::Scoring("no latent rows to fit".into()));
    }
    let s = latents[0].len();
    let n = latents.len() as f64;
    let mut mean = vec![0.0; s];
    for row in latents {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut var = vec![0.0; s];
    for row in latents {
        for ((v, &x), &m) in var.iter_mut().zip(row).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    for v in var.iter_mut() {
        *v = *v / n + lambda;
    }
    Ok(FeatureModel {
        mean,
        var,
        lambda,
        fit_digest: fit_digest.to_string(),
    })
}

/// Fit the latent feature model over every posterior mean of the manifest's
/// training split. Applies the same normality guard as the training loop.
pub fn fit_feature_model(
    model: &WorldModel,
    manifest_dir: &Path,
    manifest: &DatasetManifest,
    lambda: f64,
) -> Result<FeatureModel, ScoreError> {
    let episodes = load_training_episodes(manifest_dir, manifest)?;
    let mut latents = Vec::new();
    for ep in &episodes {
        let (beliefs, _) = model.filter_sequence(&ep.observations, &ep.actions, Noise::Zero)?;
        for b in beliefs {
            latents.push(b.mu.data().to_vec());
        }
    }
    let digest = crate::sim::hex_digest(
        &serde_json::to_vec(&manifest.entries.iter().map(|e| &e.digest).collect::<Vec<_>>())
            .expect("digests serialize"),
    );
    fit_from_latents(&latents, lambda, &digest)
}

/// Squared Mahalanobis distance of each frame's posterior mean.
pub fn score_feature(
    feature: &FeatureModel,
    model: &WorldModel,
    episode_id: &str,
    cfg_digest: &str,
    obs: &[Observation],
    actions: &[Action],
) -> Result<ScoreSeries, ScoreError> {
    if feature.mean.len() != model.cfg().state_dim {
        return Err(ScoreError::Scoring(format!(
            "feature model dimension {} does not match latent dimension {}",
            feature.mean.len(),
            model.cfg().state_dim
        )));
    }
    let (beliefs, _) = model.filter_sequence(obs, actions, Noise::Zero)?;
    let scores = beliefs
        .iter()
        .map(|b| feature.mahalanobis_sq(b.mu.data()))
        .collect();
    Ok(ScoreSeries::dense(episode_id, "feature", cfg_digest, scores))
}

/// Sidecar metadata stored next to a score CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSidecar {
    pub manifest_digest: String,
    pub cfg_digests: std::collections::BTreeMap<String, String>,
}

/// Persist series as CSV (episode_id, frame, scorer, score, valid) plus a
/// JSON sidecar with provenance digests.
pub fn write_scores(
    csv_path: &Path,
    sidecar_path: &Path,
    series: &[ScoreSeries],
    manifest_digest: &str,
) -> Result<(), ScoreError> {
    let mut f = fs::File::create(csv_path)?;
    writeln!(f, "episode_id,frame,scorer,score,valid")?;
    let mut cfg_digests = std::collections::BTreeMap::new();
    for s in series {
        cfg_digests.insert(s.scorer.clone(), s.cfg_digest.clone());
        for (i, (&v, &ok)) in s.scores.iter().zip(&s.valid).enumerate() {
            writeln!(f, "{},{i},{},{v:.12},{}", s.episode_id, s.scorer, u8::from(ok))?;
        }
    }
    let sidecar = ScoreSidecar {
        manifest_digest: manifest_digest.to_string(),
        cfg_digests,
    };
    let mut bytes = serde_json::to_vec_pretty(&sidecar)
        .map_err(|e| ScoreError::Scoring(format!("sidecar serialization: {e}")))?;
    bytes.push(b'\n');
    fs::write(sidecar_path, bytes)?;
    Ok(())
}

/// Load a score CSV back into per-(episode, scorer) series, plus the sidecar.
pub fn read_scores(
    csv_path: &Path,
    sidecar_path: &Path,
) -> Result<(Vec<ScoreSeries>, ScoreSidecar), ScoreError> {
    let sidecar: ScoreSidecar = serde_json::from_slice(&fs::read(sidecar_path)?)
        .map_err(|e| ScoreError::Scoring(format!("malformed sidecar: {e}")))?;
    let text = fs::read_to_string(csv_path)?;
    let mut series: Vec<ScoreSeries> = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(ScoreError::Scoring(format!(
                "malformed score row at line {}",
                lineno + 1
            )));
        }
        let (ep, scorer) = (cols[0], cols[2]);
        let frame: usize = cols[1]
            .parse()
            .map_err(|_| ScoreError::Scoring(format!("bad frame index at line {}", lineno + 1)))?;
        let score: f64 = cols[3]
            .parse()
            .map_err(|_| ScoreError::Scoring(format!("bad score at line {}", lineno + 1)))?;
        let ok = cols[4] == "1";
        let cur = match series.last_mut() {
            Some(s) if s.episode_id == ep && s.scorer == scorer => s,
            _ => {
                let digest = sidecar.cfg_digests.get(scorer).cloned().unwrap_or_default();
                series.push(ScoreSeries {
                    episode_id: ep.to_string(),
                    scorer: scorer.to_string(),
                    cfg_digest: digest,
                    scores: Vec::new(),
                    valid: Vec::new(),
                });
                series.last_mut().unwrap()
            }
        };
        if frame != cur.scores.len() {
            return Err(ScoreError::Scoring(format!(
                "non-contiguous frame index at line {}",
                lineno + 1
            )));
        }
        cur.scores.push(score);
        cur.valid.push(ok);
    }
    Ok((series, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::tensor::Tensor;
    use crate::wm::ModelConfig;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

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

    fn zero_decoder_model(seed: u64) -> WorldModel {
        let cfg = tiny_cfg();
        let mut m = WorldModel::init(cfg.clone(), seed);
        *m.params_mut().get_mut("dec.out.w").unwrap() =
            Tensor::zeros(&[cfg.obs_dim(), cfg.width]);
        *m.params_mut().get_mut("dec.out.b").unwrap() = Tensor::zeros(&[cfg.obs_dim()]);
        m
    }

    fn random_episode(cfg: &ModelConfig, len: usize, seed: u64) -> (Vec<Observation>, Vec<Action>) {
        let mut rng = substream(seed, "ep", 0);
        let obs = (0..len)
            .map(|_| Observation {
                channels: cfg.channels,
                grid_size: cfg.grid_size,
                data: (0..cfg.obs_dim()).map(|_| f64::from(rng.gen_bool(0.4))).collect(),
            })
            .collect();
        let actions = (0..len - 1)
            .map(|_| Action {
                acc: rng.gen_range(-1.0..1.0),
                steering: rng.gen_range(-0.5..0.5),
            })
            .collect();
        (obs, actions)
    }

    #[test]
    fn reconstructive_zero_when_observation_matches_decoding() {
        let m = zero_decoder_model(1);
        let cfg = tiny_cfg();
        // decoder emits 0.5 everywhere; observe exactly 0.5
        let obs = vec![
            Observation {
                channels: cfg.channels,
                grid_size: cfg.grid_size,
                data: vec![0.5; cfg.obs_dim()],
            };
            3
        ];
        let actions = vec![Action::ZERO; 2];
        let (series, maps) = score_reconstructive(&m, "e", "d", &obs, &actions).unwrap();
        assert!(series.scores.iter().all(|&s| s == 0.0));
        assert!(maps.iter().flatten().all(|&e| e == 0.0));
    }

    #[test]
    fn generative_is_ln2_under_half_probabilities_and_nonnegative() {
        let m = zero_decoder_model(2);
        let cfg = tiny_cfg();
        let (obs, actions) = random_episode(&cfg, 5, 3);
        let series = score_generative(&m, "e", "d", &obs, &actions).unwrap();
        for &s in &series.scores {
            assert!((s - std::f64::consts::LN_2).abs() < 1e-12);
            assert!(s >= 0.0);
        }
    }

    fn spearman(a: &[f64], b: &[f64]) -> f64 {
        let rank = |v: &[f64]| -> Vec<f64> {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap());
            let mut r = vec![0.0; v.len()];
            for (pos, &i) in idx.iter().enumerate() {
                r[i] = pos as f64;
            }
            r
        };
        let (ra, rb) = (rank(a), rank(b));
        let n = a.len() as f64;
        let ma = ra.iter().sum::<f64>() / n;
        let mb = rb.iter().sum::<f64>() / n;
        let cov: f64 = ra.iter().zip(&rb).map(|(&x, &y)| (x - ma) * (y - mb)).sum();
        let va: f64 = ra.iter().map(|&x| (x - ma).powi(2)).sum();
        let vb: f64 = rb.iter().map(|&y| (y - mb).powi(2)).sum();
        cov / (va.sqrt() * vb.sqrt())
    }

    #[test]
    fn generative_and_reconstructive_scores_rank_correlate() {
        let cfg = tiny_cfg();
        let m = WorldModel::init(cfg.clone(), 4);
        let (obs, actions) = random_episode(&cfg, 60, 5);
        let (recon, _) = score_reconstructive(&m, "e", "d", &obs, &actions).unwrap();
        let gen = score_generative(&m, "e", "d", &obs, &actions).unwrap();
        let rho = spearman(&recon.scores, &gen.scores);
        assert!(rho > 0.0, "spearman {rho}");
    }

    #[test]
    fn psnr_closed_forms() {
        assert_eq!(psnr_score(0.0), -100.0);
        assert!((psnr_score(0.01) - (-20.0)).abs() < 1e-12);
        // better than 100 dB still caps
        assert_eq!(psnr_score(1e-12), -100.0);
    }

    #[test]
    fn predictive_window_flags_and_monotonicity() {
        let cfg = tiny_cfg();
        let m = WorldModel::init(cfg.clone(), 6);
        let (obs, actions) = random_episode(&cfg, 12, 7);
        let context = 4;
        let horizon = 5;
        let s1 =
            score_predictive(&m, "e", "d", &obs, &actions, context, horizon, 1, 9).unwrap();
        let s8 =
            score_predictive(&m, "e", "d", &obs, &actions, context, horizon, 8, 9).unwrap();
        for t in 0..obs.len() {
            let in_window = t >= context && t < context + horizon;
            assert_eq!(s1.valid[t], in_window);
            if !in_window {
                assert_eq!(s1.scores[t], NO_PREDICTION_SCORE);
            } else {
                // min over nested sample sets is non-increasing in N
                assert!(s8.scores[t] <= s1.scores[t] + 1e-12);
            }
        }
    }

    #[test]
    fn predictive_needs_context_plus_one_frames() {
        let cfg = tiny_cfg();
        let m = WorldModel::init(cfg.clone(), 8);
        let (obs, actions) = random_episode(&cfg, 4, 9);
        assert!(matches!(
            score_predictive(&m, "e", "d", &obs, &actions, 4, 3, 2, 0),
            Err(ScoreError::Scoring(_))
        ));
    }

    #[test]
    fn confidence_zero_for_duplicated_members_and_needs_two() {
        let cfg = tiny_cfg();
        let m = WorldModel::init(cfg.clone(), 10);
        let (obs, actions) = random_episode(&cfg, 6, 11);
        let dup = vec![m.clone(), m.clone(), m.clone()];
        let series = score_confidence(&dup, "e", "d", &obs, &actions).unwrap();
        assert!(series.scores.iter().all(|&s| s == 0.0));
        let distinct = vec![m.clone(), WorldModel::init(cfg.clone(), 99)];
        let series = score_confidence(&distinct, "e", "d", &obs, &actions).unwrap();
        assert!(series.scores.iter().all(|&s| s >= 0.0));
        assert!(series.scores.iter().any(|&s| s > 0.0));
        assert!(matches!(
            score_confidence(&[m], "e", "d", &obs, &actions),
            Err(ScoreError::Ensemble(_))
        ));
    }

    #[test]
    fn feature_distance_zero_at_the_mean_and_permutation_invariant() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 0.0]];
        let fm = fit_from_latents(&rows, 1e-3, "x").unwrap();
        assert!(fm.mahalanobis_sq(&fm.mean) == 0.0);
        let mut shuffled = rows.clone();
        shuffled.rotate_left(2);
        let fm2 = fit_from_latents(&shuffled, 1e-3, "x").unwrap();
        assert_eq!(fm.mean, fm2.mean);
        assert_eq!(fm.var, fm2.var);
        assert!(fm.var.iter().all(|&v| v >= fm.lambda));
    }

    #[test]
    fn mahalanobis_mean_matches_chi_square_expectation() {
        let s = 6;
        let mut rng = substream(0, "cloud", 0);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let gen_mean: Vec<f64> = (0..s).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let gen_sd: Vec<f64> = (0..s).map(|_| rng.gen_range(0.5..2.0)).collect();
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
            (0..s)
                .map(|i| gen_mean[i] + gen_sd[i] * normal.sample(rng))
                .collect()
        };
        let fit_rows: Vec<Vec<f64>> = (0..50_000).map(|_| draw(&mut rng)).collect();
        let fm = fit_from_latents(&fit_rows, 1e-6, "x").unwrap();
        let mut probe_rng = substream(1, "cloud", 1);
        let mean_d2: f64 = (0..20_000)
            .map(|_| fm.mahalanobis_sq(&draw(&mut probe_rng)))
            .sum::<f64>()
            / 20_000.0;
        let expected = s as f64;
        assert!(
            (mean_d2 - expected).abs() / expected < 0.05,
            "mean {mean_d2} vs {expected}"
        );
    }

    #[test]
    fn score_files_round_trip() {
        use tempfile::tempdir;
        let cfg = tiny_cfg();
        let m = WorldModel::init(cfg.clone(), 12);
        let (obs, actions) = random_episode(&cfg, 8, 13);
        let (recon, _) = score_reconstructive(&m, "ep_a", "dig", &obs, &actions).unwrap();
        let pred = score_predictive(&m, "ep_a", "dig2", &obs, &actions, 3, 3, 2, 1).unwrap();
        let dir = tempdir().unwrap();
        let csv = dir.path().join("scores.csv");
        let side = dir.path().join("scores.json");
        write_scores(&csv, &side, &[recon.clone(), pred.clone()], "mdig").unwrap();
        let (series, sidecar) = read_scores(&csv, &side).unwrap();
        assert_eq!(sidecar.manifest_digest, "mdig");
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].episode_id, recon.episode_id);
        assert_eq!(series[0].valid, recon.valid);
        assert_eq!(series[1].valid, pred.valid);
        for (a, b) in series[0].scores.iter().zip(&recon.scores) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
