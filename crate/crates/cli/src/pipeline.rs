//! The pipeline stages. Every stage reads and writes under one output
//! directory:
//!
//! ```text
//! out/
//!   data/    manifest.json + episode files
//!   train/   metrics.csv, best.wmad, final.wmad, member<i>/...
//!   scores/  scores.csv + scores.json provenance sidecar
//!   eval/    report.json + report.txt
//!   rollout/ <episode>_t<start>.wmad
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use wmad_core::container::{Container, TensorBlock};
use wmad_core::eval::{evaluate, render_report, EvalConfig, EvalReport};
use wmad_core::rng::substream;
use wmad_core::score::{
    fit_feature_model, read_scores, score_confidence, score_feature, score_generative,
    score_predictive, score_reconstructive, write_scores, FeatureModel, ScoreSeries,
};
use wmad_core::sim::dataset::{build_dataset, entry_path, read_episode, DatasetManifest, Split};
use wmad_core::sim::hex_digest;
use wmad_core::wm::{Noise, WorldModel};
use wmad_core::train::{load_checkpoint, train, TrainConfig, TrainReport};

use crate::{CliError, PipelineConfig};

pub fn data_dir(out: &Path) -> PathBuf {
    out.join("data")
}
pub fn train_dir(out: &Path) -> PathBuf {
    out.join("train")
}
pub fn scores_csv(out: &Path) -> PathBuf {
    out.join("scores").join("scores.csv")
}
pub fn scores_sidecar(out: &Path) -> PathBuf {
    out.join("scores").join("scores.json")
}
pub fn report_json(out: &Path) -> PathBuf {
    out.join("eval").join("report.json")
}
pub fn report_txt(out: &Path) -> PathBuf {
    out.join("eval").join("report.txt")
}

fn load_manifest(out: &Path) -> Result<(DatasetManifest, String), CliError> {
    let path = data_dir(out).join("manifest.json");
    if !path.exists() {
        return Err(CliError::Validation(format!(
            "no dataset manifest at {}; run gen-data first",
            path.display()
        )));
    }
    let manifest = DatasetManifest::load(&path)?;
    let digest = hex_digest(&serde_json::to_vec(&manifest).expect("manifest serializes"));
    Ok((manifest, digest))
}

/// Build the dataset under `out/data`.
pub fn cmd_gen_data(cfg: &PipelineConfig, out: &Path) -> Result<DatasetManifest, CliError> {
    let dir = data_dir(out);
    fs::create_dir_all(&dir)?;
    Ok(build_dataset(&cfg.dataset, &dir)?)
}

pub struct TrainOutcome {
    pub main: TrainReport,
    pub member_paths: Vec<PathBuf>,
}

/// Train the main model under `out/train`, then the extra ensemble members
/// under `out/train/member<i>` with seeds derived from the training seed.
pub fn cmd_train(cfg: &PipelineConfig, out: &Path) -> Result<TrainOutcome, CliError> {
    let (manifest, _) = load_manifest(out)?;
    let dir = train_dir(out);
    fs::create_dir_all(&dir)?;

    let mut model = WorldModel::init(cfg.model.clone(), cfg.train.seed);
    let main = train(&mut model, &data_dir(out), &manifest, &cfg.train, &dir)?;

    let mut member_paths = Vec::new();
    for i in 1..cfg.ensemble.members {
        let member_seed: u64 = substream(cfg.train.seed, "ensemble", i as u64).gen();
        let member_cfg = TrainConfig {
            steps: cfg.ensemble.steps,
            seed: member_seed,
            ..cfg.train.clone()
        };
        let member_dir = dir.join(format!("member{i}"));
        fs::create_dir_all(&member_dir)?;
        let mut member = WorldModel::init(cfg.model.clone(), member_seed);
        let report = train(&mut member, &data_dir(out), &manifest, &member_cfg, &member_dir)?;
        member_paths.push(report.best_path);
    }
    Ok(TrainOutcome { main, member_paths })
}

fn load_models(cfg: &PipelineConfig, out: &Path) -> Result<Vec<WorldModel>, CliError> {
    let dir = train_dir(out);
    let main_path = dir.join("best.wmad");
    if !main_path.exists() {
        return Err(CliError::Validation(format!(
            "no checkpoint at {}; run train first",
            main_path.display()
        )));
    }
    let mut models = vec![load_checkpoint(&main_path, Some(&cfg.model))?.0];
    for i in 1..cfg.ensemble.members {
        let p = dir.join(format!("member{i}")).join("best.wmad");
        if !p.exists() {
            return Err(CliError::Validation(format!(
                "missing ensemble member checkpoint {}",
                p.display()
            )));
        }
        models.push(load_checkpoint(&p, Some(&cfg.model))?.0);
    }
    Ok(models)
}

fn scorer_digests(cfg: &PipelineConfig, out: &Path) -> Result<ScorerDigests, CliError> {
    let model_digest = hex_digest(&fs::read(train_dir(out).join("best.wmad"))?);
    let digest = |scorer: &str, params: serde_json::Value| {
        hex_digest(&serde_json::to_vec(&serde_json::json!({
            "scorer": scorer,
            "model": model_digest,
            "params": params,
        }))
        .expect("digest payload serializes"))
    };
    Ok(ScorerDigests {
        reconstructive: digest("reconstructive", serde_json::json!({})),
        generative: digest("generative", serde_json::json!({})),
        predictive: digest(
            "predictive",
            serde_json::json!({
                "context": cfg.score.context,
                "horizon": cfg.score.horizon,
                "samples": cfg.score.samples,
                "seed": cfg.score.seed,
            }),
        ),
        confidence: digest(
            "confidence",
            serde_json::json!({ "members": cfg.ensemble.members }),
        ),
        feature: digest("feature", serde_json::json!({ "lambda": cfg.score.lambda })),
    })
}

struct ScorerDigests {
    reconstructive: String,
    generative: String,
    predictive: String,
    confidence: String,
    feature: String,
}

fn score_episode(
    cfg: &PipelineConfig,
    models: &[WorldModel],
    feature: &FeatureModel,
    digests: &ScorerDigests,
    out: &Path,
    entry: &wmad_core::sim::ManifestEntry,
    index: usize,
) -> Result<Vec<ScoreSeries>, CliError> {
    let path = entry_path(&data_dir(out), entry);
    if !path.exists() {
        return Err(CliError::Runtime(format!(
            "episode file {} is missing",
            path.display()
        )));
    }
    let (rec, _, _) = read_episode(&path)?;
    let model = &models[0];
    let id = entry.id.as_str();
    let mut series = Vec::with_capacity(5);
    let (recon, _maps) =
        score_reconstructive(model, id, &digests.reconstructive, &rec.observations, &rec.actions)?;
    series.push(recon);
    series.push(score_generative(
        model,
        id,
        &digests.generative,
        &rec.observations,
        &rec.actions,
    )?);
    let predictive_seed: u64 = substream(cfg.score.seed, "predictive", index as u64).gen();
    series.push(score_predictive(
        model,
        id,
        &digests.predictive,
        &rec.observations,
        &rec.actions,
        cfg.score.context,
        cfg.score.horizon,
        cfg.score.samples,
        predictive_seed,
    )?);
    series.push(score_confidence(
        models,
        id,
        &digests.confidence,
        &rec.observations,
        &rec.actions,
    )?);
    series.push(score_feature(
        feature,
        model,
        id,
        &digests.feature,
        &rec.observations,
        &rec.actions,
    )?);
    Ok(series)
}

/// Score every eval episode with all five scorer families and persist the
/// series under `out/scores`. Episodes are scored in parallel over `threads`
/// workers; results are assembled in manifest order either way.
pub fn cmd_score(cfg: &PipelineConfig, out: &Path, threads: usize) -> Result<usize, CliError> {
    let (manifest, manifest_digest) = load_manifest(out)?;
    let models = load_models(cfg, out)?;
    let digests = scorer_digests(cfg, out)?;
    let feature = fit_feature_model(&models[0], &data_dir(out), &manifest, cfg.score.lambda)?;

    let entries: Vec<_> = manifest.entries_for(Split::Eval).collect();
    let threads = threads.max(1).min(entries.len().max(1));
    let mut per_episode: Vec<Option<Result<Vec<ScoreSeries>, CliError>>> =
        (0..entries.len()).map(|_| None).collect();
    if threads <= 1 {
        for (i, &e) in entries.iter().enumerate() {
            per_episode[i] = Some(score_episode(cfg, &models, &feature, &digests, out, e, i));
        }
    } else {
        // round-robin assignment keeps output order independent of timing
        let mut chunks: Vec<Vec<(usize, Result<Vec<ScoreSeries>, CliError>)>> = Vec::new();
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for w in 0..threads {
                let entries = &entries;
                let models = &models;
                let feature = &feature;
                let digests = &digests;
                handles.push(scope.spawn(move || {
                    let mut local = Vec::new();
                    for i in (w..entries.len()).step_by(threads) {
                        let r =
                            score_episode(cfg, models, feature, digests, out, entries[i], i);
                        local.push((i, r));
                    }
                    local
                }));
            }
            for h in handles {
                chunks.push(h.join().expect("scoring worker panicked"));
            }
        });
        for (i, r) in chunks.into_iter().flatten() {
            per_episode[i] = Some(r);
        }
    }

    let mut series = Vec::new();
    for slot in per_episode {
        series.extend(slot.expect("every episode was scored")?);
    }
    let csv = scores_csv(out);
    fs::create_dir_all(csv.parent().expect("scores path has a parent"))?;
    write_scores(&csv, &scores_sidecar(out), &series, &manifest_digest)?;
    Ok(series.len())
}

/// Compute the measured applicability matrix and persist it as JSON plus a
/// rendered table.
pub fn cmd_evaluate(cfg: &PipelineConfig, out: &Path) -> Result<EvalReport, CliError> {
    let (manifest, _) = load_manifest(out)?;
    let csv = scores_csv(out);
    if !csv.exists() {
        return Err(CliError::Validation(format!(
            "no scores at {}; run score first",
            csv.display()
        )));
    }
    let (series, sidecar) = read_scores(&csv, &scores_sidecar(out))?;
    let eval_cfg = EvalConfig {
        n_boot: cfg.eval.n_boot,
        confidence: cfg.eval.confidence,
        seed: cfg.eval.seed,
    };
    let report = evaluate(
        &data_dir(out),
        &manifest,
        &series,
        &sidecar.manifest_digest,
        &eval_cfg,
    )?;
    let json_path = report_json(out);
    fs::create_dir_all(json_path.parent().expect("report path has a parent"))?;
    let mut bytes = serde_json::to_vec_pretty(&report).expect("report serializes");
    bytes.push(b'\n');
    fs::write(&json_path, bytes)?;
    fs::write(report_txt(out), render_report(&report))?;
    Ok(report)
}

/// Render a previously computed report.
pub fn cmd_report(out: &Path) -> Result<String, CliError> {
    let path = report_json(out);
    if !path.exists() {
        return Err(CliError::Validation(format!(
            "no report at {}; run evaluate first",
            path.display()
        )));
    }
    let report: EvalReport = serde_json::from_slice(&fs::read(&path)?)
        .map_err(|e| CliError::Runtime(format!("malformed report {}: {e}", path.display())))?;
    Ok(render_report(&report))
}

/// Roll out predicted futures for one episode and write the probability
/// grids to a container for inspection.
///
/// The model filters frames `0..=start`, then predicts `horizon` frames
/// under the episode's recorded actions with `futures` sampled futures.
pub fn cmd_rollout(
    cfg: &PipelineConfig,
    out: &Path,
    episode_id: &str,
    start: usize,
    horizon: usize,
    futures: usize,
) -> Result<PathBuf, CliError> {
    let (manifest, _) = load_manifest(out)?;
    let entry = manifest
        .entries
        .iter()
        .find(|e| e.id == episode_id)
        .ok_or_else(|| {
            CliError::Validation(format!("no episode {episode_id} in the manifest"))
        })?;
    let (rec, world_cfg, _) = read_episode(&entry_path(&data_dir(out), entry))?;
    if horizon == 0 || futures == 0 {
        return Err(CliError::Validation(
            "horizon and futures must be positive".into(),
        ));
    }
    if start + horizon >= rec.len() {
        return Err(CliError::Validation(format!(
            "start {start} + horizon {horizon} exceeds episode length {}",
            rec.len()
        )));
    }
    let models = load_models(cfg, out)?;
    let model = &models[0];
    let (beliefs, _) = model.filter_sequence(
        &rec.observations[..=start],
        &rec.actions[..start],
        Noise::Zero,
    )?;
    let rollout_seed: u64 = substream(cfg.score.seed, "rollout-cmd", 0).gen();
    let sampled = model.rollout(
        beliefs.last().expect("filter returns one belief per frame"),
        &rec.actions[start..start + horizon],
        futures,
        Noise::Seeded(rollout_seed),
    )?;

    let meta = serde_json::json!({
        "kind": "rollout",
        "episode_id": episode_id,
        "start": start,
        "horizon": horizon,
        "futures": futures,
        "episode_digest": entry.digest,
    });
    let mut c = Container::new(meta);
    let (ch, g) = (world_cfg.channels, world_cfg.grid_size);
    for (k, future) in sampled.iter().enumerate() {
        let mut data = Vec::with_capacity(horizon * ch * g * g);
        for p in &future.probs {
            data.extend(p.data.iter().map(|&v| v as f32));
        }
        c.blocks.push(TensorBlock::f32(
            format!("future{k}"),
            vec![horizon, ch, g, g],
            data,
        ));
    }
    let dir = out.join("rollout");
    fs::create_dir_all(&dir)?;
    let path = dir.join(format!("{episode_id}_t{start}.wmad"));
    c.write_to(&path).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(path)
}
