//! Dataset construction: episode files, the manifest, and the
//! train/eval attribute-disjointness check.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::episode::generate_episode_with;
use super::inject::{inject_anomaly, DomainAttribute, InjectionDescriptor, TrainAttributes};
use super::types::{
    hex_digest, Action, ActorState, EpisodeRecord, FrameLabel, Level, Observation, WorldConfig,
};
use super::SimError;
use crate::container::{Container, TensorBlock};
use crate::rng::substream;

/// How many episodes to generate per split, plus the attribute pools the
/// training split draws from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub base: WorldConfig,
    pub train: TrainAttributes,
    /// Normal training episodes.
    pub n_train: usize,
    /// Normal evaluation episodes (pure negatives).
    pub n_eval_normal: usize,
    /// Anomalous evaluation episodes per corner-case level.
    pub n_eval_per_level: usize,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            base: WorldConfig::default(),
            train: TrainAttributes::defaults(),
            n_train: 40,
            n_eval_normal: 4,
            n_eval_per_level: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Path relative to the manifest's directory.
    pub path: String,
    pub seed: u64,
    pub split: Split,
    pub cfg_digest: String,
    pub level: Option<Level>,
    pub injection: Option<InjectionDescriptor>,
    /// SHA-256 of the episode file bytes.
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub train_attributes: TrainAttributes,
    /// Meaning of the `label_level` byte values in episode files.
    pub label_legend: BTreeMap<u8, String>,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn entries_for(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn load(path: &Path) -> Result<DatasetManifest, SimError> {
        let bytes = fs::read(path)?;
        serde_json::from_slice(&bytes)
            .map_err(|e| SimError::Dataset(format!("malformed manifest {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), SimError> {
        let mut bytes = serde_json::to_vec_pretty(self)
            .map_err(|e| SimError::Dataset(format!("manifest serialization: {e}")))?;
        bytes.push(b'\n');
        fs::write(path, bytes)?;
        Ok(())
    }
}

fn label_legend() -> BTreeMap<u8, String> {
    let mut m = BTreeMap::new();
    m.insert(0, "normal".to_string());
    for l in Level::ALL {
        m.insert(l.tag(), l.name().to_string());
    }
    m
}

/// Serialize one episode into a WMAD container.
///
/// Blocks: `obs` f32 [L,C,G,G], `act` f32 [L-1,2], `actor` f32 [L,9],
/// `label_level` u8 [L], and `label_mask` u8 [L,G,G] when any frame carries a
/// cell mask. Observations survive the f32 round trip bit-exactly; actions
/// and actor states are rounded to f32 on disk.
pub fn episode_container(
    record: &EpisodeRecord,
    cfg: &WorldConfig,
    injection: Option<&InjectionDescriptor>,
) -> Container {
    let len = record.len();
    let (c, g) = (cfg.channels, cfg.grid_size);
    let meta = serde_json::json!({
        "kind": "episode",
        "seed": record.seed,
        "cfg": cfg,
        "cfg_digest": record.cfg_digest,
        "injection": injection,
    });
    let mut out = Container::new(meta);

    let mut obs = Vec::with_capacity(len * c * g * g);
    for o in &record.observations {
        obs.extend(o.data.iter().map(|&v| v as f32));
    }
    out.blocks.push(TensorBlock::f32("obs", vec![len, c, g, g], obs));

    let mut act = Vec::with_capacity((len - 1) * 2);
    for a in &record.actions {
        act.push(a.acc as f32);
        act.push(a.steering as f32);
    }
    out.blocks.push(TensorBlock::f32("act", vec![len - 1, 2], act));

    let mut actor = Vec::with_capacity(len * 9);
    for s in &record.actor_states {
        actor.extend(s.to_array().iter().map(|&v| v as f32));
    }
    out.blocks.push(TensorBlock::f32("actor", vec![len, 9], actor));

    let levels: Vec<u8> = record
        .labels
        .iter()
        .map(|l| l.level.map(|lv| lv.tag()).unwrap_or(0))
        .collect();
    out.blocks.push(TensorBlock::u8("label_level", vec![len], levels));

    if record.labels.iter().any(|l| l.mask.is_some()) {
        let mut mask = vec![0u8; len * g * g];
        for (t, l) in record.labels.iter().enumerate() {
            if let Some(m) = &l.mask {
                for (i, &b) in m.iter().enumerate() {
                    mask[t * g * g + i] = b as u8;
                }
            }
        }
        out.blocks.push(TensorBlock::u8("label_mask", vec![len, g, g], mask));
    }
    out
}

/// Decode an episode container back into its record, configuration, and
/// injection descriptor.
pub fn decode_episode(
    c: &Container,
) -> Result<(EpisodeRecord, WorldConfig, Option<InjectionDescriptor>), SimError> {
    let cfg: WorldConfig = serde_json::from_value(c.meta["cfg"].clone())
        .map_err(|e| SimError::Dataset(format!("episode meta missing cfg: {e}")))?;
    let seed = c.meta["seed"]
        .as_u64()
        .ok_or_else(|| SimError::Dataset("episode meta missing seed".into()))?;
    let cfg_digest = c.meta["cfg_digest"]
        .as_str()
        .ok_or_else(|| SimError::Dataset("episode meta missing cfg_digest".into()))?
        .to_string();
    let injection: Option<InjectionDescriptor> =
        serde_json::from_value(c.meta["injection"].clone())
            .map_err(|e| SimError::Dataset(format!("bad injection descriptor: {e}")))?;

    let (ch, g) = (cfg.channels, cfg.grid_size);
    let obs_block = c.block("obs")?;
    let len = obs_block.dims[0];
    let obs_raw = obs_block
        .data
        .as_f32()
        .ok_or_else(|| SimError::Dataset("obs block is not f32".into()))?;
    let frame = ch * g * g;
    let observations: Vec<Observation> = (0..len)
        .map(|t| Observation {
            channels: ch,
            grid_size: g,
            data: obs_raw[t * frame..(t + 1) * frame]
                .iter()
                .map(|&v| v as f64)
                .collect(),
        })
        .collect();

    let act_raw = c
        .block("act")?
        .data
        .as_f32()
        .ok_or_else(|| SimError::Dataset("act block is not f32".into()))?;
    let actions: Vec<Action> = act_raw
        .chunks_exact(2)
        .map(|p| Action {
            acc: p[0] as f64,
            steering: p[1] as f64,
        })
        .collect();

    let actor_raw = c
        .block("actor")?
        .data
        .as_f32()
        .ok_or_else(|| SimError::Dataset("actor block is not f32".into()))?;
    let actor_states: Vec<ActorState> = actor_raw
        .chunks_exact(9)
        .map(|p| {
            let mut a = [0.0f64; 9];
            for (dst, &src) in a.iter_mut().zip(p) {
                *dst = src as f64;
            }
            ActorState::from_array(a)
        })
        .collect();

    let levels = c
        .block("label_level")?
        .data
        .as_u8()
        .ok_or_else(|| SimError::Dataset("label_level block is not u8".into()))?;
    let masks = c.block("label_mask").ok().map(|b| b.data.as_u8().unwrap());
    let labels: Vec<FrameLabel> = levels
        .iter()
        .enumerate()
        .map(|(t, &tag)| {
            let level = Level::from_tag(tag);
            let mask = match (level, masks) {
                (Some(Level::Object) | Some(Level::Scene), Some(m)) => {
                    Some(m[t * g * g..(t + 1) * g * g].iter().map(|&b| b != 0).collect())
                }
                _ => None,
            };
            FrameLabel { level, mask }
        })
        .collect();

    Ok((
        EpisodeRecord {
            observations,
            actions,
            actor_states,
            labels,
            seed,
            cfg_digest,
        },
        cfg,
        injection,
    ))
}

pub fn read_episode(
    path: &Path,
) -> Result<(EpisodeRecord, WorldConfig, Option<InjectionDescriptor>), SimError> {
    let c = Container::read_from(path)?;
    decode_episode(&c)
}

/// Verify that every injected anomaly value lies outside the training
/// attribute sets. Returns a dataset error naming the offending attribute.
pub fn check_disjoint(manifest: &DatasetManifest) -> Result<(), SimError> {
    let tr = &manifest.train_attributes;
    for e in &manifest.entries {
        let Some(desc) = &e.injection else { continue };
        let bad = |attr: &str, val: String| {
            Err(SimError::Dataset(format!(
                "entry {}: injected {attr} value {val} appears in the training attribute set",
                e.id
            )))
        };
        match desc {
            InjectionDescriptor::Domain {
                attribute,
                region,
                weather,
                time_of_day,
            } => match attribute {
                DomainAttribute::Region => {
                    let r = region.ok_or_else(|| {
                        SimError::Dataset(format!("entry {}: domain descriptor missing region", e.id))
                    })?;
                    if tr.regions.contains(&r) {
                        return bad("region", r.to_string());
                    }
                }
                DomainAttribute::Weather => {
                    let w = weather.ok_or_else(|| {
                        SimError::Dataset(format!("entry {}: domain descriptor missing weather", e.id))
                    })?;
                    if tr.weathers.contains(&w) {
                        return bad("weather", w.to_string());
                    }
                }
                DomainAttribute::TimeOfDay => {
                    let t = time_of_day.ok_or_else(|| {
                        SimError::Dataset(format!(
                            "entry {}: domain descriptor missing time_of_day",
                            e.id
                        ))
                    })?;
                    if tr.time_of_days.contains(&t) {
                        return bad("time_of_day", t.to_string());
                    }
                }
            },
            InjectionDescriptor::Object { class_id, .. } => {
                if tr.objects.contains(class_id) {
                    return bad("object class", class_id.to_string());
                }
            }
            // scene anomalies reuse allowed classes; only the placement is
            // anomalous, so there is nothing to check against the sets
            InjectionDescriptor::Scene { .. } => {}
            InjectionDescriptor::Scenario { behavior, .. } => {
                if tr.behaviors.contains(behavior) {
                    return bad("behavior", behavior.to_string());
                }
            }
        }
    }
    Ok(())
}

/// Draw a training-distribution configuration for one episode.
fn draw_config(spec: &DatasetSpec, rng: &mut impl Rng) -> Result<WorldConfig, SimError> {
    let tr = &spec.train;
    if tr.regions.is_empty() || tr.weathers.is_empty() || tr.time_of_days.is_empty() {
        return Err(SimError::Dataset(
            "training attribute sets must be non-empty".into(),
        ));
    }
    let mut cfg = spec.base.clone();
    cfg.region = tr.regions[rng.gen_range(0..tr.regions.len())];
    cfg.weather = tr.weathers[rng.gen_range(0..tr.weathers.len())];
    cfg.time_of_day = tr.time_of_days[rng.gen_range(0..tr.time_of_days.len())];
    cfg.objects = tr.objects.clone();
    cfg.actors = tr.actors.clone();
    cfg.behaviors = tr.behaviors.clone();
    Ok(cfg)
}

fn write_entry(
    root: &Path,
    rel: &str,
    id: &str,
    split: Split,
    record: &EpisodeRecord,
    cfg: &WorldConfig,
    injection: Option<&InjectionDescriptor>,
) -> Result<ManifestEntry, SimError> {
    let container = episode_container(record, cfg, injection);
    let bytes = container.to_bytes();
    let path = root.join(rel);
    fs::write(&path, &bytes)?;
    Ok(ManifestEntry {
        id: id.to_string(),
        path: rel.to_string(),
        seed: record.seed,
        split,
        cfg_digest: record.cfg_digest.clone(),
        level: injection.map(|d| d.level()),
        injection: injection.cloned(),
        digest: hex_digest(&bytes),
    })
}

/// Generate the whole dataset under `out_dir` and write `manifest.json`.
///
/// Anomalous evaluation episodes are retried with fresh seeds until the
/// injection produces at least one tagged frame.
pub fn build_dataset(spec: &DatasetSpec, out_dir: &Path) -> Result<DatasetManifest, SimError> {
    fs::create_dir_all(out_dir.join("train"))?;
    fs::create_dir_all(out_dir.join("eval"))?;
    let mut entries = Vec::new();

    for i in 0..spec.n_train {
        let mut rng = substream(spec.seed, "dataset.train", i as u64);
        let cfg = draw_config(spec, &mut rng)?;
        let ep_seed: u64 = rng.gen();
        let record = generate_episode_with(&cfg, ep_seed, None)?;
        let id = format!("train_{i:04}");
        let rel = format!("train/{id}.wmad");
        entries.push(write_entry(out_dir, &rel, &id, Split::Train, &record, &cfg, None)?);
    }

    for i in 0..spec.n_eval_normal {
        let mut rng = substream(spec.seed, "dataset.eval_normal", i as u64);
        let cfg = draw_config(spec, &mut rng)?;
        let ep_seed: u64 = rng.gen();
        let record = generate_episode_with(&cfg, ep_seed, None)?;
        let id = format!("eval_normal_{i:04}");
        let rel = format!("eval/{id}.wmad");
        entries.push(write_entry(out_dir, &rel, &id, Split::Eval, &record, &cfg, None)?);
    }

    for level in Level::ALL {
        for i in 0..spec.n_eval_per_level {
            let tag = format!("dataset.eval_{level}");
            let mut result = None;
            for attempt in 0..20u64 {
                let mut rng = substream(spec.seed, &tag, i as u64 * 100 + attempt);
                let cfg = draw_config(spec, &mut rng)?;
                let ep_seed: u64 = rng.gen();
                let (cfg2, desc) = inject_anomaly(&cfg, level, ep_seed, &spec.train)?;
                let record = generate_episode_with(&cfg2, ep_seed, Some(&desc))?;
                if record.labels.iter().any(|l| l.is_anomalous()) {
                    result = Some((record, cfg2, desc));
                    break;
                }
            }
            let (record, cfg2, desc) = result.ok_or_else(|| {
                SimError::Dataset(format!(
                    "could not realize a visible {level} anomaly after 20 attempts"
                ))
            })?;
            let id = format!("eval_{level}_{i:04}");
            let rel = format!("eval/{id}.wmad");
            entries.push(write_entry(
                out_dir,
                &rel,
                &id,
                Split::Eval,
                &record,
                &cfg2,
                Some(&desc),
            )?);
        }
    }

    let manifest = DatasetManifest {
        seed: spec.seed,
        train_attributes: spec.train.clone(),
        label_legend: label_legend(),
        entries,
    };
    check_disjoint(&manifest)?;
    manifest.save(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Resolve an entry's episode file path against the manifest directory.
pub fn entry_path(manifest_dir: &Path, entry: &ManifestEntry) -> PathBuf {
    manifest_dir.join(&entry.path)
}
