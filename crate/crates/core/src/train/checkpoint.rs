//! Model checkpoints: all named parameters as f32 blocks in a WMAD container
//! plus a JSON metadata section.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::container::{Container, TensorBlock};
use crate::numgrad::ParamSet;
use crate::tensor::Tensor;
use crate::wm::{ModelConfig, WorldModel};

use super::TrainError;

const PARAM_PREFIX: &str = "param.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub model: ModelConfig,
    pub train_config_digest: Option<String>,
    pub manifest_digest: Option<String>,
}

pub fn save_checkpoint(
    model: &WorldModel,
    meta: &CheckpointMeta,
    path: &Path,
) -> Result<(), TrainError> {
    let meta_json = serde_json::json!({
        "kind": "checkpoint",
        "model": meta.model,
        "train_config_digest": meta.train_config_digest,
        "manifest_digest": meta.manifest_digest,
    });
    let mut c = Container::new(meta_json);
    for (name, t) in model.params().iter() {
        c.blocks.push(TensorBlock::f32(
            format!("{PARAM_PREFIX}{name}"),
            t.shape().to_vec(),
            t.data().iter().map(|&v| v as f32).collect(),
        ));
    }
    c.write_to(path)?;
    Ok(())
}

/// Load a checkpoint. When `expect` is given, its hyperparameters must match
/// the stored ones exactly.
pub fn load_checkpoint(
    path: &Path,
    expect: Option<&ModelConfig>,
) -> Result<(WorldModel, CheckpointMeta), TrainError> {
    let c = Container::read_from(path)?;
    let model_cfg: ModelConfig = serde_json::from_value(c.meta["model"].clone())
        .map_err(|e| TrainError::Config(format!("checkpoint metadata: {e}")))?;
    if let Some(want) = expect {
        if *want != model_cfg {
            return Err(TrainError::ConfigConflict(format!(
                "checkpoint was trained with {model_cfg:?} but {want:?} was requested"
            )));
        }
    }
    let meta = CheckpointMeta {
        model: model_cfg.clone(),
        train_config_digest: c.meta["train_config_digest"].as_str().map(String::from),
        manifest_digest: c.meta["manifest_digest"].as_str().map(String::from),
    };
    let mut params = ParamSet::new();
    for b in &c.blocks {
        let Some(name) = b.name.strip_prefix(PARAM_PREFIX) else {
            continue;
        };
        let data = b.data.as_f32().ok_or_else(|| {
            TrainError::Config(format!("checkpoint block {} is not f32", b.name))
        })?;
        let t = Tensor::new(b.dims.clone(), data.iter().map(|&v| v as f64).collect())
            .map_err(|e| TrainError::Config(format!("checkpoint block {}: {e}", b.name)))?;
        params.insert(name.to_string(), t);
    }
    let model = WorldModel::from_parts(model_cfg, params)
        .map_err(|e| TrainError::Config(format!("checkpoint parameters: {e}")))?;
    Ok((model, meta))
}
