//! Versioned model checkpoints.
//!
//! JSON with a version header; floats survive the round trip bit-exactly
//! because serialization uses shortest-round-trip formatting. Grids are
//! stored verbatim so a Sobol model reloads its exact centers.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use clkan::grid::Grid;
use clkan::network::{Model, ModelConfig};
use clkan::norm::RunningStats;

pub const CHECKPOINT_VERSION: &str = "clkan-checkpoint-v1";

#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: String,
    pub config: ModelConfig,
    pub grids: Vec<Grid>,
    pub params: Vec<f64>,
    pub stats: Vec<RunningStats>,
}

pub fn save(model: &Model, path: &Path) -> Result<()> {
    let ckpt = Checkpoint {
        version: CHECKPOINT_VERSION.to_string(),
        config: model.config().clone(),
        grids: model.grids().to_vec(),
        params: model.params().to_vec(),
        stats: model.stats().to_vec(),
    };
    let json = serde_json::to_string(&ckpt)?;
    crate::runner::write_atomic(path, json.as_bytes())
        .with_context(|| format!("writing checkpoint {}", path.display()))
}

pub fn load(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading checkpoint {}", path.display()))?;
    let ckpt: Checkpoint = serde_json::from_str(&text)
        .with_context(|| format!("parsing checkpoint {}", path.display()))?;
    if ckpt.version != CHECKPOINT_VERSION {
        bail!(
            "checkpoint {} has version `{}`, expected `{CHECKPOINT_VERSION}`",
            path.display(),
            ckpt.version
        );
    }
    Ok(Model::from_parts(
        ckpt.config,
        ckpt.grids,
        ckpt.params,
        ckpt.stats,
    )?)
}
