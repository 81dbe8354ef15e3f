//! Checkpoints: `u.snap`, `d.snap` and a `meta.json` record in one directory.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coeffs::LeslieCoefficients;
use crate::error::{Error, Result};
use crate::physics::FieldState;
use crate::spectral::{snapshot, SpectralGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub time: f64,
    pub step: usize,
    pub config_hash: String,
}

pub fn write_checkpoint(dir: &Path, state: &FieldState, step: usize, config_hash: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    snapshot::save(&dir.join("u.snap"), &state.u, state.time)?;
    snapshot::save(&dir.join("d.snap"), &state.d, state.time)?;
    let meta = CheckpointMeta { time: state.time, step, config_hash: config_hash.to_string() };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(dir.join("meta.json"), text)?;
    Ok(())
}

pub fn read_checkpoint(dir: &Path, grid: &Arc<SpectralGrid>, coeffs: LeslieCoefficients) -> Result<(FieldState, CheckpointMeta)> {
    let text = std::fs::read_to_string(dir.join("meta.json"))?;
    let meta: CheckpointMeta =
        serde_json::from_str(&text).map_err(|e| Error::Snapshot(format!("checkpoint metadata: {e}")))?;
    let (u, tu) = snapshot::load(&dir.join("u.snap"), grid)?;
    let (d, td) = snapshot::load(&dir.join("d.snap"), grid)?;
    if tu != meta.time || td != meta.time {
        return Err(Error::Snapshot("checkpoint times disagree".into()));
    }
    Ok((FieldState::new(meta.time, u, d, coeffs)?, meta))
}
