//! Evaluation scene files: a synthetic scene plus the query asked about it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use mrd_core::SyntheticSceneSpec;

use crate::CliError;

/// One harness scene: the planted-geometry spec and the query whose extracted
/// objects identify which planted rectangles count as relevant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalScene {
    pub scene_id: String,
    pub query: String,
    pub scene: SyntheticSceneSpec,
}

pub fn load_scene(path: &Path) -> Result<EvalScene, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    let scene: EvalScene = serde_json::from_str(&raw)
        .map_err(|e| CliError::Config(format!("parsing {}: {e}", path.display())))?;
    scene
        .scene
        .validate()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(scene)
}

/// A scene file's stem paired with its parse outcome.
pub type LoadedScene = (String, Result<EvalScene, CliError>);

/// Loads every `*.json` scene in a directory. Parse failures are returned
/// per file so the caller can record them and continue.
pub fn load_scene_dir(dir: &Path) -> Result<Vec<LoadedScene>, CliError> {
    let mut entries: Vec<std::path::PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", dir.display())))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    entries.sort();
    Ok(entries
        .into_iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            (name, load_scene(&p))
        })
        .collect())
}
