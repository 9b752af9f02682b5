//! Map files: `{"grid_h": H, "grid_w": W, "values": [row-major floats]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use mrd_core::pipeline::JsonF64;
use mrd_core::ScoreMap;

use crate::CliError;

#[derive(Serialize)]
struct MapDocOut {
    grid_h: usize,
    grid_w: usize,
    values: Vec<JsonF64>,
}

#[derive(Deserialize)]
pub struct MapDoc {
    pub grid_h: usize,
    pub grid_w: usize,
    pub values: Vec<f64>,
}

/// Serializes a map with fixed key order and 7-significant-digit floats.
pub fn map_to_json(map: &ScoreMap) -> String {
    let doc = MapDocOut {
        grid_h: map.grid_h(),
        grid_w: map.grid_w(),
        values: map.values().iter().map(|v| JsonF64(*v)).collect(),
    };
    serde_json::to_string(&doc).expect("map document serializes")
}

pub fn write_map(path: &Path, map: &ScoreMap) -> Result<(), CliError> {
    std::fs::write(path, map_to_json(map) + "\n")
        .map_err(|e| CliError::Other(format!("writing {}: {e}", path.display())))
}

/// Reads a map document. Malformed content is a config error (exit code 4).
pub fn read_map_doc(path: &Path) -> Result<MapDoc, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    let doc: MapDoc = serde_json::from_str(&raw)
        .map_err(|e| CliError::Config(format!("parsing {}: {e}", path.display())))?;
    if doc.values.len() != doc.grid_h * doc.grid_w {
        return Err(CliError::Config(format!(
            "map {} declares {}x{} but holds {} values",
            path.display(),
            doc.grid_h,
            doc.grid_w,
            doc.values.len()
        )));
    }
    Ok(doc)
}
