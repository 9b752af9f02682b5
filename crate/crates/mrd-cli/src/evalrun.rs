//! Synthetic-scene evaluation: runs the pipeline variants over a scene
//! battery and scores recall/precision of the planted target cells.
//!
//! Relevance is label-driven: the query's extracted objects select which
//! planted rectangles are "true" targets; everything else planted in the
//! scene acts as a semantic distractor.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use mrd_core::{
    build_grid, detection_map, extract_objects, fuse_maps, multi_resolution_map, plan_windows,
    select_top_k, similarity_map, synthetic_detector, synthetic_embedder, HeuristicExtractor,
    Lattice, PatchIndex, Query, ScoreMap,
};

use crate::config::RunConfig;
use crate::scene::EvalScene;
use crate::CliError;

/// Pipeline variants the harness can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalMethod {
    /// Low-resolution similarity map only.
    #[serde(rename = "low_only")]
    LowOnly,
    /// Multi-resolution consistency fusion, no detection.
    #[serde(rename = "multires")]
    MultiRes,
    /// Multi-resolution fusion plus the detection confidence map.
    #[serde(rename = "multires+ovd")]
    MultiResOvd,
}

pub const ALL_METHODS: [EvalMethod; 3] =
    [EvalMethod::LowOnly, EvalMethod::MultiRes, EvalMethod::MultiResOvd];

impl EvalMethod {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "low_only" => Ok(EvalMethod::LowOnly),
            "multires" => Ok(EvalMethod::MultiRes),
            "multires+ovd" => Ok(EvalMethod::MultiResOvd),
            other => Err(CliError::Config(format!(
                "unknown method `{other}` (expected low_only, multires, multires+ovd)"
            ))),
        }
    }
}

impl fmt::Display for EvalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMethod::LowOnly => "low_only",
            EvalMethod::MultiRes => "multires",
            EvalMethod::MultiResOvd => "multires+ovd",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub scene_id: String,
    pub method: EvalMethod,
    pub recall_at_k: f64,
    pub precision_at_k: f64,
    pub target_fragmented: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodAggregate {
    pub method: EvalMethod,
    pub mean_recall_at_k: f64,
    pub mean_precision_at_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFailure {
    pub scene_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenes: Vec<SceneRecord>,
    pub aggregates: Vec<MethodAggregate>,
    pub errors: Vec<SceneFailure>,
}

impl EvalReport {
    pub fn mean_recall(&self, method: EvalMethod) -> Option<f64> {
        self.aggregates
            .iter()
            .find(|a| a.method == method)
            .map(|a| a.mean_recall_at_k)
    }

    pub fn record(&self, scene_id: &str, method: EvalMethod) -> Option<&SceneRecord> {
        self.scenes
            .iter()
            .find(|r| r.scene_id == scene_id && r.method == method)
    }
}

/// Scores one scene under one method. Returns `(selected, relevant)` cells.
fn run_method(
    scene: &EvalScene,
    method: EvalMethod,
    config: &RunConfig,
) -> Result<(Vec<PatchIndex>, BTreeSet<PatchIndex>, bool), CliError> {
    let spec = &scene.scene;
    let crop = config.crop_px;
    let query = Query::new(scene.query.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    let dims = spec.image_dims(crop).map_err(|e| CliError::Config(e.to_string()))?;
    let grid = build_grid(dims, crop, config.ratio_k).map_err(|e| CliError::Config(e.to_string()))?;
    let embedder =
        synthetic_embedder(spec.clone(), crop).map_err(|e| CliError::Config(e.to_string()))?;

    let objects =
        extract_objects(&query, &HeuristicExtractor).map_err(|e| CliError::Other(e.to_string()))?;
    let mut relevant: BTreeSet<PatchIndex> = BTreeSet::new();
    let mut fragmented = false;
    for target in &spec.targets {
        if !objects.contains(&target.label.to_lowercase()) {
            continue;
        }
        let (rows, cols) = target.rect.span();
        if rows > 1 || cols > 1 {
            fragmented = true;
        }
        for row in target.rect.y0..target.rect.y1 {
            for col in target.rect.x0..target.rect.x1 {
                relevant.insert(PatchIndex::new(row as usize, col as usize));
            }
        }
    }
    if relevant.is_empty() {
        return Err(CliError::Config(format!(
            "query `{}` matches no planted target label",
            scene.query
        )));
    }

    let map: ScoreMap = match method {
        EvalMethod::LowOnly => similarity_map(&query, &grid, Lattice::Low, &embedder)
            .map_err(|e| CliError::Other(e.to_string()))?,
        EvalMethod::MultiRes => multi_resolution_map(&query, &grid, &embedder)
            .map_err(|e| CliError::Other(e.to_string()))?,
        EvalMethod::MultiResOvd => {
            let semantic = multi_resolution_map(&query, &grid, &embedder)
                .map_err(|e| CliError::Other(e.to_string()))?;
            let detector = synthetic_detector(spec.clone(), crop)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let plan = plan_windows(
                &grid,
                (config.window_px, config.window_px),
                (config.stride_px, config.stride_px),
            )
            .map_err(|e| CliError::Other(e.to_string()))?;
            let det = detection_map(&grid, &plan, &objects, &detector, config.tau_det)
                .map_err(|e| CliError::Other(e.to_string()))?;
            fuse_maps(&semantic, &det, config.weight_w)
                .map_err(|e| CliError::Other(e.to_string()))?
        }
    };
    let selected = select_top_k(&map, config.top_k)
        .into_iter()
        .map(|s| s.index)
        .collect();
    Ok((selected, relevant, fragmented))
}

/// Recall@K and precision@K of the selected cells against the relevant set.
fn score(selected: &[PatchIndex], relevant: &BTreeSet<PatchIndex>) -> (f64, f64) {
    let hits = selected.iter().filter(|i| relevant.contains(i)).count();
    let recall = hits as f64 / relevant.len() as f64;
    let precision = if selected.is_empty() {
        0.0
    } else {
        hits as f64 / selected.len() as f64
    };
    (recall, precision)
}

/// Runs every method over every scene, deterministically ordered by
/// `scene_id`. Per-scene failures are recorded and do not stop the run.
pub fn evaluate_scenes(
    scenes: Vec<(String, Result<EvalScene, CliError>)>,
    methods: &[EvalMethod],
    config: &RunConfig,
) -> EvalReport {
    let mut loaded: Vec<EvalScene> = Vec::new();
    let mut errors: Vec<SceneFailure> = Vec::new();
    for (name, result) in scenes {
        match result {
            Ok(scene) => loaded.push(scene),
            Err(e) => errors.push(SceneFailure {
                scene_id: name,
                error: e.to_string(),
            }),
        }
    }
    loaded.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));

    let mut records = Vec::new();
    for scene in &loaded {
        for method in methods {
            match run_method(scene, *method, config) {
                Ok((selected, relevant, fragmented)) => {
                    let (recall, precision) = score(&selected, &relevant);
                    records.push(SceneRecord {
                        scene_id: scene.scene_id.clone(),
                        method: *method,
                        recall_at_k: recall,
                        precision_at_k: precision,
                        target_fragmented: fragmented,
                    });
                }
                Err(e) => errors.push(SceneFailure {
                    scene_id: scene.scene_id.clone(),
                    error: format!("{method}: {e}"),
                }),
            }
        }
    }

    let aggregates = methods
        .iter()
        .map(|method| {
            let rows: Vec<&SceneRecord> =
                records.iter().filter(|r| r.method == *method).collect();
            let n = rows.len().max(1) as f64;
            MethodAggregate {
                method: *method,
                mean_recall_at_k: rows.iter().map(|r| r.recall_at_k).sum::<f64>() / n,
                mean_precision_at_k: rows.iter().map(|r| r.precision_at_k).sum::<f64>() / n,
            }
        })
        .collect();

    EvalReport {
        scenes: records,
        aggregates,
        errors,
    }
}

/// Plain-text aggregate table.
pub fn report_table(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>14} {:>17}\n",
        "method", "mean recall@K", "mean precision@K"
    ));
    for agg in &report.aggregates {
        out.push_str(&format!(
            "{:<14} {:>14.4} {:>17.4}\n",
            agg.method.to_string(),
            agg.mean_recall_at_k,
            agg.mean_precision_at_k
        ));
    }
    if !report.errors.is_empty() {
        out.push_str(&format!("{} scene(s) failed\n", report.errors.len()));
    }
    out
}
