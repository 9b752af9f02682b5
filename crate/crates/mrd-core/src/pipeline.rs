//! Semantic-detection fusion, top-K crop selection, spatial layout, and the
//! end-to-end retrieval pipeline.
//!
//! The fused map is the convex combination `(1 - w) * semantic + w * detection`.
//! The K highest cells are selected with deterministic row-major tie-breaking,
//! then compacted into a layout grid that preserves the relative row/column
//! order of the chosen cells.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::detect::{detection_map, extract_objects, plan_windows, ObjectSet, WindowPlan};
use crate::error::{EngineError, EngineResult};
use crate::grid::{build_grid, ImageDims, PatchGrid, PatchIndex};
use crate::map::{round_sig7, ScoreMap};
use crate::providers::{DetectorProvider, EmbeddingProvider, ObjectExtractorProvider};
use crate::semantic::{multi_resolution_map, Query};

/// Weights and limits for fusion and retrieval.
///
/// `max_steps` and `answer_tau` are carried for downstream-search
/// compatibility and serialized with the config, but nothing in this engine
/// evaluates them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub weight_w: f64,
    pub top_k: usize,
    pub max_steps: usize,
    pub answer_tau: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            weight_w: 0.4,
            top_k: 16,
            max_steps: 200,
            answer_tau: 0.6,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> EngineResult<()> {
        if !(0.0..=1.0).contains(&self.weight_w) || !self.weight_w.is_finite() {
            return Err(EngineError::invalid(format!(
                "weight_w {} outside [0, 1]",
                self.weight_w
            )));
        }
        if self.top_k < 1 {
            return Err(EngineError::invalid("top_k must be >= 1"));
        }
        if self.max_steps < 1 {
            return Err(EngineError::invalid("max_steps must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.answer_tau) || !self.answer_tau.is_finite() {
            return Err(EngineError::invalid(format!(
                "answer_tau {} outside [0, 1]",
                self.answer_tau
            )));
        }
        Ok(())
    }
}

/// Everything the pipeline needs besides the query, image and providers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub crop_px: u32,
    pub ratio_k: u32,
    pub window_px: (u32, u32),
    pub stride_px: (u32, u32),
    pub tau_det: f64,
    pub fusion: FusionConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> EngineResult<()> {
        if self.crop_px == 0 {
            return Err(EngineError::invalid("crop_px must be >= 1"));
        }
        if self.ratio_k < 2 {
            return Err(EngineError::invalid("ratio_k must be >= 2"));
        }
        if self.window_px.0 == 0 || self.window_px.1 == 0 {
            return Err(EngineError::invalid("window_px must be positive"));
        }
        if self.stride_px.0 == 0 || self.stride_px.1 == 0 {
            return Err(EngineError::invalid("stride_px must be positive"));
        }
        if !(0.0..=1.0).contains(&self.tau_det) || !self.tau_det.is_finite() {
            return Err(EngineError::invalid(format!(
                "tau_det {} outside [0, 1]",
                self.tau_det
            )));
        }
        self.fusion.validate()
    }
}

/// One selected cell with its fused score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPatch {
    pub index: PatchIndex,
    pub score: f64,
}

/// Compacted arrangement of selected cells.
///
/// Distinct source rows are ranked ascending into layout rows, likewise for
/// columns; unoccupied layout cells are explicit holes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutGrid {
    pub rows: usize,
    pub cols: usize,
    pub cells: BTreeMap<(usize, usize), PatchIndex>,
}

/// Output of the retrieval pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    /// Selected cells, fused score descending (row-major on ties).
    pub selected: Vec<ScoredPatch>,
    pub fused_map: ScoreMap,
    pub layout: LayoutGrid,
}

/// Convex combination `(1 - w) * semantic + w * detection`, elementwise.
pub fn fuse_maps(semantic: &ScoreMap, detection: &ScoreMap, weight_w: f64) -> EngineResult<ScoreMap> {
    if !semantic.same_dims(detection) {
        return Err(EngineError::invalid(format!(
            "map dimension mismatch: {}x{} vs {}x{}",
            semantic.grid_h(),
            semantic.grid_w(),
            detection.grid_h(),
            detection.grid_w()
        )));
    }
    if !(0.0..=1.0).contains(&weight_w) || !weight_w.is_finite() {
        return Err(EngineError::invalid(format!(
            "weight_w {weight_w} outside [0, 1]"
        )));
    }
    let (h, w) = semantic.dims();
    let mut out = ScoreMap::zeros(h, w);
    for row in 0..h {
        for col in 0..w {
            out.set(
                row,
                col,
                (1.0 - weight_w) * semantic.get(row, col) + weight_w * detection.get(row, col),
            );
        }
    }
    Ok(out)
}

/// The `top_k` highest-scoring cells, score descending; exact ties resolve in
/// row-major order. Returns all cells when `top_k` exceeds the cell count.
pub fn select_top_k(fused: &ScoreMap, top_k: usize) -> Vec<ScoredPatch> {
    let mut cells: Vec<ScoredPatch> = fused
        .iter_cells()
        .map(|(index, score)| ScoredPatch { index, score })
        .collect();
    cells.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.index.cmp(&b.index))
    });
    cells.truncate(top_k);
    cells
}

/// Compacts selected cells into a [`LayoutGrid`].
///
/// Each cell lands at (rank of its source row, rank of its source column);
/// relative ordering of rows and columns is preserved by construction.
pub fn spatial_layout(selected: &[PatchIndex]) -> EngineResult<LayoutGrid> {
    let mut seen = std::collections::BTreeSet::new();
    for idx in selected {
        if !seen.insert(*idx) {
            return Err(EngineError::invalid(format!(
                "duplicate patch index ({}, {})",
                idx.row, idx.col
            )));
        }
    }
    let rows: Vec<usize> = {
        let mut r: Vec<usize> = selected.iter().map(|i| i.row).collect();
        r.sort_unstable();
        r.dedup();
        r
    };
    let cols: Vec<usize> = {
        let mut c: Vec<usize> = selected.iter().map(|i| i.col).collect();
        c.sort_unstable();
        c.dedup();
        c
    };
    let mut cells = BTreeMap::new();
    for idx in selected {
        let lr = rows.binary_search(&idx.row).expect("row present");
        let lc = cols.binary_search(&idx.col).expect("col present");
        cells.insert((lr, lc), *idx);
    }
    Ok(LayoutGrid {
        rows: rows.len(),
        cols: cols.len(),
        cells,
    })
}

/// Provider bundle for a pipeline run.
pub struct PipelineProviders<'a> {
    pub embedder: &'a dyn EmbeddingProvider,
    pub detector: &'a dyn DetectorProvider,
    pub extractor: &'a dyn ObjectExtractorProvider,
}

/// All intermediate products of a pipeline run, for map dumps and
/// harness-side scoring.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub grid: PatchGrid,
    pub objects: ObjectSet,
    pub plan: WindowPlan,
    pub semantic_map: ScoreMap,
    pub detection_map: ScoreMap,
    pub result: RetrievalResult,
}

/// Runs the full pipeline: grid, object extraction, the semantic and
/// detection branches (in parallel), fusion, selection, layout.
///
/// Deterministic for deterministic providers: the same query, image
/// dimensions and config always produce the identical result.
pub fn run_pipeline(
    query: &Query,
    dims: ImageDims,
    config: &PipelineConfig,
    providers: &PipelineProviders<'_>,
) -> EngineResult<PipelineRun> {
    config.validate()?;
    let grid = build_grid(dims, config.crop_px, config.ratio_k).map_err(|e| e.at_stage("grid"))?;
    let objects =
        extract_objects(query, providers.extractor).map_err(|e| e.at_stage("extract"))?;
    let plan =
        plan_windows(&grid, config.window_px, config.stride_px).map_err(|e| e.at_stage("plan"))?;

    let (semantic_res, detection_res) = rayon::join(
        || multi_resolution_map(query, &grid, providers.embedder),
        || detection_map(&grid, &plan, &objects, providers.detector, config.tau_det),
    );
    let semantic_map = semantic_res.map_err(|e| e.at_stage("semantic"))?;
    let det_map = detection_res.map_err(|e| e.at_stage("detect"))?;

    let fused = fuse_maps(&semantic_map, &det_map, config.fusion.weight_w)
        .map_err(|e| e.at_stage("fuse"))?;
    let selected = select_top_k(&fused, config.fusion.top_k);
    let indices: Vec<PatchIndex> = selected.iter().map(|s| s.index).collect();
    let layout = spatial_layout(&indices).map_err(|e| e.at_stage("layout"))?;

    Ok(PipelineRun {
        grid,
        objects,
        plan,
        semantic_map,
        detection_map: det_map,
        result: RetrievalResult {
            selected,
            fused_map: fused,
            layout,
        },
    })
}

// ---------------------------------------------------------------------------
// Canonical JSON document
// ---------------------------------------------------------------------------

/// `f64` that serializes rounded to 7 significant digits.
#[derive(Debug, Clone, Copy)]
pub struct JsonF64(pub f64);

impl Serialize for JsonF64 {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(round_sig7(self.0))
    }
}

#[derive(Serialize)]
struct GridDoc {
    h: usize,
    w: usize,
    crop_px: u32,
    k: u32,
}

#[derive(Serialize)]
struct SelectedDoc {
    row: usize,
    col: usize,
    score: JsonF64,
}

#[derive(Serialize)]
struct LayoutCellDoc {
    lr: usize,
    lc: usize,
    row: usize,
    col: usize,
}

#[derive(Serialize)]
struct LayoutDoc {
    rows: usize,
    cols: usize,
    cells: Vec<LayoutCellDoc>,
}

#[derive(Serialize)]
struct ResultDoc {
    grid: GridDoc,
    fused_map: Vec<JsonF64>,
    selected: Vec<SelectedDoc>,
    layout: LayoutDoc,
}

/// Serializes a retrieval result to its canonical JSON document: fixed key
/// order, floats at 7 significant digits.
pub fn result_to_json(grid: &PatchGrid, result: &RetrievalResult) -> String {
    let doc = ResultDoc {
        grid: GridDoc {
            h: grid.grid_h,
            w: grid.grid_w,
            crop_px: grid.crop_px,
            k: grid.ratio_k,
        },
        fused_map: result.fused_map.values().iter().map(|v| JsonF64(*v)).collect(),
        selected: result
            .selected
            .iter()
            .map(|s| SelectedDoc {
                row: s.index.row,
                col: s.index.col,
                score: JsonF64(s.score),
            })
            .collect(),
        layout: LayoutDoc {
            rows: result.layout.rows,
            cols: result.layout.cols,
            cells: result
                .layout
                .cells
                .iter()
                .map(|((lr, lc), idx)| LayoutCellDoc {
                    lr: *lr,
                    lc: *lc,
                    row: idx.row,
                    col: idx.col,
                })
                .collect(),
        },
    };
    serde_json::to_string(&doc).expect("result document serializes")
}
