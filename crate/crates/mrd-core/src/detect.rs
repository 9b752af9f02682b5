//! Open-vocabulary detection support: query object extraction, sliding-window
//! planning, per-window confidence rasterization, and global aggregation.
//!
//! Each window is detected independently. Within a window, a patch cell takes
//! the maximum score of the filtered boxes overlapping it; across windows, a
//! global cell takes the arithmetic mean of the values assigned by every
//! window covering it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EngineError, EngineResult, ProviderResult};
use crate::grid::{PatchGrid, PixelRect};
use crate::map::ScoreMap;
use crate::providers::{DetectorProvider, ObjectExtractorProvider};
use crate::semantic::Query;

/// Deduplicated, order-preserving, nonempty set of detection target labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectSet {
    labels: Vec<String>,
}

impl ObjectSet {
    pub fn new(labels: Vec<String>) -> EngineResult<Self> {
        if labels.is_empty() {
            return Err(EngineError::invalid("object set must not be empty"));
        }
        let mut seen = Vec::new();
        for label in &labels {
            if label.is_empty() {
                return Err(EngineError::invalid("object labels must not be empty"));
            }
            if seen.contains(label) {
                return Err(EngineError::invalid(format!("duplicate label `{label}`")));
            }
            seen.push(label.clone());
        }
        Ok(ObjectSet { labels })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }
}

/// Coordinate frame of a detection box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectionFrame {
    WindowLocal,
    Global,
}

/// One detected bounding box with its confidence and label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub rect: PixelRect,
    pub score: f64,
    pub label: String,
    pub frame: DetectionFrame,
}

impl Detection {
    pub fn window_local(rect: PixelRect, score: f64, label: impl Into<String>) -> EngineResult<Self> {
        if !(0.0..=1.0).contains(&score) || !score.is_finite() {
            return Err(EngineError::invalid(format!(
                "detection score {score} outside [0, 1]"
            )));
        }
        Ok(Detection {
            rect,
            score,
            label: label.into(),
            frame: DetectionFrame::WindowLocal,
        })
    }
}

/// Ordered sliding windows covering the padded image.
///
/// Every window edge lies on the low patch lattice and the union of windows
/// covers the padded image. `window_px`/`stride_px` record the effective
/// values after lattice snapping and clamping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub windows: Vec<PixelRect>,
    pub window_px: (u32, u32),
    pub stride_px: (u32, u32),
}

impl WindowPlan {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Extracts detection targets from the query via the provider, normalizing
/// (trim, lowercase, dedup) its output.
///
/// Never returns an empty set: if the provider yields nothing usable, the
/// bundled heuristic extractor runs on the query, and as a final fallback the
/// whole trimmed query becomes the single label. Provider *failures* are
/// propagated, not masked; callers may retry with [`HeuristicExtractor`]
/// explicitly.
pub fn extract_objects(
    query: &Query,
    extractor: &dyn ObjectExtractorProvider,
) -> EngineResult<ObjectSet> {
    let raw = extractor
        .extract(query)
        .map_err(|e| EngineError::provider("object extraction", e))?;
    let labels = normalize_labels(raw);
    if !labels.is_empty() {
        return Ok(ObjectSet { labels });
    }
    let fallback = normalize_labels(HeuristicExtractor.extract(query).expect("infallible"));
    if !fallback.is_empty() {
        return Ok(ObjectSet { labels: fallback });
    }
    Ok(ObjectSet {
        labels: vec![query.text().trim().to_lowercase()],
    })
}

fn normalize_labels(raw: Vec<String>) -> Vec<String> {
    let mut labels: Vec<String> = Vec::new();
    for label in raw {
        let norm = label.trim().to_lowercase();
        if !norm.is_empty() && !labels.contains(&norm) {
            labels.push(norm);
        }
    }
    labels
}

/// Question words and other non-object tokens dropped by the heuristic
/// extractor.
const STOPWORDS: &[&str] = &[
    "a", "an", "the", "is", "are", "was", "were", "be", "being", "been", "do", "does", "did",
    "can", "could", "will", "would", "shall", "should", "may", "might", "must", "what", "which",
    "who", "whom", "whose", "where", "when", "why", "how", "many", "much", "there", "here",
    "this", "that", "these", "those", "of", "in", "on", "at", "by", "for", "with", "to", "from",
    "into", "onto", "over", "under", "above", "below", "near", "next", "beside", "behind",
    "between", "and", "or", "not", "no", "any", "some", "it", "its", "his", "her", "their",
    "our", "your", "my", "color", "colour", "shape", "size", "kind", "type", "side", "number",
    "count", "left", "right", "top", "bottom", "front", "back", "picture", "image", "photo",
    "scene", "visible", "shown", "you", "see", "tell", "me", "describe", "locate", "find",
    "identify",
];

/// Deterministic query-side object extractor: lowercases, tokenizes on
/// non-alphanumeric boundaries, and drops stopwords. Used in tests and
/// whenever no extraction endpoint is configured.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicExtractor;

impl ObjectExtractorProvider for HeuristicExtractor {
    fn extract(&self, query: &Query) -> ProviderResult<Vec<String>> {
        let lower = query.text().to_lowercase();
        Ok(lower
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty() && !STOPWORDS.contains(t))
            .map(str::to_owned)
            .collect())
    }
}

/// Plans the sliding windows for a grid.
///
/// Window and stride are snapped down to low-lattice multiples (minimum one
/// cell); a window larger than the padded image is clamped to it, and a
/// stride larger than the window is clamped to the window so coverage never
/// gaps. Windows advance row-major from (0, 0); the final window per axis is
/// shifted back so its far edge meets the padded image edge, keeping every
/// window full-sized.
pub fn plan_windows(
    grid: &PatchGrid,
    window_px: (u32, u32),
    stride_px: (u32, u32),
) -> EngineResult<WindowPlan> {
    if window_px.0 == 0 || window_px.1 == 0 {
        return Err(EngineError::invalid("window_px must be positive"));
    }
    if stride_px.0 == 0 || stride_px.1 == 0 {
        return Err(EngineError::invalid("stride_px must be positive"));
    }
    let crop = grid.crop_px;
    let snap = |v: u32| ((v / crop).max(1)) * crop;
    let padded_w = grid.padded_dims.width_px;
    let padded_h = grid.padded_dims.height_px;
    let win_w = snap(window_px.0).min(padded_w);
    let win_h = snap(window_px.1).min(padded_h);
    let stride_x = snap(stride_px.0).min(win_w);
    let stride_y = snap(stride_px.1).min(win_h);

    let xs = axis_origins(padded_w, win_w, stride_x);
    let ys = axis_origins(padded_h, win_h, stride_y);
    let mut windows = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            windows.push(PixelRect {
                x0: x,
                y0: y,
                x1: x + win_w,
                y1: y + win_h,
            });
        }
    }
    Ok(WindowPlan {
        windows,
        window_px: (win_w, win_h),
        stride_px: (stride_x, stride_y),
    })
}

/// Ascending window origins along one axis: multiples of `stride` while the
/// window fits strictly inside, then one final origin flush with the far
/// edge.
fn axis_origins(extent: u32, window: u32, stride: u32) -> Vec<u32> {
    debug_assert!(window <= extent && stride >= 1);
    let mut origins = Vec::new();
    let mut o: u64 = 0;
    loop {
        if o + u64::from(window) >= u64::from(extent) {
            origins.push(extent - window);
            break;
        }
        origins.push(o as u32);
        o += u64::from(stride);
    }
    origins
}

/// Keeps detections with `score > tau_det` (strict), preserving order.
pub fn filter_detections(dets: Vec<Detection>, tau_det: f64) -> Vec<Detection> {
    dets.into_iter().filter(|d| d.score > tau_det).collect()
}

/// How a box claims a patch cell during rasterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoxCoverageRule {
    /// Any nonempty pixel intersection between box and cell.
    #[default]
    AnyOverlap,
    /// The cell's center pixel lies inside the box.
    CenterPoint,
}

/// Rasterizes filtered window-local detections onto the window's patch cells.
///
/// A cell takes the maximum score over the boxes covering it under the
/// any-overlap rule; cells no box touches stay 0. Use
/// [`window_confidence_map_with_rule`] to rasterize by center-point
/// containment instead.
pub fn window_confidence_map(
    window: &PixelRect,
    dets: &[Detection],
    grid: &PatchGrid,
) -> EngineResult<ScoreMap> {
    window_confidence_map_with_rule(window, dets, grid, BoxCoverageRule::AnyOverlap)
}

pub fn window_confidence_map_with_rule(
    window: &PixelRect,
    dets: &[Detection],
    grid: &PatchGrid,
    rule: BoxCoverageRule,
) -> EngineResult<ScoreMap> {
    let crop = grid.crop_px;
    debug_assert!(window.width().is_multiple_of(crop) && window.height().is_multiple_of(crop));
    let cells_w = (window.width() / crop) as usize;
    let cells_h = (window.height() / crop) as usize;
    let mut map = ScoreMap::zeros(cells_h, cells_w);
    for det in dets {
        if det.frame != DetectionFrame::WindowLocal {
            return Err(EngineError::invalid(
                "window_confidence_map expects window-local detections",
            ));
        }
        if det.rect.x1 > window.width() || det.rect.y1 > window.height() {
            return Err(EngineError::invalid(format!(
                "box ({},{},{},{}) outside {}x{} window",
                det.rect.x0,
                det.rect.y0,
                det.rect.x1,
                det.rect.y1,
                window.width(),
                window.height()
            )));
        }
        let col0 = (det.rect.x0 / crop) as usize;
        let row0 = (det.rect.y0 / crop) as usize;
        let col1 = (det.rect.x1.div_ceil(crop) as usize).min(cells_w);
        let row1 = (det.rect.y1.div_ceil(crop) as usize).min(cells_h);
        for row in row0..row1 {
            for col in col0..col1 {
                let covered = match rule {
                    BoxCoverageRule::AnyOverlap => true,
                    BoxCoverageRule::CenterPoint => {
                        let cx = col as u32 * crop + crop / 2;
                        let cy = row as u32 * crop + crop / 2;
                        det.rect.contains_point(cx, cy)
                    }
                };
                if covered && det.score > map.get(row, col) {
                    map.set(row, col, det.score);
                }
            }
        }
    }
    Ok(map)
}

/// Averages per-window confidence maps into one global map.
///
/// Each global cell is the arithmetic mean of the values assigned to it by
/// every window containing it; the plan's coverage invariant guarantees at
/// least one contribution per cell.
pub fn global_confidence_map(
    plan: &WindowPlan,
    per_window: &[ScoreMap],
    grid: &PatchGrid,
) -> EngineResult<ScoreMap> {
    if per_window.len() != plan.windows.len() {
        return Err(EngineError::invalid(format!(
            "{} window maps for {} windows",
            per_window.len(),
            plan.windows.len()
        )));
    }
    let crop = grid.crop_px;
    let mut sums = vec![0.0f64; grid.grid_h * grid.grid_w];
    let mut counts = vec![0u32; grid.grid_h * grid.grid_w];
    for (window, map) in plan.windows.iter().zip(per_window) {
        let cells_w = (window.width() / crop) as usize;
        let cells_h = (window.height() / crop) as usize;
        if map.dims() != (cells_h, cells_w) {
            return Err(EngineError::invalid(format!(
                "window map is {}x{}, window covers {cells_h}x{cells_w} patches",
                map.grid_h(),
                map.grid_w()
            )));
        }
        let row_off = (window.y0 / crop) as usize;
        let col_off = (window.x0 / crop) as usize;
        for row in 0..cells_h {
            for col in 0..cells_w {
                let i = (row_off + row) * grid.grid_w + (col_off + col);
                sums[i] += map.get(row, col);
                counts[i] += 1;
            }
        }
    }
    let mut out = ScoreMap::zeros(grid.grid_h, grid.grid_w);
    for row in 0..grid.grid_h {
        for col in 0..grid.grid_w {
            let i = row * grid.grid_w + col;
            if counts[i] > 0 {
                out.set(row, col, sums[i] / f64::from(counts[i]));
            }
        }
    }
    Ok(out)
}

/// Full detection branch: detect every planned window, filter by `tau_det`,
/// rasterize, aggregate.
///
/// Windows are detected in parallel; aggregation order is fixed by the plan,
/// so the result is identical to sequential execution. Any window failure
/// aborts the whole map, tagged with the window index.
pub fn detection_map(
    grid: &PatchGrid,
    plan: &WindowPlan,
    objects: &ObjectSet,
    detector: &dyn DetectorProvider,
    tau_det: f64,
) -> EngineResult<ScoreMap> {
    if !(0.0..=1.0).contains(&tau_det) {
        return Err(EngineError::invalid(format!(
            "tau_det {tau_det} outside [0, 1]"
        )));
    }
    let per_window: Vec<ScoreMap> = plan
        .windows
        .par_iter()
        .enumerate()
        .map(|(t, window)| {
            let dets = detector
                .detect_in_window(*window, objects)
                .map_err(|e| EngineError::provider(format!("window {t}"), e))?;
            let kept = filter_detections(dets, tau_det);
            window_confidence_map(window, &kept, grid)
        })
        .collect::<EngineResult<Vec<ScoreMap>>>()?;
    global_confidence_map(plan, &per_window, grid)
}
