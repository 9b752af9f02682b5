//! Semantic similarity maps and multi-resolution consistency fusion.
//!
//! Per lattice, every crop is embedded and scored against the query by
//! shifted cosine similarity ([`cosine_similarity01`]). The coarse map is
//! replicated onto the low lattice ([`upsample_coarse`]) and the two maps are
//! combined by an elementwise geometric mean ([`consistency_fuse`]), which
//! rewards agreement across resolutions: a cell must look relevant at both
//! scales to keep a high fused score.

use crate::error::{EngineError, EngineResult};
use crate::grid::{Lattice, PatchGrid, PixelRect};
use crate::map::ScoreMap;
use crate::providers::EmbeddingProvider;

/// A fixed-length embedding vector. Values are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> EngineResult<Self> {
        if values.is_empty() {
            return Err(EngineError::invalid("embedding dimension must be >= 1"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EngineError::invalid("embedding contains non-finite values"));
        }
        Ok(Embedding { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A nonempty text query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    text: String,
}

impl Query {
    pub fn new(text: impl Into<String>) -> EngineResult<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(EngineError::invalid("query must not be empty"));
        }
        Ok(Query { text })
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

/// Cosine similarity shifted into `[0, 1]`: `(1 + cos(a, b)) / 2`.
///
/// Returns 1 for parallel vectors, 0.5 for orthogonal, 0 for antiparallel.
/// Zero-norm inputs are rejected rather than defaulted: a zero embedding
/// signals a broken backend.
pub fn cosine_similarity01(a: &Embedding, b: &Embedding) -> EngineResult<f64> {
    if a.dim() != b.dim() {
        return Err(EngineError::invalid(format!(
            "embedding dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.values.iter().zip(&b.values) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(EngineError::degenerate("zero-norm embedding"));
    }
    let cos = (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0);
    Ok(0.5 * (1.0 + cos))
}

/// Scores every cell of the chosen lattice against the query.
///
/// The query is embedded once; crops are embedded through a single
/// `embed_crops` call so backends may batch. No partial map is ever
/// returned: any provider failure aborts the whole map.
pub fn similarity_map(
    query: &Query,
    grid: &PatchGrid,
    lattice: Lattice,
    embedder: &dyn EmbeddingProvider,
) -> EngineResult<ScoreMap> {
    let (rows, cols) = grid.lattice_dims(lattice);
    let query_emb = embedder
        .embed_query(query)
        .map_err(|e| EngineError::provider("query embedding", e))?;
    let rects: Vec<PixelRect> = grid
        .indices(lattice)
        .map(|i| grid.patch_rect(i, lattice).expect("index from iterator"))
        .collect();
    let crop_embs = embedder.embed_crops(&rects).map_err(|e| {
        EngineError::provider(
            format!(
                "crop embedding ({} lattice)",
                match lattice {
                    Lattice::Low => "low",
                    Lattice::Coarse => "coarse",
                }
            ),
            e,
        )
    })?;
    if crop_embs.len() != rects.len() {
        return Err(EngineError::invalid(format!(
            "provider returned {} embeddings for {} crops",
            crop_embs.len(),
            rects.len()
        )));
    }
    let mut map = ScoreMap::zeros(rows, cols);
    for (idx, emb) in grid.indices(lattice).zip(&crop_embs) {
        let sim = cosine_similarity01(&query_emb, emb)?;
        map.set(idx.row, idx.col, sim);
    }
    Ok(map)
}

/// Replicates a coarse-lattice map onto the low lattice: each coarse value
/// is copied into its `ratio_k²` child cells.
pub fn upsample_coarse(map_hi: &ScoreMap, grid: &PatchGrid) -> EngineResult<ScoreMap> {
    if map_hi.dims() != (grid.coarse_h, grid.coarse_w) {
        return Err(EngineError::invalid(format!(
            "coarse map is {}x{}, grid expects {}x{}",
            map_hi.grid_h(),
            map_hi.grid_w(),
            grid.coarse_h,
            grid.coarse_w
        )));
    }
    let k = grid.ratio_k as usize;
    let mut out = ScoreMap::zeros(grid.grid_h, grid.grid_w);
    for row in 0..grid.grid_h {
        for col in 0..grid.grid_w {
            out.set(row, col, map_hi.get(row / k, col / k));
        }
    }
    Ok(out)
}

/// Elementwise geometric mean of two same-shaped maps.
pub fn consistency_fuse(low: &ScoreMap, hi_upsampled: &ScoreMap) -> EngineResult<ScoreMap> {
    if !low.same_dims(hi_upsampled) {
        return Err(EngineError::invalid(format!(
            "map dimension mismatch: {}x{} vs {}x{}",
            low.grid_h(),
            low.grid_w(),
            hi_upsampled.grid_h(),
            hi_upsampled.grid_w()
        )));
    }
    let (h, w) = low.dims();
    let mut out = ScoreMap::zeros(h, w);
    for row in 0..h {
        for col in 0..w {
            out.set(row, col, (low.get(row, col) * hi_upsampled.get(row, col)).sqrt());
        }
    }
    Ok(out)
}

/// Full multi-resolution semantic map: low map and coarse map, coarse
/// replicated to the low lattice, fused by geometric mean.
pub fn multi_resolution_map(
    query: &Query,
    grid: &PatchGrid,
    embedder: &dyn EmbeddingProvider,
) -> EngineResult<ScoreMap> {
    let low = similarity_map(query, grid, Lattice::Low, embedder)?;
    let hi = similarity_map(query, grid, Lattice::Coarse, embedder)?;
    let hi_up = upsample_coarse(&hi, grid)?;
    consistency_fuse(&low, &hi_up)
}
