//! Deterministic synthetic providers backed by a declarative scene
//! description.
//!
//! A [`SyntheticSceneSpec`] plants labeled rectangles ("targets") on a patch
//! grid over a uniform background. The synthetic embedder turns geometry into
//! similarity: a crop that contains a *whole* target is maximally similar,
//! while a crop that sees only a fragment is discounted by the target's
//! coherence and by how little of the crop the fragment covers. This
//! reproduces the failure mode the engine exists to fix: objects split
//! across fine-lattice cells score erratically at fine resolution but
//! cleanly at coarse resolution.
//!
//! All outputs are pure functions of the spec; identical specs yield
//! bit-identical providers.

use serde::{Deserialize, Serialize};

use crate::detect::{Detection, ObjectSet};
use crate::error::{EngineError, EngineResult, ProviderResult};
use crate::grid::{ImageDims, PixelRect};
use crate::providers::{DetectorProvider, EmbeddingProvider};
use crate::semantic::{Embedding, Query};

/// Half-open rectangle in low-lattice patch coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PatchRect {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> EngineResult<Self> {
        if x0 >= x1 || y0 >= y1 {
            return Err(EngineError::invalid(format!(
                "patch rect must be nonempty: ({x0},{y0},{x1},{y1})"
            )));
        }
        Ok(PatchRect { x0, y0, x1, y1 })
    }

    fn to_pixels(self, crop_px: u32) -> PixelRect {
        PixelRect {
            x0: self.x0 * crop_px,
            y0: self.y0 * crop_px,
            x1: self.x1 * crop_px,
            y1: self.y1 * crop_px,
        }
    }

    /// Cells spanned: `(rows, cols)`.
    pub fn span(&self) -> (u32, u32) {
        (self.y1 - self.y0, self.x1 - self.x0)
    }
}

/// One planted rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTarget {
    pub rect: PatchRect,
    pub label: String,
    /// How consistently fragments of this target still resemble the query,
    /// in `[0, 1]`. 1 means a fragment looks as good as the whole.
    pub coherence: f64,
}

/// Declarative synthetic scene: grid extent, planted targets, background
/// similarity level.
///
/// `noise_seed` records the seed the scene was generated from; providers
/// derived from a spec are noise-free, so the seed only documents lineage
/// and keeps regenerated scene files identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSceneSpec {
    pub grid_h: u32,
    pub grid_w: u32,
    pub targets: Vec<SceneTarget>,
    pub noise_seed: u64,
    pub background_level: f64,
}

impl SyntheticSceneSpec {
    pub fn validate(&self) -> EngineResult<()> {
        if self.grid_h == 0 || self.grid_w == 0 {
            return Err(EngineError::invalid("scene grid must be nonempty"));
        }
        if !(0.0..=1.0).contains(&self.background_level) || !self.background_level.is_finite() {
            return Err(EngineError::invalid(format!(
                "background_level {} outside [0, 1]",
                self.background_level
            )));
        }
        for t in &self.targets {
            if t.rect.x1 > self.grid_w || t.rect.y1 > self.grid_h {
                return Err(EngineError::invalid(format!(
                    "target `{}` rect exceeds {}x{} grid",
                    t.label, self.grid_h, self.grid_w
                )));
            }
            if !(0.0..=1.0).contains(&t.coherence) || !t.coherence.is_finite() {
                return Err(EngineError::invalid(format!(
                    "target `{}` coherence {} outside [0, 1]",
                    t.label, t.coherence
                )));
            }
            if t.label.trim().is_empty() {
                return Err(EngineError::invalid("target label must not be empty"));
            }
        }
        Ok(())
    }

    /// Pixel dimensions of the scene at a given crop size.
    pub fn image_dims(&self, crop_px: u32) -> EngineResult<ImageDims> {
        ImageDims::new(self.grid_w * crop_px, self.grid_h * crop_px)
    }
}

/// Builds the deterministic embedding provider for a scene.
pub fn synthetic_embedder(spec: SyntheticSceneSpec, crop_px: u32) -> EngineResult<SyntheticEmbedder> {
    spec.validate()?;
    if crop_px == 0 {
        return Err(EngineError::invalid("crop_px must be >= 1"));
    }
    Ok(SyntheticEmbedder { spec, crop_px })
}

/// Builds the deterministic detector provider for a scene.
pub fn synthetic_detector(spec: SyntheticSceneSpec, crop_px: u32) -> EngineResult<SyntheticDetector> {
    spec.validate()?;
    if crop_px == 0 {
        return Err(EngineError::invalid("crop_px must be >= 1"));
    }
    Ok(SyntheticDetector { spec, crop_px })
}

/// Embedding provider whose crop/query similarity is a pure function of
/// scene geometry.
///
/// For a crop `c` the similarity is
/// `bg + max_t contribution(t)` with `boost = 1 - bg` and
///
/// - `contribution(t) = boost` when `c` contains the whole of target `t`,
/// - `contribution(t) = coherence_t * coverage * boost` when `c` sees only a
///   fragment, where `coverage` is the fraction of `c` covered by `t`,
/// - `contribution(t) = 0` when `c` and `t` are disjoint.
///
/// A coarse crop enclosing a split object therefore scores `1.0` while each
/// fine crop of the same object scores only the coherence-discounted value.
pub struct SyntheticEmbedder {
    spec: SyntheticSceneSpec,
    crop_px: u32,
}

impl SyntheticEmbedder {
    /// The similarity value the embedding of `crop` will produce against the
    /// query embedding.
    pub fn similarity_for(&self, crop: &PixelRect) -> f64 {
        let bg = self.spec.background_level;
        let boost = 1.0 - bg;
        let mut best = 0.0f64;
        for target in &self.spec.targets {
            let trect = target.rect.to_pixels(self.crop_px);
            let contribution = if crop.contains_rect(&trect) {
                boost
            } else if let Some(inter) = crop.intersect(&trect) {
                let coverage = inter.area() as f64 / crop.area() as f64;
                target.coherence * coverage * boost
            } else {
                0.0
            };
            best = best.max(contribution);
        }
        (bg + best).clamp(0.0, 1.0)
    }
}

/// Embeds a similarity value `s` as a unit vector at angle `acos(2s - 1)` to
/// the query axis, so `cosine_similarity01` recovers `s`.
fn embedding_for_similarity(sim: f64) -> Embedding {
    let cos = (2.0 * sim - 1.0).clamp(-1.0, 1.0);
    let sin = (1.0 - cos * cos).max(0.0).sqrt();
    Embedding::new(vec![cos, sin]).expect("finite components")
}

impl EmbeddingProvider for SyntheticEmbedder {
    fn embed_query(&self, _query: &Query) -> ProviderResult<Embedding> {
        Ok(Embedding::new(vec![1.0, 0.0]).expect("finite"))
    }

    fn embed_crops(&self, crops: &[PixelRect]) -> ProviderResult<Vec<Embedding>> {
        Ok(crops
            .iter()
            .map(|c| embedding_for_similarity(self.similarity_for(c)))
            .collect())
    }
}

/// Detector provider emitting one box per planted target that intersects the
/// window *and* matches a requested label (case-insensitive).
///
/// Boxes are clipped to the window and reported window-local with score
/// `0.5 + 0.5 * coherence`.
pub struct SyntheticDetector {
    spec: SyntheticSceneSpec,
    crop_px: u32,
}

impl DetectorProvider for SyntheticDetector {
    fn detect_in_window(
        &self,
        window: PixelRect,
        labels: &ObjectSet,
    ) -> ProviderResult<Vec<Detection>> {
        let mut dets = Vec::new();
        for target in &self.spec.targets {
            if !labels.contains(&target.label.to_lowercase()) {
                continue;
            }
            let trect = target.rect.to_pixels(self.crop_px);
            if let Some(clipped) = window.intersect(&trect) {
                let local = clipped.offset_neg(window.x0, window.y0);
                let score = 0.5 + 0.5 * target.coherence;
                dets.push(
                    Detection::window_local(local, score, target.label.to_lowercase())
                        .expect("score in range"),
                );
            }
        }
        Ok(dets)
    }
}

/// Stress-test embedding provider: every crop gets an independent
/// pseudorandom similarity in `[0, 1]`, keyed by the crop rectangle and a
/// seed. Stable across runs and platforms.
pub struct PseudorandomEmbedder {
    pub seed: u64,
}

impl PseudorandomEmbedder {
    pub fn similarity_for(&self, crop: &PixelRect) -> f64 {
        let mut h = self.seed;
        for v in [crop.x0, crop.y0, crop.x1, crop.y1] {
            h = splitmix64(h ^ u64::from(v));
        }
        // 53 uniform mantissa bits
        (h >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl EmbeddingProvider for PseudorandomEmbedder {
    fn embed_query(&self, _query: &Query) -> ProviderResult<Embedding> {
        Ok(Embedding::new(vec![1.0, 0.0]).expect("finite"))
    }

    fn embed_crops(&self, crops: &[PixelRect]) -> ProviderResult<Vec<Embedding>> {
        Ok(crops
            .iter()
            .map(|c| embedding_for_similarity(self.similarity_for(c)))
            .collect())
    }
}
