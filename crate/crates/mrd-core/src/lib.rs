//! Training-free retrieval-detection fusion engine for locating
//! query-relevant regions in very large images.
//!
//! The engine partitions an image into two proportional patch lattices,
//! scores each crop against the query through an embedding provider, fuses
//! the two resolutions by elementwise geometric mean, overlays a
//! sliding-window open-vocabulary detection confidence map, and retrieves
//! the top-K cells of the fused map in a spatial-order-preserving layout.
//!
//! Neural models live behind the provider traits in [`providers`]; the
//! engine itself is deterministic and fully testable with the synthetic
//! providers.
//!
//! Modules follow the data flow:
//!
//! - [`grid`] — patch lattice geometry and pixel/patch conversion
//! - [`map`] — the `ScoreMap` carrier shared by every stage
//! - [`semantic`] — per-resolution similarity maps and consistency fusion
//! - [`detect`] — window planning, confidence rasterization, aggregation
//! - [`pipeline`] — linear fusion, top-K selection, layout, orchestration
//! - [`providers`] — HTTP and synthetic model providers

pub mod detect;
pub mod error;
pub mod grid;
pub mod map;
pub mod pipeline;
pub mod providers;
pub mod semantic;

pub use detect::{
    detection_map, extract_objects, filter_detections, global_confidence_map, plan_windows,
    window_confidence_map, window_confidence_map_with_rule, BoxCoverageRule, Detection,
    DetectionFrame, HeuristicExtractor, ObjectSet, WindowPlan,
};
pub use error::{EngineError, EngineResult, ProviderError, ProviderResult};
pub use grid::{build_grid, ImageDims, Lattice, PatchGrid, PatchIndex, PixelRect};
pub use map::{round_sig7, ScoreMap};
pub use pipeline::{
    fuse_maps, result_to_json, run_pipeline, select_top_k, spatial_layout, FusionConfig,
    LayoutGrid, PipelineConfig, PipelineProviders, PipelineRun, RetrievalResult, ScoredPatch,
};
pub use providers::{
    synthetic::{
        synthetic_detector, synthetic_embedder, PatchRect, PseudorandomEmbedder, SceneTarget,
        SyntheticDetector, SyntheticEmbedder, SyntheticSceneSpec,
    },
    DetectorProvider, EmbeddingProvider, ObjectExtractorProvider, ProviderEndpoint,
};
pub use semantic::{
    consistency_fuse, cosine_similarity01, multi_resolution_map, similarity_map, upsample_coarse,
    Embedding, Query,
};
