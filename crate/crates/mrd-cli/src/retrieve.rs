//! The `retrieve` command: run the pipeline over a PNG (remote providers) or
//! a synthetic scene (in-process providers) and emit the result document.

use std::path::{Path, PathBuf};

use mrd_core::providers::http::{
    HttpDetectorProvider, HttpEmbeddingProvider, HttpExtractorProvider,
};
use mrd_core::{
    build_grid, result_to_json, run_pipeline, synthetic_detector, synthetic_embedder,
    EngineError, HeuristicExtractor, PipelineProviders, PipelineRun, Query,
};

use crate::config::RunConfig;
use crate::imgio;
use crate::maps;
use crate::scene::load_scene;
use crate::CliError;

/// What to retrieve from.
pub enum RetrieveSource {
    /// A PNG on disk, scored through the configured HTTP providers.
    Image(PathBuf),
    /// A synthetic scene file, scored through the in-process providers.
    /// The scene's own query is used unless one is given explicitly.
    Synthetic(PathBuf),
}

fn engine_err(e: EngineError) -> CliError {
    if e.is_provider_failure() {
        CliError::Provider(e.to_string())
    } else {
        CliError::Other(e.to_string())
    }
}

pub fn run_retrieve(
    source: RetrieveSource,
    query: Option<String>,
    config: &RunConfig,
    dump_maps: Option<&Path>,
) -> Result<String, CliError> {
    config.validate()?;
    let pipeline_config = config.pipeline_config();

    let run: PipelineRun = match source {
        RetrieveSource::Synthetic(scene_path) => {
            let scene = load_scene(&scene_path)?;
            let query_text = query.unwrap_or_else(|| scene.query.clone());
            let query = Query::new(query_text).map_err(|e| CliError::Config(e.to_string()))?;
            let dims = scene
                .scene
                .image_dims(config.crop_px)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let embedder = synthetic_embedder(scene.scene.clone(), config.crop_px)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let detector = synthetic_detector(scene.scene.clone(), config.crop_px)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let providers = PipelineProviders {
                embedder: &embedder,
                detector: &detector,
                extractor: &HeuristicExtractor,
            };
            run_pipeline(&query, dims, &pipeline_config, &providers).map_err(engine_err)?
        }
        RetrieveSource::Image(image_path) => {
            let query_text = query.ok_or_else(|| {
                CliError::Config("a query is required when retrieving from an image".into())
            })?;
            let query = Query::new(query_text).map_err(|e| CliError::Config(e.to_string()))?;
            let providers_cfg = config.providers.clone().ok_or_else(|| {
                CliError::Config(
                    "image retrieval needs provider endpoints (--providers config.json)".into(),
                )
            })?;
            let img = imgio::load_png(&image_path)?;
            let dims = imgio::dims_of(&img)?;
            let grid = build_grid(dims, config.crop_px, config.ratio_k)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let padded = imgio::pad_replicate(&img, &grid);
            let embedder = HttpEmbeddingProvider::new(
                providers_cfg.endpoint(&providers_cfg.embed_url),
                padded.clone(),
            )
            .map_err(|e| CliError::Config(e.to_string()))?;
            let detector = HttpDetectorProvider::new(
                providers_cfg.endpoint(&providers_cfg.detect_url),
                padded,
                config.tau_det,
            )
            .map_err(|e| CliError::Config(e.to_string()))?;
            let extractor =
                HttpExtractorProvider::new(providers_cfg.endpoint(&providers_cfg.extract_url))
                    .map_err(|e| CliError::Config(e.to_string()))?;
            let providers = PipelineProviders {
                embedder: &embedder,
                detector: &detector,
                extractor: &extractor,
            };
            run_pipeline(&query, dims, &pipeline_config, &providers).map_err(engine_err)?
        }
    };

    if let Some(dir) = dump_maps {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Other(format!("creating {}: {e}", dir.display())))?;
        maps::write_map(&dir.join("semantic_map.json"), &run.semantic_map)?;
        maps::write_map(&dir.join("detection_map.json"), &run.detection_map)?;
        maps::write_map(&dir.join("fused_map.json"), &run.result.fused_map)?;
    }

    Ok(result_to_json(&run.grid, &run.result))
}
