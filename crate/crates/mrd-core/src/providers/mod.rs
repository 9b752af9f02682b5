//! The boundary to external models.
//!
//! Three provider roles feed the engine: crop/query embedding, per-window
//! open-vocabulary detection, and query object extraction. HTTP-backed
//! implementations live in [`http`]; deterministic synthetic implementations
//! used by tests and the evaluation harness live in [`synthetic`].
//!
//! Providers own pixel access: an HTTP provider is constructed with the
//! padded image and cuts crops itself, a synthetic provider answers from
//! scene geometry alone. The engine hands providers only pixel rectangles in
//! padded coordinates.

pub mod http;
pub mod synthetic;

use serde::{Deserialize, Serialize};

use crate::detect::{Detection, ObjectSet};
use crate::error::{EngineError, EngineResult, ProviderResult};
use crate::grid::PixelRect;
use crate::semantic::{Embedding, Query};

/// Connection settings for one remote provider endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderEndpoint {
    pub base_url: String,
    pub timeout_ms: u64,
    pub retries: u32,
    pub auth_token: Option<String>,
}

impl ProviderEndpoint {
    pub fn new(base_url: impl Into<String>) -> Self {
        ProviderEndpoint {
            base_url: base_url.into(),
            timeout_ms: 30_000,
            retries: 2,
            auth_token: None,
        }
    }

    pub fn validate(&self) -> EngineResult<()> {
        if self.timeout_ms == 0 {
            return Err(EngineError::invalid("timeout_ms must be >= 1"));
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(EngineError::invalid(format!(
                "base_url must be an http(s) URL, got `{}`",
                self.base_url
            )));
        }
        Ok(())
    }
}

/// Embeds the query text and image crops into a common vector space.
///
/// `embed_crops` is all-or-nothing: implementations never return partial
/// batches, and a per-crop failure carries the crop's index
/// (`ProviderError::Item`). Implementations must tolerate concurrent calls.
pub trait EmbeddingProvider: Send + Sync {
    fn embed_query(&self, query: &Query) -> ProviderResult<Embedding>;

    /// Embeds each crop rectangle (padded coordinates), order-preserving.
    fn embed_crops(&self, crops: &[PixelRect]) -> ProviderResult<Vec<Embedding>>;
}

/// Detects the given open-vocabulary labels inside one window.
///
/// Returned boxes are window-local with scores in `[0, 1]`.
pub trait DetectorProvider: Send + Sync {
    fn detect_in_window(&self, window: PixelRect, labels: &ObjectSet)
        -> ProviderResult<Vec<Detection>>;
}

/// Extracts candidate object labels from a query.
///
/// Output is raw: trimming, lowercasing and deduplication happen in
/// `detect::extract_objects`, as does the fallback when the provider
/// returns nothing.
pub trait ObjectExtractorProvider: Send + Sync {
    fn extract(&self, query: &Query) -> ProviderResult<Vec<String>>;
}
