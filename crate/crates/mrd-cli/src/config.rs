//! Run configuration: benchmark presets, flag overrides, provider endpoints.

use serde::{Deserialize, Serialize};

use mrd_core::{FusionConfig, PipelineConfig, ProviderEndpoint};

use crate::CliError;

/// Benchmark presets. Each fixes crop size, detection window and stride;
/// `ratio_k = 2` and `weight_w = 0.4` everywhere.
pub const PRESETS: &[(&str, Preset)] = &[
    (
        "vstar",
        Preset {
            crop_px: 112,
            window_px: 1232,
            stride_px: 896,
        },
    ),
    (
        "hr4k",
        Preset {
            crop_px: 224,
            window_px: 2240,
            stride_px: 1792,
        },
    ),
    (
        "hr8k",
        Preset {
            crop_px: 448,
            window_px: 3136,
            stride_px: 2688,
        },
    ),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub crop_px: u32,
    pub window_px: u32,
    pub stride_px: u32,
}

pub fn preset(name: &str) -> Option<Preset> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, p)| *p)
}

/// Endpoint configuration file (`--providers config.json`).
///
/// Environment variables `MRD_EMBED_URL`, `MRD_DETECT_URL`, `MRD_EXTRACT_URL`
/// and `MRD_AUTH_TOKEN` override the corresponding fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvidersConfig {
    pub embed_url: String,
    pub detect_url: String,
    pub extract_url: String,
    #[serde(default)]
    pub auth_token: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_retries() -> u32 {
    2
}

impl ProvidersConfig {
    pub fn apply_env_overrides(&mut self) {
        if let Ok(v) = std::env::var("MRD_EMBED_URL") {
            self.embed_url = v;
        }
        if let Ok(v) = std::env::var("MRD_DETECT_URL") {
            self.detect_url = v;
        }
        if let Ok(v) = std::env::var("MRD_EXTRACT_URL") {
            self.extract_url = v;
        }
        if let Ok(v) = std::env::var("MRD_AUTH_TOKEN") {
            self.auth_token = Some(v);
        }
    }

    pub fn endpoint(&self, url: &str) -> ProviderEndpoint {
        ProviderEndpoint {
            base_url: url.to_string(),
            timeout_ms: self.timeout_ms,
            retries: self.retries,
            auth_token: self.auth_token.clone(),
        }
    }
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub preset: String,
    pub crop_px: u32,
    pub ratio_k: u32,
    pub window_px: u32,
    pub stride_px: u32,
    pub tau_det: f64,
    pub weight_w: f64,
    pub top_k: usize,
    #[serde(default)]
    pub providers: Option<ProvidersConfig>,
}

impl RunConfig {
    /// Configuration for a named preset with harness defaults.
    pub fn from_preset(name: &str) -> Result<Self, CliError> {
        let p = preset(name)
            .ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))?;
        Ok(RunConfig {
            preset: name.to_string(),
            crop_px: p.crop_px,
            ratio_k: 2,
            window_px: p.window_px,
            stride_px: p.stride_px,
            tau_det: 0.3,
            weight_w: 0.4,
            top_k: 16,
            providers: None,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.pipeline_config()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            crop_px: self.crop_px,
            ratio_k: self.ratio_k,
            window_px: (self.window_px, self.window_px),
            stride_px: (self.stride_px, self.stride_px),
            tau_det: self.tau_det,
            fusion: FusionConfig {
                weight_w: self.weight_w,
                top_k: self.top_k,
                ..Default::default()
            },
        }
    }
}

pub fn load_providers_config(path: &std::path::Path) -> Result<ProvidersConfig, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    let mut cfg: ProvidersConfig = serde_json::from_str(&raw)
        .map_err(|e| CliError::Config(format!("parsing {}: {e}", path.display())))?;
    cfg.apply_env_overrides();
    Ok(cfg)
}
