//! HTTP-backed providers speaking the JSON wire protocol.
//!
//! Three endpoints, all `POST`, all JSON:
//!
//! - `/v1/embed`   `{kind: "text"|"image", payload}` -> `{embedding: [...], dim: N}`
//! - `/v1/detect`  `{image, labels: [...], threshold}` -> `{detections: [{x0,y0,x1,y1,score,label}]}`
//! - `/v1/extract` `{system, examples: [...], query}` -> `{objects: [...]}`
//!
//! Image payloads are base64-encoded PNG crops cut from the *padded* image,
//! so provider geometry always matches engine geometry. Requests are retried
//! with exponential backoff (base 100 ms, factor 2); malformed responses are
//! protocol errors and are not retried.

use std::sync::Mutex;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::detect::{Detection, ObjectSet};
use crate::error::{ProviderError, ProviderResult};
use crate::grid::PixelRect;
use crate::providers::{
    DetectorProvider, EmbeddingProvider, ObjectExtractorProvider, ProviderEndpoint,
};
use crate::semantic::{Embedding, Query};

const BACKOFF_BASE_MS: u64 = 100;
const BACKOFF_FACTOR: u32 = 2;

/// Default system prompt for the extraction endpoint. Ships as config so
/// deployments can override it.
pub const DEFAULT_EXTRACT_SYSTEM_PROMPT: &str = "You extract the physical objects a question is \
asking about. Reply with a JSON array of short lowercase noun phrases, nothing else. Name only \
objects that could appear in an image; ignore colors, counts, positions and question words.";

/// Default few-shot demonstrations for the extraction endpoint.
pub fn default_extract_examples() -> Vec<ExtractExample> {
    vec![
        ExtractExample {
            query: "What color is the umbrella on the beach?".into(),
            objects: vec!["umbrella".into()],
        },
        ExtractExample {
            query: "Is the man to the left of the fire hydrant wearing a hat?".into(),
            objects: vec!["man".into(), "fire hydrant".into(), "hat".into()],
        },
        ExtractExample {
            query: "How many boats are in the harbor?".into(),
            objects: vec!["boat".into()],
        },
    ]
}

// ---------------------------------------------------------------------------
// Wire types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub kind: String,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub embedding: Vec<f64>,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectRequest {
    pub image: String,
    pub labels: Vec<String>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub score: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectResponse {
    pub detections: Vec<WireBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractExample {
    pub query: String,
    pub objects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractRequest {
    pub system: String,
    pub examples: Vec<ExtractExample>,
    pub query: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractResponse {
    pub objects: Vec<String>,
}

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

/// Blocking JSON-over-HTTP client with retry/backoff, shared by the three
/// providers.
pub struct WireClient {
    endpoint: ProviderEndpoint,
    client: reqwest::blocking::Client,
}

impl WireClient {
    pub fn new(endpoint: ProviderEndpoint) -> ProviderResult<Self> {
        endpoint
            .validate()
            .map_err(|e| ProviderError::InvalidRequest(e.to_string()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(endpoint.timeout_ms))
            .build()
            .map_err(|e| ProviderError::InvalidRequest(format!("client build: {e}")))?;
        Ok(WireClient { endpoint, client })
    }

    pub fn endpoint(&self) -> &ProviderEndpoint {
        &self.endpoint
    }

    /// POSTs `body` to `path`, retrying transport and HTTP-status failures.
    /// Returns the raw response body on 2xx.
    pub fn post_json<B: Serialize>(&self, path: &str, body: &B) -> ProviderResult<String> {
        let url = format!("{}{}", self.endpoint.base_url.trim_end_matches('/'), path);
        let attempts = self.endpoint.retries + 1;
        let mut last_status = None;
        let mut last_detail = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let backoff = BACKOFF_BASE_MS * u64::from(BACKOFF_FACTOR.pow(attempt - 1));
                std::thread::sleep(Duration::from_millis(backoff));
            }
            let mut req = self.client.post(&url).json(body);
            if let Some(token) = &self.endpoint.auth_token {
                req = req.bearer_auth(token);
            }
            match req.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp.text().map_err(|e| ProviderError::Transport {
                            detail: format!("reading body: {e}"),
                            attempts: attempt + 1,
                            status: Some(status.as_u16()),
                        });
                    }
                    last_status = Some(status.as_u16());
                    last_detail = format!("HTTP {status} from {url}");
                }
                Err(e) => {
                    last_detail = format!("{e}");
                }
            }
        }
        Err(ProviderError::Transport {
            detail: last_detail,
            attempts,
            status: last_status,
        })
    }

    fn post_parsed<B: Serialize, R: for<'de> Deserialize<'de>>(
        &self,
        path: &str,
        body: &B,
    ) -> ProviderResult<R> {
        let raw = self.post_json(path, body)?;
        serde_json::from_str(&raw)
            .map_err(|e| ProviderError::protocol(format!("decoding {path} response: {e}"), raw))
    }
}

fn png_base64(image: &RgbImage, rect: &PixelRect) -> ProviderResult<String> {
    if rect.x1 > image.width() || rect.y1 > image.height() {
        return Err(ProviderError::InvalidRequest(format!(
            "crop ({},{},{},{}) exceeds image {}x{}",
            rect.x0,
            rect.y0,
            rect.x1,
            rect.y1,
            image.width(),
            image.height()
        )));
    }
    let crop =
        image::imageops::crop_imm(image, rect.x0, rect.y0, rect.width(), rect.height()).to_image();
    let mut bytes = Vec::new();
    image::DynamicImage::ImageRgb8(crop)
        .write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| ProviderError::InvalidRequest(format!("png encode: {e}")))?;
    Ok(BASE64.encode(bytes))
}

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

/// Embedding provider posting text and PNG crop payloads to `/v1/embed`.
///
/// Holds the padded image and cuts crops itself. The first response fixes
/// the expected embedding dimension; later mismatches are protocol errors.
pub struct HttpEmbeddingProvider {
    client: WireClient,
    image: RgbImage,
    seen_dim: Mutex<Option<usize>>,
}

impl HttpEmbeddingProvider {
    pub fn new(endpoint: ProviderEndpoint, padded_image: RgbImage) -> ProviderResult<Self> {
        Ok(HttpEmbeddingProvider {
            client: WireClient::new(endpoint)?,
            image: padded_image,
            seen_dim: Mutex::new(None),
        })
    }

    fn embed_payload(&self, kind: &str, payload: String) -> ProviderResult<Embedding> {
        let resp: EmbedResponse = self.client.post_parsed(
            "/v1/embed",
            &EmbedRequest {
                kind: kind.to_string(),
                payload,
            },
        )?;
        if resp.embedding.len() != resp.dim {
            return Err(ProviderError::protocol(
                format!(
                    "embedding length {} does not match declared dim {}",
                    resp.embedding.len(),
                    resp.dim
                ),
                serde_json::to_string(&resp).unwrap_or_default(),
            ));
        }
        let mut seen = self.seen_dim.lock().expect("dim lock");
        match *seen {
            Some(dim) if dim != resp.dim => {
                return Err(ProviderError::protocol(
                    format!("embedding dim changed from {dim} to {}", resp.dim),
                    String::new(),
                ));
            }
            None => *seen = Some(resp.dim),
            _ => {}
        }
        drop(seen);
        Embedding::new(resp.embedding)
            .map_err(|e| ProviderError::protocol(e.to_string(), String::new()))
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn embed_query(&self, query: &Query) -> ProviderResult<Embedding> {
        self.embed_payload("text", query.text().to_string())
    }

    fn embed_crops(&self, crops: &[PixelRect]) -> ProviderResult<Vec<Embedding>> {
        let mut out = Vec::with_capacity(crops.len());
        for (i, rect) in crops.iter().enumerate() {
            let payload = png_base64(&self.image, rect).map_err(|e| e.at_item(i))?;
            out.push(self.embed_payload("image", payload).map_err(|e| e.at_item(i))?);
        }
        Ok(out)
    }
}

/// Detector provider posting PNG window payloads to `/v1/detect`.
pub struct HttpDetectorProvider {
    client: WireClient,
    image: RgbImage,
    tau_det: f64,
}

impl HttpDetectorProvider {
    pub fn new(
        endpoint: ProviderEndpoint,
        padded_image: RgbImage,
        tau_det: f64,
    ) -> ProviderResult<Self> {
        Ok(HttpDetectorProvider {
            client: WireClient::new(endpoint)?,
            image: padded_image,
            tau_det,
        })
    }
}

/// Converts a wire box to a window-local detection, flooring the origin and
/// ceiling the far edge so fractional boxes keep every pixel they touch.
fn wire_box_to_detection(b: &WireBox, window_w: u32, window_h: u32) -> ProviderResult<Detection> {
    if !(0.0..=1.0).contains(&b.score) || !b.score.is_finite() {
        return Err(ProviderError::protocol(
            format!("detection score {} outside [0, 1]", b.score),
            serde_json::to_string(b).unwrap_or_default(),
        ));
    }
    let bad = |what: &str| {
        ProviderError::protocol(
            format!("detection box {what}"),
            serde_json::to_string(b).unwrap_or_default(),
        )
    };
    if [b.x0, b.y0, b.x1, b.y1].iter().any(|v| !v.is_finite()) {
        return Err(bad("has non-finite coordinates"));
    }
    let x0 = b.x0.max(0.0).floor() as u32;
    let y0 = b.y0.max(0.0).floor() as u32;
    let x1 = (b.x1.ceil() as u32).min(window_w);
    let y1 = (b.y1.ceil() as u32).min(window_h);
    if x0 >= x1 || y0 >= y1 {
        return Err(bad("is empty after clamping"));
    }
    let rect = PixelRect { x0, y0, x1, y1 };
    Detection::window_local(rect, b.score, b.label.clone())
        .map_err(|e| ProviderError::protocol(e.to_string(), String::new()))
}

impl DetectorProvider for HttpDetectorProvider {
    fn detect_in_window(
        &self,
        window: PixelRect,
        labels: &ObjectSet,
    ) -> ProviderResult<Vec<Detection>> {
        let image = png_base64(&self.image, &window)?;
        let resp: DetectResponse = self.client.post_parsed(
            "/v1/detect",
            &DetectRequest {
                image,
                labels: labels.labels().to_vec(),
                threshold: self.tau_det,
            },
        )?;
        resp.detections
            .iter()
            .map(|b| wire_box_to_detection(b, window.width(), window.height()))
            .collect()
    }
}

/// Extraction provider posting the query with a system prompt and few-shot
/// examples to `/v1/extract`.
pub struct HttpExtractorProvider {
    client: WireClient,
    system_prompt: String,
    examples: Vec<ExtractExample>,
}

impl HttpExtractorProvider {
    pub fn new(endpoint: ProviderEndpoint) -> ProviderResult<Self> {
        Ok(HttpExtractorProvider {
            client: WireClient::new(endpoint)?,
            system_prompt: DEFAULT_EXTRACT_SYSTEM_PROMPT.to_string(),
            examples: default_extract_examples(),
        })
    }

    pub fn with_prompt(mut self, system_prompt: String, examples: Vec<ExtractExample>) -> Self {
        self.system_prompt = system_prompt;
        self.examples = examples;
        self
    }
}

impl ObjectExtractorProvider for HttpExtractorProvider {
    fn extract(&self, query: &Query) -> ProviderResult<Vec<String>> {
        let resp: ExtractResponse = self.client.post_parsed(
            "/v1/extract",
            &ExtractRequest {
                system: self.system_prompt.clone(),
                examples: self.examples.clone(),
                query: query.text().to_string(),
            },
        )?;
        Ok(resp.objects)
    }
}
