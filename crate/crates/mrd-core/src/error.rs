//! Error types shared across the engine.

use thiserror::Error;

/// Failures produced by provider transports and protocol handling.
#[derive(Debug, Error)]
pub enum ProviderError {
    /// The request could not be completed after all retry attempts.
    #[error("transport failure after {attempts} attempt(s){}: {detail}", status_suffix(.status))]
    Transport {
        detail: String,
        attempts: u32,
        status: Option<u16>,
    },
    /// The remote answered, but the payload violates the wire contract.
    /// `raw` preserves the offending payload for logs.
    #[error("protocol violation: {detail}")]
    Protocol { detail: String, raw: String },
    /// The request was rejected before any network call was made.
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    /// A failure attributed to one item of a batch request.
    #[error("item {index}: {source}")]
    Item {
        index: usize,
        #[source]
        source: Box<ProviderError>,
    },
}

fn status_suffix(status: &Option<u16>) -> String {
    match status {
        Some(code) => format!(" (last HTTP status {code})"),
        None => String::new(),
    }
}

impl ProviderError {
    pub fn protocol(detail: impl Into<String>, raw: impl Into<String>) -> Self {
        ProviderError::Protocol {
            detail: detail.into(),
            raw: raw.into(),
        }
    }

    pub fn at_item(self, index: usize) -> Self {
        ProviderError::Item {
            index,
            source: Box::new(self),
        }
    }
}

/// Engine-level errors. Pure geometry/map operations only ever produce
/// `InvalidArgument` or `DegenerateInput`; pipeline stages wrap provider
/// failures with the context needed to locate them.
#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("provider failure at {context}: {source}")]
    Provider {
        context: String,
        #[source]
        source: ProviderError,
    },
    #[error("pipeline stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<EngineError>,
    },
}

impl EngineError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        EngineError::InvalidArgument(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        EngineError::DegenerateInput(msg.into())
    }

    pub fn provider(context: impl Into<String>, source: ProviderError) -> Self {
        EngineError::Provider {
            context: context.into(),
            source,
        }
    }

    /// Tags an error with the pipeline stage it surfaced in.
    pub fn at_stage(self, stage: &'static str) -> Self {
        EngineError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True if a provider failure is anywhere in the error chain.
    pub fn is_provider_failure(&self) -> bool {
        match self {
            EngineError::Provider { .. } => true,
            EngineError::Stage { source, .. } => source.is_provider_failure(),
            _ => false,
        }
    }
}

pub type EngineResult<T> = Result<T, EngineError>;
pub type ProviderResult<T> = Result<T, ProviderError>;
