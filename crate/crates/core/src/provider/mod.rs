//! Text-completion backends.
//!
//! [`MockProvider`] is the default: a deterministic offline function of the
//! prompt and parameters. [`HttpProvider`] forwards requests to one
//! JSON-over-HTTP completion endpoint.

mod http;
mod mock;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::HttpProvider;
pub use mock::MockProvider;

use crate::model::ModelParams;

pub const PROVIDER_ENV: &str = "LMCANVAS_PROVIDER";
pub const API_BASE_ENV: &str = "LMCANVAS_API_BASE";
pub const API_KEY_ENV: &str = "LMCANVAS_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub prompt: String,
    pub params: ModelParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionResult {
    pub text: String,
    pub finish_reason: FinishReason,
    pub provider_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("provider error: {message}")]
pub struct ProviderError {
    pub message: String,
}

impl ProviderError {
    pub fn new(message: impl Into<String>) -> Self {
        Self { message: message.into() }
    }
}

/// A completion backend. Implementations must tolerate concurrent calls.
pub trait CompletionProvider: Send + Sync {
    fn name(&self) -> &str;

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, ProviderError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Mock,
    Http,
}

impl std::str::FromStr for ProviderKind {
    type Err = ProviderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(Self::Mock),
            "http" => Ok(Self::Http),
            other => Err(ProviderError::new(format!("unknown provider `{other}` (expected mock or http)"))),
        }
    }
}

impl fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mock => "mock",
            Self::Http => "http",
        })
    }
}

/// Provider selection, usually read from the environment.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub api_base: Option<String>,
    pub api_key: Option<String>,
}

impl fmt::Debug for ProviderConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProviderConfig")
            .field("kind", &self.kind)
            .field("api_base", &self.api_base)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl ProviderConfig {
    pub fn from_env() -> Result<Self, ProviderError> {
        Self::from_lookup(|key| std::env::var(key).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ProviderError> {
        let kind = match lookup(PROVIDER_ENV) {
            Some(value) if !value.is_empty() => value.parse()?,
            _ => ProviderKind::Mock,
        };
        Ok(Self {
            kind,
            api_base: lookup(API_BASE_ENV).filter(|v| !v.is_empty()),
            api_key: lookup(API_KEY_ENV).filter(|v| !v.is_empty()),
        })
    }

    pub fn with_kind(mut self, kind: ProviderKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn build(&self) -> Result<Box<dyn CompletionProvider>, ProviderError> {
        match self.kind {
            ProviderKind::Mock => Ok(Box::new(MockProvider)),
            ProviderKind::Http => {
                let base = self
                    .api_base
                    .clone()
                    .ok_or_else(|| ProviderError::new(format!("{API_BASE_ENV} must be set for the http provider")))?;
                Ok(Box::new(HttpProvider::new(base, self.api_key.clone())))
            }
        }
    }
}
