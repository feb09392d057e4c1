use std::fmt;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{CompletionProvider, CompletionRequest, CompletionResult, FinishReason, ProviderError};

const TIMEOUT: Duration = Duration::from_secs(60);

/// Client for a JSON-over-HTTP completion endpoint at `{base}/completions`.
#[derive(Clone)]
pub struct HttpProvider {
    base: String,
    api_key: Option<String>,
}

impl fmt::Debug for HttpProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpProvider")
            .field("base", &self.base)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

#[derive(Deserialize)]
struct Choice {
    text: String,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct Response {
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    choices: Vec<Choice>,
    #[serde(default)]
    finish_reason: Option<String>,
}

fn map_finish(reason: Option<&str>) -> FinishReason {
    match reason {
        Some("length") => FinishReason::Length,
        Some("error") => FinishReason::Error,
        _ => FinishReason::Stop,
    }
}

impl HttpProvider {
    pub fn new(base: impl Into<String>, api_key: Option<String>) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_string(),
            api_key,
        }
    }

    pub fn endpoint(&self) -> String {
        format!("{}/completions", self.base)
    }

    fn redact(&self, message: String) -> String {
        match &self.api_key {
            Some(key) if !key.is_empty() => message.replace(key.as_str(), "<redacted>"),
            _ => message,
        }
    }

    fn send(&self, request: &CompletionRequest) -> Result<CompletionResult, String> {
        let params = &request.params;
        let body = json!({
            "model": params.model_name,
            "prompt": request.prompt,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
            "stop": params.stop_sequences,
            "presence_penalty": params.presence_penalty,
            "frequency_penalty": params.frequency_penalty,
        });
        let client = reqwest::blocking::Client::builder()
            .timeout(TIMEOUT)
            .build()
            .map_err(|e| format!("client setup failed: {e}"))?;
        let mut call = client.post(self.endpoint()).json(&body);
        if let Some(key) = &self.api_key {
            call = call.bearer_auth(key);
        }
        let response = call.send().map_err(|e| format!("request failed: {e}"))?;
        let status = response.status();
        if !status.is_success() {
            let detail = response.text().unwrap_or_default();
            let detail: String = detail.chars().take(200).collect();
            return Err(format!("endpoint returned {status}: {detail}"));
        }
        let parsed: Response = response.json().map_err(|e| format!("malformed response: {e}"))?;
        let (text, reason) = match (parsed.text, parsed.choices.into_iter().next()) {
            (Some(text), _) => (text, parsed.finish_reason),
            (None, Some(choice)) => (choice.text, choice.finish_reason.or(parsed.finish_reason)),
            (None, None) => return Err("response has neither `text` nor `choices[0].text`".to_string()),
        };
        Ok(CompletionResult {
            text,
            finish_reason: map_finish(reason.as_deref()),
            provider_name: self.name().to_string(),
        })
    }
}

impl CompletionProvider for HttpProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, ProviderError> {
        self.send(request).map_err(|message| ProviderError::new(self.redact(message)))
    }
}
