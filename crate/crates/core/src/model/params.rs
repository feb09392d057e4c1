use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CanvasError;

/// Generation parameters carried by a model block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub model_name: String,
    /// Sampling temperature in `[0, 2]`.
    pub temperature: f64,
    /// Nucleus mass in `(0, 1]`.
    pub top_p: f64,
    pub max_tokens: u32,
    pub stop_sequences: Vec<String>,
    pub presence_penalty: f64,
    pub frequency_penalty: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            model_name: "mock".to_string(),
            temperature: 0.7,
            top_p: 1.0,
            max_tokens: 64,
            stop_sequences: Vec::new(),
            presence_penalty: 0.0,
            frequency_penalty: 0.0,
        }
    }
}

impl ModelParams {
    pub const FIELDS: [&'static str; 7] = [
        "model_name",
        "temperature",
        "top_p",
        "max_tokens",
        "stop_sequences",
        "presence_penalty",
        "frequency_penalty",
    ];

    pub fn validate(&self) -> Result<(), CanvasError> {
        if !(self.temperature.is_finite() && (0.0..=2.0).contains(&self.temperature)) {
            return Err(CanvasError::invalid_param("temperature", "must lie in [0, 2]"));
        }
        if !(self.top_p.is_finite() && self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(CanvasError::invalid_param("top_p", "must lie in (0, 1]"));
        }
        if self.max_tokens == 0 {
            return Err(CanvasError::invalid_param("max_tokens", "must be positive"));
        }
        if self.stop_sequences.iter().any(String::is_empty) {
            return Err(CanvasError::invalid_param("stop_sequences", "entries must be non-empty"));
        }
        for (field, value) in [
            ("presence_penalty", self.presence_penalty),
            ("frequency_penalty", self.frequency_penalty),
        ] {
            if !(value.is_finite() && (-2.0..=2.0).contains(&value)) {
                return Err(CanvasError::invalid_param(field, "must lie in [-2, 2]"));
            }
        }
        Ok(())
    }

    /// Returns a copy with `field` set to `value`, validated as a whole.
    pub fn with_field(&self, field: &str, value: &Value) -> Result<Self, CanvasError> {
        let mut next = self.clone();
        let type_error = |expected: &str| CanvasError::invalid_param(field, format!("expected {expected}, got {value}"));
        match field {
            "model_name" => next.model_name = value.as_str().ok_or_else(|| type_error("a string"))?.to_string(),
            "temperature" => next.temperature = value.as_f64().ok_or_else(|| type_error("a number"))?,
            "top_p" => next.top_p = value.as_f64().ok_or_else(|| type_error("a number"))?,
            "max_tokens" => {
                let tokens = value.as_u64().ok_or_else(|| type_error("a positive integer"))?;
                next.max_tokens = u32::try_from(tokens).map_err(|_| type_error("a 32-bit integer"))?;
            }
            "stop_sequences" => {
                next.stop_sequences = value
                    .as_array()
                    .ok_or_else(|| type_error("a list of strings"))?
                    .iter()
                    .map(|item| item.as_str().map(str::to_string))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| type_error("a list of strings"))?;
            }
            "presence_penalty" => next.presence_penalty = value.as_f64().ok_or_else(|| type_error("a number"))?,
            "frequency_penalty" => next.frequency_penalty = value.as_f64().ok_or_else(|| type_error("a number"))?,
            other => return Err(CanvasError::invalid_param(other, "unknown field")),
        }
        next.validate()?;
        Ok(next)
    }
}
