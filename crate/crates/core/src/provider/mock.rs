use super::{CompletionProvider, CompletionRequest, CompletionResult, FinishReason, ProviderError};

/// Prompts containing this marker make the mock fail, for error-path tests.
pub const FAIL_HOOK: &str = "[[FAIL]]";

/// Deterministic offline provider.
///
/// The completion is the last line of the prompt with its words reversed,
/// prefixed by `MOCK[t=<temperature>]`, and cut to `max_tokens`
/// whitespace-delimited words (the prefix counts as one).
#[derive(Debug, Clone, Copy, Default)]
pub struct MockProvider;

impl CompletionProvider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, ProviderError> {
        if request.prompt.contains(FAIL_HOOK) {
            return Err(ProviderError::new("mock failure requested by prompt"));
        }
        let last_line = request.prompt.lines().last().unwrap_or("");
        let prefix = format!("MOCK[t={:.1}]", request.params.temperature);
        let words: Vec<&str> = std::iter::once(prefix.as_str())
            .chain(last_line.split_whitespace().rev())
            .collect();
        let budget = request.params.max_tokens as usize;
        let truncated = words.len() > budget;
        Ok(CompletionResult {
            text: words[..words.len().min(budget)].join(" "),
            finish_reason: if truncated { FinishReason::Length } else { FinishReason::Stop },
            provider_name: self.name().to_string(),
        })
    }
}
