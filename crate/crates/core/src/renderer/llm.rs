use super::RenderError;

pub const DEFAULT_LLM_CAP: usize = 4000;

pub trait LlmBackend: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, RenderError>;
}

impl<F> LlmBackend for F
where
    F: Fn(&str) -> Result<String, RenderError> + Send + Sync,
{
    fn complete(&self, prompt: &str) -> Result<String, RenderError> {
        self(prompt)
    }
}

/// Deterministic backend that answers `Q: <prompt>`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubLlm;

impl LlmBackend for StubLlm {
    fn complete(&self, prompt: &str) -> Result<String, RenderError> {
        Ok(format!("Q: {prompt}"))
    }
}

/// Longest prefix of `s` that fits in `cap` bytes without splitting a
/// character.
pub fn truncate_utf8(s: &str, cap: usize) -> String {
    if s.len() <= cap {
        return s.to_owned();
    }
    let mut end = cap;
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    s[..end].to_owned()
}

pub fn render_llm(prompt: &str, llm: &dyn LlmBackend, cap: usize) -> Result<String, RenderError> {
    Ok(truncate_utf8(&llm.complete(prompt)?, cap))
}
