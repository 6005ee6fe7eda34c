//! OpenAI-compatible chat-completions backend.

use std::time::Duration;

use serde_json::{json, Value};
use sonic_core::config::LlmSection;
use sonic_core::renderer::{LlmBackend, RenderError};

pub const URL_ENV: &str = "SONIC_LLM_URL";
pub const KEY_ENV: &str = "SONIC_LLM_KEY";

pub struct HttpLlm {
    pub url: String,
    pub key: Option<String>,
    pub model: String,
    agent: ureq::Agent,
}

impl HttpLlm {
    pub fn new(url: impl Into<String>, key: Option<String>, model: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        Self { url: url.into(), key, model: model.into(), agent }
    }

    /// Endpoint from `SONIC_LLM_URL`, falling back to the config; the key
    /// only ever comes from `SONIC_LLM_KEY`.
    pub fn from_env(cfg: &LlmSection) -> Option<Self> {
        let url = std::env::var(URL_ENV).ok().filter(|u| !u.is_empty()).or_else(|| cfg.url.clone())?;
        let key = std::env::var(KEY_ENV).ok().filter(|k| !k.is_empty());
        Some(Self::new(url, key, cfg.model.clone(), Duration::from_secs_f64(cfg.timeout_s)))
    }
}

impl LlmBackend for HttpLlm {
    fn complete(&self, prompt: &str) -> Result<String, RenderError> {
        let body = json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| RenderError::LlmUnavailable(e.to_string()))?;
        let status = resp.status();
        let v: Value = resp.body_mut().read_json().map_err(|e| RenderError::LlmUnavailable(e.to_string()))?;
        if !status.is_success() {
            let msg = v["error"]["message"].as_str().unwrap_or("request failed");
            return Err(RenderError::LlmUnavailable(format!("HTTP {}: {msg}", status.as_u16())));
        }
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| RenderError::LlmUnavailable("response has no message content".into()))
    }
}
