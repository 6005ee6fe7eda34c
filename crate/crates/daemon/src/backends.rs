//! Renderer assembly from config and command-line switches.

use clap::ValueEnum;
use sonic_core::config::SonicConfig;
use sonic_core::renderer::{FixtureBrowser, LlmBackend, PageSource, StubLlm};
use sonic_core::server::PipelineRenderer;

use crate::cdp::CdpBrowser;
use crate::llm::{HttpLlm, URL_ENV};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LlmMode {
    /// Deterministic `Q: <prompt>` answers.
    Stub,
    /// OpenAI-compatible endpoint from SONIC_LLM_URL or the config.
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BrowserMode {
    /// Synthetic article pages for any URL.
    Fixture,
    /// Headless Chrome at `browser.devtools_url`.
    Cdp,
}

pub fn llm_backend(mode: LlmMode, cfg: &SonicConfig) -> anyhow::Result<Box<dyn LlmBackend>> {
    Ok(match mode {
        LlmMode::Stub => Box::new(StubLlm),
        LlmMode::Http => Box::new(
            HttpLlm::from_env(&cfg.llm)
                .ok_or_else(|| anyhow::anyhow!("no LLM endpoint: set {URL_ENV} or llm.url, or use --llm stub"))?,
        ),
    })
}

pub fn page_source(mode: BrowserMode, cfg: &SonicConfig) -> Box<dyn PageSource> {
    match mode {
        BrowserMode::Fixture => Box::new(FixtureBrowser::synthetic()),
        BrowserMode::Cdp => Box::new(CdpBrowser::from_config(&cfg.browser)),
    }
}

pub fn renderer(llm: LlmMode, browser: BrowserMode, cfg: &SonicConfig) -> anyhow::Result<PipelineRenderer> {
    Ok(PipelineRenderer { browser: page_source(browser, cfg), llm: llm_backend(llm, cfg)?, cfg: cfg.render.clone() })
}
