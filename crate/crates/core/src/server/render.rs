use super::Class;
use crate::format::SonicFile;
use crate::hub::RequestKind;
use crate::renderer::{
    capture_page, render_llm, render_page, render_text_file, LlmBackend, PageSource, RenderConfig, RenderError,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderJob {
    pub id: u32,
    pub kind: RequestKind,
    pub class: Class,
    pub subject: String,
}

#[derive(Debug, Clone)]
pub struct Rendered {
    pub file: SonicFile,
    /// Push candidates in rank order (empty for text).
    pub push_links: Vec<String>,
}

pub trait ContentRenderer: Send + Sync {
    fn render(&self, job: &RenderJob, created_at: u64) -> Result<Rendered, RenderError>;
}

/// Browser capture for URLs, LLM completion for prompts.
pub struct PipelineRenderer {
    pub browser: Box<dyn PageSource>,
    pub llm: Box<dyn LlmBackend>,
    pub cfg: RenderConfig,
}

impl ContentRenderer for PipelineRenderer {
    fn render(&self, job: &RenderJob, created_at: u64) -> Result<Rendered, RenderError> {
        match job.kind {
            RequestKind::Url => {
                let capture = capture_page(&job.subject, self.browser.as_ref())?;
                let page = render_page(job.id, &capture, &self.cfg, created_at)?;
                let push_links = page.push_links.into_iter().map(|e| e.target_url).collect();
                Ok(Rendered { file: page.file, push_links })
            }
            RequestKind::Gpt => {
                let text = render_llm(&job.subject, self.llm.as_ref(), self.cfg.llm_cap_bytes)?;
                let file = render_text_file(job.id, &job.subject, &text, created_at)?;
                Ok(Rendered { file, push_links: Vec::new() })
            }
        }
    }
}
