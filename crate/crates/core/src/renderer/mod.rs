//! URL → screenshot, click map and strip-compressed raster; prompt → text.

mod fixture;
mod llm;
mod push;
mod strips;

pub use fixture::{FixtureBrowser, FixturePage, TextBlock};
pub use llm::{render_llm, truncate_utf8, LlmBackend, StubLlm, DEFAULT_LLM_CAP};
pub use push::{score_link, select_push_links, LinkScore, PUSH_LINKS};
pub use strips::{compress_strips, decode_strip, decode_strips, StripSet, DEFAULT_QUALITY, DEFAULT_STRIP_HEIGHT};

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::format::{ClickMapEntry, Codec, FormatError, SonicFile, SonicMetadata, MAX_IMAGE_HEIGHT, PAGE_WIDTH};

/// Mobile viewport the page is laid out in (iPhone SE).
pub const VIEWPORT: (u32, u32) = (375, 667);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("navigation timed out")]
    NavigationTimeout,
    #[error("capture failed: {0}")]
    CaptureFailed(String),
    #[error("invalid URL: {0}")]
    InvalidUrl(String),
    #[error("codec failure: {0}")]
    Codec(String),
    #[error("LLM unavailable: {0}")]
    LlmUnavailable(String),
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// An anchor's layout box in viewport CSS pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub href: String,
}

/// What a browser hands back: a full-page screenshot at viewport width and
/// the anchors found in the live layout.
#[derive(Debug, Clone)]
pub struct RawCapture {
    pub screenshot: RgbImage,
    pub anchors: Vec<Anchor>,
}

pub trait PageSource: Send + Sync {
    fn capture(&self, url: &str) -> Result<RawCapture, RenderError>;
}

#[derive(Debug, Clone)]
pub struct PageCapture {
    pub image: RgbImage,
    pub links: Vec<ClickMapEntry>,
    pub source_url: String,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub quality: u8,
    pub strip_height: u16,
    pub codec: Codec,
    pub llm_cap_bytes: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            quality: DEFAULT_QUALITY,
            strip_height: DEFAULT_STRIP_HEIGHT,
            codec: strips::default_codec(),
            llm_cap_bytes: DEFAULT_LLM_CAP,
        }
    }
}

pub fn capture_page(url: &str, browser: &dyn PageSource) -> Result<PageCapture, RenderError> {
    let page = Url::parse(url).map_err(|e| RenderError::InvalidUrl(format!("{url}: {e}")))?;
    let raw = browser.capture(url)?;
    Ok(scale_capture(&page, raw))
}

/// Resizes to 320 px wide, truncates at the height cap and maps anchors
/// into image coordinates.
pub fn scale_capture(page: &Url, raw: RawCapture) -> PageCapture {
    let (w0, h0) = raw.screenshot.dimensions();
    let k = PAGE_WIDTH as f64 / w0.max(1) as f64;
    let full_h = ((h0 as f64 * k).round() as u32).max(1);
    let mut image = if w0 == PAGE_WIDTH as u32 {
        raw.screenshot
    } else {
        image::imageops::resize(&raw.screenshot, PAGE_WIDTH as u32, full_h, image::imageops::FilterType::Triangle)
    };
    let truncated = image.height() > MAX_IMAGE_HEIGHT as u32;
    if truncated {
        image = image::imageops::crop_imm(&image, 0, 0, PAGE_WIDTH as u32, MAX_IMAGE_HEIGHT as u32).to_image();
    }
    let (iw, ih) = image.dimensions();
    let mut links = Vec::new();
    for a in &raw.anchors {
        let Some(target) = link_target(page, &a.href) else { continue };
        let Some(entry) = scale_box(a, k, iw, ih, target) else { continue };
        links.push(entry);
    }
    PageCapture { image, links, source_url: page.to_string(), truncated }
}

/// Keeps absolute or relative http(s) targets, resolved against the page,
/// with any fragment removed. Same-page and non-HTTP links are dropped.
pub fn link_target(page: &Url, href: &str) -> Option<String> {
    let href = href.trim();
    if href.is_empty() || href.starts_with('#') {
        return None;
    }
    let mut target = page.join(href).ok()?;
    if !matches!(target.scheme(), "http" | "https") {
        return None;
    }
    target.set_fragment(None);
    let mut here = page.clone();
    here.set_fragment(None);
    if target == here {
        return None;
    }
    Some(target.to_string())
}

fn scale_box(a: &Anchor, k: f64, iw: u32, ih: u32, target: String) -> Option<ClickMapEntry> {
    if !(a.w > 0.0 && a.h > 0.0) || a.x + a.w <= 0.0 || a.y + a.h <= 0.0 {
        return None;
    }
    let x = (a.x.max(0.0) * k).floor() as u32;
    let y = (a.y.max(0.0) * k).floor() as u32;
    let w = (a.w * k).ceil() as u32;
    let h = (a.h * k).ceil() as u32;
    if x >= iw || y >= ih {
        return None;
    }
    let w = w.min(iw - x);
    let h = h.min(ih - y);
    Some(ClickMapEntry::new(x as u16, y as u16, w as u16, h as u16, target))
}

/// A captured page ready for transmission, plus its push candidates.
#[derive(Debug, Clone)]
pub struct RenderedPage {
    pub file: SonicFile,
    pub push_links: Vec<ClickMapEntry>,
}

pub fn render_page(
    request_id: u32,
    capture: &PageCapture,
    cfg: &RenderConfig,
    created_at: u64,
) -> Result<RenderedPage, RenderError> {
    let set = compress_strips(&capture.image, cfg.quality, cfg.strip_height, cfg.codec)?;
    let lengths = set.strips.iter().map(|s| s.len() as u32).collect();
    let mut meta = SonicMetadata::webpage(
        request_id,
        capture.image.height() as u16,
        cfg.strip_height,
        cfg.codec,
        lengths,
        &capture.source_url,
        created_at,
    );
    if capture.truncated {
        meta.flags |= crate::format::FLAG_TRUNCATED;
    }
    let links = if capture.links.len() > crate::format::MAX_LINKS {
        capture.links[..crate::format::MAX_LINKS].to_vec()
    } else {
        capture.links.clone()
    };
    let file = SonicFile::new(meta, links, set.strips.concat())?;
    Ok(RenderedPage { file, push_links: select_push_links(&capture.links, PUSH_LINKS) })
}

pub fn render_text_file(request_id: u32, prompt: &str, text: &str, created_at: u64) -> Result<SonicFile, RenderError> {
    let meta = SonicMetadata::llm_text(request_id, text.len(), &truncate_utf8(prompt, crate::format::MAX_STRING_LEN), created_at);
    Ok(SonicFile::new(meta, vec![], text.as_bytes().to_vec())?)
}
