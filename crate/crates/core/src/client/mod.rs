//! Receiver side: PCM in, concealed pages and text out, plus the item
//! store and click handling behind the local UI API.

mod conceal;
mod receiver;
mod store;

pub use conceal::{conceal, MissingMask, MID_GRAY};
pub use receiver::{
    frame_channel_loss, receive_over_frame_channel, Receiver, ReceiverConfig, ReceiverEvent,
    ONLINE_EXPIRY_S,
};
pub use store::{DirStore, ItemStore, MemoryStore, StoreError, EVICT_AFTER_S};

use std::io::Cursor;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::format::{ClickMapEntry, Codec, ContentType, DecodedSession, SonicMetadata, PAGE_WIDTH};
use crate::hub::{decode_hub, HubEntry, HUB_SOURCE};
use crate::renderer::decode_strip;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Completion {
    Complete,
    PartialViewable,
    Failed,
}

pub const DEFAULT_VIEWABLE_LOSS: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceivedItem {
    pub id: u32,
    pub metadata: SonicMetadata,
    pub click_map: Vec<ClickMapEntry>,
    pub loss_percent: f64,
    pub complete: bool,
    pub received_at: f64,
    pub last_accessed: f64,
    /// Pixels filled in by concealment.
    pub concealed_pixels: usize,
    pub text: Option<String>,
    /// Concealed raster as PNG; stored beside the JSON by file stores.
    #[serde(skip)]
    pub image_png: Option<Vec<u8>>,
}

impl ReceivedItem {
    pub fn is_hub(&self) -> bool {
        self.metadata.content_type == ContentType::LlmText && self.metadata.source == HUB_SOURCE
    }

    pub fn hub_entries(&self) -> Option<Vec<HubEntry>> {
        if !self.is_hub() || !self.complete {
            return None;
        }
        decode_hub(self.text.as_deref()?)
    }

    pub fn image(&self) -> Option<RgbImage> {
        let png = self.image_png.as_ref()?;
        image::load_from_memory_with_format(png, image::ImageFormat::Png).ok().map(|i| i.to_rgb8())
    }

    pub fn summary(&self) -> ItemSummary {
        ItemSummary {
            id: self.id,
            kind: self.metadata.content_type,
            subject: self.metadata.source.clone(),
            loss_percent: self.loss_percent,
            complete: self.complete,
            completion: classify_completion(self, DEFAULT_VIEWABLE_LOSS),
            received_at: self.received_at,
            last_accessed: self.last_accessed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemSummary {
    pub id: u32,
    pub kind: ContentType,
    pub subject: String,
    pub loss_percent: f64,
    pub complete: bool,
    pub completion: Completion,
    pub received_at: f64,
    pub last_accessed: f64,
}

/// Turns a decoded session into a stored item: strips whose bytes all
/// arrived are decoded, the rest are concealed.
pub fn build_item(session: &DecodedSession, now: f64) -> ReceivedItem {
    let meta = &session.metadata;
    let r = &session.reassembly;
    let loss = r.loss_percent();
    let mut item = ReceivedItem {
        id: meta.request_id,
        metadata: meta.clone(),
        click_map: session.click_map.clone(),
        loss_percent: loss,
        complete: r.is_complete(),
        received_at: now,
        last_accessed: now,
        concealed_pixels: 0,
        text: None,
        image_png: None,
    };
    match meta.content_type {
        ContentType::LlmText => {
            item.text = Some(String::from_utf8_lossy(&r.payload).into_owned());
        }
        ContentType::Webpage => {
            let (raster, mask) = decode_raster(meta, &r.payload, &r.missing);
            let filled = conceal(&raster, &mask);
            item.concealed_pixels = mask.count();
            let mut png = Vec::new();
            filled
                .write_to(&mut Cursor::new(&mut png), image::ImageFormat::Png)
                .expect("PNG encoding to memory");
            item.image_png = Some(png);
        }
    }
    item
}

/// Raster with lost or undecodable strips left black and flagged.
pub fn decode_raster(meta: &SonicMetadata, payload: &[u8], missing: &[bool]) -> (RgbImage, MissingMask) {
    let width = PAGE_WIDTH as u32;
    let height = meta.image_height as u32;
    let mut raster = RgbImage::new(width, height);
    let mut mask = MissingMask::none(width, height);
    let sh = meta.strip_height as u32;
    for (i, range) in meta.strip_ranges().into_iter().enumerate() {
        let top = i as u32 * sh;
        let rows = (height - top).min(sh);
        let intact = range.end <= payload.len() && !missing[range.clone()].iter().any(|m| *m);
        let decoded = if intact && meta.codec != Codec::None {
            decode_strip(&payload[range], meta.codec, width, rows).ok()
        } else {
            None
        };
        match decoded {
            Some(band) => image::imageops::replace(&mut raster, &band, 0, top as i64),
            None => mask.set_rows(top..top + rows),
        }
    }
    (raster, mask)
}

pub fn classify_completion(item: &ReceivedItem, viewable_loss: f64) -> Completion {
    if item.complete && item.loss_percent == 0.0 {
        return Completion::Complete;
    }
    match item.metadata.content_type {
        ContentType::LlmText => Completion::Failed,
        ContentType::Webpage if item.loss_percent <= viewable_loss => Completion::PartialViewable,
        ContentType::Webpage => Completion::Failed,
    }
}

/// Resolves a tap on a page shown `screen_width` pixels wide.
pub fn map_click(item: &ReceivedItem, x_screen: f64, y_screen: f64, screen_width: f64) -> Option<String> {
    if item.metadata.content_type != ContentType::Webpage || screen_width <= 0.0 {
        return None;
    }
    let s = screen_width / PAGE_WIDTH as f64;
    let (x, y) = (x_screen / s, y_screen / s);
    item.click_map
        .iter()
        .enumerate()
        .filter(|(_, e)| e.contains(x, y))
        .min_by_key(|(i, e)| (e.y, *i))
        .map(|(_, e)| e.target_url.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{SonicFile, SonicMetadata};

    fn page_item(links: Vec<ClickMapEntry>) -> ReceivedItem {
        let meta = SonicMetadata::webpage(1, 200, 64, Codec::Raw, vec![320 * 64 * 3, 320 * 64 * 3, 320 * 64 * 3, 320 * 8 * 3], "https://a.test/", 0);
        ReceivedItem {
            id: 1,
            metadata: meta,
            click_map: links,
            loss_percent: 0.0,
            complete: true,
            received_at: 0.0,
            last_accessed: 0.0,
            concealed_pixels: 0,
            text: None,
            image_png: None,
        }
    }

    #[test]
    fn click_scaling() {
        let item = page_item(vec![
            ClickMapEntry::new(10, 20, 100, 30, "https://a.test/one"),
            ClickMapEntry::new(50, 40, 100, 30, "https://a.test/two"),
        ]);
        assert_eq!(map_click(&item, 15.0, 25.0, 320.0).as_deref(), Some("https://a.test/one"));
        assert_eq!(map_click(&item, 30.0, 50.0, 640.0).as_deref(), Some("https://a.test/one"));
        // Overlap at (60, 45): the box nearer the top wins.
        assert_eq!(map_click(&item, 60.0, 45.0, 320.0).as_deref(), Some("https://a.test/one"));
        assert_eq!(map_click(&item, 60.0, 65.0, 320.0).as_deref(), Some("https://a.test/two"));
        assert_eq!(map_click(&item, 300.0, 190.0, 320.0), None);
    }

    #[test]
    fn classification() {
        let mut item = page_item(vec![]);
        assert_eq!(classify_completion(&item, 50.0), Completion::Complete);
        item.complete = false;
        item.loss_percent = 10.0;
        assert_eq!(classify_completion(&item, 50.0), Completion::PartialViewable);
        item.loss_percent = 60.0;
        assert_eq!(classify_completion(&item, 50.0), Completion::Failed);

        let meta = SonicMetadata::llm_text(2, 1600, "q", 0);
        let mut text = ReceivedItem { metadata: meta, ..page_item(vec![]) };
        assert_eq!(classify_completion(&text, 50.0), Completion::Complete);
        text.complete = false;
        text.loss_percent = 25.0;
        assert_eq!(classify_completion(&text, 50.0), Completion::Failed);
    }

    #[test]
    fn build_from_partial_session() {
        let img = RgbImage::from_fn(320, 200, |x, y| image::Rgb([x as u8, y as u8, 7]));
        let set = crate::renderer::compress_strips(&img, 10, 64, Codec::Raw).unwrap();
        let lengths = set.strips.iter().map(|s| s.len() as u32).collect();
        let meta = SonicMetadata::webpage(5, 200, 64, Codec::Raw, lengths, "https://a.test/", 0);
        let file = SonicFile::new(meta, vec![], set.strips.concat()).unwrap();
        let mut frames = file.transmission_frames().unwrap();
        // Lose one frame inside the second strip.
        let k = file.metadata.first_seq as usize;
        frames.remove(k + 130);
        let session = crate::format::decode_frames(&frames).unwrap();
        let item = build_item(&session, 10.0);
        assert!(!item.complete);
        assert_eq!(item.concealed_pixels, 320 * 64);
        let out = item.image().unwrap();
        assert_eq!(out.get_pixel(5, 64), img.get_pixel(5, 63));
        assert_eq!(out.get_pixel(5, 150), img.get_pixel(5, 150));
    }
}
