//! Synthetic pages standing in for a real browser in stub mode and tests.
//! Text is drawn with hashed 5×7 pseudo-glyphs, which compress like text
//! without shipping a font.

use std::collections::HashMap;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Anchor, PageSource, RawCapture, RenderError, VIEWPORT};

#[derive(Debug, Clone, PartialEq)]
pub struct TextBlock {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub font_px: u32,
    pub fg: [u8; 3],
    pub bg: Option<[u8; 3]>,
    pub seed: u64,
}

/// A page laid out at the 375-px viewport width.
#[derive(Debug, Clone, PartialEq)]
pub struct FixturePage {
    pub height: u32,
    pub background: [u8; 3],
    pub blocks: Vec<TextBlock>,
    /// Solid rectangles (x, y, w, h, colour), drawn before text.
    pub panels: Vec<(u32, u32, u32, u32, [u8; 3])>,
    pub anchors: Vec<Anchor>,
}

impl FixturePage {
    pub fn blank() -> Self {
        Self { height: VIEWPORT.1, background: [255; 3], blocks: vec![], panels: vec![], anchors: vec![] }
    }

    /// A news-style article: banner, navigation links, headline, body
    /// paragraphs, a photo panel and a list of related links.
    pub fn article(seed: u64, height: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self { height, background: [255; 3], blocks: vec![], panels: vec![], anchors: vec![] };
        let w = VIEWPORT.0;
        p.panels.push((0, 0, w, 56, [20, 40, 90]));
        p.blocks.push(TextBlock { x: 16, y: 16, w: 200, h: 24, font_px: 22, fg: [255; 3], bg: None, seed: rng.gen() });
        let mut x = 12;
        for i in 0..4 {
            let lw = rng.gen_range(60..80);
            p.blocks.push(TextBlock { x, y: 64, w: lw, h: 18, font_px: 14, fg: [20, 40, 160], bg: None, seed: rng.gen() });
            p.anchors.push(Anchor { x: x as f64, y: 62.0, w: lw as f64, h: 22.0, href: format!("/section/{i}") });
            x += lw + 10;
        }
        let mut y = 100;
        p.blocks.push(TextBlock { x: 16, y, w: w - 32, h: 60, font_px: 24, fg: [10; 3], bg: None, seed: rng.gen() });
        p.anchors.push(Anchor { x: 16.0, y: y as f64, w: (w - 32) as f64, h: 60.0, href: "/story/lead".into() });
        y += 76;
        let mut story = 0;
        while y + 40 < height {
            match rng.gen_range(0..10) {
                0 => {
                    let ph = rng.gen_range(150..230).min(height - y);
                    let c = [rng.gen_range(60..200), rng.gen_range(60..200), rng.gen_range(60..200)];
                    p.panels.push((16, y, w - 32, ph, c));
                    y += ph + 16;
                }
                1 | 2 => {
                    for _ in 0..rng.gen_range(2..5) {
                        if y + 22 >= height {
                            break;
                        }
                        let lw = rng.gen_range(120..(w - 40));
                        p.blocks.push(TextBlock { x: 24, y, w: lw, h: 20, font_px: 15, fg: [20, 40, 160], bg: None, seed: rng.gen() });
                        p.anchors.push(Anchor { x: 24.0, y: y as f64, w: lw as f64, h: 20.0, href: format!("https://news.example/story/{story}") });
                        story += 1;
                        y += 28;
                    }
                    y += 12;
                }
                _ => {
                    let lines = rng.gen_range(3..9);
                    let bh = (lines * 22).min(height - y);
                    p.blocks.push(TextBlock { x: 16, y, w: w - 32, h: bh, font_px: 15, fg: [30; 3], bg: None, seed: rng.gen() });
                    y += bh + 14;
                }
            }
        }
        p
    }

    pub fn render(&self) -> RgbImage {
        let mut img = RgbImage::from_pixel(VIEWPORT.0, self.height.max(1), Rgb(self.background));
        for &(x, y, w, h, c) in &self.panels {
            fill(&mut img, x, y, w, h, c);
        }
        for b in &self.blocks {
            if let Some(bg) = b.bg {
                fill(&mut img, b.x, b.y, b.w, b.h, bg);
            }
            draw_text(&mut img, b);
        }
        img
    }
}

fn fill(img: &mut RgbImage, x: u32, y: u32, w: u32, h: u32, c: [u8; 3]) {
    for yy in y..(y + h).min(img.height()) {
        for xx in x..(x + w).min(img.width()) {
            img.put_pixel(xx, yy, Rgb(c));
        }
    }
}

fn glyph(code: u64) -> [u8; 7] {
    let mut rng = ChaCha8Rng::seed_from_u64(code.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut rows = [0u8; 7];
    for r in rows.iter_mut() {
        *r = rng.gen::<u8>() & 0x1F;
    }
    rows
}

fn draw_text(img: &mut RgbImage, b: &TextBlock) {
    let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
    let cw = (b.font_px / 2).max(4);
    let ch = (b.font_px * 7 / 10).max(5);
    let line_h = b.font_px * 3 / 2;
    let mut ly = b.y;
    while ly + ch <= b.y + b.h {
        let mut lx = b.x;
        let line_end = b.x + b.w - rng.gen_range(0..b.w / 4 + 1);
        loop {
            let word = rng.gen_range(2..9);
            if lx + word * (cw + 1) > line_end {
                break;
            }
            for _ in 0..word {
                let g = glyph(rng.gen_range(0..40));
                for py in 0..ch {
                    let row = g[(py * 7 / ch) as usize];
                    for px in 0..cw - 1 {
                        if row >> (4 - px * 5 / (cw - 1)) & 1 == 1 {
                            let (gx, gy) = (lx + px, ly + py);
                            if gx < img.width() && gy < img.height() {
                                img.put_pixel(gx, gy, Rgb(b.fg));
                            }
                        }
                    }
                }
                lx += cw + 1;
            }
            lx += cw;
        }
        ly += line_h;
    }
}

/// Serves fixture pages by exact URL; anything else times out.
#[derive(Debug, Clone, Default)]
pub struct FixtureBrowser {
    pages: HashMap<String, FixturePage>,
    /// Serve an article generated from the URL for unknown pages.
    pub synthesize: bool,
}

impl FixtureBrowser {
    pub fn new() -> Self {
        Self::default()
    }

    /// A browser that invents a page for every URL, for stub deployments.
    pub fn synthetic() -> Self {
        Self { pages: HashMap::new(), synthesize: true }
    }

    pub fn insert(&mut self, url: &str, page: FixturePage) {
        self.pages.insert(url.to_owned(), page);
    }
}

impl PageSource for FixtureBrowser {
    fn capture(&self, url: &str) -> Result<RawCapture, RenderError> {
        let page = match self.pages.get(url) {
            Some(p) => p.clone(),
            None if self.synthesize => {
                let seed = crate::format::crc32(&[url.as_bytes()]) as u64;
                let height = 1500 + (seed % 2500) as u32;
                FixturePage::article(seed, height)
            }
            None => return Err(RenderError::NavigationTimeout),
        };
        Ok(RawCapture { screenshot: page.render(), anchors: page.anchors.clone() })
    }
}
