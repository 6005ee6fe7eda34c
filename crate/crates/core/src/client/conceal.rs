use image::{Rgb, RgbImage};

/// Per-pixel "lost" flags, row-major, congruent with an image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingMask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl MissingMask {
    pub fn none(width: u32, height: u32) -> Self {
        Self { width, height, bits: vec![false; (width * height) as usize] }
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    pub fn set_rows(&mut self, rows: std::ops::Range<u32>) {
        let w = self.width as usize;
        for y in rows {
            self.bits[y as usize * w..(y as usize + 1) * w].iter_mut().for_each(|b| *b = true);
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

pub const MID_GRAY: Rgb<u8> = Rgb([128, 128, 128]);

/// Fills lost pixels from the nearest received pixel to the left in the
/// same row; a lost run starting at column 0 copies the (already filled)
/// pixel above, and the top-left corner falls back to mid-gray.
pub fn conceal(raster: &RgbImage, mask: &MissingMask) -> RgbImage {
    assert_eq!((mask.width, mask.height), raster.dimensions(), "mask must match the raster");
    let mut out = raster.clone();
    for y in 0..mask.height {
        let mut left: Option<Rgb<u8>> = None;
        for x in 0..mask.width {
            if !mask.get(x, y) {
                left = Some(*out.get_pixel(x, y));
                continue;
            }
            let v = match left {
                Some(v) => v,
                None if y > 0 => *out.get_pixel(x, y - 1),
                None => MID_GRAY,
            };
            out.put_pixel(x, y, v);
        }
    }
    out
}
