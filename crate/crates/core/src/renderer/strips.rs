use image::{codecs::jpeg::JpegEncoder, ImageFormat, RgbImage};

use super::RenderError;
use crate::format::Codec;

pub const DEFAULT_QUALITY: u8 = 10;
pub const DEFAULT_STRIP_HEIGHT: u16 = 64;

/// Horizontal bands of one image, each compressed on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct StripSet {
    pub width: u32,
    pub height: u32,
    pub strip_height: u16,
    pub codec: Codec,
    pub strips: Vec<Vec<u8>>,
}

impl StripSet {
    pub fn total_bytes(&self) -> usize {
        self.strips.iter().map(Vec::len).sum()
    }

    /// Height of strip `i`; the last one may be short.
    pub fn strip_rows(&self, i: usize) -> u32 {
        strip_rows(self.height, self.strip_height, i)
    }
}

pub(crate) fn strip_rows(height: u32, strip_height: u16, i: usize) -> u32 {
    let start = i as u32 * strip_height as u32;
    (height - start).min(strip_height as u32)
}

pub(crate) fn default_codec() -> Codec {
    if cfg!(feature = "webp") {
        Codec::Webp
    } else {
        Codec::Jpeg
    }
}

pub fn compress_strips(image: &RgbImage, quality: u8, strip_height: u16, codec: Codec) -> Result<StripSet, RenderError> {
    if strip_height == 0 {
        return Err(RenderError::Codec("strip height must be positive".into()));
    }
    let (w, h) = image.dimensions();
    let count = (h as usize).div_ceil(strip_height as usize);
    let mut strips = Vec::with_capacity(count);
    for i in 0..count {
        let rows = strip_rows(h, strip_height, i);
        let band = image::imageops::crop_imm(image, 0, i as u32 * strip_height as u32, w, rows).to_image();
        strips.push(encode(&band, quality, codec)?);
    }
    Ok(StripSet { width: w, height: h, strip_height, codec, strips })
}

fn encode(band: &RgbImage, quality: u8, codec: Codec) -> Result<Vec<u8>, RenderError> {
    let (w, h) = band.dimensions();
    match codec {
        Codec::Raw => Ok(band.as_raw().clone()),
        Codec::Jpeg => {
            let mut out = Vec::new();
            JpegEncoder::new_with_quality(&mut out, quality.clamp(1, 100))
                .encode(band.as_raw(), w, h, image::ExtendedColorType::Rgb8)
                .map_err(|e| RenderError::Codec(e.to_string()))?;
            Ok(out)
        }
        #[cfg(feature = "webp")]
        Codec::Webp => {
            let enc = webp::Encoder::from_rgb(band.as_raw(), w, h);
            Ok(enc.encode(quality as f32).to_vec())
        }
        #[cfg(not(feature = "webp"))]
        Codec::Webp => Err(RenderError::Codec("built without WebP support".into())),
        Codec::None => Err(RenderError::Codec("no codec for a raster".into())),
    }
}

/// Decodes one strip; the result must be `width × rows`.
pub fn decode_strip(bytes: &[u8], codec: Codec, width: u32, rows: u32) -> Result<RgbImage, RenderError> {
    let img = match codec {
        Codec::Raw => RgbImage::from_raw(width, rows, bytes.to_vec())
            .ok_or_else(|| RenderError::Codec("raw strip has the wrong size".into()))?,
        Codec::Jpeg => image::load_from_memory_with_format(bytes, ImageFormat::Jpeg)
            .map_err(|e| RenderError::Codec(e.to_string()))?
            .to_rgb8(),
        #[cfg(feature = "webp")]
        Codec::Webp => {
            let d = webp::Decoder::new(bytes).decode().ok_or_else(|| RenderError::Codec("bad WebP strip".into()))?;
            let channels = if d.is_alpha() { 4 } else { 3 };
            let mut rgb = RgbImage::new(d.width(), d.height());
            for (px, src) in rgb.pixels_mut().zip(d.chunks_exact(channels)) {
                *px = image::Rgb([src[0], src[1], src[2]]);
            }
            rgb
        }
        #[cfg(not(feature = "webp"))]
        Codec::Webp => return Err(RenderError::Codec("built without WebP support".into())),
        Codec::None => return Err(RenderError::Codec("no codec for a raster".into())),
    };
    if img.dimensions() != (width, rows) {
        return Err(RenderError::Codec(format!("strip decoded to {:?}, expected {width}x{rows}", img.dimensions())));
    }
    Ok(img)
}

pub fn decode_strips(set: &StripSet) -> Result<RgbImage, RenderError> {
    let mut out = RgbImage::new(set.width, set.height);
    for (i, s) in set.strips.iter().enumerate() {
        let rows = set.strip_rows(i);
        let band = decode_strip(s, set.codec, set.width, rows)?;
        image::imageops::replace(&mut out, &band, 0, i as i64 * set.strip_height as i64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(h: u32) -> RgbImage {
        RgbImage::from_fn(320, h, |x, y| image::Rgb([(x % 256) as u8, (y % 256) as u8, 128]))
    }

    #[test]
    fn tiles_exactly() {
        let set = compress_strips(&gradient(640), 10, 64, Codec::Jpeg).unwrap();
        assert_eq!(set.strips.len(), 10);
        let set = compress_strips(&gradient(650), 10, 64, Codec::Jpeg).unwrap();
        assert_eq!(set.strips.len(), 11);
        assert_eq!(set.strip_rows(10), 10);
        let rows: u32 = (0..set.strips.len()).map(|i| set.strip_rows(i)).sum();
        assert_eq!(rows, 650);
    }

    #[test]
    fn each_codec_roundtrips_dimensions() {
        let img = gradient(150);
        let mut codecs = vec![Codec::Jpeg, Codec::Raw];
        if cfg!(feature = "webp") {
            codecs.push(Codec::Webp);
        }
        for codec in codecs {
            let set = compress_strips(&img, 10, 64, codec).unwrap();
            let back = decode_strips(&set).unwrap();
            assert_eq!(back.dimensions(), img.dimensions(), "{codec:?}");
            // Strips decode in isolation.
            let third = decode_strip(&set.strips[2], codec, 320, 22).unwrap();
            assert_eq!(third.dimensions(), (320, 22));
        }
        let raw = compress_strips(&img, 10, 64, Codec::Raw).unwrap();
        assert_eq!(decode_strips(&raw).unwrap(), img);
    }
}
