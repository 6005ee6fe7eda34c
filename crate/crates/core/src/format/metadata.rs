use serde::{Deserialize, Serialize};

use super::{FormatError, FRAME_PAYLOAD_SIZE, KEEPALIVE_SEQ};

pub const FORMAT_VERSION: u16 = 1;
pub const PAGE_WIDTH: u16 = 320;
pub const MAX_IMAGE_HEIGHT: u16 = 10_000;
pub const MAX_STRING_LEN: usize = 1024;
pub const MAX_LINKS: usize = u16::MAX as usize;

const MDTA: &[u8; 4] = b"MDTA";
const LNKS: &[u8; 4] = b"LNKS";
const SDTA: &[u8; 4] = b"SDTA";

/// Metadata flag: the page was cut at the height limit.
pub const FLAG_TRUNCATED: u8 = 0x01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentType {
    Webpage,
    LlmText,
}

impl ContentType {
    fn to_byte(self) -> u8 {
        match self {
            ContentType::Webpage => 0,
            ContentType::LlmText => 1,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(ContentType::Webpage),
            1 => Some(ContentType::LlmText),
            _ => None,
        }
    }
}

/// Raster codec used for the strips of a webpage payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Codec {
    None,
    Webp,
    Jpeg,
    /// Uncompressed 8-bit RGB rows.
    Raw,
}

impl Codec {
    pub fn to_byte(self) -> u8 {
        match self {
            Codec::None => 0,
            Codec::Webp => 1,
            Codec::Jpeg => 2,
            Codec::Raw => 3,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Codec::None),
            1 => Some(Codec::Webp),
            2 => Some(Codec::Jpeg),
            3 => Some(Codec::Raw),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SonicMetadata {
    pub request_id: u32,
    pub content_type: ContentType,
    pub flags: u8,
    pub payload_length: u32,
    pub frame_count: u16,
    /// Sequence number of the first payload frame; metadata frames occupy
    /// `0..first_seq` on the air.
    pub first_seq: u16,
    pub image_width: u16,
    pub image_height: u16,
    pub strip_height: u16,
    pub codec: Codec,
    /// Compressed size of each strip, top to bottom. Their sum is the payload length.
    pub strip_lengths: Vec<u32>,
    pub source: String,
    pub created_at: u64,
}

impl SonicMetadata {
    pub fn llm_text(request_id: u32, payload_length: usize, source: &str, created_at: u64) -> Self {
        Self {
            request_id,
            content_type: ContentType::LlmText,
            flags: 0,
            payload_length: payload_length as u32,
            frame_count: payload_length.div_ceil(FRAME_PAYLOAD_SIZE) as u16,
            first_seq: 0,
            image_width: 0,
            image_height: 0,
            strip_height: 0,
            codec: Codec::None,
            strip_lengths: Vec::new(),
            source: source.to_owned(),
            created_at,
        }
    }

    pub fn webpage(
        request_id: u32,
        image_height: u16,
        strip_height: u16,
        codec: Codec,
        strip_lengths: Vec<u32>,
        source: &str,
        created_at: u64,
    ) -> Self {
        let payload_length: usize = strip_lengths.iter().map(|l| *l as usize).sum();
        Self {
            request_id,
            content_type: ContentType::Webpage,
            flags: 0,
            payload_length: payload_length as u32,
            frame_count: payload_length.div_ceil(FRAME_PAYLOAD_SIZE) as u16,
            first_seq: 0,
            image_width: PAGE_WIDTH,
            image_height,
            strip_height,
            codec,
            strip_lengths,
            source: source.to_owned(),
            created_at,
        }
    }

    pub fn truncated(&self) -> bool {
        self.flags & FLAG_TRUNCATED != 0
    }

    /// Byte range of each strip within the payload.
    pub fn strip_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0usize;
        self.strip_lengths
            .iter()
            .map(|len| {
                let r = start..start + *len as usize;
                start = r.end;
                r
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), FormatError> {
        use FormatError::InvalidMetadata as Invalid;
        let expected_frames = (self.payload_length as usize).div_ceil(FRAME_PAYLOAD_SIZE);
        if self.frame_count as usize != expected_frames {
            return Err(Invalid("frame_count does not match payload_length"));
        }
        if self.first_seq as usize + self.frame_count as usize >= KEEPALIVE_SEQ as usize {
            return Err(Invalid("frame sequence overflows into the keepalive"));
        }
        if self.source.len() > MAX_STRING_LEN {
            return Err(FormatError::StringTooLong(self.source.len()));
        }
        match self.content_type {
            ContentType::LlmText => {
                if self.image_width != 0 || self.image_height != 0 || self.strip_height != 0 {
                    return Err(Invalid("LLM_TEXT carries no image geometry"));
                }
                if !self.strip_lengths.is_empty() {
                    return Err(Invalid("LLM_TEXT carries no strips"));
                }
            }
            ContentType::Webpage => {
                if self.image_width != PAGE_WIDTH {
                    return Err(Invalid("webpage width must be 320"));
                }
                if self.image_height > MAX_IMAGE_HEIGHT {
                    return Err(Invalid("image taller than 10000 px"));
                }
                if self.strip_height == 0 && self.image_height > 0 {
                    return Err(Invalid("strip_height is zero"));
                }
                let strips = if self.image_height == 0 {
                    0
                } else {
                    (self.image_height as usize).div_ceil(self.strip_height as usize)
                };
                if self.strip_lengths.len() != strips {
                    return Err(Invalid("strip count does not tile the image"));
                }
                let total: u64 = self.strip_lengths.iter().map(|l| *l as u64).sum();
                if total != self.payload_length as u64 {
                    return Err(Invalid("strip lengths do not sum to payload_length"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClickMapEntry {
    pub x: u16,
    pub y: u16,
    pub w: u16,
    pub h: u16,
    pub target_url: String,
}

impl ClickMapEntry {
    pub fn new(x: u16, y: u16, w: u16, h: u16, target_url: impl Into<String>) -> Self {
        Self { x, y, w, h, target_url: target_url.into() }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x as f64
            && x < (self.x as u32 + self.w as u32) as f64
            && y >= self.y as f64
            && y < (self.y as u32 + self.h as u32) as f64
    }

    fn fits(&self, width: u16, height: u16) -> bool {
        self.w > 0
            && self.h > 0
            && self.x as u32 + self.w as u32 <= width as u32
            && self.y as u32 + self.h as u32 <= height as u32
    }
}

pub fn serialize_metadata(
    meta: &SonicMetadata,
    links: &[ClickMapEntry],
) -> Result<Vec<u8>, FormatError> {
    meta.validate()?;
    if links.len() > MAX_LINKS {
        return Err(FormatError::TooManyLinks(links.len()));
    }
    if meta.strip_lengths.len() > u16::MAX as usize {
        return Err(FormatError::InvalidMetadata("too many strips"));
    }
    for link in links {
        if link.target_url.len() > MAX_STRING_LEN {
            return Err(FormatError::StringTooLong(link.target_url.len()));
        }
        if !link.fits(meta.image_width, meta.image_height) {
            return Err(FormatError::InvalidMetadata("click-map entry outside the image"));
        }
    }

    let mut out = Vec::with_capacity(64 + meta.source.len() + links.len() * 24);
    out.extend_from_slice(MDTA);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&meta.request_id.to_le_bytes());
    out.push(meta.content_type.to_byte());
    out.push(meta.flags);
    out.extend_from_slice(&meta.payload_length.to_le_bytes());
    out.extend_from_slice(&meta.frame_count.to_le_bytes());
    out.extend_from_slice(&meta.first_seq.to_le_bytes());
    out.extend_from_slice(&meta.image_width.to_le_bytes());
    out.extend_from_slice(&meta.image_height.to_le_bytes());
    out.extend_from_slice(&meta.strip_height.to_le_bytes());
    out.push(meta.codec.to_byte());
    out.extend_from_slice(&meta.created_at.to_le_bytes());
    put_str(&mut out, &meta.source);
    out.extend_from_slice(&(meta.strip_lengths.len() as u16).to_le_bytes());
    for len in &meta.strip_lengths {
        out.extend_from_slice(&len.to_le_bytes());
    }

    out.extend_from_slice(LNKS);
    out.extend_from_slice(&(links.len() as u16).to_le_bytes());
    for link in links {
        for v in [link.x, link.y, link.w, link.h] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        put_str(&mut out, &link.target_url);
    }
    out.extend_from_slice(SDTA);
    Ok(out)
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u16).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).ok_or(FormatError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(FormatError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, FormatError> {
        let len = self.u16()? as usize;
        if len > MAX_STRING_LEN {
            return Err(FormatError::StringTooLong(len));
        }
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| FormatError::InvalidMetadata("non-UTF-8 string"))
    }
}

/// Parses `MDTA … LNKS … SDTA` from the start of `bytes`. Returns the
/// metadata, the click map, and the offset just past `SDTA`.
pub fn parse_metadata(
    bytes: &[u8],
) -> Result<(SonicMetadata, Vec<ClickMapEntry>, usize), FormatError> {
    if bytes.len() < 4 {
        // A short prefix of "MDTA" may still be a truncated section.
        return if !bytes.is_empty() && MDTA.starts_with(bytes) {
            Err(FormatError::Truncated)
        } else {
            Err(FormatError::MissingMagic)
        };
    }
    if &bytes[..4] != MDTA {
        return Err(FormatError::MissingMagic);
    }
    let mut r = Reader { buf: bytes, pos: 4 };
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let request_id = r.u32()?;
    let content_type = ContentType::from_byte(r.u8()?)
        .ok_or(FormatError::InvalidMetadata("unknown content type"))?;
    let flags = r.u8()?;
    let payload_length = r.u32()?;
    let frame_count = r.u16()?;
    let first_seq = r.u16()?;
    let image_width = r.u16()?;
    let image_height = r.u16()?;
    let strip_height = r.u16()?;
    let codec = Codec::from_byte(r.u8()?).ok_or(FormatError::InvalidMetadata("unknown codec"))?;
    let created_at = r.u64()?;
    let source = r.string()?;
    let strip_count = r.u16()? as usize;
    let mut strip_lengths = Vec::with_capacity(strip_count.min(1024));
    for _ in 0..strip_count {
        strip_lengths.push(r.u32()?);
    }
    let meta = SonicMetadata {
        request_id,
        content_type,
        flags,
        payload_length,
        frame_count,
        first_seq,
        image_width,
        image_height,
        strip_height,
        codec,
        strip_lengths,
        source,
        created_at,
    };

    if r.take(4)? != LNKS {
        return Err(FormatError::MalformedLinks("missing LNKS marker"));
    }
    let count = r.u16()? as usize;
    let mut links = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let x = r.u16()?;
        let y = r.u16()?;
        let w = r.u16()?;
        let h = r.u16()?;
        let target_url = r.string()?;
        let entry = ClickMapEntry { x, y, w, h, target_url };
        if !entry.fits(meta.image_width, meta.image_height) {
            return Err(FormatError::MalformedLinks("entry outside the image"));
        }
        links.push(entry);
    }
    if r.take(4)? != SDTA {
        return Err(FormatError::MalformedLinks("missing SDTA marker"));
    }
    meta.validate()?;
    Ok((meta, links, r.pos))
}
