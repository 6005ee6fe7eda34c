//! The SONIC container: metadata (`MDTA`), click map (`LNKS`), payload
//! marker (`SDTA`) and CRC-protected `C137` frames.
//!
//! The byte layout is documented field by field in `FORMAT.md` at the
//! repository root. Everything in this module is a pure function over its
//! inputs.

mod crc;
mod file;
mod frame;
mod metadata;

pub use crc::crc32;
pub use file::{decode_frames, DecodedSession, SonicFile};
pub use frame::{
    frame_extent, frame_payload, frame_payload_from, parse_frame, reassemble, serialize_frame,
    Frame, Reassembly, FRAME_HEADER_LEN, FRAME_MAGIC, FRAME_OVERHEAD, FRAME_PAYLOAD_SIZE,
    KEEPALIVE_SEQ, MAX_FRAME_LEN,
};
pub use metadata::{
    parse_metadata, serialize_metadata, ClickMapEntry, Codec, ContentType, SonicMetadata,
    FLAG_TRUNCATED, FORMAT_VERSION, MAX_IMAGE_HEIGHT, MAX_LINKS, MAX_STRING_LEN, PAGE_WIDTH,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("missing MDTA magic")]
    MissingMagic,
    #[error("input truncated")]
    Truncated,
    #[error("malformed click map section: {0}")]
    MalformedLinks(&'static str),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("bad frame magic")]
    BadMagic,
    #[error("frame CRC mismatch")]
    BadCrc,
    #[error("payload of {0} bytes does not fit the frame sequence space")]
    PayloadTooLarge(usize),
    #[error("frame payload of {0} bytes exceeds the frame size")]
    FrameTooLarge(usize),
    #[error("{0} click-map entries exceed the 65535 limit")]
    TooManyLinks(usize),
    #[error("string field of {0} bytes exceeds 1024")]
    StringTooLong(usize),
    #[error("invalid metadata: {0}")]
    InvalidMetadata(&'static str),
    #[error("metadata frames missing")]
    MetadataLost,
}
