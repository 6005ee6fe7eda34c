use std::collections::BTreeMap;

use super::{
    frame_extent, frame_payload_from, parse_frame, parse_metadata, reassemble, serialize_frame,
    serialize_metadata, ClickMapEntry, FormatError, Frame, Reassembly, SonicMetadata,
    FRAME_PAYLOAD_SIZE,
};

/// One broadcast transmission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SonicFile {
    pub metadata: SonicMetadata,
    pub click_map: Vec<ClickMapEntry>,
    pub payload: Vec<u8>,
}

impl SonicFile {
    /// Fills in `payload_length`, `frame_count` and `first_seq` from the
    /// payload and the size of the metadata section, then validates.
    pub fn new(
        mut metadata: SonicMetadata,
        click_map: Vec<ClickMapEntry>,
        payload: Vec<u8>,
    ) -> Result<Self, FormatError> {
        metadata.payload_length =
            u32::try_from(payload.len()).map_err(|_| FormatError::PayloadTooLarge(payload.len()))?;
        let count = payload.len().div_ceil(FRAME_PAYLOAD_SIZE);
        metadata.frame_count =
            u16::try_from(count).map_err(|_| FormatError::PayloadTooLarge(payload.len()))?;
        metadata.first_seq = 0;
        let header = serialize_metadata(&metadata, &click_map)?;
        metadata.first_seq = header.len().div_ceil(FRAME_PAYLOAD_SIZE) as u16;
        metadata.validate()?;
        Ok(Self { metadata, click_map, payload })
    }

    pub fn header_bytes(&self) -> Result<Vec<u8>, FormatError> {
        serialize_metadata(&self.metadata, &self.click_map)
    }

    /// Metadata section followed by the serialized payload frames.
    pub fn to_bytes(&self) -> Result<Vec<u8>, FormatError> {
        let mut out = self.header_bytes()?;
        for frame in frame_payload_from(&self.payload, self.metadata.first_seq)? {
            out.extend_from_slice(&serialize_frame(&frame)?);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let (metadata, click_map, mut pos) = parse_metadata(bytes)?;
        let mut frames = Vec::new();
        while pos < bytes.len() {
            let len = frame_extent(&bytes[pos..])?;
            frames.push(parse_frame(&bytes[pos..pos + len])?);
            pos += len;
        }
        let r = reassemble(&metadata, &frames);
        if !r.is_complete() {
            return Err(FormatError::Truncated);
        }
        Ok(Self { metadata, click_map, payload: r.payload })
    }

    /// The frames put on air: the metadata section split across
    /// `0..first_seq`, then the payload frames.
    pub fn transmission_frames(&self) -> Result<Vec<Frame>, FormatError> {
        let header = self.header_bytes()?;
        let mut frames: Vec<Frame> = header
            .chunks(FRAME_PAYLOAD_SIZE)
            .enumerate()
            .map(|(i, c)| Frame::new(i as u16, c.to_vec()))
            .collect();
        debug_assert_eq!(frames.len(), self.metadata.first_seq as usize);
        frames.extend(frame_payload_from(&self.payload, self.metadata.first_seq)?);
        Ok(frames)
    }
}

/// What a receiver recovers from the frames of one transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedSession {
    pub metadata: SonicMetadata,
    pub click_map: Vec<ClickMapEntry>,
    pub reassembly: Reassembly,
}

/// Rebuilds a transmission from the frames that survived. Fails with
/// `MetadataLost` when any metadata frame is missing, since the payload
/// cannot be interpreted without it.
pub fn decode_frames<'a, I>(frames: I) -> Result<DecodedSession, FormatError>
where
    I: IntoIterator<Item = &'a Frame>,
{
    let mut by_seq: BTreeMap<u16, &Frame> = BTreeMap::new();
    for f in frames {
        if !f.is_keepalive() {
            by_seq.insert(f.seq, f);
        }
    }

    let mut header = Vec::new();
    let mut seq = 0u16;
    loop {
        let Some(frame) = by_seq.get(&seq) else {
            return Err(FormatError::MetadataLost);
        };
        header.extend_from_slice(&frame.payload);
        seq += 1;
        match parse_metadata(&header) {
            Ok((metadata, click_map, _)) => {
                if metadata.first_seq != seq {
                    return Err(FormatError::InvalidMetadata("first_seq disagrees with the header size"));
                }
                let reassembly = reassemble(&metadata, by_seq.values().copied());
                return Ok(DecodedSession { metadata, click_map, reassembly });
            }
            Err(FormatError::Truncated) if frame.payload.len() == FRAME_PAYLOAD_SIZE => continue,
            Err(FormatError::Truncated) => return Err(FormatError::MetadataLost),
            Err(e) => return Err(e),
        }
    }
}
