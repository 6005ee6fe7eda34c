use super::{crc32, FormatError, SonicMetadata};

pub const FRAME_MAGIC: [u8; 4] = *b"C137";
/// Maximum payload bytes carried by one frame.
pub const FRAME_PAYLOAD_SIZE: usize = 500;
/// magic + seq + length
pub const FRAME_HEADER_LEN: usize = 8;
/// header + trailing CRC
pub const FRAME_OVERHEAD: usize = FRAME_HEADER_LEN + 4;
pub const MAX_FRAME_LEN: usize = FRAME_OVERHEAD + FRAME_PAYLOAD_SIZE;
/// Reserved for the empty keepalive frame.
pub const KEEPALIVE_SEQ: u16 = 0xFFFF;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    pub seq: u16,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(seq: u16, payload: Vec<u8>) -> Self {
        Self { seq, payload }
    }

    pub fn keepalive() -> Self {
        Self { seq: KEEPALIVE_SEQ, payload: Vec::new() }
    }

    pub fn is_keepalive(&self) -> bool {
        self.seq == KEEPALIVE_SEQ && self.payload.is_empty()
    }

    /// CRC-32 over `seq ‖ length ‖ payload`, all little-endian.
    pub fn crc(&self) -> u32 {
        let len = self.payload.len() as u16;
        crc32(&[&self.seq.to_le_bytes(), &len.to_le_bytes(), &self.payload])
    }

    pub fn serialized_len(&self) -> usize {
        FRAME_OVERHEAD + self.payload.len()
    }
}

/// `"C137" ‖ seq:u16 ‖ length:u16 ‖ payload ‖ crc:u32`, little-endian.
pub fn serialize_frame(frame: &Frame) -> Result<Vec<u8>, FormatError> {
    if frame.payload.len() > FRAME_PAYLOAD_SIZE {
        return Err(FormatError::FrameTooLarge(frame.payload.len()));
    }
    let mut out = Vec::with_capacity(frame.serialized_len());
    out.extend_from_slice(&FRAME_MAGIC);
    out.extend_from_slice(&frame.seq.to_le_bytes());
    out.extend_from_slice(&(frame.payload.len() as u16).to_le_bytes());
    out.extend_from_slice(&frame.payload);
    out.extend_from_slice(&frame.crc().to_le_bytes());
    Ok(out)
}

/// Parses exactly one serialized frame. The CRC is verified before the
/// length field is trusted, so a corrupted length reads as `BadCrc`.
pub fn parse_frame(bytes: &[u8]) -> Result<Frame, FormatError> {
    if bytes.len() < FRAME_OVERHEAD {
        return Err(FormatError::Truncated);
    }
    if bytes[..4] != FRAME_MAGIC {
        return Err(FormatError::BadMagic);
    }
    let body = &bytes[4..bytes.len() - 4];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    if crc32(&[body]) != stored {
        return Err(FormatError::BadCrc);
    }
    let seq = u16::from_le_bytes([body[0], body[1]]);
    let len = u16::from_le_bytes([body[2], body[3]]) as usize;
    if len != body.len() - 4 {
        return Err(FormatError::BadCrc);
    }
    if len > FRAME_PAYLOAD_SIZE {
        return Err(FormatError::FrameTooLarge(len));
    }
    Ok(Frame { seq, payload: body[4..].to_vec() })
}

/// Length of the frame starting at `bytes[0]` according to its header, for
/// splitting a zero-padded slot. Does not validate the CRC.
pub fn frame_extent(bytes: &[u8]) -> Result<usize, FormatError> {
    if bytes.len() < FRAME_HEADER_LEN {
        return Err(FormatError::Truncated);
    }
    if bytes[..4] != FRAME_MAGIC {
        return Err(FormatError::BadMagic);
    }
    let len = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    if len > FRAME_PAYLOAD_SIZE {
        return Err(FormatError::FrameTooLarge(len));
    }
    let total = FRAME_OVERHEAD + len;
    if total > bytes.len() {
        return Err(FormatError::Truncated);
    }
    Ok(total)
}

/// Splits `payload` into 500-byte frames numbered from 0.
pub fn frame_payload(payload: &[u8]) -> Result<Vec<Frame>, FormatError> {
    frame_payload_from(payload, 0)
}

/// Splits `payload` into 500-byte frames numbered from `first_seq`.
pub fn frame_payload_from(payload: &[u8], first_seq: u16) -> Result<Vec<Frame>, FormatError> {
    let count = payload.len().div_ceil(FRAME_PAYLOAD_SIZE);
    if first_seq as usize + count >= KEEPALIVE_SEQ as usize {
        return Err(FormatError::PayloadTooLarge(payload.len()));
    }
    Ok(payload
        .chunks(FRAME_PAYLOAD_SIZE)
        .enumerate()
        .map(|(i, chunk)| Frame::new(first_seq + i as u16, chunk.to_vec()))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reassembly {
    pub payload: Vec<u8>,
    /// One entry per payload byte; `true` where the covering frame was lost.
    pub missing: Vec<bool>,
    pub frame_count: usize,
    pub received_frames: usize,
}

impl Reassembly {
    pub fn lost_frames(&self) -> usize {
        self.frame_count - self.received_frames
    }

    pub fn loss_percent(&self) -> f64 {
        if self.frame_count == 0 {
            0.0
        } else {
            100.0 * self.lost_frames() as f64 / self.frame_count as f64
        }
    }

    pub fn is_complete(&self) -> bool {
        self.received_frames == self.frame_count
    }
}

/// Rebuilds the payload described by `meta` from whatever payload frames
/// arrived. Frames outside the payload's sequence range are ignored; missing
/// frames leave zero bytes flagged in `missing`.
pub fn reassemble<'a, I>(meta: &SonicMetadata, frames: I) -> Reassembly
where
    I: IntoIterator<Item = &'a Frame>,
{
    let len = meta.payload_length as usize;
    let count = meta.frame_count as usize;
    let mut payload = vec![0u8; len];
    let mut missing = vec![true; len];
    let mut seen = vec![false; count];

    for frame in frames {
        let Some(index) = (frame.seq as usize).checked_sub(meta.first_seq as usize) else {
            continue;
        };
        if index >= count {
            continue;
        }
        let start = index * FRAME_PAYLOAD_SIZE;
        let end = (start + FRAME_PAYLOAD_SIZE).min(len);
        if frame.payload.len() != end - start {
            continue;
        }
        payload[start..end].copy_from_slice(&frame.payload);
        missing[start..end].iter_mut().for_each(|m| *m = false);
        seen[index] = true;
    }

    Reassembly {
        payload,
        missing,
        frame_count: count,
        received_frames: seen.iter().filter(|s| **s).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{ContentType, SonicMetadata};
    use proptest::prelude::*;

    #[test]
    fn keepalive_is_twelve_bytes() {
        let bytes = serialize_frame(&Frame::keepalive()).unwrap();
        assert_eq!(bytes.len(), 12);
        assert_eq!(&bytes[..4], b"C137");
        assert!(parse_frame(&bytes).unwrap().is_keepalive());
    }

    #[test]
    fn framing_1250_bytes() {
        let payload = vec![7u8; 1250];
        let frames = frame_payload(&payload).unwrap();
        let sizes: Vec<usize> = frames.iter().map(|f| f.payload.len()).collect();
        assert_eq!(sizes, vec![500, 500, 250]);
        assert_eq!(frames.iter().map(|f| f.seq).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(frame_payload(&[]).unwrap().is_empty());
    }

    #[test]
    fn crc_covers_seq_length_and_payload() {
        let frame = Frame::new(0, b"123456789".to_vec());
        // Independent check: the standard CRC over the explicit byte string;
        // the frozen constant is zlib.crc32(b"\x00\x00\x09\x00123456789").
        let mut hasher = crc32fast::Hasher::new();
        hasher.update(&[0, 0, 9, 0]);
        hasher.update(b"123456789");
        assert_eq!(frame.crc(), hasher.finalize());
        assert_eq!(frame.crc(), 0x59C4_558F);
    }

    #[test]
    fn payload_too_large() {
        let payload = vec![0u8; FRAME_PAYLOAD_SIZE * 65534 + 1];
        assert!(matches!(frame_payload(&payload), Err(FormatError::PayloadTooLarge(n)) if n == payload.len()));
        assert!(frame_payload(&payload[..FRAME_PAYLOAD_SIZE * 65534]).is_ok());
    }

    #[test]
    fn parse_errors() {
        let bytes = serialize_frame(&Frame::new(3, vec![1, 2, 3])).unwrap();
        assert_eq!(parse_frame(&bytes[..11]), Err(FormatError::Truncated));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(parse_frame(&bad), Err(FormatError::BadMagic));
        let mut bad = bytes.clone();
        bad[9] ^= 0x40;
        assert_eq!(parse_frame(&bad), Err(FormatError::BadCrc));
    }

    #[test]
    fn every_single_and_double_bit_flip_is_detected() {
        let frame = Frame::new(0x1234, (0..52u8).collect());
        let bytes = serialize_frame(&frame).unwrap();
        let bits = bytes.len() * 8;
        assert!(bytes.len() <= 64);
        for i in 0..bits {
            let mut flipped = bytes.clone();
            flipped[i / 8] ^= 1 << (i % 8);
            match parse_frame(&flipped) {
                Err(FormatError::BadCrc) | Err(FormatError::BadMagic) => {}
                other => panic!("bit {i}: {other:?}"),
            }
            for j in i + 1..bits {
                let mut twice = flipped.clone();
                twice[j / 8] ^= 1 << (j % 8);
                assert!(parse_frame(&twice).is_err(), "bits {i},{j} undetected");
            }
        }
    }

    #[test]
    fn extent_of_padded_slot() {
        let mut bytes = serialize_frame(&Frame::new(1, vec![9; 40])).unwrap();
        let len = bytes.len();
        bytes.resize(MAX_FRAME_LEN, 0);
        assert_eq!(frame_extent(&bytes), Ok(len));
        assert_eq!(parse_frame(&bytes[..len]).unwrap().payload, vec![9; 40]);
    }

    fn meta_for(len: usize) -> SonicMetadata {
        SonicMetadata::llm_text(1, len, "t", 0)
    }

    #[test]
    fn reassemble_all_frames() {
        let payload: Vec<u8> = (0..1500u32).map(|i| i as u8).collect();
        let meta = meta_for(payload.len());
        let frames = frame_payload(&payload).unwrap();
        let r = reassemble(&meta, &frames);
        assert_eq!(r.payload, payload);
        assert!(r.missing.iter().all(|m| !m));
        assert_eq!(r.loss_percent(), 0.0);
        assert_eq!(meta.content_type, ContentType::LlmText);
    }

    #[test]
    fn reassemble_middle_frame_lost() {
        let payload = vec![0xAB; 1500];
        let meta = meta_for(payload.len());
        let frames = frame_payload(&payload).unwrap();
        let r = reassemble(&meta, [&frames[0], &frames[2]]);
        for (i, m) in r.missing.iter().enumerate() {
            assert_eq!(*m, (500..1000).contains(&i), "byte {i}");
        }
        assert!((r.loss_percent() - 100.0 / 3.0).abs() < 1e-9);
        assert_eq!(r.received_frames, 2);
    }

    #[test]
    fn duplicates_count_once() {
        let payload = vec![1u8; 600];
        let meta = meta_for(payload.len());
        let frames = frame_payload(&payload).unwrap();
        let r = reassemble(&meta, [&frames[0], &frames[0]]);
        assert_eq!(r.received_frames, 1);
        assert_eq!(r.frame_count, 2);
    }

    proptest! {
        #[test]
        fn frame_roundtrip(seq in 0u16..0xFFFF, payload in proptest::collection::vec(any::<u8>(), 0..=500)) {
            let frame = Frame::new(seq, payload);
            let bytes = serialize_frame(&frame).unwrap();
            prop_assert_eq!(parse_frame(&bytes).unwrap(), frame);
        }

        #[test]
        fn partition_concatenates(payload in proptest::collection::vec(any::<u8>(), 0..5000)) {
            let frames = frame_payload(&payload).unwrap();
            let joined: Vec<u8> = frames.iter().flat_map(|f| f.payload.clone()).collect();
            prop_assert_eq!(joined, payload);
        }

        #[test]
        fn random_subsets_match_original(
            payload in proptest::collection::vec(any::<u8>(), 1..4000),
            keep in proptest::collection::vec(any::<bool>(), 8),
        ) {
            let meta = meta_for(payload.len());
            let frames = frame_payload(&payload).unwrap();
            let kept: Vec<&Frame> = frames.iter().filter(|f| keep[f.seq as usize % 8]).collect();
            let r = reassemble(&meta, kept.iter().copied());
            for i in 0..payload.len() {
                let should_miss = !keep[(i / FRAME_PAYLOAD_SIZE) % 8];
                prop_assert_eq!(r.missing[i], should_miss);
                if !should_miss {
                    prop_assert_eq!(r.payload[i], payload[i]);
                }
            }
            let expected = 100.0 * (frames.len() - kept.len()) as f64 / frames.len() as f64;
            prop_assert!((r.loss_percent() - expected).abs() < 1e-9);
        }
    }
}
