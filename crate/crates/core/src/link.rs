//! Transmission assembly: a SonicFile becomes FEC-protected slots, one per
//! frame, concatenated into a single modem burst. Every slot except the
//! last carries a frame zero-padded to the maximum frame length, so the
//! receiver can split the burst without side information.

use crate::fec::{protect, recover_frame, FecConfig};
use crate::format::{serialize_frame, FormatError, Frame, SonicFile, MAX_FRAME_LEN};
use crate::modem::{modulate, ModulationProfile, PcmChunk};

pub fn slot_len(fec: &FecConfig) -> usize {
    fec.protected_len(MAX_FRAME_LEN)
}

/// Protected slots for a frame sequence, in order.
pub fn protect_frames(frames: &[Frame], fec: &FecConfig) -> Result<Vec<Vec<u8>>, FormatError> {
    let last = frames.len().saturating_sub(1);
    frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut bytes = serialize_frame(f)?;
            if i != last {
                bytes.resize(MAX_FRAME_LEN, 0);
            }
            Ok(protect(&bytes, fec))
        })
        .collect()
}

pub fn transmission_slots(file: &SonicFile, fec: &FecConfig) -> Result<Vec<Vec<u8>>, FormatError> {
    protect_frames(&file.transmission_frames()?, fec)
}

pub fn keepalive_burst(fec: &FecConfig) -> Vec<u8> {
    protect(&serialize_frame(&Frame::keepalive()).expect("keepalive fits"), fec)
}

/// Splits a received burst back into slots.
pub fn split_slots<'a>(burst: &'a [u8], fec: &FecConfig) -> Vec<&'a [u8]> {
    let s = slot_len(fec);
    let mut slots: Vec<&[u8]> = burst.chunks(s).collect();
    if slots.last().is_some_and(|l| l.is_empty()) {
        slots.pop();
    }
    slots
}

/// Frames that survived FEC and CRC, plus the number of slots seen.
pub fn recover_burst(burst: &[u8], fec: &FecConfig) -> (Vec<Frame>, usize) {
    let slots = split_slots(burst, fec);
    let n = slots.len();
    (slots.into_iter().filter_map(|s| recover_frame(s, fec).ok()).collect(), n)
}

pub fn encode_audio(file: &SonicFile, fec: &FecConfig, profile: &ModulationProfile) -> Result<PcmChunk, FormatError> {
    Ok(modulate(&transmission_slots(file, fec)?.concat(), profile))
}

/// Seconds of audio `encode_audio` would produce for this file.
pub fn air_time(file: &SonicFile, fec: &FecConfig, profile: &ModulationProfile) -> Result<f64, FormatError> {
    let frames = file.transmission_frames()?;
    let last = frames.last().map_or(0, |f| fec.protected_len(serialize_frame(f).map(|b| b.len()).unwrap_or(0)));
    let bytes = frames.len().saturating_sub(1) * slot_len(fec) + last;
    Ok(burst_seconds(bytes, profile))
}

pub fn burst_seconds(bytes: usize, profile: &ModulationProfile) -> f64 {
    (profile.burst_body_len(bytes) + profile.tail_len()) as f64 / profile.sample_rate as f64
}
