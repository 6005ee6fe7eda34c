//! Concatenated FEC for one frame: RS(255,223) outer code, byte
//! interleaver, rate-1/2 K=9 convolutional inner code.

mod conv;
mod interleave;
mod rs;

pub use conv::{bits_to_bytes, bytes_to_bits, conv_encode, viterbi_decode, POLY_A, POLY_B, TAIL_BITS};
pub use interleave::{deinterleave, interleave};
pub use rs::{decoded_len, encoded_len, rs_decode, rs_encode, RsError, RS_K, RS_N, RS_PARITY, RS_T};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::{frame_extent, parse_frame, Frame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerCode {
    ConvR12K9,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterCode {
    #[serde(rename = "rs_255_223")]
    Rs255_223,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FecConfig {
    pub inner: InnerCode,
    pub outer: OuterCode,
    pub interleaver_depth: usize,
}

impl Default for FecConfig {
    fn default() -> Self {
        Self { inner: InnerCode::ConvR12K9, outer: OuterCode::Rs255_223, interleaver_depth: 4 }
    }
}

impl FecConfig {
    pub const NONE: FecConfig =
        FecConfig { inner: InnerCode::None, outer: OuterCode::None, interleaver_depth: 1 };

    /// Channel bytes produced for `n` input bytes.
    pub fn protected_len(&self, n: usize) -> usize {
        let m = match self.outer {
            OuterCode::Rs255_223 => encoded_len(n),
            OuterCode::None => n,
        };
        match self.inner {
            InnerCode::ConvR12K9 => 2 * m + 2,
            InnerCode::None => m,
        }
    }
}

/// The frame could not be recovered and counts as lost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("frame lost")]
pub struct Loss;

pub fn protect(data: &[u8], cfg: &FecConfig) -> Vec<u8> {
    let outer = match cfg.outer {
        OuterCode::Rs255_223 => rs_encode(data),
        OuterCode::None => data.to_vec(),
    };
    let mixed = interleave(&outer, cfg.interleaver_depth);
    match cfg.inner {
        InnerCode::ConvR12K9 => bits_to_bytes(&conv_encode(&bytes_to_bits(&mixed))),
        InnerCode::None => mixed,
    }
}

/// Inverse of [`protect`]. Also reports the number of RS symbols corrected.
pub fn recover_counted(channel: &[u8], cfg: &FecConfig) -> Result<(Vec<u8>, usize), Loss> {
    let mixed = match cfg.inner {
        InnerCode::ConvR12K9 => {
            if channel.len() < 2 || channel.len() % 2 != 0 {
                return Err(Loss);
            }
            bits_to_bytes(&viterbi_decode(&bytes_to_bits(channel)))
        }
        InnerCode::None => channel.to_vec(),
    };
    let outer = deinterleave(&mixed, cfg.interleaver_depth);
    match cfg.outer {
        OuterCode::Rs255_223 => rs_decode(&outer).map_err(|_| Loss),
        OuterCode::None => Ok((outer, 0)),
    }
}

pub fn recover(channel: &[u8], cfg: &FecConfig) -> Result<Vec<u8>, Loss> {
    recover_counted(channel, cfg).map(|(d, _)| d)
}

/// Recovers one slot and parses the frame at its start, ignoring any zero
/// padding after it. A CRC failure is a loss like an RS failure.
pub fn recover_frame(channel: &[u8], cfg: &FecConfig) -> Result<Frame, Loss> {
    let bytes = recover(channel, cfg)?;
    let len = frame_extent(&bytes).map_err(|_| Loss)?;
    parse_frame(&bytes[..len]).map_err(|_| Loss)
}
