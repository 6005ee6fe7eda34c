//! OFDM modem: bytes to 16-bit PCM and back.
//!
//! A burst is two identical preamble symbols, one BPSK header symbol
//! carrying the byte count, the payload symbols, and 20 ms of silence.

mod demod;
mod ofdm;
mod profile;
mod wav;

pub use demod::{demodulate, Burst, Demodulator, SyncReport, MAX_BURST_BYTES};
pub use ofdm::modulate;
pub use profile::{effective_throughput, Constellation, ModulationProfile};
pub use wav::{read_pcm_raw, read_wav, write_pcm_raw, write_wav};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcmChunk {
    pub samples: Vec<i16>,
    pub sample_rate: u32,
}

impl PcmChunk {
    pub fn new(samples: Vec<i16>, sample_rate: u32) -> Self {
        Self { samples, sample_rate }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

#[derive(Debug, Error)]
pub enum ModemError {
    #[error("no preamble detected")]
    NoSync,
    #[error("invalid modulation profile: {0}")]
    InvalidProfile(&'static str),
    #[error("sample rate {0} does not match the profile")]
    SampleRate(u32),
    #[error("unsupported WAV: {0}")]
    Unsupported(String),
    #[error("WAV: {0}")]
    Wav(#[from] hound::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
