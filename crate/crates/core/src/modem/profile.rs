use serde::{Deserialize, Serialize};

use super::ModemError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constellation {
    Bpsk,
    Qpsk,
}

impl Constellation {
    pub fn bits(self) -> usize {
        match self {
            Constellation::Bpsk => 1,
            Constellation::Qpsk => 2,
        }
    }
}

/// OFDM parameters. The defaults give 92 carriers spaced 86.13 Hz around
/// 9.2 kHz, QPSK, 8 pilots and one reference symbol per 4 data symbols:
/// 10290 bit/s before FEC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModulationProfile {
    pub sample_rate: u32,
    pub fft_size: usize,
    pub cyclic_prefix_len: usize,
    pub n_subcarriers: usize,
    pub center_freq: f64,
    pub n_pilots: usize,
    pub constellation: Constellation,
    /// Data symbols between channel reference symbols.
    pub reference_interval: usize,
    /// Normalized cross-correlation needed to accept a preamble.
    pub sync_threshold: f64,
    /// Schmidl–Cox metric that triggers the fine preamble search.
    pub coarse_threshold: f64,
    pub tail_ms: f64,
    /// Peak sample amplitude as a fraction of full scale.
    pub peak: f64,
    /// Silence inside a burst longer than this ends it early.
    pub silence_abort_s: f64,
}

impl Default for ModulationProfile {
    fn default() -> Self {
        Self {
            sample_rate: 44_100,
            fft_size: 512,
            cyclic_prefix_len: 64,
            n_subcarriers: 92,
            center_freq: 9_200.0,
            n_pilots: 8,
            constellation: Constellation::Qpsk,
            reference_interval: 4,
            sync_threshold: 0.6,
            coarse_threshold: 0.5,
            tail_ms: 20.0,
            peak: 0.89,
            silence_abort_s: 3.0,
        }
    }
}

impl ModulationProfile {
    pub fn bpsk() -> Self {
        Self { constellation: Constellation::Bpsk, ..Self::default() }
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.sample_rate as f64 / self.fft_size as f64
    }

    pub fn first_bin(&self) -> usize {
        let center = (self.center_freq / self.subcarrier_spacing()).round() as isize;
        (center - (self.n_subcarriers / 2) as isize).max(1) as usize
    }

    /// FFT bins of the subcarriers, lowest first.
    pub fn bins(&self) -> std::ops::Range<usize> {
        let first = self.first_bin();
        first..first + self.n_subcarriers
    }

    /// Positions (0-based within the subcarrier list) that carry pilots.
    pub fn pilot_positions(&self) -> Vec<usize> {
        let n = self.n_subcarriers as f64;
        let p = self.n_pilots as f64;
        (0..self.n_pilots).map(|i| (i as f64 * n / p + n / (2.0 * p)).floor() as usize).collect()
    }

    pub fn data_positions(&self) -> Vec<usize> {
        let pilots = self.pilot_positions();
        (0..self.n_subcarriers).filter(|i| !pilots.contains(i)).collect()
    }

    /// Occupied band edges in Hz, half a spacing beyond the outer carriers.
    pub fn band(&self) -> (f64, f64) {
        let df = self.subcarrier_spacing();
        let bins = self.bins();
        ((bins.start as f64 - 0.5) * df, ((bins.end - 1) as f64 + 0.5) * df)
    }

    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cyclic_prefix_len
    }

    pub fn bits_per_symbol(&self) -> usize {
        (self.n_subcarriers - self.n_pilots) * self.constellation.bits()
    }

    pub fn preamble_len(&self) -> usize {
        2 * self.symbol_len()
    }

    pub fn tail_len(&self) -> usize {
        (self.tail_ms * 1e-3 * self.sample_rate as f64).round() as usize
    }

    pub fn data_symbols(&self, n_bytes: usize) -> usize {
        (n_bytes * 8).div_ceil(self.bits_per_symbol())
    }

    /// Data symbols plus interleaved reference symbols.
    pub fn payload_symbols(&self, n_bytes: usize) -> usize {
        let d = self.data_symbols(n_bytes);
        if d == 0 {
            0
        } else {
            d + (d - 1) / self.reference_interval
        }
    }

    /// Samples from the start of the preamble to the end of the last
    /// payload symbol.
    pub fn burst_body_len(&self, n_bytes: usize) -> usize {
        (3 + self.payload_symbols(n_bytes)) * self.symbol_len()
    }

    pub fn validate(&self) -> Result<(), ModemError> {
        let bad = |why: &'static str| Err(ModemError::InvalidProfile(why));
        if self.fft_size < 16 || self.cyclic_prefix_len >= self.fft_size {
            return bad("cyclic prefix must be shorter than the FFT");
        }
        if self.n_pilots == 0 || self.n_pilots >= self.n_subcarriers {
            return bad("pilot count out of range");
        }
        if self.n_subcarriers - self.n_pilots < 64 {
            return bad("need at least 64 data carriers for the header");
        }
        if self.bins().end >= self.fft_size / 2 {
            return bad("subcarriers exceed the Nyquist band");
        }
        let (lo, hi) = self.band();
        if lo <= 300.0 || hi >= 15_000.0 {
            return bad("occupied band outside 300 Hz - 15 kHz");
        }
        if self.reference_interval == 0 {
            return bad("reference_interval must be positive");
        }
        if !(0.0..=1.0).contains(&self.sync_threshold) || !(0.0..=1.0).contains(&self.coarse_threshold) {
            return bad("thresholds must lie in [0, 1]");
        }
        if !(self.peak > 0.0 && self.peak <= 1.0) {
            return bad("peak must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Net bit rate before FEC: data carriers × bits per carrier × symbol
/// rate, discounted for reference symbols.
pub fn effective_throughput(profile: &ModulationProfile) -> f64 {
    let symbol_rate = profile.sample_rate as f64 / profile.symbol_len() as f64;
    let ri = profile.reference_interval as f64;
    profile.bits_per_symbol() as f64 * symbol_rate * ri / (ri + 1.0)
}
