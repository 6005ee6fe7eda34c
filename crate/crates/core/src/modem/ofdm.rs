use std::sync::Arc;

use rustfft::num_complex::Complex32;
use rustfft::{Fft, FftPlanner};

use super::{ModulationProfile, PcmChunk};

const FRAC_1_SQRT_2: f32 = std::f32::consts::FRAC_1_SQRT_2;

/// Known symbols and FFT plans derived from a profile.
pub(crate) struct Tables {
    pub profile: ModulationProfile,
    pub fft: Arc<dyn Fft<f32>>,
    pub ifft: Arc<dyn Fft<f32>>,
    pub pilots: Vec<usize>,
    pub data: Vec<usize>,
    /// Per-carrier values of the preamble symbol (QPSK) and the reference
    /// symbol (BPSK), and the pilot signs used in every other symbol.
    pub preamble: Vec<Complex32>,
    pub reference: Vec<Complex32>,
    pub pilot_values: Vec<Complex32>,
    /// The two preamble symbols in time domain, with prefixes, unscaled.
    pub preamble_waveform: Vec<f32>,
}

/// Small deterministic generator for the known sequences.
fn sequence(seed: u32, n: usize) -> Vec<u32> {
    let mut x = seed;
    (0..n)
        .map(|_| {
            x ^= x << 13;
            x ^= x >> 17;
            x ^= x << 5;
            x
        })
        .collect()
}

impl Tables {
    pub fn new(profile: &ModulationProfile) -> Self {
        let mut planner = FftPlanner::new();
        let n = profile.n_subcarriers;
        let preamble = sequence(0x5A17_C0DE, n)
            .into_iter()
            .map(|v| qpsk((v >> 7) & 1 == 1, (v >> 19) & 1 == 1))
            .collect();
        let reference = sequence(0x0F0D_4321, n)
            .into_iter()
            .map(|v| Complex32::new(if (v >> 11) & 1 == 1 { -1.0 } else { 1.0 }, 0.0))
            .collect();
        let pilots = profile.pilot_positions();
        let pilot_values =
            (0..pilots.len()).map(|i| Complex32::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect();
        let mut t = Self {
            profile: profile.clone(),
            fft: planner.plan_fft_forward(profile.fft_size),
            ifft: planner.plan_fft_inverse(profile.fft_size),
            data: profile.data_positions(),
            pilots,
            preamble,
            reference,
            pilot_values,
            preamble_waveform: Vec::new(),
        };
        let sym = t.symbol(&t.preamble);
        t.preamble_waveform = [sym.clone(), sym].concat();
        t
    }

    /// Time-domain symbol with cyclic prefix for the given carrier values.
    pub fn symbol(&self, carriers: &[Complex32]) -> Vec<f32> {
        let p = &self.profile;
        let mut bins = vec![Complex32::new(0.0, 0.0); p.fft_size];
        for (bin, &v) in p.bins().zip(carriers) {
            bins[bin] = v;
            bins[p.fft_size - bin] = v.conj();
        }
        self.ifft.process(&mut bins);
        let scale = 1.0 / (p.fft_size as f32).sqrt();
        let body: Vec<f32> = bins.iter().map(|c| c.re * scale).collect();
        let mut out = Vec::with_capacity(p.symbol_len());
        out.extend_from_slice(&body[p.fft_size - p.cyclic_prefix_len..]);
        out.extend_from_slice(&body);
        out
    }

    /// Carrier values of one received symbol; `samples` starts at the
    /// symbol's cyclic prefix.
    pub fn carriers(&self, samples: &[f32]) -> Vec<Complex32> {
        let p = &self.profile;
        let mut buf: Vec<Complex32> = samples[p.cyclic_prefix_len..p.symbol_len()]
            .iter()
            .map(|&s| Complex32::new(s, 0.0))
            .collect();
        self.fft.process(&mut buf);
        let scale = 1.0 / (p.fft_size as f32).sqrt();
        p.bins().map(|b| buf[b] * scale).collect()
    }

    fn with_pilots(&self, data: impl Iterator<Item = Complex32>) -> Vec<Complex32> {
        let mut carriers = vec![Complex32::new(0.0, 0.0); self.profile.n_subcarriers];
        for (&pos, v) in self.pilots.iter().zip(&self.pilot_values) {
            carriers[pos] = *v;
        }
        for (&pos, v) in self.data.iter().zip(data) {
            carriers[pos] = v;
        }
        carriers
    }

    /// BPSK header: length, its complement, then a fixed fill.
    pub fn header_carriers(&self, len: u32) -> Vec<Complex32> {
        let word = (len as u64) | ((!len as u64) << 32);
        let values = (0..self.data.len()).map(|i| {
            let bit = i < 64 && (word >> i) & 1 == 1;
            Complex32::new(if bit { -1.0 } else { 1.0 }, 0.0)
        });
        self.with_pilots(values)
    }

    pub fn data_carriers(&self, bits: &[u8]) -> Vec<Complex32> {
        let values: Vec<Complex32> = match self.profile.constellation.bits() {
            1 => bits.iter().map(|&b| Complex32::new(if b == 1 { -1.0 } else { 1.0 }, 0.0)).collect(),
            _ => bits.chunks(2).map(|c| qpsk(c[0] == 1, c.get(1) == Some(&1))).collect(),
        };
        self.with_pilots(values.into_iter())
    }
}

/// Gray-mapped QPSK with unit energy.
fn qpsk(b0: bool, b1: bool) -> Complex32 {
    Complex32::new(if b0 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 }, if b1 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 })
}

/// Preamble, header, payload symbols with a reference symbol after every
/// `reference_interval` data symbols, then silence. The whole burst is
/// scaled so its largest sample sits at `peak` of full scale.
pub fn modulate(bytes: &[u8], profile: &ModulationProfile) -> PcmChunk {
    let tables = Tables::new(profile);
    modulate_with(&tables, bytes)
}

pub(crate) fn modulate_with(t: &Tables, bytes: &[u8]) -> PcmChunk {
    let p = &t.profile;
    let mut wave = Vec::with_capacity(p.burst_body_len(bytes.len()) + p.tail_len());
    wave.extend_from_slice(&t.preamble_waveform);
    wave.extend(t.symbol(&t.header_carriers(bytes.len() as u32)));

    let bits_per = p.bits_per_symbol();
    let mut bits = crate::fec::bytes_to_bits(bytes);
    bits.resize(p.data_symbols(bytes.len()) * bits_per, 0);
    for (i, chunk) in bits.chunks(bits_per).enumerate() {
        if i > 0 && i % p.reference_interval == 0 {
            wave.extend(t.symbol(&t.reference));
        }
        wave.extend(t.symbol(&t.data_carriers(chunk)));
    }

    let peak = wave.iter().fold(0f32, |m, s| m.max(s.abs()));
    let gain = if peak > 0.0 { (p.peak * i16::MAX as f64) as f32 / peak } else { 0.0 };
    let mut samples: Vec<i16> = wave.iter().map(|s| (s * gain).round() as i16).collect();
    samples.resize(samples.len() + p.tail_len(), 0);
    PcmChunk { samples, sample_rate: p.sample_rate }
}
