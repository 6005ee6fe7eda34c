//! Simulated broadcast channel keyed by RSSI: a frame-level Gilbert–Elliott
//! dropper and an audio-level AWGN/dropout model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::modem::PcmChunk;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConditions {
    pub rssi_dbm: f64,
    pub seed: u64,
    #[serde(default = "default_burst")]
    pub burst_mean_frames: f64,
}

fn default_burst() -> f64 {
    2.0
}

impl ChannelConditions {
    pub fn new(rssi_dbm: f64, seed: u64) -> Self {
        Self { rssi_dbm, seed, burst_mean_frames: default_burst() }
    }
}

/// Logistic frame-loss curve over RSSI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossModel {
    pub p50_rssi: f64,
    pub slope: f64,
    pub floor: f64,
}

impl Default for LossModel {
    fn default() -> Self {
        Self { p50_rssi: -92.0, slope: 0.35, floor: 0.01 }
    }
}

impl LossModel {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.slope >= 0.0 && self.slope.is_finite()) {
            return Err("slope must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.floor) {
            return Err("floor must lie in [0, 1]");
        }
        if !self.p50_rssi.is_finite() {
            return Err("p50_rssi must be finite");
        }
        Ok(())
    }
}

pub fn frame_loss_prob(rssi_dbm: f64, model: &LossModel) -> f64 {
    let logistic = 1.0 / (1.0 + (model.slope * (rssi_dbm - model.p50_rssi)).exp());
    model.floor + (1.0 - model.floor) * logistic
}

/// Two-state chain where the bad state drops frames. Loss probability `p`
/// is stationary; the mean bad-state dwell is `max(burst, 1/(1 − p))`
/// frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GilbertElliott {
    pub p: f64,
    /// P(bad → good)
    pub r: f64,
    /// P(good → bad)
    pub q: f64,
}

impl GilbertElliott {
    pub fn new(p: f64, burst: f64) -> Self {
        let p = p.clamp(0.0, 1.0);
        let burst = burst.max(1.0);
        if p <= 0.0 {
            return Self { p, r: 1.0, q: 0.0 };
        }
        if p >= 1.0 {
            return Self { p, r: 0.0, q: 1.0 };
        }
        // r ≤ 1 − p keeps q + r ≤ 1, which the shared-uniform coupling needs.
        let r = (1.0 / burst).min(1.0 - p);
        let q = (r * p / (1.0 - p)).min(1.0);
        Self { p, r, q }
    }

    pub fn mean_bad_dwell(&self) -> f64 {
        1.0 / self.r
    }

    /// `true` marks a dropped frame. One uniform per frame drives both the
    /// initial state and every transition, so for a fixed seed a larger
    /// `p` drops a superset of frames.
    pub fn drops(&self, n: usize, seed: u64) -> Vec<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        let mut bad = false;
        for i in 0..n {
            let u: f64 = rng.gen();
            bad = if i == 0 {
                u < self.p
            } else if bad {
                u < 1.0 - self.r
            } else {
                u < self.q
            };
            out.push(bad);
        }
        out
    }
}

pub fn frame_drops(n: usize, cond: &ChannelConditions, model: &LossModel) -> Vec<bool> {
    let p = frame_loss_prob(cond.rssi_dbm, model);
    GilbertElliott::new(p, cond.burst_mean_frames).drops(n, cond.seed)
}

pub fn apply_frame_channel<T: Clone>(frames: &[T], cond: &ChannelConditions, model: &LossModel) -> Vec<T> {
    frames
        .iter()
        .zip(frame_drops(frames.len(), cond, model))
        .filter(|(_, dropped)| !dropped)
        .map(|(f, _)| f.clone())
        .collect()
}

/// Invented calibration map from RSSI to audio SNR.
pub fn snr_for_rssi(rssi_dbm: f64) -> f64 {
    (rssi_dbm + 120.0).clamp(0.0, 40.0)
}

/// Signal fades that silence the carrier entirely.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Dropouts {
    /// Expected dropouts per second of audio.
    pub rate_per_s: f64,
    pub duration_ms: f64,
}

impl Default for Dropouts {
    fn default() -> Self {
        Self { rate_per_s: 0.0, duration_ms: 50.0 }
    }
}

pub fn apply_audio_channel(pcm: &PcmChunk, cond: &ChannelConditions) -> PcmChunk {
    apply_audio_channel_with(pcm, cond, &Dropouts::default())
}

/// AWGN at `snr_for_rssi(rssi)` relative to the power of the non-silent
/// samples, after zeroing any dropout spans.
pub fn apply_audio_channel_with(pcm: &PcmChunk, cond: &ChannelConditions, dropouts: &Dropouts) -> PcmChunk {
    let mut rng = ChaCha8Rng::seed_from_u64(cond.seed ^ 0xA0D1_0C4A_77E1_0001);
    let mut signal: Vec<f64> = pcm.samples.iter().map(|&s| s as f64).collect();

    let active: Vec<f64> = signal.iter().copied().filter(|s| *s != 0.0).collect();
    let power = if active.is_empty() { 0.0 } else { active.iter().map(|s| s * s).sum::<f64>() / active.len() as f64 };

    if dropouts.rate_per_s > 0.0 && !signal.is_empty() {
        let per_sample = dropouts.rate_per_s / pcm.sample_rate as f64;
        let span = (dropouts.duration_ms * 1e-3 * pcm.sample_rate as f64) as usize;
        let mut i = 0;
        while i < signal.len() {
            if rng.gen_bool(per_sample.min(1.0)) {
                let end = (i + span).min(signal.len());
                signal[i..end].iter_mut().for_each(|s| *s = 0.0);
                i = end;
            } else {
                i += 1;
            }
        }
    }

    let snr = 10f64.powf(snr_for_rssi(cond.rssi_dbm) / 10.0);
    let sigma = (power / snr).sqrt();
    let samples = if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        signal.iter().map(|s| (s + normal.sample(&mut rng)).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16).collect()
    } else {
        signal.iter().map(|&s| s as i16).collect()
    };
    PcmChunk { samples, sample_rate: pcm.sample_rate }
}
