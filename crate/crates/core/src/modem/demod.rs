use rustfft::num_complex::Complex32;

use super::ofdm::Tables;
use super::{ModemError, ModulationProfile, PcmChunk};

/// Longest burst the header may announce.
pub const MAX_BURST_BYTES: usize = 16 << 20;

/// Minimum window energy for the coarse detector, as mean square in LSB².
const ENERGY_FLOOR: i64 = 64;
/// A sample at or below this magnitude counts as silence.
const SILENCE_LEVEL: i16 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SyncReport {
    /// Absolute stream index of the first preamble sample.
    pub start_sample: u64,
    /// Normalized cross-correlation with the known preamble.
    pub correlation: f64,
    /// In-band SNR estimated from the two preamble copies.
    pub snr_db: f64,
}

/// One demodulated transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct Burst {
    pub bytes: Vec<u8>,
    pub report: SyncReport,
    /// The stream ended or went silent before the announced length.
    pub cut_short: bool,
}

struct Pending {
    start: u64,
    correlation: f64,
    snr_db: f64,
    len: usize,
    end: u64,
    h: Vec<Complex32>,
    scan: u64,
    silent_run: u64,
}

enum State {
    Search,
    Burst(Box<Pending>),
}

/// Running Schmidl–Cox sums at one position, exact in integers.
#[derive(Clone, Copy)]
struct Sums {
    pos: u64,
    p: i64,
    e1: i64,
    e2: i64,
}

/// Streaming receiver. Output depends only on the samples, not on how
/// they are split into chunks.
pub struct Demodulator {
    t: Tables,
    buf: Vec<i16>,
    base: u64,
    state: State,
    pos: u64,
    sums: Option<Sums>,
    detected: usize,
}

impl Demodulator {
    pub fn new(profile: &ModulationProfile) -> Result<Self, ModemError> {
        profile.validate()?;
        Ok(Self {
            t: Tables::new(profile),
            buf: Vec::new(),
            base: 0,
            state: State::Search,
            pos: 0,
            sums: None,
            detected: 0,
        })
    }

    pub fn profile(&self) -> &ModulationProfile {
        &self.t.profile
    }

    /// Total samples consumed so far.
    pub fn samples_seen(&self) -> u64 {
        self.base + self.buf.len() as u64
    }

    /// Whether a burst has been detected and is still being collected.
    pub fn in_burst(&self) -> bool {
        matches!(self.state, State::Burst(_))
    }

    pub fn push_chunk(&mut self, chunk: &PcmChunk) -> Result<Vec<Burst>, ModemError> {
        if chunk.sample_rate != self.t.profile.sample_rate {
            return Err(ModemError::SampleRate(chunk.sample_rate));
        }
        Ok(self.push(&chunk.samples))
    }

    pub fn push(&mut self, samples: &[i16]) -> Vec<Burst> {
        self.buf.extend_from_slice(samples);
        let out = self.run(false);
        self.trim();
        out
    }

    /// Flushes a burst in progress. `NoSync` if nothing was ever detected.
    pub fn finish(mut self) -> Result<Vec<Burst>, ModemError> {
        let out = self.run(true);
        if self.detected == 0 {
            return Err(ModemError::NoSync);
        }
        Ok(out)
    }

    fn end(&self) -> u64 {
        self.base + self.buf.len() as u64
    }

    fn at(&self, i: u64) -> i64 {
        self.buf[(i - self.base) as usize] as i64
    }

    fn slice_f32(&self, start: u64, len: usize) -> Vec<f32> {
        (0..len as u64)
            .map(|k| {
                let i = start + k;
                if i >= self.base && i < self.end() {
                    self.buf[(i - self.base) as usize] as f32 / 32768.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn trim(&mut self) {
        let keep_from = match &self.state {
            State::Search => self.pos,
            State::Burst(b) => b.start,
        };
        let drop = keep_from.saturating_sub(self.base) as usize;
        if drop > 1 << 16 {
            self.buf.drain(..drop);
            self.base += drop as u64;
        }
    }

    fn run(&mut self, flush: bool) -> Vec<Burst> {
        let mut out = Vec::new();
        loop {
            let progressed = match self.state {
                State::Search => self.search(),
                State::Burst(_) => self.collect(flush, &mut out),
            };
            if !progressed {
                break;
            }
        }
        out
    }

    fn sums_at(&self, pos: u64) -> Sums {
        let l = self.t.profile.symbol_len() as u64;
        let (mut p, mut e1, mut e2) = (0i64, 0i64, 0i64);
        for k in 0..l {
            let a = self.at(pos + k);
            let b = self.at(pos + k + l);
            p += a * b;
            e1 += a * a;
            e2 += b * b;
        }
        Sums { pos, p, e1, e2 }
    }

    fn advance(&self, s: &mut Sums) {
        let l = self.t.profile.symbol_len() as u64;
        let (a0, a1, a2) = (self.at(s.pos), self.at(s.pos + l), self.at(s.pos + 2 * l));
        s.p += a1 * a2 - a0 * a1;
        s.e1 += a1 * a1 - a0 * a0;
        s.e2 += a2 * a2 - a1 * a1;
        s.pos += 1;
    }

    fn metric(&self, s: &Sums) -> f64 {
        let l = self.t.profile.symbol_len() as i64;
        if s.e1 < ENERGY_FLOOR * l || s.e2 < ENERGY_FLOOR * l {
            return 0.0;
        }
        s.p as f64 / ((s.e1 as f64) * (s.e2 as f64)).sqrt()
    }

    /// Returns false when more samples are needed.
    fn search(&mut self) -> bool {
        let p = &self.t.profile;
        let l = p.symbol_len() as u64;
        let radius = p.cyclic_prefix_len as u64;
        let coarse = p.coarse_threshold;
        // Samples needed to evaluate a candidate at `pos`: the argmax window,
        // the fine search, and the header symbol.
        let lookahead = l + radius + 3 * l;
        loop {
            if self.pos + 2 * l + 1 > self.end() {
                return false;
            }
            let mut s = match self.sums {
                Some(s) if s.pos == self.pos => s,
                _ => self.sums_at(self.pos),
            };
            if self.metric(&s) < coarse {
                if self.pos + 2 * l + 1 <= self.end() {
                    self.advance(&mut s);
                    self.pos = s.pos;
                    self.sums = Some(s);
                }
                continue;
            }
            self.sums = Some(s);
            if self.pos + lookahead > self.end() {
                return false;
            }

            let mut best = (self.metric(&s), self.pos);
            let mut probe = s;
            for _ in 0..l {
                self.advance(&mut probe);
                let m = self.metric(&probe);
                if m > best.0 {
                    best = (m, probe.pos);
                }
            }
            let peak = best.1;
            let (corr, start) = self.fine_sync(peak.saturating_sub(radius).max(self.base), peak + radius);
            if corr >= self.t.profile.sync_threshold {
                if let Some(pending) = self.try_header(start, corr) {
                    self.state = State::Burst(Box::new(pending));
                    self.sums = None;
                    return true;
                }
            }
            self.pos = peak + 1;
            self.sums = None;
        }
    }

    fn fine_sync(&self, from: u64, to: u64) -> (f64, u64) {
        let tmpl = &self.t.preamble_waveform;
        let tmpl_energy: f64 = tmpl.iter().map(|v| (*v as f64).powi(2)).sum();
        let mut best = (f64::MIN, from);
        for start in from..=to {
            let mut dot = 0f64;
            let mut energy = 0f64;
            for (k, &v) in tmpl.iter().enumerate() {
                let r = self.at(start + k as u64) as f64;
                dot += r * v as f64;
                energy += r * r;
            }
            if energy <= 0.0 {
                continue;
            }
            let c = dot / (energy * tmpl_energy).sqrt();
            if c > best.0 {
                best = (c, start);
            }
        }
        best
    }

    fn try_header(&self, start: u64, correlation: f64) -> Option<Pending> {
        let t = &self.t;
        let p = &t.profile;
        let l = p.symbol_len();
        let y1 = t.carriers(&self.slice_f32(start, l));
        let y2 = t.carriers(&self.slice_f32(start + l as u64, l));

        let (mut noise, mut sum) = (0f64, 0f64);
        for (a, b) in y1.iter().zip(&y2) {
            noise += (a - b).norm_sqr() as f64 / 2.0;
            sum += (a + b).norm_sqr() as f64 / 4.0;
        }
        let signal = (sum - noise / 2.0).max(1e-12);
        let snr_db = (10.0 * (signal / noise.max(1e-12)).log10()).clamp(-10.0, 60.0);

        let h: Vec<Complex32> =
            y1.iter().zip(&y2).zip(&t.preamble).map(|((a, b), x)| (a + b) * 0.5 / x).collect();
        let header = self.equalize(&t.carriers(&self.slice_f32(start + 2 * l as u64, l)), &h);
        let mut word = 0u64;
        for (i, &pos) in t.data.iter().take(64).enumerate() {
            if header[pos].re < 0.0 {
                word |= 1 << i;
            }
        }
        let len = word as u32;
        if (word >> 32) as u32 != !len || len as usize > MAX_BURST_BYTES {
            return None;
        }
        let len = len as usize;
        Some(Pending {
            start,
            correlation,
            snr_db,
            len,
            end: start + p.burst_body_len(len) as u64,
            h,
            scan: start + 3 * l as u64,
            silent_run: 0,
        })
    }

    /// Divides out the channel and removes the common phase seen on pilots.
    fn equalize(&self, y: &[Complex32], h: &[Complex32]) -> Vec<Complex32> {
        let mut z: Vec<Complex32> = y.iter().zip(h).map(|(y, h)| if h.norm_sqr() > 0.0 { y / h } else { *y }).collect();
        let rot: Complex32 = self.t.pilots.iter().zip(&self.t.pilot_values).map(|(&p, v)| z[p] * v.conj()).sum();
        if rot.norm_sqr() > 0.0 {
            let fix = rot.conj() / rot.norm();
            z.iter_mut().for_each(|v| *v *= fix);
        }
        z
    }

    fn collect(&mut self, flush: bool, out: &mut Vec<Burst>) -> bool {
        let State::Burst(b) = &mut self.state else { unreachable!() };
        let abort_run = (self.t.profile.silence_abort_s * self.t.profile.sample_rate as f64) as u64;
        let avail = (self.base + self.buf.len() as u64).min(b.end);
        let mut cut_short = false;
        while b.scan < avail {
            let s = self.buf[(b.scan - self.base) as usize];
            b.scan += 1;
            if s.unsigned_abs() <= SILENCE_LEVEL as u16 {
                b.silent_run += 1;
                if b.silent_run >= abort_run {
                    cut_short = true;
                    break;
                }
            } else {
                b.silent_run = 0;
            }
        }
        if b.scan < b.end && !cut_short {
            if !flush {
                return false;
            }
            cut_short = true;
        }
        let State::Burst(b) = std::mem::replace(&mut self.state, State::Search) else { unreachable!() };
        out.push(self.decode(&b, cut_short));
        self.detected += 1;
        self.pos = if cut_short { b.scan } else { b.end };
        self.sums = None;
        true
    }

    fn decode(&self, b: &Pending, cut_short: bool) -> Burst {
        let t = &self.t;
        let p = &t.profile;
        let l = p.symbol_len();
        let mut h = b.h.clone();
        let mut bits = Vec::with_capacity(p.data_symbols(b.len) * p.bits_per_symbol());
        for k in 0..p.payload_symbols(b.len) {
            let y = t.carriers(&self.slice_f32(b.start + ((3 + k) * l) as u64, l));
            // Data ×interval, then one reference symbol.
            if (k + 1) % (p.reference_interval + 1) == 0 {
                for ((hk, yk), xk) in h.iter_mut().zip(&y).zip(&t.reference) {
                    *hk = (*hk + yk / xk) * 0.5;
                }
                continue;
            }
            let z = self.equalize(&y, &h);
            for &pos in &t.data {
                bits.push((z[pos].re < 0.0) as u8);
                if p.constellation.bits() == 2 {
                    bits.push((z[pos].im < 0.0) as u8);
                }
            }
        }
        let mut bytes = crate::fec::bits_to_bytes(&bits);
        bytes.truncate(b.len);
        bytes.resize(b.len, 0);
        Burst {
            bytes,
            report: SyncReport { start_sample: b.start, correlation: b.correlation, snr_db: b.snr_db },
            cut_short,
        }
    }
}

/// Runs a fresh demodulator over `chunks` and flushes it.
pub fn demodulate<'a, I>(chunks: I, profile: &ModulationProfile) -> Result<Vec<Burst>, ModemError>
where
    I: IntoIterator<Item = &'a PcmChunk>,
{
    let mut demod = Demodulator::new(profile)?;
    let mut out = Vec::new();
    for chunk in chunks {
        out.extend(demod.push_chunk(chunk)?);
    }
    let rest = demod.finish()?;
    out.extend(rest);
    Ok(out)
}
