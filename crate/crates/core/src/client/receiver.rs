use crate::channel::{apply_frame_channel, ChannelConditions, LossModel};
use crate::fec::FecConfig;
use crate::format::{decode_frames, FormatError, Frame, SonicFile};
use crate::link::recover_burst;
use crate::modem::{Burst, Demodulator, ModemError, ModulationProfile};

use super::{build_item, ReceivedItem};

/// Seconds without a valid frame before the receiver reports offline.
pub const ONLINE_EXPIRY_S: f64 = 15.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverConfig {
    pub profile: ModulationProfile,
    pub fec: FecConfig,
    /// Wall-clock time (Unix seconds) of the first sample.
    pub t0: f64,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self { profile: ModulationProfile::default(), fec: FecConfig::default(), t0: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReceiverEvent {
    Item(ReceivedItem),
    Keepalive { at: f64 },
    /// A burst was heard but could not be used.
    Discarded { at: f64, reason: String },
}

/// Streaming PCM receiver: demodulates, strips FEC, reassembles and
/// conceals.
pub struct Receiver {
    demod: Demodulator,
    sample_rate: f64,
    t0: f64,
    state: LinkState,
}

struct LinkState {
    fec: FecConfig,
    last_heard: Option<f64>,
    discarded: u64,
}

impl Receiver {
    pub fn new(cfg: &ReceiverConfig) -> Result<Self, ModemError> {
        Ok(Self {
            demod: Demodulator::new(&cfg.profile)?,
            sample_rate: cfg.profile.sample_rate as f64,
            t0: cfg.t0,
            state: LinkState { fec: cfg.fec, last_heard: None, discarded: 0 },
        })
    }

    /// Stream time of the most recent sample.
    pub fn now(&self) -> f64 {
        self.t0 + self.demod.samples_seen() as f64 / self.sample_rate
    }

    pub fn online_at(&self, now: f64) -> bool {
        self.state.last_heard.is_some_and(|t| now - t <= ONLINE_EXPIRY_S)
    }

    pub fn online(&self) -> bool {
        self.online_at(self.now())
    }

    pub fn last_heard(&self) -> Option<f64> {
        self.state.last_heard
    }

    /// Bursts heard but unusable, typically because metadata was lost.
    pub fn discarded(&self) -> u64 {
        self.state.discarded
    }

    pub fn push(&mut self, samples: &[i16]) -> Vec<ReceiverEvent> {
        let bursts = self.demod.push(samples);
        let at = self.now();
        bursts.into_iter().map(|b| self.state.handle(b, at)).collect()
    }

    /// Flushes a burst still in progress at end of stream.
    pub fn finish(self) -> Vec<ReceiverEvent> {
        let at = self.now();
        let Receiver { demod, mut state, .. } = self;
        match demod.finish() {
            Ok(bursts) => bursts.into_iter().map(|b| state.handle(b, at)).collect(),
            Err(_) => Vec::new(),
        }
    }
}

impl LinkState {
    fn handle(&mut self, burst: Burst, at: f64) -> ReceiverEvent {
        let (frames, slots) = recover_burst(&burst.bytes, &self.fec);
        if !frames.is_empty() {
            self.last_heard = Some(at);
        }
        if !frames.is_empty() && frames.iter().all(Frame::is_keepalive) {
            return ReceiverEvent::Keepalive { at };
        }
        match decode_frames(&frames) {
            Ok(session) => ReceiverEvent::Item(build_item(&session, at)),
            Err(e) => {
                self.discarded += 1;
                let reason = if frames.is_empty() {
                    format!("no frame of {slots} survived")
                } else {
                    e.to_string()
                };
                ReceiverEvent::Discarded { at, reason }
            }
        }
    }
}

/// Frame-level reception without the audio path: puts the transmission
/// through the Gilbert-Elliott frame channel and rebuilds what survives.
pub fn receive_over_frame_channel(
    file: &SonicFile,
    cond: &ChannelConditions,
    model: &LossModel,
    now: f64,
) -> Result<ReceivedItem, FormatError> {
    let frames = file.transmission_frames()?;
    let kept = apply_frame_channel(&frames, cond, model);
    decode_frames(&kept).map(|s| build_item(&s, now))
}

/// Loss percentage a receiver would report, counting a transmission
/// whose metadata was lost as fully lost.
pub fn frame_channel_loss(file: &SonicFile, cond: &ChannelConditions, model: &LossModel) -> f64 {
    let Ok(frames) = file.transmission_frames() else { return 100.0 };
    let kept = apply_frame_channel(&frames, cond, model);
    decode_frames(&kept).map_or(100.0, |s| s.reassembly.loss_percent())
}
