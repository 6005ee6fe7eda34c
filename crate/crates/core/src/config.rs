//! TOML configuration for the server and client daemons, plus the
//! calibration constants of the channel and queue models.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::LossModel;
use crate::fec::FecConfig;
use crate::modem::ModulationProfile;
use crate::queue_sim::{ServiceModel, WorkloadParams};
use crate::renderer::RenderConfig;
use crate::server::ServerConfig;
use crate::window::TimeOfDay;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    pub start: TimeOfDay,
    pub end: TimeOfDay,
    pub utc_offset_minutes: i32,
}

impl Default for WindowSection {
    fn default() -> Self {
        Self { start: TimeOfDay::hm(22, 0), end: TimeOfDay::hm(5, 0), utc_offset_minutes: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuotaSection {
    pub requests_per_day: u32,
    pub queue_bound: usize,
}

impl Default for QuotaSection {
    fn default() -> Self {
        Self { requests_per_day: 10, queue_bound: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerSection {
    pub keepalive_s: f64,
    pub hub_top_n: usize,
    pub popularity_days: f64,
    pub push_links: usize,
    /// JSON-lines event log.
    pub event_log: PathBuf,
    pub state_file: PathBuf,
    /// `wav:<dir>` writes one WAV per transmission; `stdout` streams raw
    /// 16-bit PCM.
    pub audio_out: String,
}

impl Default for ServerSection {
    fn default() -> Self {
        Self {
            keepalive_s: 5.0,
            hub_top_n: 20,
            popularity_days: 7.0,
            push_links: 3,
            event_log: "sonic-events.jsonl".into(),
            state_file: "sonic-server-state.json".into(),
            audio_out: "wav:sonic-audio".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientSection {
    pub store_dir: PathBuf,
    /// Highest loss percentage at which a page still counts as viewable.
    pub viewable_loss: f64,
    /// Sender id used when forwarding requests upstream.
    pub sender: String,
}

impl Default for ClientSection {
    fn default() -> Self {
        Self { store_dir: "sonic-items".into(), viewable_loss: 50.0, sender: "sonic-client".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Endpoints {
    pub server_listen: String,
    pub client_listen: String,
    /// Where the client forwards `POST /request` bodies.
    pub uplink_url: String,
}

impl Default for Endpoints {
    fn default() -> Self {
        Self {
            server_listen: "127.0.0.1:8700".into(),
            client_listen: "127.0.0.1:8701".into(),
            uplink_url: "http://127.0.0.1:8700/uplink".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSection {
    /// OpenAI-compatible chat completions endpoint; `SONIC_LLM_URL`
    /// overrides it.
    pub url: Option<String>,
    pub model: String,
    pub timeout_s: f64,
}

impl Default for LlmSection {
    fn default() -> Self {
        Self { url: None, model: "gpt-4o-mini".into(), timeout_s: 60.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BrowserSection {
    /// Chrome DevTools endpoint (`http://host:port`).
    pub devtools_url: String,
    pub timeout_s: f64,
}

impl Default for BrowserSection {
    fn default() -> Self {
        Self { devtools_url: "http://127.0.0.1:9222".into(), timeout_s: 30.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SonicConfig {
    pub window: WindowSection,
    pub quota: QuotaSection,
    pub fec: FecConfig,
    pub modem: ModulationProfile,
    pub render: RenderConfig,
    pub server: ServerSection,
    pub client: ClientSection,
    pub endpoints: Endpoints,
    pub llm: LlmSection,
    pub browser: BrowserSection,
}

impl SonicConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_owned()));
        if self.window.start == self.window.end {
            return bad("window.start and window.end must differ");
        }
        if self.fec.interleaver_depth == 0 {
            return bad("fec.interleaver_depth must be at least 1");
        }
        if !(self.server.keepalive_s > 0.0) {
            return bad("server.keepalive_s must be positive");
        }
        if !(0.0..=100.0).contains(&self.client.viewable_loss) {
            return bad("client.viewable_loss must lie in [0, 100]");
        }
        self.modem.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn server_config(&self) -> ServerConfig {
        ServerConfig {
            window: crate::window::TransmissionWindow { start: self.window.start, end: self.window.end },
            utc_offset_minutes: self.window.utc_offset_minutes,
            quota_per_day: self.quota.requests_per_day,
            queue_bound: self.quota.queue_bound,
            keepalive_s: self.server.keepalive_s,
            hub_top_n: self.server.hub_top_n,
            popularity_days: self.server.popularity_days,
            push_links: self.server.push_links,
            fec: self.fec,
            profile: self.modem.clone(),
        }
    }
}

/// Model constants kept in `calibration.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Calibration {
    pub loss: LossModel,
    /// Mean Gilbert-Elliott bad-state dwell, in frames.
    pub burst_mean_frames: f64,
    pub workload: WorkloadParams,
    pub service: ServiceModel,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            loss: LossModel::default(),
            burst_mean_frames: 2.0,
            workload: WorkloadParams::default(),
            service: ServiceModel::default(),
        }
    }
}

impl Calibration {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: Self = toml::from_str(text)?;
        c.loss.validate().map_err(|e| ConfigError::Invalid(e.into()))?;
        c.workload.validate().map_err(ConfigError::Invalid)?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_toml(&text)
    }
}
