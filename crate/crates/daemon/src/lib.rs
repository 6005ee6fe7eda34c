//! Runtime pieces around `sonic-core`: the head-end HTTP server, the
//! receiver's local API, real browser and LLM backends, and audio sinks.

pub mod backends;
pub mod cdp;
pub mod client_app;
pub mod llm;
pub mod server_app;
pub mod sink;

use std::time::{SystemTime, UNIX_EPOCH};

/// Wall-clock Unix seconds.
pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Time source shared by the runtimes; tests substitute a fake clock.
pub type Clock = std::sync::Arc<dyn Fn() -> f64 + Send + Sync>;

pub fn system_clock() -> Clock {
    std::sync::Arc::new(unix_now)
}

pub fn init_logging() {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
}

/// Config from `path`, or built-in defaults.
pub fn load_config(path: Option<&std::path::Path>) -> anyhow::Result<sonic_core::config::SonicConfig> {
    let cfg = match path {
        Some(p) => sonic_core::config::SonicConfig::load(p)
            .map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?,
        None => sonic_core::config::SonicConfig::default(),
    };
    cfg.validate().map_err(|e| anyhow::anyhow!("invalid config: {e}"))?;
    Ok(cfg)
}
