use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use sonic_core::client::{DirStore, ItemStore, MemoryStore, ReceiverConfig};
use sonic_daemon::client_app::{ingest, Inbox, PcmSource};

/// Decodes WAV files and prints one JSON summary per received item.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "in", required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Keep the items in this store directory.
    #[arg(long)]
    store: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    sonic_daemon::init_logging();
    let a = Args::parse();
    let cfg = sonic_daemon::load_config(a.config.as_deref())?;
    let store: Arc<dyn ItemStore> = match &a.store {
        Some(d) => Arc::new(DirStore::open(d)?),
        None => Arc::new(MemoryStore::new()),
    };
    let inbox = Inbox::new(Arc::clone(&store), sonic_daemon::system_clock());
    let rx = ReceiverConfig { profile: cfg.modem.clone(), fec: cfg.fec, t0: sonic_daemon::unix_now() };
    ingest(PcmSource::Wavs(a.input), &rx, &inbox)?;
    for item in store.list() {
        println!("{}", serde_json::to_string(&item.summary())?);
    }
    Ok(())
}
