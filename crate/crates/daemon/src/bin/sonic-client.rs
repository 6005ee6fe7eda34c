use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::Parser;
use sonic_core::client::{DirStore, ReceiverConfig};
use sonic_daemon::client_app::{ingest, router, ClientApi, Inbox, PcmSource};
use sonic_daemon::sink::wav_files_in;

/// Receiver: decodes broadcast audio into a local item store and serves
/// the UI API.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Read raw 16-bit PCM from stdin.
    #[arg(long, conflicts_with_all = ["pipe", "wav"])]
    pcm_stdin: bool,
    /// Read raw 16-bit PCM from a named pipe.
    #[arg(long, conflicts_with = "wav")]
    pipe: Option<PathBuf>,
    /// WAV files, or directories of them, decoded in order.
    #[arg(long, num_args = 1..)]
    wav: Vec<PathBuf>,
    /// Overrides `endpoints.client_listen`.
    #[arg(long)]
    listen: Option<String>,
    /// Overrides `client.store_dir`.
    #[arg(long)]
    store: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    sonic_daemon::init_logging();
    let args = Args::parse();
    let cfg = sonic_daemon::load_config(args.config.as_deref())?;
    let store_dir = args.store.unwrap_or_else(|| cfg.client.store_dir.clone());
    let store = Arc::new(DirStore::open(&store_dir)?);
    let clock = sonic_daemon::system_clock();
    let inbox = Inbox::new(store, Arc::clone(&clock));

    let source = if args.pcm_stdin {
        Some(PcmSource::Raw(Box::new(std::io::stdin())))
    } else if let Some(p) = &args.pipe {
        Some(PcmSource::Raw(Box::new(std::fs::File::open(p)?)))
    } else if !args.wav.is_empty() {
        let mut files = Vec::new();
        for p in &args.wav {
            if p.is_dir() {
                files.extend(wav_files_in(p)?);
            } else {
                files.push(p.clone());
            }
        }
        Some(PcmSource::Wavs(files))
    } else {
        None
    };
    if let Some(source) = source {
        let rx_cfg = ReceiverConfig { profile: cfg.modem.clone(), fec: cfg.fec, t0: clock() };
        let inbox = Arc::clone(&inbox);
        std::thread::spawn(move || {
            if let Err(e) = ingest(source, &rx_cfg, &inbox) {
                log::error!("ingest: {e:#}");
            }
            log::info!("PCM input ended");
        });
    }
    {
        let inbox = Arc::clone(&inbox);
        tokio::spawn(async move {
            loop {
                inbox.evict();
                tokio::time::sleep(Duration::from_secs(60)).await;
            }
        });
    }

    let api = ClientApi::new(inbox, cfg.endpoints.uplink_url.clone(), cfg.client.sender.clone(), cfg.client.viewable_loss);
    let addr = args.listen.unwrap_or_else(|| cfg.endpoints.client_listen.clone());
    let listener = tokio::net::TcpListener::bind(&addr).await?;
    log::info!("listening on {addr}, items in {}", store_dir.display());
    axum::serve(listener, router(api))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
