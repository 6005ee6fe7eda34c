use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::Parser;
use sonic_daemon::backends::{renderer, BrowserMode, LlmMode};
use sonic_daemon::server_app::{router, HeadEnd, Paths};
use sonic_daemon::sink::AudioSink;

/// Head-end server: takes uplink requests, renders them and broadcasts
/// during the transmission window.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "http")]
    llm: LlmMode,
    #[arg(long, value_enum, default_value = "cdp")]
    browser: BrowserMode,
    /// Overrides `endpoints.server_listen`.
    #[arg(long)]
    listen: Option<String>,
    /// Stream raw PCM to stdout instead of `server.audio_out`.
    #[arg(long)]
    pcm_stdout: bool,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    sonic_daemon::init_logging();
    let args = Args::parse();
    let cfg = sonic_daemon::load_config(args.config.as_deref())?;
    let audio = if args.pcm_stdout { "stdout" } else { cfg.server.audio_out.as_str() };
    let sink = AudioSink::parse(audio, cfg.modem.sample_rate)?;
    let renderer = renderer(args.llm, args.browser, &cfg)?;
    let head = HeadEnd::new(&cfg, Paths::from_config(&cfg), Box::new(renderer), sink, sonic_daemon::system_clock())?;

    let stop = Arc::new(AtomicBool::new(false));
    let workers = head.spawn_workers(Arc::clone(&stop));
    let addr = args.listen.unwrap_or_else(|| cfg.endpoints.server_listen.clone());
    let listener = tokio::net::TcpListener::bind(&addr).await?;
    log::info!("listening on {addr}; window {}-{}", cfg.window.start, cfg.window.end);
    axum::serve(listener, router(head))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    stop.store(true, Ordering::Relaxed);
    for w in workers {
        let _ = w.join();
    }
    Ok(())
}
