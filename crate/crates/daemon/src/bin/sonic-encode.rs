use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Parser;
use sonic_core::hub::RequestKind;
use sonic_core::link::{air_time, encode_audio};
use sonic_core::modem::write_wav;
use sonic_core::server::{Class, ContentRenderer, RenderJob};
use sonic_daemon::backends::{renderer, BrowserMode, LlmMode};

/// Renders one URL or prompt and writes the broadcast audio.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "prompt")]
    url: Option<String>,
    #[arg(long)]
    prompt: Option<String>,
    #[arg(long, value_enum, default_value = "fixture")]
    browser: BrowserMode,
    #[arg(long, value_enum, default_value = "stub")]
    llm: LlmMode,
    /// Request id written into the metadata.
    #[arg(long, default_value_t = 1)]
    id: u32,
    /// Output WAV.
    #[arg(long)]
    out: PathBuf,
    /// Also write the container bytes.
    #[arg(long)]
    sonic: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    sonic_daemon::init_logging();
    let a = Args::parse();
    let cfg = sonic_daemon::load_config(a.config.as_deref())?;
    let (kind, subject) = match (a.url, a.prompt) {
        (Some(u), None) => (RequestKind::Url, u),
        (None, Some(p)) => (RequestKind::Gpt, p),
        _ => bail!("give --url or --prompt"),
    };
    let r = renderer(a.llm, a.browser, &cfg)?;
    let job = RenderJob { id: a.id, kind, class: Class::User, subject };
    let rendered = r.render(&job, sonic_daemon::unix_now() as u64)?;
    let file = rendered.file;
    if let Some(p) = &a.sonic {
        std::fs::write(p, file.to_bytes()?).with_context(|| p.display().to_string())?;
    }
    let pcm = encode_audio(&file, &cfg.fec, &cfg.modem)?;
    write_wav(&pcm, &a.out).with_context(|| a.out.display().to_string())?;
    eprintln!(
        "{} payload bytes, {:.1} s on air",
        file.metadata.payload_length,
        air_time(&file, &cfg.fec, &cfg.modem)?
    );
    Ok(())
}
