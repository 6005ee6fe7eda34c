use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Parser;
use sonic_core::channel::{apply_audio_channel_with, ChannelConditions, Dropouts};
use sonic_core::modem::{read_pcm_raw, read_wav, write_pcm_raw, write_wav, PcmChunk};

/// Degrades broadcast audio as if received at the given signal strength.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Received signal strength in dBm.
    #[arg(long, allow_hyphen_values = true)]
    rssi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "in", conflicts_with = "pcm_stdin")]
    input: Option<PathBuf>,
    #[arg(long = "out", conflicts_with = "pcm_stdout")]
    output: Option<PathBuf>,
    /// Read raw 16-bit little-endian PCM from stdin.
    #[arg(long)]
    pcm_stdin: bool,
    /// Write raw 16-bit little-endian PCM to stdout.
    #[arg(long)]
    pcm_stdout: bool,
    /// Sample rate of raw input.
    #[arg(long, default_value_t = 44_100)]
    sample_rate: u32,
    /// Expected carrier dropouts per second.
    #[arg(long, default_value_t = 0.0)]
    dropout_rate: f64,
    #[arg(long, default_value_t = 50.0)]
    dropout_ms: f64,
}

enum Output {
    Wav(PathBuf),
    Raw(BufWriter<std::io::Stdout>),
}

impl Output {
    fn write(&mut self, pcm: &PcmChunk) -> anyhow::Result<()> {
        match self {
            Output::Wav(p) => write_wav(pcm, &*p).with_context(|| p.display().to_string())?,
            Output::Raw(w) => {
                write_pcm_raw(&mut *w, &pcm.samples)?;
                w.flush()?;
            }
        }
        Ok(())
    }
}

fn main() -> anyhow::Result<()> {
    sonic_daemon::init_logging();
    let a = Args::parse();
    if !a.rssi.is_finite() {
        bail!("--rssi must be a number");
    }
    if a.pcm_stdin && !a.pcm_stdout {
        bail!("--pcm-stdin needs --pcm-stdout");
    }
    let drop = Dropouts { rate_per_s: a.dropout_rate, duration_ms: a.dropout_ms };
    let mut out = match (&a.output, a.pcm_stdout) {
        (Some(p), false) => Output::Wav(p.clone()),
        (None, true) => Output::Raw(BufWriter::new(std::io::stdout())),
        _ => bail!("give exactly one of --out or --pcm-stdout"),
    };
    match (&a.input, a.pcm_stdin) {
        (Some(p), false) => {
            let pcm = read_wav(p).with_context(|| p.display().to_string())?;
            out.write(&apply_audio_channel_with(&pcm, &ChannelConditions::new(a.rssi, a.seed), &drop))?;
        }
        (None, true) => {
            // One-second blocks, each with its own noise stream.
            let mut stdin = std::io::stdin().lock();
            let mut block = 0u64;
            loop {
                let samples = read_pcm_raw(&mut stdin, a.sample_rate as usize)?;
                if samples.is_empty() {
                    break;
                }
                let cond = ChannelConditions::new(a.rssi, a.seed.wrapping_add(block));
                out.write(&apply_audio_channel_with(&PcmChunk::new(samples, a.sample_rate), &cond, &drop))?;
                block += 1;
            }
        }
        _ => bail!("give exactly one of --in or --pcm-stdin"),
    }
    Ok(())
}
