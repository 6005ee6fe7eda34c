//! Where transmitted audio goes: one WAV file per transmission, or a
//! continuous raw PCM stream padded with silence to wall-clock time.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use sonic_core::modem::{write_pcm_raw, write_wav, PcmChunk};

pub enum AudioSink {
    WavDir(PathBuf),
    Stream { out: Box<dyn Write + Send>, t0: Option<f64>, written: u64, sample_rate: u32 },
    Discard,
}

impl AudioSink {
    /// `wav:<dir>`, `stdout` or `none`.
    pub fn parse(target: &str, sample_rate: u32) -> anyhow::Result<Self> {
        if let Some(dir) = target.strip_prefix("wav:") {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {dir}"))?;
            return Ok(Self::WavDir(dir.into()));
        }
        match target {
            "stdout" => Ok(Self::stream(Box::new(std::io::stdout()), sample_rate)),
            "none" => Ok(Self::Discard),
            _ => bail!("unknown audio_out {target:?}; expected wav:<dir>, stdout or none"),
        }
    }

    pub fn stream(out: Box<dyn Write + Send>, sample_rate: u32) -> Self {
        Self::Stream { out, t0: None, written: 0, sample_rate }
    }

    /// Whether keepalive bursts are worth synthesizing for this sink.
    pub fn wants_keepalives(&self) -> bool {
        matches!(self, Self::Stream { .. })
    }

    /// Emits `pcm` as starting at Unix time `t`. Returns the file written,
    /// if any.
    pub fn emit(&mut self, t: f64, name: &str, pcm: &PcmChunk) -> anyhow::Result<Option<PathBuf>> {
        match self {
            Self::WavDir(dir) => {
                let path = dir.join(format!("{}-{name}.wav", t.floor() as i64));
                write_wav(pcm, &path).with_context(|| format!("writing {}", path.display()))?;
                Ok(Some(path))
            }
            Self::Stream { out, t0, written, sample_rate } => {
                let start = *t0.get_or_insert(t);
                let due = ((t - start).max(0.0) * *sample_rate as f64) as u64;
                if due > *written {
                    let gap = vec![0i16; (due - *written) as usize];
                    write_pcm_raw(&mut *out, &gap)?;
                    *written = due;
                }
                write_pcm_raw(&mut *out, &pcm.samples)?;
                out.flush()?;
                *written += pcm.samples.len() as u64;
                Ok(None)
            }
            Self::Discard => Ok(None),
        }
    }
}

pub fn wav_files_in(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "wav"))
        .collect();
    files.sort();
    Ok(files)
}
