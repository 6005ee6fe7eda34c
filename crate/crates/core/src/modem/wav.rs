use std::io::{Read, Write};
use std::path::Path;

use super::{ModemError, PcmChunk};

/// Writes mono 16-bit PCM.
pub fn write_wav(pcm: &PcmChunk, path: impl AsRef<Path>) -> Result<(), ModemError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: pcm.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    let mut w16 = w.get_i16_writer(pcm.samples.len() as u32);
    for &s in &pcm.samples {
        w16.write_sample(s);
    }
    w16.flush()?;
    w.finalize()?;
    Ok(())
}

/// Reads mono 16-bit integer PCM; anything else is `Unsupported`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<PcmChunk, ModemError> {
    let mut r = hound::WavReader::open(path)?;
    let spec = r.spec();
    if spec.channels != 1 {
        return Err(ModemError::Unsupported(format!("{} channels", spec.channels)));
    }
    if spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(ModemError::Unsupported(format!(
            "{}-bit {:?} samples",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let samples = r.samples::<i16>().collect::<Result<Vec<_>, _>>()?;
    Ok(PcmChunk { samples, sample_rate: spec.sample_rate })
}

/// Raw little-endian i16 samples, as used on `--pcm-stdin`.
pub fn read_pcm_raw(mut r: impl Read, max: usize) -> std::io::Result<Vec<i16>> {
    let mut bytes = vec![0u8; max * 2];
    let mut filled = 0;
    while filled < bytes.len() {
        match r.read(&mut bytes[filled..])? {
            0 => break,
            n => filled += n,
        }
    }
    bytes.truncate(filled - filled % 2);
    Ok(bytes.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect())
}

pub fn write_pcm_raw(mut w: impl Write, samples: &[i16]) -> std::io::Result<()> {
    let bytes: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
    w.write_all(&bytes)
}
