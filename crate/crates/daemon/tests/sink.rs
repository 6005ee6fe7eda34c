use std::io::Write;
use std::sync::{Arc, Mutex};

use sonic_core::modem::{read_wav, PcmChunk};
use sonic_daemon::sink::{wav_files_in, AudioSink};

#[derive(Clone, Default)]
struct Shared(Arc<Mutex<Vec<u8>>>);

impl Write for Shared {
    fn write(&mut self, b: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(b);
        Ok(b.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

#[test]
fn stream_pads_to_wall_time() {
    let buf = Shared::default();
    let mut sink = AudioSink::stream(Box::new(buf.clone()), 1000);
    let burst = PcmChunk::new(vec![7; 100], 1000);
    sink.emit(10.0, "a", &burst).unwrap();
    sink.emit(12.5, "b", &burst).unwrap();
    // Overlapping emits are appended, never dropped.
    sink.emit(12.5, "c", &burst).unwrap();
    let bytes = buf.0.lock().unwrap().clone();
    let samples: Vec<i16> = bytes.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect();
    assert_eq!(samples.len(), 2500 + 200);
    assert!(samples[..100].iter().all(|s| *s == 7));
    assert!(samples[100..2500].iter().all(|s| *s == 0));
    assert!(samples[2500..].iter().all(|s| *s == 7));
    assert!(sink.wants_keepalives());
}

#[test]
fn wav_dir_names_by_start_time() {
    let dir = tempfile::tempdir().unwrap();
    let target = format!("wav:{}", dir.path().join("out").display());
    let mut sink = AudioSink::parse(&target, 44_100).unwrap();
    assert!(!sink.wants_keepalives());
    let pcm = PcmChunk::new(vec![1, -1, 2], 44_100);
    let p = sink.emit(1_700_000_123.9, "000042", &pcm).unwrap().unwrap();
    assert_eq!(p.file_name().unwrap(), "1700000123-000042.wav");
    assert_eq!(read_wav(&p).unwrap(), pcm);
    assert_eq!(wav_files_in(&dir.path().join("out")).unwrap(), vec![p]);
}

#[test]
fn sink_spec_parsing() {
    assert!(matches!(AudioSink::parse("none", 44_100).unwrap(), AudioSink::Discard));
    assert!(matches!(AudioSink::parse("stdout", 44_100).unwrap(), AudioSink::Stream { .. }));
    assert!(AudioSink::parse("speaker", 44_100).is_err());
}
