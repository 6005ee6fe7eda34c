use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sonic_core::channel::{apply_audio_channel, ChannelConditions};
use sonic_core::modem::{
    demodulate, effective_throughput, modulate, Demodulator, ModemError, ModulationProfile, PcmChunk,
};

fn random_bytes(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.gen()).collect()
}

fn awgn(pcm: &PcmChunk, snr_db: f64, rng: &mut ChaCha8Rng) -> PcmChunk {
    let active: Vec<f64> = pcm.samples.iter().filter(|s| **s != 0).map(|&s| s as f64).collect();
    let power = active.iter().map(|s| s * s).sum::<f64>() / active.len() as f64;
    let normal = Normal::new(0.0, (power / 10f64.powf(snr_db / 10.0)).sqrt()).unwrap();
    let samples = pcm
        .samples
        .iter()
        .map(|&s| (s as f64 + normal.sample(rng)).round().clamp(-32768.0, 32767.0) as i16)
        .collect();
    PcmChunk::new(samples, pcm.sample_rate)
}

#[test]
fn noiseless_roundtrip() {
    let p = ModulationProfile::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [0usize, 1, 20, 21, 22, 168, 500, 1218, 5000, 100_000] {
        let x = random_bytes(&mut rng, n);
        let bursts = demodulate([&modulate(&x, &p)], &p).unwrap();
        assert_eq!(bursts.len(), 1, "n={n}");
        assert_eq!(bursts[0].bytes, x, "n={n}");
        assert!(bursts[0].report.correlation > 0.99);
        assert!(!bursts[0].cut_short);
    }
}

#[test]
fn bpsk_roundtrip() {
    let p = ModulationProfile::bpsk();
    let x: Vec<u8> = (0..777u32).map(|i| (i * 37) as u8).collect();
    let bursts = demodulate([&modulate(&x, &p)], &p).unwrap();
    assert_eq!(bursts[0].bytes, x);
}

#[test]
fn thirty_db_awgn() {
    let p = ModulationProfile::default();
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let mut ok = 0;
    for _ in 0..1000 {
        let x = random_bytes(&mut rng, 100);
        let noisy = awgn(&modulate(&x, &p), 30.0, &mut rng);
        if let Ok(b) = demodulate([&noisy], &p) {
            if b.len() == 1 && b[0].bytes == x {
                ok += 1;
            }
        }
    }
    assert!(ok >= 990, "{ok}/1000");
}

#[test]
fn snr_estimate_tracks_noise() {
    let p = ModulationProfile::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random_bytes(&mut rng, 300);
    let clean = modulate(&x, &p);
    let lo = demodulate([&awgn(&clean, 10.0, &mut rng)], &p).unwrap()[0].report.snr_db;
    let hi = demodulate([&awgn(&clean, 25.0, &mut rng)], &p).unwrap()[0].report.snr_db;
    assert!(hi > lo + 8.0, "{lo} {hi}");
}

#[test]
fn silence_is_no_sync() {
    let p = ModulationProfile::default();
    let silence = PcmChunk::new(vec![0; 44_100 * 2], 44_100);
    assert!(matches!(demodulate([&silence], &p), Err(ModemError::NoSync)));
    assert!(matches!(demodulate(std::iter::empty::<&PcmChunk>(), &p), Err(ModemError::NoSync)));
}

#[test]
fn noise_prefix_does_not_change_output() {
    let p = ModulationProfile::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_bytes(&mut rng, 2000);
    let clean = modulate(&x, &p);
    // −20 dBFS RMS ≈ 3277 LSB; stay below it.
    let normal = Normal::new(0.0f64, 2500.0).unwrap();
    for seconds in [0.0, 0.3, 1.0, 2.0] {
        let n = (seconds * 44_100.0) as usize;
        let mut samples: Vec<i16> = (0..n).map(|_| normal.sample(&mut rng).round().clamp(-32768.0, 32767.0) as i16).collect();
        samples.extend_from_slice(&clean.samples);
        let bursts = demodulate([&PcmChunk::new(samples, 44_100)], &p).unwrap();
        assert_eq!(bursts.len(), 1, "{seconds}s");
        assert_eq!(bursts[0].bytes, x);
        assert_eq!(bursts[0].report.start_sample, n as u64);
    }
}

#[test]
fn chunking_invariance() {
    let p = ModulationProfile::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut stream = vec![0i16; 3000];
    for n in [700usize, 40, 3000] {
        let x = random_bytes(&mut rng, n);
        stream.extend(awgn(&modulate(&x, &p), 20.0, &mut rng).samples);
        stream.extend(vec![0i16; 500]);
    }
    let whole = demodulate([&PcmChunk::new(stream.clone(), 44_100)], &p).unwrap();
    assert_eq!(whole.len(), 3);
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chunks = Vec::new();
        let mut i = 0;
        while i < stream.len() {
            let len = rng.gen_range(1..5000).min(stream.len() - i);
            chunks.push(PcmChunk::new(stream[i..i + len].to_vec(), 44_100));
            i += len;
        }
        assert_eq!(demodulate(&chunks, &p).unwrap(), whole);
    }
}

#[test]
fn truncated_stream_flushes_partial_burst() {
    let p = ModulationProfile::default();
    let x = vec![0x5Au8; 4000];
    let pcm = modulate(&x, &p);
    let half = PcmChunk::new(pcm.samples[..pcm.samples.len() / 2].to_vec(), 44_100);
    let mut d = Demodulator::new(&p).unwrap();
    assert!(d.push_chunk(&half).unwrap().is_empty());
    assert!(d.in_burst());
    let out = d.finish().unwrap();
    assert_eq!(out.len(), 1);
    assert!(out[0].cut_short);
    assert_eq!(out[0].bytes.len(), 4000);
    assert_eq!(&out[0].bytes[..1000], &x[..1000]);
}

#[test]
fn measured_rate_on_sixty_seconds() {
    let p = ModulationProfile::default();
    let analytic = effective_throughput(&p);
    let n = (60.0 * analytic / 8.0) as usize;
    let pcm = modulate(&vec![0xC3; n], &p);
    let payload = pcm.samples.len() - p.preamble_len() - p.symbol_len() - p.tail_len();
    let measured = n as f64 * 8.0 / (payload as f64 / 44_100.0);
    assert!((measured - analytic).abs() / analytic < 0.05, "{measured} vs {analytic}");
}

#[test]
fn audio_channel_at_strong_signal_is_clean() {
    let p = ModulationProfile::default();
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    for seed in 0..20 {
        let x = random_bytes(&mut rng, 1500);
        let noisy = apply_audio_channel(&modulate(&x, &p), &ChannelConditions::new(-60.0, seed));
        assert_eq!(demodulate([&noisy], &p).unwrap()[0].bytes, x);
    }
}

#[test]
fn full_scale_samples_do_not_panic() {
    let p = ModulationProfile::default();
    let mut pcm = modulate(&[7u8; 300], &p);
    let n = pcm.samples.len();
    for s in pcm.samples[n / 3..n / 2].iter_mut() {
        *s = i16::MIN;
    }
    let _ = demodulate([&pcm], &p);
}
