//! Browser bindings for the demo page in `www/`. Every export returns
//! plain JSON or byte buffers so the page needs no glue beyond the
//! generated module.

use image::RgbImage;
use serde::Serialize;
use sonic_core::channel::{frame_loss_prob, ChannelConditions, LossModel};
use sonic_core::client::{conceal, decode_raster, frame_channel_loss};
use sonic_core::format::{decode_frames, SonicFile};
use sonic_core::queue_sim::{generate_workload, simulate, PushEvent, ServiceModel, WorkloadParams};
use sonic_core::renderer::{capture_page, render_page, render_text_file, FixtureBrowser, RenderConfig};
use sonic_core::window::{TimeOfDay, TransmissionWindow};
use wasm_bindgen::prelude::*;

const DEMO_URL: &str = "https://example.org/news";

fn demo_page() -> SonicFile {
    let capture = capture_page(DEMO_URL, &FixtureBrowser::synthetic()).expect("fixture capture");
    render_page(1, &capture, &RenderConfig::default(), 0).expect("fixture render").file
}

fn demo_answer() -> SonicFile {
    let text: String = "Frequency modulation varies the carrier frequency with the signal. ".repeat(22);
    render_text_file(2, "how does FM work", &text, 0).expect("text render")
}

#[derive(Serialize)]
struct LossPoint {
    rssi: f64,
    frame_loss: f64,
    page: [f64; 3],
    answer_delivered: f64,
}

fn quartiles(mut v: Vec<f64>) -> [f64; 3] {
    v.sort_by(f64::total_cmp);
    let q = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
    [q(0.25), q(0.5), q(0.75)]
}

/// Loss against RSSI from -50 to -110 dBm in 5 dB steps: the per-frame
/// loss probability, page loss quartiles over `trials` seeds and the
/// fraction of a 1.5 kB answer that arrives whole.
#[wasm_bindgen]
pub fn loss_curve(trials: u32) -> String {
    let trials = trials.max(1) as u64;
    let model = LossModel::default();
    let (page, answer) = (demo_page(), demo_answer());
    let points: Vec<LossPoint> = (0..=12)
        .map(|i| {
            let rssi = -50.0 - 5.0 * i as f64;
            let losses = (0..trials).map(|s| frame_channel_loss(&page, &ChannelConditions::new(rssi, s), &model)).collect();
            let whole = (0..trials)
                .filter(|s| frame_channel_loss(&answer, &ChannelConditions::new(rssi, s + 1_000_000), &model) == 0.0)
                .count();
            LossPoint {
                rssi,
                frame_loss: frame_loss_prob(rssi, &model),
                page: quartiles(losses),
                answer_delivered: whole as f64 / trials as f64,
            }
        })
        .collect();
    serde_json::to_string(&points).expect("serializable")
}

#[derive(Serialize)]
struct QueueRun {
    label: &'static str,
    users: usize,
    freqs: usize,
    peak: usize,
    unserved: usize,
    series: Vec<usize>,
}

/// The four reference queue scenarios for one seed.
#[wasm_bindgen]
pub fn queue_curves(seed: u64) -> String {
    let runs: Vec<QueueRun> = [("a", 15, 1, true), ("b", 30, 1, false), ("c", 105, 2, false), ("d", 300, 10, false)]
        .into_iter()
        .map(|(label, users, freqs, burst)| {
            let mut p = WorkloadParams::users(users);
            if burst {
                p.push_events.push(PushEvent { at: TimeOfDay::hm(9, 30), count: 10 });
            }
            let trace = generate_workload(&p, seed);
            let r = simulate(&trace, freqs, &TransmissionWindow::default(), &ServiceModel::default(), p.cache_hit_rate);
            QueueRun { label, users, freqs, peak: r.peak_queue, unserved: r.unserved, series: r.queue_series }
        })
        .collect();
    serde_json::to_string(&runs).expect("serializable")
}

/// One page sent through the frame channel, before and after concealment.
#[wasm_bindgen]
pub struct ConcealDemo {
    width: u32,
    height: u32,
    loss_percent: f64,
    original: Vec<u8>,
    damaged: Vec<u8>,
    concealed: Vec<u8>,
}

fn rgba(img: &RgbImage) -> Vec<u8> {
    img.pixels().flat_map(|p| [p[0], p[1], p[2], 255]).collect()
}

#[wasm_bindgen]
impl ConcealDemo {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> u32 {
        self.width
    }
    #[wasm_bindgen(getter)]
    pub fn height(&self) -> u32 {
        self.height
    }
    #[wasm_bindgen(getter)]
    pub fn loss_percent(&self) -> f64 {
        self.loss_percent
    }
    /// RGBA bytes, row-major.
    pub fn original(&self) -> Vec<u8> {
        self.original.clone()
    }
    /// Lost strips shown in magenta.
    pub fn damaged(&self) -> Vec<u8> {
        self.damaged.clone()
    }
    pub fn concealed(&self) -> Vec<u8> {
        self.concealed.clone()
    }
}

/// Sends the demo page at `rssi` with `seed`, retrying later seeds until
/// the metadata survives (up to 100 tries). None when it never does.
#[wasm_bindgen]
pub fn conceal_demo(rssi: f64, seed: u64) -> Option<ConcealDemo> {
    let page = demo_page();
    let frames = page.transmission_frames().ok()?;
    let model = LossModel::default();
    let session = (seed..seed + 100).find_map(|s| {
        let kept = sonic_core::channel::apply_frame_channel(&frames, &ChannelConditions::new(rssi, s), &model);
        decode_frames(&kept).ok()
    })?;
    let meta = &page.metadata;
    let (clean, _) = decode_raster(meta, &page.payload, &vec![false; page.payload.len()]);
    let r = &session.reassembly;
    let (raster, mask) = decode_raster(meta, &r.payload, &r.missing);
    let mut damaged = raster.clone();
    for (x, y, p) in damaged.enumerate_pixels_mut() {
        if mask.get(x, y) {
            *p = image::Rgb([255, 0, 255]);
        }
    }
    Some(ConcealDemo {
        width: clean.width(),
        height: clean.height(),
        loss_percent: r.loss_percent(),
        original: rgba(&clean),
        damaged: rgba(&damaged),
        concealed: rgba(&conceal(&raster, &mask)),
    })
}
