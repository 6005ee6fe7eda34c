use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{Trace, TraceItem};
use crate::hub::RequestKind;
use crate::server::Class;
use crate::window::{TimeOfDay, DAY_S};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushEvent {
    pub at: TimeOfDay,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadParams {
    pub n_users: usize,
    pub requests_per_user_day: usize,
    pub gpt_fraction: f64,
    pub cache_hit_rate: f64,
    /// Relative arrival weight per local hour, index 0 = 00:00-01:00.
    pub hourly: Vec<f64>,
    pub push_events: Vec<PushEvent>,
    /// Local time the simulated day begins; it runs for 24 h.
    pub day_start: TimeOfDay,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        Self {
            n_users: 15,
            requests_per_user_day: 10,
            gpt_fraction: 0.628,
            cache_hit_rate: 0.30,
            hourly: vec![
                3.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 5.0, 6.0, 6.0, 5.0, 5.0, 5.0, 6.0, 7.0, 7.0,
                6.0, 5.0, 8.0, 6.0,
            ],
            push_events: Vec::new(),
            day_start: TimeOfDay::hm(5, 0),
        }
    }
}

impl WorkloadParams {
    /// The 15-user day with ten push items arriving at 09:30.
    pub fn baseline() -> Self {
        Self { push_events: vec![PushEvent { at: TimeOfDay::hm(9, 30), count: 10 }], ..Self::default() }
    }

    pub fn users(n_users: usize) -> Self {
        Self { n_users, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.requests_per_user_day > 10 {
            return Err("at most 10 requests per user per day".into());
        }
        if !(0.0..=1.0).contains(&self.gpt_fraction) {
            return Err("gpt_fraction must lie in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.cache_hit_rate) {
            return Err("cache_hit_rate must lie in [0, 1]".into());
        }
        if self.hourly.len() != 24 || self.hourly.iter().any(|w| !(*w >= 0.0)) || self.hourly.iter().sum::<f64>() <= 0.0 {
            return Err("hourly needs 24 non-negative weights with a positive sum".into());
        }
        Ok(())
    }
}

/// Air time per item: lognormal payload size over a fixed byte rate plus
/// per-item overhead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceModel {
    pub rate_bytes_per_s: f64,
    pub overhead_s: f64,
    pub url_median_bytes: f64,
    pub url_sigma: f64,
    pub gpt_median_bytes: f64,
    pub gpt_sigma: f64,
}

impl Default for ServiceModel {
    fn default() -> Self {
        Self {
            rate_bytes_per_s: 1250.0,
            overhead_s: 3.0,
            url_median_bytes: 340_000.0,
            url_sigma: 0.25,
            gpt_median_bytes: 1500.0,
            gpt_sigma: 0.5,
        }
    }
}

impl ServiceModel {
    pub fn duration(&self, kind: RequestKind, z: f64) -> f64 {
        let (median, sigma) = match kind {
            RequestKind::Url => (self.url_median_bytes, self.url_sigma),
            RequestKind::Gpt => (self.gpt_median_bytes, self.gpt_sigma),
        };
        median * (sigma * z).exp() / self.rate_bytes_per_s + self.overhead_s
    }

    /// Every duration multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            rate_bytes_per_s: self.rate_bytes_per_s / k,
            overhead_s: self.overhead_s * k,
            ..self.clone()
        }
    }
}

/// A busy day: every user sends `requests_per_user_day` requests. Each
/// user's GPT share is stratified around `gpt_fraction`, arrival hours
/// follow `hourly`, and payload-size quantiles are Latin-hypercube samples
/// within each kind, as are the cache-skip draws.
pub fn generate_workload(p: &WorkloadParams, seed: u64) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = p.day_start.secs() as f64;
    let total: f64 = p.hourly.iter().sum();

    let mut items: Vec<TraceItem> = Vec::new();
    for _ in 0..p.n_users {
        let n = p.requests_per_user_day;
        let expect = n as f64 * p.gpt_fraction;
        let mut n_gpt = expect.floor() as usize;
        if rng.gen::<f64>() < expect - expect.floor() {
            n_gpt += 1;
        }
        let mut kinds: Vec<RequestKind> =
            (0..n).map(|i| if i < n_gpt { RequestKind::Gpt } else { RequestKind::Url }).collect();
        kinds.shuffle(&mut rng);
        for kind in kinds {
            let t = arrival(&p.hourly, total, start, &mut rng);
            items.push(TraceItem { id: 0, t, class: Class::User, kind, z: 0.0, service_s: None, skip_u: 0.0 });
        }
    }
    for ev in &p.push_events {
        let t = start + (ev.at.secs() as f64 - start).rem_euclid(DAY_S as f64);
        for _ in 0..ev.count {
            let item = TraceItem { id: 0, t, class: Class::Push, kind: RequestKind::Url, z: 0.0, service_s: None, skip_u: 1.0 };
            items.push(item);
        }
    }
    for kind in [RequestKind::Url, RequestKind::Gpt] {
        let idx: Vec<usize> = (0..items.len()).filter(|&i| items[i].kind == kind).collect();
        let mut strata: Vec<usize> = (0..idx.len()).collect();
        strata.shuffle(&mut rng);
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        for (&i, &k) in idx.iter().zip(&strata) {
            let u = (k as f64 + rng.gen::<f64>()) / idx.len() as f64;
            items[i].z = normal.inverse_cdf(u.clamp(1e-12, 1.0 - 1e-12));
        }
    }
    let users: Vec<usize> = (0..items.len()).filter(|&i| items[i].class == Class::User).collect();
    let mut strata: Vec<usize> = (0..users.len()).collect();
    strata.shuffle(&mut rng);
    for (&i, &k) in users.iter().zip(&strata) {
        items[i].skip_u = (k as f64 + rng.gen::<f64>()) / users.len() as f64;
    }
    items.sort_by(|a, b| a.t.total_cmp(&b.t));
    for (i, it) in items.iter_mut().enumerate() {
        it.id = i as u32 + 1;
    }
    Trace { start, end: start + DAY_S as f64, items }
}

fn arrival(hourly: &[f64], total: f64, start: f64, rng: &mut impl Rng) -> f64 {
    let mut x = rng.gen::<f64>() * total;
    let mut hour = 23;
    for (h, w) in hourly.iter().enumerate() {
        if x < *w {
            hour = h;
            break;
        }
        x -= w;
    }
    let local = hour as f64 * 3600.0 + rng.gen::<f64>() * 3600.0;
    start + (local - start).rem_euclid(DAY_S as f64)
}
