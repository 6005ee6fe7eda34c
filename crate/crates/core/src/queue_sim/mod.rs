//! Discrete-event model of the broadcast queue: synthetic busy-day
//! workloads, FCFS service on one or more carrier frequencies inside the
//! daily window, and replay of a live server's event log.

mod replay;
mod workload;

pub use replay::{replay_log, trace_from_log};
pub use workload::{generate_workload, PushEvent, ServiceModel, WorkloadParams};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::hub::RequestKind;
use crate::server::Class;
use crate::window::TransmissionWindow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceItem {
    pub id: u32,
    /// Arrival, in local seconds.
    pub t: f64,
    pub class: Class,
    pub kind: RequestKind,
    /// Standard-normal size quantile fed to the service model.
    pub z: f64,
    /// Measured air time; overrides the service model when set.
    pub service_s: Option<f64>,
    /// Uniform draw deciding the cache skip.
    pub skip_u: f64,
}

/// Arrivals sorted by time, over `[start, end)` in local seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub start: f64,
    pub end: f64,
    pub items: Vec<TraceItem>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KindCounts {
    pub enqueued: usize,
    pub served: usize,
    pub unserved: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub start: f64,
    /// Waiting items at `start + 60 k`.
    pub queue_series: Vec<usize>,
    pub peak_queue: usize,
    pub peak_time: f64,
    pub enqueued: usize,
    pub served: usize,
    pub unserved: usize,
    pub skipped: usize,
    pub failed: usize,
    pub by_kind: BTreeMap<RequestKind, KindCounts>,
}

impl SimResult {
    pub fn conserved(&self) -> bool {
        self.enqueued == self.served + self.unserved + self.skipped + self.failed
    }

    /// One `minute,queue` row per sample.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("minute,queue\n");
        for (m, q) in self.queue_series.iter().enumerate() {
            s.push_str(&format!("{m},{q}\n"));
        }
        s
    }
}

/// When a waiting item stopped waiting, and whether it went on air.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Outcome {
    pub arrival: f64,
    pub left: Option<f64>,
    pub played: bool,
}

/// Queue bookkeeping shared by `simulate` and `replay_log`. An item waits
/// from arrival until it starts playing (or fails); at equal times
/// departures are counted before arrivals.
pub(crate) fn queue_stats(outcomes: &[Outcome], start: f64, end: f64) -> (Vec<usize>, usize, f64) {
    let mut ev: Vec<(f64, i32)> = Vec::with_capacity(outcomes.len() * 2);
    for o in outcomes {
        ev.push((o.arrival, 1));
        if let Some(t) = o.left {
            ev.push((t, -1));
        }
    }
    ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (mut level, mut peak, mut peak_time) = (0i64, 0i64, start);
    for &(t, d) in &ev {
        level += d as i64;
        if level > peak {
            peak = level;
            peak_time = t;
        }
    }
    let minutes = ((end - start) / 60.0).floor().max(0.0) as usize + 1;
    let mut series = Vec::with_capacity(minutes);
    let (mut i, mut level) = (0usize, 0i64);
    for m in 0..minutes {
        let tm = start + 60.0 * m as f64;
        while i < ev.len() && ev[i].0 <= tm {
            level += ev[i].1 as i64;
            i += 1;
        }
        series.push(level.max(0) as usize);
    }
    (series, peak as usize, peak_time)
}

/// FCFS service with class priority (hub, user, push) on `n_freqs`
/// independent frequencies; user requests are skipped as cache hits with
/// probability `cache_hit_rate` and the rest dealt round-robin within each
/// kind. An item
/// starts only inside the window and only if it ends before the window
/// closes; anything not started by `trace.end` is unserved.
pub fn simulate(
    trace: &Trace,
    n_freqs: usize,
    window: &TransmissionWindow,
    svc: &ServiceModel,
    cache_hit_rate: f64,
) -> SimResult {
    assert!(n_freqs >= 1, "need at least one frequency");
    let mut by_kind: BTreeMap<RequestKind, KindCounts> = BTreeMap::new();
    let mut lanes: Vec<Vec<usize>> = vec![Vec::new(); n_freqs];
    let mut skipped = 0;
    let mut dealt = 0;
    let mut per_kind: BTreeMap<RequestKind, usize> = BTreeMap::new();
    for (i, it) in trace.items.iter().enumerate() {
        by_kind.entry(it.kind).or_default().enqueued += 1;
        if it.class == Class::User && it.skip_u < cache_hit_rate {
            skipped += 1;
            by_kind.get_mut(&it.kind).expect("inserted").skipped += 1;
            continue;
        }
        let k = per_kind.entry(it.kind).or_default();
        lanes[*k % n_freqs].push(i);
        *k += 1;
        dealt += 1;
    }

    let mut outcomes = Vec::with_capacity(dealt);
    for lane in &lanes {
        run_lane(trace, lane, window, svc, &mut outcomes);
    }

    let mut res = SimResult { start: trace.start, enqueued: trace.items.len(), skipped, ..Default::default() };
    for (idx, o) in outcomes.iter() {
        let k = by_kind.get_mut(&trace.items[*idx].kind).expect("inserted");
        if o.played {
            res.served += 1;
            k.served += 1;
        } else {
            res.unserved += 1;
            k.unserved += 1;
        }
    }
    let plain: Vec<Outcome> = outcomes.into_iter().map(|(_, o)| o).collect();
    let (series, peak, peak_time) = queue_stats(&plain, trace.start, trace.end);
    res.queue_series = series;
    res.peak_queue = peak;
    res.peak_time = peak_time;
    res.by_kind = by_kind;
    res
}

fn run_lane(trace: &Trace, lane: &[usize], window: &TransmissionWindow, svc: &ServiceModel, out: &mut Vec<(usize, Outcome)>) {
    let items = &trace.items;
    let service = |i: usize| items[i].service_s.unwrap_or_else(|| svc.duration(items[i].kind, items[i].z));
    // Waiting set ordered by (class, position in lane).
    let mut waiting: BTreeSet<(Class, usize)> = BTreeSet::new();
    let mut next = 0usize;
    let Some(&first) = lane.first() else { return };
    let mut t = items[first].t;

    let admit = |waiting: &mut BTreeSet<(Class, usize)>, next: &mut usize, t: f64, inclusive: bool| {
        while *next < lane.len() {
            let it = &items[lane[*next]];
            let due = it.t < t || (it.t == t && (inclusive || it.class == Class::Hub));
            if !due {
                break;
            }
            waiting.insert((it.class, *next));
            *next += 1;
        }
    };
    let try_start = |waiting: &mut BTreeSet<(Class, usize)>, t: f64, out: &mut Vec<(usize, Outcome)>| -> Option<f64> {
        let &(_, pos) = waiting.first()?;
        let s = service(lane[pos]);
        if !window.is_open(t) || t + s > window.window_end(t) || t >= trace.end {
            return None;
        }
        waiting.pop_first();
        out.push((lane[pos], Outcome { arrival: items[lane[pos]].t, left: Some(t), played: true }));
        Some(t + s)
    };

    while t < trace.end {
        admit(&mut waiting, &mut next, t, false);
        if let Some(done) = try_start(&mut waiting, t, out) {
            t = done;
            continue;
        }
        admit(&mut waiting, &mut next, t, true);
        if let Some(done) = try_start(&mut waiting, t, out) {
            t = done;
            continue;
        }
        let mut wake = f64::INFINITY;
        if next < lane.len() {
            wake = items[lane[next]].t;
        }
        if !waiting.is_empty() {
            let w = if window.is_open(t) {
                window.next_open(window.window_end(t))
            } else {
                window.next_open(t)
            };
            wake = wake.min(w);
        }
        if !wake.is_finite() {
            break;
        }
        t = wake;
    }
    admit(&mut waiting, &mut next, f64::INFINITY, true);
    for (_, pos) in waiting {
        out.push((lane[pos], Outcome { arrival: items[lane[pos]].t, left: None, played: false }));
    }
}
