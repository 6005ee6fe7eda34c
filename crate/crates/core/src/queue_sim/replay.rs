use std::collections::BTreeMap;

use super::{queue_stats, Outcome, SimResult, Trace, TraceItem};
use crate::server::{EventBody, RequestState, ServerEvent};

struct Life {
    t: f64,
    item: TraceItem,
    encoded: bool,
    start: Option<f64>,
    failed_at: Option<f64>,
}

fn lives(events: &[ServerEvent]) -> BTreeMap<u32, Life> {
    let mut lives: BTreeMap<u32, Life> = BTreeMap::new();
    for e in events {
        match &e.body {
            EventBody::Accepted { id, kind, class, .. } => {
                let item = TraceItem { id: *id, t: e.t, class: *class, kind: *kind, z: 0.0, service_s: None, skip_u: 1.0 };
                lives.insert(*id, Life { t: e.t, item, encoded: false, start: None, failed_at: None });
            }
            EventBody::State { id, to, air_s, .. } => {
                let Some(l) = lives.get_mut(id) else { continue };
                match to {
                    RequestState::Encoded => {
                        l.encoded = true;
                        l.item.service_s = *air_s;
                    }
                    RequestState::Playing => l.start = Some(e.t),
                    RequestState::Failed if l.start.is_none() => l.failed_at = Some(e.t),
                    _ => {}
                }
            }
            _ => {}
        }
    }
    lives
}

fn span(events: &[ServerEvent]) -> (f64, f64) {
    match (events.first(), events.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => (0.0, 0.0),
    }
}

/// Queue statistics from a server event log: arrivals are acceptances,
/// departures are play starts or failures. Times stay in Unix seconds.
pub fn replay_log(events: &[ServerEvent]) -> SimResult {
    let (start, end) = span(events);
    let mut res = SimResult { start, peak_time: start, ..Default::default() };
    let mut outcomes = Vec::new();
    for l in lives(events).into_values() {
        let k = res.by_kind.entry(l.item.kind).or_default();
        k.enqueued += 1;
        res.enqueued += 1;
        let left = l.start.or(l.failed_at);
        if l.start.is_some() {
            res.served += 1;
            k.served += 1;
        } else if l.failed_at.is_some() {
            res.failed += 1;
        } else {
            res.unserved += 1;
            k.unserved += 1;
        }
        outcomes.push(Outcome { arrival: l.t, left, played: l.start.is_some() });
    }
    if events.is_empty() {
        return res;
    }
    let (series, peak, peak_time) = queue_stats(&outcomes, start, end);
    res.queue_series = series;
    res.peak_queue = peak;
    res.peak_time = peak_time;
    res
}

/// The arrivals of a logged session with their measured air times, for
/// `simulate`. Requests that failed before encoding are left out. The
/// local clock is Unix time plus `utc_offset_s`.
pub fn trace_from_log(events: &[ServerEvent], utc_offset_s: f64) -> Trace {
    let (start, end) = span(events);
    let mut items: Vec<TraceItem> = lives(events)
        .into_values()
        .filter(|l| l.encoded)
        .map(|mut l| {
            l.item.t += utc_offset_s;
            l.item
        })
        .collect();
    items.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.id.cmp(&b.id)));
    Trace { start: start + utc_offset_s, end: end + utc_offset_s, items }
}
