use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::hub::{HubEntry, RequestKind};

/// Request counts per subject over a rolling period.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Popularity {
    /// (time, kind, subject) for every counted request, oldest first.
    hits: Vec<(f64, RequestKind, String)>,
}

impl Popularity {
    pub fn record(&mut self, t: f64, kind: RequestKind, subject: &str) {
        self.hits.push((t, kind, subject.to_owned()));
    }

    /// Forgets hits older than `period_s` before `now`.
    pub fn prune(&mut self, now: f64, period_s: f64) {
        self.hits.retain(|(t, _, _)| now - t < period_s);
    }

    /// Most requested subjects in the period: count descending, then
    /// subject, then kind.
    pub fn top(&self, now: f64, period_s: f64, n: usize) -> Vec<HubEntry> {
        let mut counts: HashMap<(RequestKind, &str), u32> = HashMap::new();
        for (t, kind, subject) in &self.hits {
            if now - t < period_s && *t <= now {
                *counts.entry((*kind, subject.as_str())).or_default() += 1;
            }
        }
        let mut v: Vec<HubEntry> = counts
            .into_iter()
            .map(|((kind, subject), count)| HubEntry { kind, subject: subject.to_owned(), count })
            .collect();
        v.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.subject.cmp(&b.subject)).then(a.kind.cmp(&b.kind)));
        v.truncate(n);
        v
    }
}
