use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Class, Popularity, RequestRecord, RequestState, Server, ServerConfig};

/// Durable server state: the request log, quota counters and popularity
/// history. Queue contents are rebuilt from the request states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub next_id: u32,
    pub records: BTreeMap<u32, RequestRecord>,
    pub quota: HashMap<String, (i64, u32)>,
    pub popularity: Popularity,
}

impl Snapshot {
    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(std::io::Error::other)
    }

    /// Writes via a temporary file and rename.
    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec(self).map_err(std::io::Error::other)?)?;
        std::fs::rename(tmp, path)
    }
}

impl Server {
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            next_id: self.next_id,
            records: self.records.clone(),
            quota: self.quota.clone(),
            popularity: self.popularity.clone(),
        }
    }

    /// Restarts from a snapshot. Queued user and push requests are queued
    /// again; anything caught mid-pipeline is failed, since its rendered
    /// content was not persisted.
    pub fn restore(cfg: ServerConfig, snap: Snapshot, now: f64) -> Self {
        let mut s = Server::new(cfg, now);
        s.next_id = snap.next_id;
        s.quota = snap.quota;
        s.popularity = snap.popularity;
        s.records = snap.records;
        let ids: Vec<u32> = s.records.keys().copied().collect();
        for id in ids {
            let rec = &s.records[&id];
            match (rec.state, rec.class) {
                (RequestState::Queued, Class::User) => {
                    s.backlog += 1;
                    s.screenshot.push_back(id);
                }
                (RequestState::Queued, Class::Push) => {
                    s.backlog += 1;
                    s.push_render.push_back(id);
                }
                (RequestState::Done | RequestState::Failed, _) => {}
                (state, _) => {
                    if state.waiting() {
                        s.backlog += 1;
                    }
                    s.transition(id, RequestState::Failed, now, Some("interrupted by restart".into()));
                }
            }
        }
        s
    }
}
