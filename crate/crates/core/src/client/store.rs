use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use thiserror::Error;

use super::ReceivedItem;

/// Items untouched for this long are evicted.
pub const EVICT_AFTER_S: f64 = 24.0 * 3600.0;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt item record: {0}")]
    Json(#[from] serde_json::Error),
}

pub trait ItemStore: Send + Sync {
    /// Stores an item unless a copy with no more loss is already held.
    /// Returns whether the stored copy changed.
    fn put(&self, item: ReceivedItem) -> Result<bool, StoreError>;
    /// Fetches an item and marks it accessed at `now`.
    fn get(&self, id: u32, now: f64) -> Result<Option<ReceivedItem>, StoreError>;
    /// Items sorted newest first.
    fn list(&self) -> Vec<ReceivedItem>;
    /// Drops items idle for longer than `EVICT_AFTER_S`; returns their ids.
    fn evict(&self, now: f64) -> Result<Vec<u32>, StoreError>;
}

fn keep_new(old: Option<&ReceivedItem>, new: &ReceivedItem) -> bool {
    old.is_none_or(|o| new.loss_percent < o.loss_percent)
}

fn newest_first(mut v: Vec<ReceivedItem>) -> Vec<ReceivedItem> {
    v.sort_by(|a, b| b.received_at.total_cmp(&a.received_at).then(a.id.cmp(&b.id)));
    v
}

fn idle(items: &BTreeMap<u32, ReceivedItem>, now: f64) -> Vec<u32> {
    items
        .values()
        .filter(|i| now - i.last_accessed > EVICT_AFTER_S)
        .map(|i| i.id)
        .collect()
}

#[derive(Default)]
pub struct MemoryStore {
    items: Mutex<BTreeMap<u32, ReceivedItem>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl ItemStore for MemoryStore {
    fn put(&self, item: ReceivedItem) -> Result<bool, StoreError> {
        let mut items = self.items.lock().unwrap();
        if !keep_new(items.get(&item.id), &item) {
            return Ok(false);
        }
        items.insert(item.id, item);
        Ok(true)
    }

    fn get(&self, id: u32, now: f64) -> Result<Option<ReceivedItem>, StoreError> {
        let mut items = self.items.lock().unwrap();
        Ok(items.get_mut(&id).map(|i| {
            i.last_accessed = now;
            i.clone()
        }))
    }

    fn list(&self) -> Vec<ReceivedItem> {
        newest_first(self.items.lock().unwrap().values().cloned().collect())
    }

    fn evict(&self, now: f64) -> Result<Vec<u32>, StoreError> {
        let mut items = self.items.lock().unwrap();
        let gone = idle(&items, now);
        for id in &gone {
            items.remove(id);
        }
        Ok(gone)
    }
}

/// Directory-backed store: `<id>.json` holds the record and `<id>.png`
/// the concealed raster. Records are cached in memory after `open`.
pub struct DirStore {
    dir: PathBuf,
    items: Mutex<BTreeMap<u32, ReceivedItem>>,
}

impl DirStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let mut items = BTreeMap::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let mut item: ReceivedItem = serde_json::from_slice(&fs::read(&path)?)?;
            let png = path.with_extension("png");
            if png.exists() {
                item.image_png = Some(fs::read(png)?);
            }
            items.insert(item.id, item);
        }
        Ok(Self { dir, items: Mutex::new(items) })
    }

    fn write(&self, item: &ReceivedItem) -> Result<(), StoreError> {
        let json = self.dir.join(format!("{}.json", item.id));
        let tmp = json.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(item)?)?;
        fs::rename(&tmp, &json)?;
        let png = self.dir.join(format!("{}.png", item.id));
        match &item.image_png {
            Some(bytes) => fs::write(png, bytes)?,
            None if png.exists() => fs::remove_file(png)?,
            None => {}
        }
        Ok(())
    }
}

impl ItemStore for DirStore {
    fn put(&self, item: ReceivedItem) -> Result<bool, StoreError> {
        let mut items = self.items.lock().unwrap();
        if !keep_new(items.get(&item.id), &item) {
            return Ok(false);
        }
        self.write(&item)?;
        items.insert(item.id, item);
        Ok(true)
    }

    fn get(&self, id: u32, now: f64) -> Result<Option<ReceivedItem>, StoreError> {
        let mut items = self.items.lock().unwrap();
        let Some(item) = items.get_mut(&id) else {
            return Ok(None);
        };
        item.last_accessed = now;
        let item = item.clone();
        self.write(&item)?;
        Ok(Some(item))
    }

    fn list(&self) -> Vec<ReceivedItem> {
        newest_first(self.items.lock().unwrap().values().cloned().collect())
    }

    fn evict(&self, now: f64) -> Result<Vec<u32>, StoreError> {
        let mut items = self.items.lock().unwrap();
        let gone = idle(&items, now);
        for id in &gone {
            items.remove(id);
            for ext in ["json", "png"] {
                let p = self.dir.join(format!("{id}.{ext}"));
                if p.exists() {
                    fs::remove_file(p)?;
                }
            }
        }
        Ok(gone)
    }
}
