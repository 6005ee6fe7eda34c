//! The receiver daemon: PCM ingest into a store, and the local HTTP API
//! the UI talks to.

use std::io::Read;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sonic_core::client::{
    classify_completion, map_click, ItemStore, ItemSummary, ReceivedItem, Receiver, ReceiverConfig, ReceiverEvent,
    ONLINE_EXPIRY_S,
};
use sonic_core::format::{ClickMapEntry, SonicMetadata};
use sonic_core::modem::{read_pcm_raw, read_wav};
use sonic_core::server::UplinkMessage;

use crate::Clock;

/// Everything that consumes receiver events: the store and the online flag.
pub struct Inbox {
    pub store: Arc<dyn ItemStore>,
    last_heard: Mutex<Option<f64>>,
    clock: Clock,
}

impl Inbox {
    pub fn new(store: Arc<dyn ItemStore>, clock: Clock) -> Arc<Self> {
        Arc::new(Self { store, last_heard: Mutex::new(None), clock })
    }

    pub fn handle(&self, ev: ReceiverEvent) {
        match ev {
            ReceiverEvent::Item(item) => {
                self.heard();
                let (id, loss) = (item.id, item.loss_percent);
                match self.store.put(item) {
                    Ok(true) => log::info!("item #{id} stored ({loss:.1}% loss)"),
                    Ok(false) => log::info!("item #{id} received again, kept the better copy"),
                    Err(e) => log::error!("storing #{id}: {e}"),
                }
            }
            ReceiverEvent::Keepalive { .. } => self.heard(),
            ReceiverEvent::Discarded { reason, .. } => log::warn!("discarded a transmission: {reason}"),
        }
    }

    fn heard(&self) {
        *self.last_heard.lock().unwrap_or_else(|e| e.into_inner()) = Some((self.clock)());
    }

    pub fn last_heard(&self) -> Option<f64> {
        *self.last_heard.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn online(&self) -> bool {
        self.last_heard().is_some_and(|t| (self.clock)() - t <= ONLINE_EXPIRY_S)
    }

    pub fn evict(&self) {
        match self.store.evict((self.clock)()) {
            Ok(ids) if !ids.is_empty() => log::info!("evicted {ids:?}"),
            Ok(_) => {}
            Err(e) => log::error!("evicting: {e}"),
        }
    }
}

pub enum PcmSource {
    /// 16-bit little-endian mono at the profile rate, from stdin or a pipe.
    Raw(Box<dyn Read + Send>),
    Wavs(Vec<PathBuf>),
}

/// Runs a receiver over `source` until it ends.
pub fn ingest(source: PcmSource, cfg: &ReceiverConfig, inbox: &Inbox) -> anyhow::Result<()> {
    let mut rx = Receiver::new(cfg)?;
    match source {
        PcmSource::Raw(mut r) => {
            let chunk = cfg.profile.sample_rate as usize / 10;
            loop {
                let samples = read_pcm_raw(&mut r, chunk)?;
                if samples.is_empty() {
                    break;
                }
                rx.push(&samples).into_iter().for_each(|e| inbox.handle(e));
            }
        }
        PcmSource::Wavs(paths) => {
            let gap = vec![0i16; cfg.profile.sample_rate as usize];
            for p in paths {
                let pcm = read_wav(&p).map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?;
                if pcm.sample_rate != cfg.profile.sample_rate {
                    anyhow::bail!("{}: {} Hz, expected {}", p.display(), pcm.sample_rate, cfg.profile.sample_rate);
                }
                rx.push(&pcm.samples).into_iter().for_each(|e| inbox.handle(e));
                rx.push(&gap).into_iter().for_each(|e| inbox.handle(e));
            }
        }
    }
    rx.finish().into_iter().for_each(|e| inbox.handle(e));
    Ok(())
}

pub struct ClientApi {
    pub inbox: Arc<Inbox>,
    pub uplink_url: String,
    pub sender: String,
    pub viewable_loss: f64,
    agent: ureq::Agent,
}

impl ClientApi {
    pub fn new(inbox: Arc<Inbox>, uplink_url: String, sender: String, viewable_loss: f64) -> Arc<Self> {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .http_status_as_error(false)
            .build()
            .into();
        Arc::new(Self { inbox, uplink_url, sender, viewable_loss, agent })
    }

    fn summary(&self, item: &ReceivedItem) -> ItemSummary {
        let mut s = item.summary();
        s.completion = classify_completion(item, self.viewable_loss);
        s
    }

    fn item(&self, id: u32) -> Result<ReceivedItem, Response> {
        match self.inbox.store.get(id, (self.inbox.clock)()) {
            Ok(Some(item)) => Ok(item),
            Ok(None) => Err(error(StatusCode::NOT_FOUND, "no such item")),
            Err(e) => Err(error(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string())),
        }
    }

    /// Sends `body` upstream as this receiver's sender id.
    pub fn forward(&self, body: &str) -> Result<(u16, Value), String> {
        let msg = UplinkMessage::new(self.sender.clone(), body);
        let mut resp = self.agent.post(&self.uplink_url).send_json(&msg).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let v = resp.body_mut().read_json::<Value>().unwrap_or(Value::Null);
        Ok((status, v))
    }
}

fn error(code: StatusCode, msg: &str) -> Response {
    (code, Json(json!({ "error": msg }))).into_response()
}

#[derive(Debug, Serialize)]
pub struct ItemMeta {
    #[serde(flatten)]
    pub summary: ItemSummary,
    pub metadata: SonicMetadata,
    pub click_map: Vec<ClickMapEntry>,
    pub concealed_pixels: usize,
    pub text: Option<String>,
    pub hub: Option<Vec<sonic_core::hub::HubEntry>>,
}

#[derive(Debug, Deserialize)]
pub struct Click {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub screen_width: f64,
}

#[derive(Debug, Deserialize)]
pub struct RequestBody {
    pub body: String,
}

async fn items(State(api): State<Arc<ClientApi>>) -> Json<Vec<ItemSummary>> {
    Json(api.inbox.store.list().iter().map(|i| api.summary(i)).collect())
}

async fn item_image(State(api): State<Arc<ClientApi>>, Path(id): Path<u32>) -> Response {
    match api.item(id) {
        Ok(item) => match item.image_png {
            Some(png) => ([(header::CONTENT_TYPE, "image/png")], png).into_response(),
            None => error(StatusCode::NOT_FOUND, "item has no image"),
        },
        Err(r) => r,
    }
}

async fn item_meta(State(api): State<Arc<ClientApi>>, Path(id): Path<u32>) -> Response {
    match api.item(id) {
        Ok(item) => Json(ItemMeta {
            summary: api.summary(&item),
            hub: item.hub_entries(),
            metadata: item.metadata,
            click_map: item.click_map,
            concealed_pixels: item.concealed_pixels,
            text: item.text,
        })
        .into_response(),
        Err(r) => r,
    }
}

/// Resolves a tap to a link target. Nothing is sent upstream: the UI
/// confirms first and then posts to `/request`.
async fn click(State(api): State<Arc<ClientApi>>, Json(c): Json<Click>) -> Response {
    match api.item(c.id) {
        Ok(item) => {
            let target = map_click(&item, c.x, c.y, c.screen_width);
            let request = target.as_ref().map(|t| format!("url {t}"));
            Json(json!({ "target": target, "request": request })).into_response()
        }
        Err(r) => r,
    }
}

async fn request(State(api): State<Arc<ClientApi>>, Json(r): Json<RequestBody>) -> Response {
    let api2 = Arc::clone(&api);
    match tokio::task::spawn_blocking(move || api2.forward(&r.body)).await {
        Ok(Ok((status, v))) => {
            (StatusCode::from_u16(status).unwrap_or(StatusCode::BAD_GATEWAY), Json(v)).into_response()
        }
        Ok(Err(e)) => error(StatusCode::BAD_GATEWAY, &format!("uplink unreachable: {e}")),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string()),
    }
}

async fn online(State(api): State<Arc<ClientApi>>) -> Json<Value> {
    Json(json!({ "online": api.inbox.online(), "last_heard": api.inbox.last_heard() }))
}

pub fn router(api: Arc<ClientApi>) -> Router {
    Router::new()
        .route("/items", get(items))
        .route("/items/{id}/image", get(item_image))
        .route("/items/{id}/meta", get(item_meta))
        .route("/click", post(click))
        .route("/request", post(request))
        .route("/online", get(online))
        .with_state(api)
}
