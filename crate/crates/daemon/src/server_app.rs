//! The head-end daemon: uplink and status endpoints over a shared
//! `Server`, a render worker and a scheduler that turns plays into audio.

use std::fs::{File, OpenOptions};
use std::io::BufWriter;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use sonic_core::config::SonicConfig;
use sonic_core::fec::FecConfig;
use sonic_core::link::{encode_audio, keepalive_burst};
use sonic_core::modem::{modulate, ModulationProfile};
use sonic_core::server::{
    write_events, Action, ContentRenderer, Rejection, Server, ServerStatus, Snapshot, UplinkMessage,
};

use crate::sink::AudioSink;
use crate::Clock;

const TICK: Duration = Duration::from_millis(250);

pub struct HeadEnd {
    server: Mutex<Server>,
    renderer: Box<dyn ContentRenderer>,
    sink: Mutex<AudioSink>,
    log: Mutex<Option<BufWriter<File>>>,
    state_file: Option<PathBuf>,
    fec: FecConfig,
    profile: ModulationProfile,
    clock: Clock,
    work: (Mutex<bool>, Condvar),
}

pub struct Paths {
    pub event_log: Option<PathBuf>,
    pub state_file: Option<PathBuf>,
}

impl Paths {
    pub fn from_config(cfg: &SonicConfig) -> Self {
        let opt = |p: &PathBuf| (!p.as_os_str().is_empty()).then(|| p.clone());
        Self { event_log: opt(&cfg.server.event_log), state_file: opt(&cfg.server.state_file) }
    }
}

impl HeadEnd {
    /// Restores from the state file when one exists.
    pub fn new(
        cfg: &SonicConfig,
        paths: Paths,
        renderer: Box<dyn ContentRenderer>,
        sink: AudioSink,
        clock: Clock,
    ) -> anyhow::Result<Arc<Self>> {
        let now = clock();
        let server = match &paths.state_file {
            Some(p) if p.exists() => {
                let snap = Snapshot::load(p)?;
                log::info!("restored {} records from {}", snap.records.len(), p.display());
                Server::restore(cfg.server_config(), snap, now)
            }
            _ => Server::new(cfg.server_config(), now),
        };
        let log = match &paths.event_log {
            Some(p) => Some(BufWriter::new(OpenOptions::new().create(true).append(true).open(p)?)),
            None => None,
        };
        let me = Arc::new(Self {
            server: Mutex::new(server),
            renderer,
            sink: Mutex::new(sink),
            log: Mutex::new(log),
            state_file: paths.state_file,
            fec: cfg.fec,
            profile: cfg.modem.clone(),
            clock,
            work: (Mutex::new(true), Condvar::new()),
        });
        me.persist(&mut me.lock());
        Ok(me)
    }

    fn lock(&self) -> MutexGuard<'_, Server> {
        self.server.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Writes pending events and the snapshot.
    fn persist(&self, server: &mut Server) {
        let events = server.take_events();
        if !events.is_empty() {
            let mut log = self.log.lock().unwrap_or_else(|e| e.into_inner());
            if let Some(w) = log.as_mut() {
                if let Err(e) = write_events(&mut *w, &events).and_then(|_| std::io::Write::flush(w)) {
                    log::error!("event log: {e}");
                }
            }
        }
        if let Some(p) = &self.state_file {
            if let Err(e) = server.snapshot().save(p) {
                log::error!("state file {}: {e}", p.display());
            }
        }
    }

    pub fn submit(&self, msg: &UplinkMessage) -> Result<u32, Rejection> {
        let mut s = self.lock();
        let r = s.submit(msg, (self.clock)());
        self.persist(&mut s);
        drop(s);
        if r.is_ok() {
            self.wake_renderer();
        }
        r
    }

    /// State as of the last scheduler step.
    pub fn status(&self) -> ServerStatus {
        self.lock().status()
    }

    fn wake_renderer(&self) {
        let (m, c) = &self.work;
        *m.lock().unwrap_or_else(|e| e.into_inner()) = true;
        c.notify_one();
    }

    /// Renders one queued job, if any. The server lock is not held while
    /// the browser or LLM works.
    pub fn render_once(&self) -> bool {
        let job = {
            let mut s = self.lock();
            let job = s.next_render_job((self.clock)());
            self.persist(&mut s);
            job
        };
        let Some(job) = job else { return false };
        log::info!("rendering #{} {:?} {}", job.id, job.kind, job.subject);
        let result = self.renderer.render(&job, (self.clock)().max(0.0) as u64);
        if let Err(e) = &result {
            log::warn!("render #{} failed: {e}", job.id);
        }
        let mut s = self.lock();
        s.complete_render(job.id, result, (self.clock)());
        self.persist(&mut s);
        true
    }

    /// Advances the scheduler to now and sends what starts playing to the
    /// audio sink. Returns the number of actions.
    pub fn tick(&self) -> anyhow::Result<usize> {
        let actions = {
            let mut s = self.lock();
            let a = s.tick((self.clock)());
            self.persist(&mut s);
            a
        };
        let mut sink = self.sink.lock().unwrap_or_else(|e| e.into_inner());
        for a in &actions {
            match a {
                Action::Play { id, start, file, air_s } => {
                    log::info!("on air #{id} ({air_s:.1} s)");
                    let pcm = encode_audio(file, &self.fec, &self.profile)?;
                    if let Some(p) = sink.emit(*start, &format!("{id:06}"), &pcm)? {
                        log::info!("wrote {}", p.display());
                    }
                }
                Action::Keepalive { t } if sink.wants_keepalives() => {
                    let pcm = modulate(&keepalive_burst(&self.fec), &self.profile);
                    sink.emit(*t, "keepalive", &pcm)?;
                }
                Action::Keepalive { .. } => {}
            }
        }
        Ok(actions.len())
    }

    /// Render worker and scheduler threads; both exit once `stop` is set.
    pub fn spawn_workers(self: &Arc<Self>, stop: Arc<AtomicBool>) -> Vec<JoinHandle<()>> {
        let render = {
            let me = Arc::clone(self);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    if me.render_once() {
                        continue;
                    }
                    let (m, c) = &me.work;
                    let mut pending = m.lock().unwrap_or_else(|e| e.into_inner());
                    if !*pending {
                        pending = c.wait_timeout(pending, TICK).unwrap_or_else(|e| e.into_inner()).0;
                    }
                    *pending = false;
                }
            })
        };
        let sched = {
            let me = Arc::clone(self);
            std::thread::spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    if let Err(e) = me.tick() {
                        log::error!("scheduler: {e:#}");
                    }
                    std::thread::sleep(TICK);
                }
            })
        };
        vec![render, sched]
    }
}

fn rejection_status(r: Rejection) -> StatusCode {
    match r {
        Rejection::Quota => StatusCode::TOO_MANY_REQUESTS,
        Rejection::Overload => StatusCode::SERVICE_UNAVAILABLE,
        _ => StatusCode::BAD_REQUEST,
    }
}

async fn uplink(State(h): State<Arc<HeadEnd>>, Json(msg): Json<UplinkMessage>) -> Response {
    match h.submit(&msg) {
        Ok(id) => (StatusCode::ACCEPTED, Json(json!({ "id": id }))).into_response(),
        Err(r) => (rejection_status(r), Json(json!({ "error": r }))).into_response(),
    }
}

async fn status(State(h): State<Arc<HeadEnd>>) -> Json<ServerStatus> {
    Json(h.status())
}

pub fn router(h: Arc<HeadEnd>) -> Router {
    Router::new().route("/uplink", post(uplink)).route("/status", get(status)).with_state(h)
}
