//! Broadcast head-end: uplink ingestion, quota, window-scoped cache,
//! screenshot/player/push queues and the transmission scheduler.
//!
//! `Server` is a state machine over explicit timestamps (Unix seconds).
//! The daemon drives it from the wall clock; tests drive it with
//! `advance_to`, which jumps between scheduler events.

mod events;
mod persist;
mod popularity;
mod render;
mod uplink;

pub use events::{read_events, write_events, EventBody, LogError, ServerEvent};
pub use persist::Snapshot;
pub use popularity::Popularity;
pub use render::{ContentRenderer, PipelineRenderer, RenderJob, Rendered};
pub use uplink::{normalize_url, parse_uplink, ParsedRequest, Rejection, UplinkMessage};

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fec::FecConfig;
use crate::format::SonicFile;
use crate::hub::{encode_hub, RequestKind, HUB_SOURCE};
use crate::link::air_time;
use crate::modem::ModulationProfile;
use crate::renderer::{render_text_file, RenderError};
use crate::window::{TransmissionWindow, DAY_S};

/// Scheduling class, in priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Hub,
    User,
    Push,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RequestState {
    Queued,
    Rendering,
    Encoded,
    Playing,
    Done,
    Failed,
}

impl RequestState {
    /// Cache hits go straight from QUEUED to ENCODED.
    pub fn can_become(self, to: RequestState) -> bool {
        use RequestState::*;
        match to {
            Failed => !matches!(self, Done | Failed),
            _ => matches!(
                (self, to),
                (Queued, Rendering) | (Queued, Encoded) | (Rendering, Encoded) | (Encoded, Playing) | (Playing, Done)
            ),
        }
    }

    fn waiting(self) -> bool {
        matches!(self, RequestState::Queued | RequestState::Rendering | RequestState::Encoded)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub id: u32,
    pub sender: String,
    pub kind: RequestKind,
    pub class: Class,
    pub subject: String,
    pub state: RequestState,
    pub enqueue_time: f64,
    pub play_start: Option<f64>,
    pub play_end: Option<f64>,
    pub cached: bool,
    pub air_s: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub window: TransmissionWindow,
    /// Local time = UTC + this many minutes; sets window and quota days.
    pub utc_offset_minutes: i32,
    pub quota_per_day: u32,
    pub queue_bound: usize,
    pub keepalive_s: f64,
    pub hub_top_n: usize,
    pub popularity_days: f64,
    pub push_links: usize,
    pub fec: FecConfig,
    pub profile: ModulationProfile,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            window: TransmissionWindow::default(),
            utc_offset_minutes: 0,
            quota_per_day: 10,
            queue_bound: 10_000,
            keepalive_s: 5.0,
            hub_top_n: 20,
            popularity_days: 7.0,
            push_links: 3,
            fec: FecConfig::default(),
            profile: ModulationProfile::default(),
        }
    }
}

/// Content ready for the player.
#[derive(Debug, Clone)]
pub struct Transmission {
    pub file: Arc<SonicFile>,
    pub air_s: f64,
}

#[derive(Debug, Clone)]
pub struct CacheEntry {
    pub window_id: i64,
    pub content: Transmission,
}

#[derive(Debug, Clone)]
pub enum Action {
    Play { id: u32, start: f64, file: Arc<SonicFile>, air_s: f64 },
    Keepalive { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueDepths {
    pub screenshot: usize,
    pub player: usize,
    pub push: usize,
    pub hub: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NowPlaying {
    pub id: u32,
    pub subject: String,
    pub class: Class,
    pub ends_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerStatus {
    pub now: f64,
    pub window_open: bool,
    pub window: TransmissionWindow,
    pub depths: QueueDepths,
    pub backlog: usize,
    pub current: Option<NowPlaying>,
    pub done: usize,
    pub failed: usize,
}

type Key = (RequestKind, String);

struct InFlight {
    window_id: i64,
    owner: u32,
    waiters: Vec<u32>,
}

pub struct Server {
    cfg: ServerConfig,
    records: BTreeMap<u32, RequestRecord>,
    next_id: u32,
    screenshot: VecDeque<u32>,
    push_render: VecDeque<u32>,
    player: VecDeque<u32>,
    push_ready: VecDeque<u32>,
    hub_ready: VecDeque<u32>,
    content: HashMap<u32, Transmission>,
    cache: HashMap<Key, CacheEntry>,
    inflight: HashMap<Key, InFlight>,
    pushed: HashSet<(i64, String)>,
    quota: HashMap<String, (i64, u32)>,
    popularity: Popularity,
    playing: Option<(u32, f64)>,
    idle_since: f64,
    open_window: Option<i64>,
    hub_window: Option<i64>,
    backlog: usize,
    events: Vec<ServerEvent>,
    now: f64,
}

impl Server {
    pub fn new(cfg: ServerConfig, now: f64) -> Self {
        Self {
            cfg,
            records: BTreeMap::new(),
            next_id: 1,
            screenshot: VecDeque::new(),
            push_render: VecDeque::new(),
            player: VecDeque::new(),
            push_ready: VecDeque::new(),
            hub_ready: VecDeque::new(),
            content: HashMap::new(),
            cache: HashMap::new(),
            inflight: HashMap::new(),
            pushed: HashSet::new(),
            quota: HashMap::new(),
            popularity: Popularity::default(),
            playing: None,
            idle_since: now,
            open_window: None,
            hub_window: None,
            backlog: 0,
            events: Vec::new(),
            now,
        }
    }

    pub fn config(&self) -> &ServerConfig {
        &self.cfg
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn records(&self) -> &BTreeMap<u32, RequestRecord> {
        &self.records
    }

    pub fn record(&self, id: u32) -> Option<&RequestRecord> {
        self.records.get(&id)
    }

    /// Events since the last call, oldest first.
    pub fn take_events(&mut self) -> Vec<ServerEvent> {
        std::mem::take(&mut self.events)
    }

    fn offset_s(&self) -> f64 {
        self.cfg.utc_offset_minutes as f64 * 60.0
    }

    fn local(&self, t: f64) -> f64 {
        t + self.offset_s()
    }

    pub fn window_open_at(&self, t: f64) -> bool {
        self.cfg.window.is_open(self.local(t))
    }

    pub fn window_id_at(&self, t: f64) -> i64 {
        self.cfg.window.window_id(self.local(t))
    }

    fn window_end_at(&self, t: f64) -> f64 {
        self.cfg.window.window_end(self.local(t)) - self.offset_s()
    }

    fn next_open_at(&self, t: f64) -> f64 {
        self.cfg.window.next_open(self.local(t)) - self.offset_s()
    }

    fn local_day(&self, t: f64) -> i64 {
        (self.local(t).floor() as i64).div_euclid(DAY_S)
    }

    fn emit(&mut self, t: f64, body: EventBody) {
        self.events.push(ServerEvent { t, body, backlog: self.backlog });
    }

    fn alloc_id(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id = self.next_id.wrapping_add(1).max(1);
        id
    }

    fn admit(&mut self, sender: &str, kind: RequestKind, class: Class, subject: &str, cached: bool) -> u32 {
        let id = self.alloc_id();
        let t = self.now;
        self.records.insert(
            id,
            RequestRecord {
                id,
                sender: sender.to_owned(),
                kind,
                class,
                subject: subject.to_owned(),
                state: RequestState::Queued,
                enqueue_time: t,
                play_start: None,
                play_end: None,
                cached,
                air_s: None,
                error: None,
            },
        );
        self.backlog += 1;
        self.emit(
            t,
            EventBody::Accepted { id, sender: sender.to_owned(), kind, class, subject: subject.to_owned(), cached },
        );
        id
    }

    fn transition(&mut self, id: u32, to: RequestState, t: f64, error: Option<String>) {
        let rec = self.records.get_mut(&id).expect("known request");
        let from = rec.state;
        assert!(from.can_become(to), "illegal transition {from:?} -> {to:?} for request {id}");
        rec.state = to;
        match to {
            RequestState::Playing => rec.play_start = Some(t),
            RequestState::Done => rec.play_end = Some(t),
            RequestState::Failed => rec.error = error.clone(),
            _ => {}
        }
        let class = rec.class;
        let air_s = if to == RequestState::Encoded { rec.air_s } else { None };
        if from.waiting() && !to.waiting() {
            self.backlog -= 1;
        }
        if matches!(to, RequestState::Done | RequestState::Failed) {
            self.content.remove(&id);
        }
        self.emit(t, EventBody::State { id, class, from, to, air_s, error });
    }

    fn encode(&mut self, id: u32, content: Transmission, t: f64) {
        if content.air_s > self.cfg.window.len_s() as f64 {
            let msg = format!("{:.0} s of audio does not fit the window", content.air_s);
            self.transition(id, RequestState::Failed, t, Some(msg));
            return;
        }
        let rec = self.records.get_mut(&id).expect("known request");
        rec.air_s = Some(content.air_s);
        let class = rec.class;
        self.content.insert(id, content);
        self.transition(id, RequestState::Encoded, t, None);
        match class {
            Class::Hub => self.hub_ready.push_back(id),
            Class::User => self.player.push_back(id),
            Class::Push => self.push_ready.push_back(id),
        }
    }

    /// Completes a transmission whose end has passed.
    fn settle(&mut self, now: f64) {
        self.now = self.now.max(now);
        if let Some((id, end)) = self.playing {
            if self.now >= end {
                self.playing = None;
                self.idle_since = end;
                self.transition(id, RequestState::Done, end, None);
            }
        }
    }

    /// Ingests one uplink message.
    pub fn submit(&mut self, msg: &UplinkMessage, now: f64) -> Result<u32, Rejection> {
        self.settle(now);
        match self.try_submit(msg) {
            Ok(id) => Ok(id),
            Err(reason) => {
                let body = EventBody::Rejected { sender: msg.sender.clone(), body: msg.body.clone(), reason };
                self.emit(self.now, body);
                Err(reason)
            }
        }
    }

    fn try_submit(&mut self, msg: &UplinkMessage) -> Result<u32, Rejection> {
        let req = parse_uplink(&msg.body)?;
        let now = self.now;
        let day = self.local_day(now);
        let used = match self.quota.get(&msg.sender) {
            Some((d, n)) if *d == day => *n,
            _ => 0,
        };
        if used >= self.cfg.quota_per_day {
            return Err(Rejection::Quota);
        }
        let wid = self.window_id_at(now);
        let key = (req.kind, req.subject.clone());
        let hit = self.cache.get(&key).filter(|e| e.window_id == wid).map(|e| e.content.clone());
        let joining = self.inflight.get(&key).is_some_and(|f| f.window_id == wid);
        let depth = if hit.is_some() { self.player.len() } else { self.screenshot.len() };
        if depth >= self.cfg.queue_bound {
            return Err(Rejection::Overload);
        }

        self.quota.insert(msg.sender.clone(), (day, used + 1));
        self.popularity.record(now, req.kind, &req.subject);
        let id = self.admit(&msg.sender, req.kind, Class::User, &req.subject, hit.is_some() || joining);
        if let Some(content) = hit {
            self.encode(id, content, now);
        } else if joining {
            self.inflight.get_mut(&key).expect("checked").waiters.push(id);
        } else {
            self.screenshot.push_back(id);
            self.inflight.insert(key, InFlight { window_id: wid, owner: id, waiters: Vec::new() });
        }
        Ok(id)
    }

    /// Next request for the render worker: user requests first, then
    /// push links.
    pub fn next_render_job(&mut self, now: f64) -> Option<RenderJob> {
        self.settle(now);
        let id = self.screenshot.pop_front().or_else(|| self.push_render.pop_front())?;
        self.transition(id, RequestState::Rendering, self.now, None);
        let rec = &self.records[&id];
        Some(RenderJob { id, kind: rec.kind, class: rec.class, subject: rec.subject.clone() })
    }

    pub fn complete_render(&mut self, id: u32, result: Result<Rendered, RenderError>, now: f64) {
        self.settle(now);
        let t = self.now;
        let rec = &self.records[&id];
        assert_eq!(rec.state, RequestState::Rendering, "request {id} is not rendering");
        let (class, key) = (rec.class, (rec.kind, rec.subject.clone()));
        let flight = match self.inflight.get(&key) {
            Some(f) if f.owner == id => self.inflight.remove(&key),
            _ => None,
        };
        let waiters = flight.as_ref().map(|f| f.waiters.clone()).unwrap_or_default();
        let wid = flight.map_or_else(|| self.window_id_at(t), |f| f.window_id);

        let rendered = result.and_then(|r| {
            let air_s = air_time(&r.file, &self.cfg.fec, &self.cfg.profile)?;
            Ok((Transmission { file: Arc::new(r.file), air_s }, r.push_links))
        });
        match rendered {
            Ok((content, links)) => {
                self.cache.insert(key, CacheEntry { window_id: wid, content: content.clone() });
                self.encode(id, content.clone(), t);
                for w in waiters {
                    self.encode(w, content.clone(), t);
                }
                if class == Class::User {
                    for link in links.into_iter().take(self.cfg.push_links) {
                        self.queue_push(&link, wid);
                    }
                }
            }
            Err(e) => {
                let msg = e.to_string();
                self.transition(id, RequestState::Failed, t, Some(msg.clone()));
                for w in waiters {
                    self.transition(w, RequestState::Failed, t, Some(msg.clone()));
                }
            }
        }
    }

    fn queue_push(&mut self, url: &str, wid: i64) {
        let key = (RequestKind::Url, url.to_owned());
        let cached = self.cache.get(&key).is_some_and(|e| e.window_id == wid);
        if cached
            || self.inflight.contains_key(&key)
            || self.push_render.len() >= self.cfg.queue_bound
            || !self.pushed.insert((wid, url.to_owned()))
        {
            return;
        }
        let id = self.admit("push", RequestKind::Url, Class::Push, url, false);
        self.push_render.push_back(id);
        self.inflight.insert(key, InFlight { window_id: wid, owner: id, waiters: Vec::new() });
    }

    fn issue_hub(&mut self) {
        let period = self.cfg.popularity_days * DAY_S as f64;
        self.popularity.prune(self.now, period);
        let entries = self.popularity.top(self.now, period, self.cfg.hub_top_n);
        if entries.is_empty() {
            return;
        }
        let t = self.now;
        let id = self.admit("hub", RequestKind::Gpt, Class::Hub, HUB_SOURCE, false);
        self.transition(id, RequestState::Rendering, t, None);
        let file = render_text_file(id, HUB_SOURCE, &encode_hub(&entries), t.max(0.0) as u64);
        let content = file.and_then(|f| {
            let air_s = air_time(&f, &self.cfg.fec, &self.cfg.profile)?;
            Ok(Transmission { file: Arc::new(f), air_s })
        });
        match content {
            Ok(c) => self.encode(id, c, t),
            Err(e) => self.transition(id, RequestState::Failed, t, Some(e.to_string())),
        }
    }

    fn head(&self) -> Option<u32> {
        self.hub_ready.front().or(self.player.front()).or(self.push_ready.front()).copied()
    }

    fn pop_head(&mut self) -> Option<u32> {
        self.hub_ready.pop_front().or_else(|| self.player.pop_front()).or_else(|| self.push_ready.pop_front())
    }

    /// Runs the player at `now`: finishes the current transmission, opens
    /// or closes the window, starts the next item if it fits before the
    /// window closes, and emits keepalives while idle.
    pub fn tick(&mut self, now: f64) -> Vec<Action> {
        self.settle(now);
        let now = self.now;
        let mut actions = Vec::new();
        let open = self.window_open_at(now);
        let wid = self.window_id_at(now);
        if let Some(old) = self.open_window {
            if !open || old != wid {
                self.emit(now, EventBody::WindowClose { window_id: old });
                self.open_window = None;
            }
        }
        if !open {
            return actions;
        }
        if self.open_window.is_none() {
            self.emit(now, EventBody::WindowOpen { window_id: wid });
            self.open_window = Some(wid);
            self.idle_since = self.idle_since.max(now);
        }
        if self.hub_window != Some(wid) {
            self.hub_window = Some(wid);
            self.issue_hub();
        }
        if self.playing.is_none() {
            if let Some(id) = self.head() {
                let air_s = self.content[&id].air_s;
                if now + air_s <= self.window_end_at(now) {
                    self.pop_head();
                    let file = self.content[&id].file.clone();
                    self.playing = Some((id, now + air_s));
                    self.transition(id, RequestState::Playing, now, None);
                    actions.push(Action::Play { id, start: now, file, air_s });
                }
            }
        }
        if self.playing.is_none() && now >= self.idle_since + self.cfg.keepalive_s {
            self.idle_since = now;
            self.emit(now, EventBody::Keepalive);
            actions.push(Action::Keepalive { t: now });
        }
        actions
    }

    /// Earliest time after `now` at which `tick` has something to do.
    pub fn next_event_time(&self) -> f64 {
        if let Some((_, end)) = self.playing {
            return end;
        }
        if self.window_open_at(self.now) {
            let close = self.window_end_at(self.now);
            (self.idle_since + self.cfg.keepalive_s).min(close)
        } else {
            self.next_open_at(self.now)
        }
    }

    /// Simulated operation up to `t`: renders synchronously and steps the
    /// player through every scheduler event on the way.
    pub fn advance_to(&mut self, renderer: &dyn ContentRenderer, t: f64) -> Vec<Action> {
        let mut actions = Vec::new();
        loop {
            self.render_pending(renderer);
            actions.extend(self.tick(self.now));
            let next = self.next_event_time();
            if next > t {
                break;
            }
            self.now = next;
        }
        if t > self.now {
            self.now = t;
            self.render_pending(renderer);
            actions.extend(self.tick(t));
        }
        actions
    }

    fn render_pending(&mut self, renderer: &dyn ContentRenderer) {
        while let Some(job) = self.next_render_job(self.now) {
            let result = renderer.render(&job, self.now.max(0.0) as u64);
            self.complete_render(job.id, result, self.now);
        }
    }

    pub fn status(&self) -> ServerStatus {
        let count = |s: RequestState| self.records.values().filter(|r| r.state == s).count();
        ServerStatus {
            now: self.now,
            window_open: self.window_open_at(self.now),
            window: self.cfg.window,
            depths: QueueDepths {
                screenshot: self.screenshot.len(),
                player: self.player.len(),
                push: self.push_render.len() + self.push_ready.len(),
                hub: self.hub_ready.len(),
            },
            backlog: self.backlog,
            current: self.playing.map(|(id, ends_at)| {
                let r = &self.records[&id];
                NowPlaying { id, subject: r.subject.clone(), class: r.class, ends_at }
            }),
            done: count(RequestState::Done),
            failed: count(RequestState::Failed),
        }
    }
}
