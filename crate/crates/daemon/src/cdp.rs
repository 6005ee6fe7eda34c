//! Headless Chrome over the DevTools protocol: one fresh target per
//! capture, mobile viewport, full-page PNG screenshot plus anchor boxes.

use std::collections::VecDeque;
use std::net::TcpStream;
use std::time::{Duration, Instant};

use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};
use sonic_core::config::BrowserSection;
use sonic_core::renderer::{Anchor, PageSource, RawCapture, RenderError, VIEWPORT};
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message, WebSocket};

/// Tallest capture requested, in CSS pixels: the image height cap at
/// 320 px wide, scaled back to the viewport width.
const MAX_CAPTURE_CSS_PX: u32 = 11_720;

const ANCHOR_SCRIPT: &str = r#"(() => {
  const out = [];
  for (const a of document.querySelectorAll('a[href]')) {
    for (const r of a.getClientRects()) {
      if (r.width < 1 || r.height < 1) continue;
      out.push({x: r.left + window.scrollX, y: r.top + window.scrollY, w: r.width, h: r.height, href: a.getAttribute('href')});
    }
  }
  const height = Math.max(document.documentElement.scrollHeight, document.body ? document.body.scrollHeight : 0);
  return {height, anchors: out};
})()"#;

pub struct CdpBrowser {
    pub devtools_url: String,
    pub timeout: Duration,
    agent: ureq::Agent,
}

#[derive(Debug, Deserialize)]
struct Target {
    id: String,
    #[serde(rename = "webSocketDebuggerUrl")]
    ws_url: String,
}

#[derive(Debug, Deserialize)]
struct Layout {
    height: f64,
    anchors: Vec<Anchor>,
}

impl CdpBrowser {
    pub fn new(devtools_url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self { devtools_url: devtools_url.into().trim_end_matches('/').to_owned(), timeout, agent }
    }

    pub fn from_config(cfg: &BrowserSection) -> Self {
        Self::new(cfg.devtools_url.clone(), Duration::from_secs_f64(cfg.timeout_s))
    }

    fn new_target(&self) -> Result<Target, RenderError> {
        let url = format!("{}/json/new?about:blank", self.devtools_url);
        let mut resp = self.agent.put(&url).send_empty().map_err(|e| fail(format!("open target: {e}")))?;
        resp.body_mut().read_json().map_err(|e| fail(format!("open target: {e}")))
    }

    fn close_target(&self, id: &str) {
        let url = format!("{}/json/close/{id}", self.devtools_url);
        if let Err(e) = self.agent.get(&url).call() {
            log::warn!("closing target {id}: {e}");
        }
    }

    fn drive(&self, ws_url: &str, page_url: &str) -> Result<RawCapture, RenderError> {
        let (ws, _) = tungstenite::connect(ws_url).map_err(|e| fail(format!("devtools socket: {e}")))?;
        let mut s = Session::new(ws, Instant::now() + self.timeout)?;
        s.call(
            "Emulation.setDeviceMetricsOverride",
            json!({"width": VIEWPORT.0, "height": VIEWPORT.1, "deviceScaleFactor": 1, "mobile": true}),
        )?;
        s.call("Page.enable", json!({}))?;
        let nav = s.call("Page.navigate", json!({ "url": page_url }))?;
        if let Some(err) = nav["errorText"].as_str().filter(|e| !e.is_empty()) {
            return Err(fail(format!("navigation: {err}")));
        }
        s.wait_event("Page.loadEventFired")?;
        let eval = s.call("Runtime.evaluate", json!({ "expression": ANCHOR_SCRIPT, "returnByValue": true }))?;
        let layout: Layout = serde_json::from_value(eval["result"]["value"].clone())
            .map_err(|e| fail(format!("layout script: {e}")))?;
        let height = (layout.height.ceil() as u32).clamp(1, MAX_CAPTURE_CSS_PX);
        let shot = s.call(
            "Page.captureScreenshot",
            json!({
                "format": "png",
                "captureBeyondViewport": true,
                "clip": {"x": 0, "y": 0, "width": VIEWPORT.0, "height": height, "scale": 1},
            }),
        )?;
        let data = shot["data"].as_str().ok_or_else(|| fail("screenshot has no data".into()))?;
        let png = base64::engine::general_purpose::STANDARD.decode(data).map_err(|e| fail(format!("screenshot: {e}")))?;
        let screenshot = image::load_from_memory(&png).map_err(|e| fail(format!("screenshot: {e}")))?.to_rgb8();
        let _ = s.ws.close(None);
        Ok(RawCapture { screenshot, anchors: layout.anchors })
    }
}

impl PageSource for CdpBrowser {
    fn capture(&self, url: &str) -> Result<RawCapture, RenderError> {
        let target = self.new_target()?;
        let result = self.drive(&target.ws_url, url);
        self.close_target(&target.id);
        result
    }
}

fn fail(msg: String) -> RenderError {
    RenderError::CaptureFailed(msg)
}

struct Session {
    ws: WebSocket<MaybeTlsStream<TcpStream>>,
    next_id: u64,
    deadline: Instant,
    events: VecDeque<Value>,
}

impl Session {
    fn new(ws: WebSocket<MaybeTlsStream<TcpStream>>, deadline: Instant) -> Result<Self, RenderError> {
        if let MaybeTlsStream::Plain(tcp) = ws.get_ref() {
            // Short reads so the deadline is checked regularly.
            tcp.set_read_timeout(Some(Duration::from_millis(200))).map_err(|e| fail(e.to_string()))?;
        }
        Ok(Self { ws, next_id: 1, deadline, events: VecDeque::new() })
    }

    fn read(&mut self) -> Result<Option<Value>, RenderError> {
        loop {
            if Instant::now() >= self.deadline {
                return Err(RenderError::NavigationTimeout);
            }
            match self.ws.read() {
                Ok(Message::Text(t)) => {
                    return serde_json::from_str(t.as_str()).map(Some).map_err(|e| fail(format!("bad message: {e}")))
                }
                Ok(Message::Close(_)) => return Err(fail("devtools closed the socket".into())),
                Ok(_) => continue,
                Err(tungstenite::Error::Io(e))
                    if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) =>
                {
                    return Ok(None)
                }
                Err(e) => return Err(fail(format!("devtools socket: {e}"))),
            }
        }
    }

    fn call(&mut self, method: &str, params: Value) -> Result<Value, RenderError> {
        let id = self.next_id;
        self.next_id += 1;
        let msg = json!({ "id": id, "method": method, "params": params }).to_string();
        self.ws.send(Message::text(msg)).map_err(|e| fail(format!("{method}: {e}")))?;
        loop {
            let Some(v) = self.read()? else { continue };
            if v["id"].as_u64() == Some(id) {
                if let Some(err) = v.get("error") {
                    return Err(fail(format!("{method}: {}", err["message"].as_str().unwrap_or("error"))));
                }
                return Ok(v["result"].clone());
            }
            if v.get("method").is_some() {
                self.events.push_back(v);
            }
        }
    }

    fn wait_event(&mut self, method: &str) -> Result<Value, RenderError> {
        if let Some(i) = self.events.iter().position(|e| e["method"] == method) {
            return Ok(self.events.remove(i).expect("index in range"));
        }
        loop {
            let Some(v) = self.read()? else { continue };
            if v["method"] == method {
                return Ok(v);
            }
        }
    }
}
