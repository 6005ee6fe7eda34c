mod common;

use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::Path;
use axum::routing::{get, put};
use axum::{Json, Router};
use base64::Engine;
use image::{Rgb, RgbImage};
use serde_json::{json, Value};
use sonic_core::renderer::{capture_page, PageSource, RenderError};
use sonic_daemon::cdp::CdpBrowser;
use tungstenite::Message;

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Normal,
    NeverLoads,
    NavError,
}

struct Mock {
    http: std::net::SocketAddr,
    closed: Arc<Mutex<Vec<String>>>,
    methods: Arc<Mutex<Vec<String>>>,
}

fn png(w: u32, h: u32) -> Vec<u8> {
    let img = RgbImage::from_fn(w, h, |x, y| Rgb([(x % 256) as u8, (y % 256) as u8, 80]));
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).unwrap();
    out.into_inner()
}

/// DevTools HTTP endpoints plus a websocket that answers the calls a
/// capture makes. The load event is sent before the navigate reply.
fn mock(mode: Mode, page_height: u32) -> Mock {
    let ws = TcpListener::bind("127.0.0.1:0").unwrap();
    let ws_addr = ws.local_addr().unwrap();
    let methods = Arc::new(Mutex::new(Vec::new()));
    let seen = Arc::clone(&methods);
    std::thread::spawn(move || {
        for stream in ws.incoming() {
            let seen = Arc::clone(&seen);
            std::thread::spawn(move || {
                let mut sock = tungstenite::accept(stream.unwrap()).unwrap();
                loop {
                    let msg = match sock.read() {
                        Ok(Message::Text(t)) => t,
                        Ok(_) => continue,
                        Err(_) => return,
                    };
                    let v: Value = serde_json::from_str(msg.as_str()).unwrap();
                    let method = v["method"].as_str().unwrap().to_owned();
                    seen.lock().unwrap().push(method.clone());
                    let result = match method.as_str() {
                        "Page.navigate" if mode == Mode::NavError => json!({"frameId": "F", "errorText": "net::ERR_NAME_NOT_RESOLVED"}),
                        "Page.navigate" => {
                            if mode == Mode::Normal {
                                let ev = json!({"method": "Page.loadEventFired", "params": {"timestamp": 1.0}});
                                sock.send(Message::text(ev.to_string())).unwrap();
                            }
                            json!({"frameId": "F"})
                        }
                        "Runtime.evaluate" => json!({"result": {"type": "object", "value": {
                            "height": page_height,
                            "anchors": [
                                {"x": 10.0, "y": 20.0, "w": 100.0, "h": 30.0, "href": "/about"},
                                {"x": 0.0, "y": 600.0, "w": 375.0, "h": 40.0, "href": "https://other.example/x"},
                                {"x": 5.0, "y": 50.0, "w": 20.0, "h": 20.0, "href": "javascript:void(0)"},
                            ],
                        }}}),
                        "Page.captureScreenshot" => {
                            let h = v["params"]["clip"]["height"].as_u64().unwrap() as u32;
                            json!({"data": base64::engine::general_purpose::STANDARD.encode(png(375, h))})
                        }
                        _ => json!({}),
                    };
                    let reply = json!({"id": v["id"], "result": result});
                    if sock.send(Message::text(reply.to_string())).is_err() {
                        return;
                    }
                }
            });
        }
    });

    let closed = Arc::new(Mutex::new(Vec::new()));
    let counter = Arc::new(AtomicUsize::new(0));
    let c2 = Arc::clone(&closed);
    let app = Router::new()
        .route(
            "/json/new",
            put(move || {
                let n = counter.fetch_add(1, Ordering::SeqCst);
                async move {
                    Json(json!({"id": format!("T{n}"), "webSocketDebuggerUrl": format!("ws://{ws_addr}/devtools/page/T{n}")}))
                }
            }),
        )
        .route(
            "/json/close/{id}",
            get(move |Path(id): Path<String>| async move {
                c2.lock().unwrap().push(id);
                "Target is closing"
            }),
        );
    Mock { http: common::serve(app), closed, methods }
}

#[test]
fn capture_scales_links_and_closes_target() {
    let m = mock(Mode::Normal, 1200);
    let b = CdpBrowser::new(format!("http://{}/", m.http), Duration::from_secs(10));
    let raw = b.capture("https://site.example/page").unwrap();
    assert_eq!(raw.screenshot.dimensions(), (375, 1200));
    assert_eq!(raw.anchors.len(), 3);
    assert_eq!(*m.closed.lock().unwrap(), vec!["T0".to_string()]);
    let methods = m.methods.lock().unwrap().clone();
    assert_eq!(methods.first().map(String::as_str), Some("Emulation.setDeviceMetricsOverride"));
    assert_eq!(methods.last().map(String::as_str), Some("Page.captureScreenshot"));

    let page = capture_page("https://site.example/page", &b).unwrap();
    assert_eq!(page.image.width(), 320);
    let first = &page.links[0];
    assert_eq!((first.x, first.y, first.w, first.h), (8, 17, 86, 26));
    assert_eq!(first.target_url, "https://site.example/about");
    assert!(page.links.iter().all(|l| !l.target_url.starts_with("javascript")));
}

#[test]
fn capture_height_is_clamped() {
    let m = mock(Mode::Normal, 50_000);
    let b = CdpBrowser::new(format!("http://{}", m.http), Duration::from_secs(10));
    let raw = b.capture("https://site.example/long").unwrap();
    assert_eq!(raw.screenshot.height(), 11_720);
}

#[test]
fn missing_load_event_times_out() {
    let m = mock(Mode::NeverLoads, 800);
    let b = CdpBrowser::new(format!("http://{}", m.http), Duration::from_millis(800));
    let t = Instant::now();
    let err = b.capture("https://slow.example/").unwrap_err();
    assert!(matches!(err, RenderError::NavigationTimeout), "{err:?}");
    assert!(t.elapsed() < Duration::from_secs(5));
    assert_eq!(m.closed.lock().unwrap().len(), 1);
}

#[test]
fn navigation_error_is_reported() {
    let m = mock(Mode::NavError, 800);
    let b = CdpBrowser::new(format!("http://{}", m.http), Duration::from_secs(5));
    match b.capture("https://nowhere.invalid/") {
        Err(RenderError::CaptureFailed(msg)) => assert!(msg.contains("ERR_NAME_NOT_RESOLVED"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unreachable_devtools_fails() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let b = CdpBrowser::new(format!("http://127.0.0.1:{port}"), Duration::from_secs(2));
    assert!(matches!(b.capture("https://a.example/"), Err(RenderError::CaptureFailed(_))));
}
