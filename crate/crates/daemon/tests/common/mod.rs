#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::Router;

/// Serves `app` on an ephemeral port from a background runtime.
pub fn serve(app: Router) -> SocketAddr {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    rx.recv_timeout(Duration::from_secs(10)).unwrap()
}

pub fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(30)))
        .http_status_as_error(false)
        .build()
        .into()
}

/// A clock the test moves by hand.
#[derive(Clone)]
pub struct ManualClock(pub Arc<Mutex<f64>>);

impl ManualClock {
    pub fn new(t: f64) -> Self {
        Self(Arc::new(Mutex::new(t)))
    }

    pub fn set(&self, t: f64) {
        *self.0.lock().unwrap() = t;
    }

    pub fn clock(&self) -> sonic_daemon::Clock {
        let c = Arc::clone(&self.0);
        Arc::new(move || *c.lock().unwrap())
    }
}
