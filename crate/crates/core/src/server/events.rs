use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Class, RequestState, Rejection};
use crate::hub::RequestKind;

/// One line of the server's JSON event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerEvent {
    /// Unix seconds.
    pub t: f64,
    #[serde(flatten)]
    pub body: EventBody,
    /// Requests accepted but not yet on air, after this event.
    pub backlog: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventBody {
    /// A request entered the system in state QUEUED.
    Accepted {
        id: u32,
        sender: String,
        kind: RequestKind,
        class: Class,
        subject: String,
        cached: bool,
    },
    Rejected {
        sender: String,
        body: String,
        reason: Rejection,
    },
    State {
        id: u32,
        class: Class,
        from: RequestState,
        to: RequestState,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        air_s: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
    Keepalive,
    WindowOpen {
        window_id: i64,
    },
    WindowClose {
        window_id: i64,
    },
}

pub fn write_events<W: Write>(mut w: W, events: &[ServerEvent]) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Malformed { line: usize, source: serde_json::Error },
}

pub fn read_events<R: BufRead>(r: R) -> Result<Vec<ServerEvent>, LogError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| LogError::Malformed { line: i + 1, source })?);
    }
    Ok(out)
}
