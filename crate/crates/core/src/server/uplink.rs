use serde::{Deserialize, Serialize};
use url::Url;

use crate::hub::RequestKind;

/// One uplink message as delivered by the SMS gateway or HTTP endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UplinkMessage {
    pub sender: String,
    pub body: String,
}

impl UplinkMessage {
    pub fn new(sender: impl Into<String>, body: impl Into<String>) -> Self {
        Self { sender: sender.into(), body: body.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, thiserror::Error)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rejection {
    #[error("unknown request type")]
    UnknownType,
    #[error("empty request body")]
    EmptyBody,
    #[error("not a fetchable http(s) URL")]
    InvalidUrl,
    #[error("daily request quota exhausted")]
    Quota,
    #[error("server queue full")]
    Overload,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParsedRequest {
    pub kind: RequestKind,
    pub subject: String,
}

/// Splits `<type> <body>`. URL subjects are normalized, prompts kept
/// verbatim apart from the separating whitespace.
pub fn parse_uplink(body: &str) -> Result<ParsedRequest, Rejection> {
    let body = body.trim_start();
    let (token, rest) = match body.find(char::is_whitespace) {
        Some(i) => (&body[..i], body[i..].trim()),
        None => (body, ""),
    };
    let kind = match token.to_ascii_lowercase().as_str() {
        "url" => RequestKind::Url,
        "gpt" => RequestKind::Gpt,
        "" => return Err(Rejection::EmptyBody),
        _ => return Err(Rejection::UnknownType),
    };
    if rest.is_empty() {
        return Err(Rejection::EmptyBody);
    }
    let subject = match kind {
        RequestKind::Url => normalize_url(rest).ok_or(Rejection::InvalidUrl)?,
        RequestKind::Gpt => rest.to_owned(),
    };
    Ok(ParsedRequest { kind, subject })
}

/// Defaults the scheme to https, lowercases the host and drops the
/// fragment.
pub fn normalize_url(s: &str) -> Option<String> {
    let s = s.trim();
    let full = if s.contains("://") { s.to_owned() } else { format!("https://{s}") };
    let mut u = Url::parse(&full).ok()?;
    if !matches!(u.scheme(), "http" | "https") || u.host_str().is_none_or(str::is_empty) {
        return None;
    }
    u.set_fragment(None);
    Some(u.into())
}
