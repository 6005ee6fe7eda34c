//! Knowledge-hub index: the most requested subjects, broadcast as a text
//! item with a reserved source string.

use serde::{Deserialize, Serialize};

pub const HUB_SOURCE: &str = "sonic:hub";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    Url,
    Gpt,
}

impl RequestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RequestKind::Url => "url",
            RequestKind::Gpt => "gpt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HubEntry {
    pub kind: RequestKind,
    pub subject: String,
    pub count: u32,
}

pub fn encode_hub(entries: &[HubEntry]) -> String {
    serde_json::to_string(entries).expect("hub entries serialize")
}

pub fn decode_hub(text: &str) -> Option<Vec<HubEntry>> {
    serde_json::from_str(text).ok()
}
