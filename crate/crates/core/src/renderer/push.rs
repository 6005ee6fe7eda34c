use std::cmp::Ordering;
use std::collections::HashMap;

use crate::format::ClickMapEntry;

pub const PUSH_LINKS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkScore {
    pub entry: ClickMapEntry,
    pub score: f64,
}

/// `0.68·w·h − 0.32·y`; the area is formed in integers first.
pub fn score_link(e: &ClickMapEntry) -> f64 {
    let area = e.w as u64 * e.h as u64;
    0.68 * area as f64 - 0.32 * e.y as f64
}

fn rank(a: &LinkScore, b: &LinkScore) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.entry.y.cmp(&b.entry.y))
        .then(a.entry.x.cmp(&b.entry.x))
        .then_with(|| a.entry.target_url.cmp(&b.entry.target_url))
}

/// Top `k` links by score, one per target URL (its best-ranked box).
pub fn select_push_links(links: &[ClickMapEntry], k: usize) -> Vec<ClickMapEntry> {
    let mut best: HashMap<&str, LinkScore> = HashMap::new();
    for e in links {
        let cand = LinkScore { entry: e.clone(), score: score_link(e) };
        match best.get(e.target_url.as_str()) {
            Some(cur) if rank(cur, &cand) != Ordering::Greater => {}
            _ => {
                best.insert(&e.target_url, cand);
            }
        }
    }
    let mut ranked: Vec<LinkScore> = best.into_values().collect();
    ranked.sort_by(rank);
    ranked.into_iter().take(k).map(|s| s.entry).collect()
}
