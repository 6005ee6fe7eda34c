#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use sonic_core::format::SonicFile;
use sonic_core::renderer::{
    capture_page, render_llm, render_page, render_text_file, FixtureBrowser, FixturePage, RenderConfig, StubLlm,
    DEFAULT_LLM_CAP,
};
use sonic_core::server::{
    Class, EventBody, PipelineRenderer, Rejection, RequestState, Server, ServerConfig, ServerEvent, UplinkMessage,
};
use sonic_core::window::TransmissionWindow;

/// 2025-03-03 00:00 UTC.
pub const DAY0: f64 = 1_740_960_000.0;

pub fn at(day: i64, h: u32, m: u32) -> f64 {
    DAY0 + (day * 86_400) as f64 + (h * 3600 + m * 60) as f64
}

pub fn stub_renderer() -> PipelineRenderer {
    PipelineRenderer { browser: Box::new(FixtureBrowser::synthetic()), llm: Box::new(StubLlm), cfg: RenderConfig::default() }
}

/// The 30 uplink messages of the scripted session, with send times.
pub fn session_script() -> Vec<(f64, UplinkMessage)> {
    let mut s = Vec::new();
    let mut push = |t: f64, who: &str, body: &str| s.push((t, UplinkMessage::new(who, body)));
    // Sender a: ten accepted requests in the morning, then an 11th.
    let a_bodies = [
        "url https://News.example",
        "gpt what is malaria",
        "url bbc.co.uk",
        "gpt how do vaccines work",
        "url https://weather.example/today",
        "gpt price of maize in kisumu",
        "url https://market.example/prices",
        "gpt symptoms of cholera",
        "url https://school.example/exams",
        "gpt how to treat a burn",
        "gpt one too many",
    ];
    for (i, b) in a_bodies.iter().enumerate() {
        push(at(0, 9, 0) + 60.0 * i as f64, "sender-a", b);
    }
    // Malformed messages.
    push(at(0, 12, 0), "sender-b", "ftp files.example");
    push(at(0, 12, 1), "sender-b", "url");
    // Sender b in the evening, including repeats of a's subjects.
    push(at(0, 20, 0), "sender-b", "url https://news.example/");
    push(at(0, 20, 5), "sender-b", "gpt what is malaria");
    push(at(0, 20, 10), "sender-b", "url https://BBC.co.uk");
    push(at(0, 20, 15), "sender-b", "gpt is the river safe to drink");
    push(at(0, 21, 0), "sender-b", "url https://clinic.example/hours");
    push(at(0, 21, 30), "sender-b", "gpt when is the rainy season");
    push(at(0, 21, 59), "sender-c", "url https://radio.example/");
    // During the window.
    push(at(0, 22, 30), "sender-c", "gpt what is malaria");
    push(at(0, 23, 0), "sender-c", "url https://farm.example/tips");
    push(at(1, 0, 15), "sender-c", "url https://news.example");
    push(at(1, 1, 0), "sender-c", "gpt best time to plant beans");
    push(at(1, 1, 30), "sender-c", "url https://clinic.example/hours");
    push(at(1, 2, 0), "sender-c", "gpt what is a fever");
    push(at(1, 3, 0), "sender-c", "url https://jobs.example/");
    push(at(1, 4, 0), "sender-c", "gpt how far is the market");
    // Next day: a's quota is fresh, the cache is not.
    push(at(1, 10, 0), "sender-a", "url https://news.example");
    push(at(1, 10, 5), "sender-a", "gpt what is malaria");
    assert_eq!(s.len(), 30);
    s
}

/// Runs the script against a stub renderer through the end of the second
/// window and returns the full event log.
pub fn scripted_session() -> (Server, Vec<ServerEvent>) {
    let renderer = stub_renderer();
    let mut server = Server::new(ServerConfig::default(), at(0, 8, 0));
    let mut log = Vec::new();
    for (t, msg) in session_script() {
        server.advance_to(&renderer, t);
        let _ = server.submit(&msg, t);
        log.extend(server.take_events());
    }
    server.advance_to(&renderer, at(2, 6, 0));
    log.extend(server.take_events());
    (server, log)
}

fn accepted(log: &[ServerEvent]) -> BTreeMap<u32, (f64, String, Class, String, bool)> {
    log.iter()
        .filter_map(|e| match &e.body {
            EventBody::Accepted { id, sender, class, subject, cached, .. } => {
                Some((*id, (e.t, sender.clone(), *class, subject.clone(), *cached)))
            }
            _ => None,
        })
        .collect()
}

fn transitions(log: &[ServerEvent], to_state: RequestState) -> Vec<(f64, u32)> {
    log.iter()
        .filter_map(|e| match &e.body {
            EventBody::State { id, to, .. } if *to == to_state => Some((e.t, *id)),
            _ => None,
        })
        .collect()
}

/// No sender has more than `limit` accepted requests per UTC day, and at
/// least one request was refused for quota.
pub fn check_quota(log: &[ServerEvent], limit: usize) -> Result<(), String> {
    let mut per_day: HashMap<(String, i64), usize> = HashMap::new();
    for (t, sender, class, _, _) in accepted(log).values() {
        if *class == Class::User {
            *per_day.entry((sender.clone(), (*t as i64).div_euclid(86_400))).or_default() += 1;
        }
    }
    if let Some(((s, d), n)) = per_day.iter().find(|(_, n)| **n > limit) {
        return Err(format!("{s} had {n} accepted requests on day {d}"));
    }
    let refused = log.iter().any(|e| matches!(&e.body, EventBody::Rejected { reason: Rejection::Quota, .. }));
    if !refused {
        return Err("no request was refused for quota".into());
    }
    Ok(())
}

/// Every transmission starts and ends inside a window, and something
/// was played.
pub fn check_window(log: &[ServerEvent], w: &TransmissionWindow) -> Result<(), String> {
    let plays = transitions(log, RequestState::Playing);
    if plays.is_empty() {
        return Err("nothing was played".into());
    }
    let ends: HashMap<u32, f64> = transitions(log, RequestState::Done).into_iter().map(|(t, id)| (id, t)).collect();
    for (t, id) in plays {
        if !w.is_open(t) {
            return Err(format!("request {id} started outside the window at {t}"));
        }
        if let Some(end) = ends.get(&id) {
            if *end > w.window_end(t) {
                return Err(format!("request {id} ran past the window close"));
            }
        }
    }
    Ok(())
}

/// Repeats within a window are cache hits that never render; there is at
/// most one render per subject and window; a repeat in a later window
/// renders again.
pub fn check_cache(log: &[ServerEvent], w: &TransmissionWindow) -> Result<(), String> {
    let acc = accepted(log);
    let rendered: Vec<(f64, u32)> = transitions(log, RequestState::Rendering);
    let rendered_ids: std::collections::HashSet<u32> = rendered.iter().map(|(_, id)| *id).collect();
    let mut renders: HashMap<(String, i64), usize> = HashMap::new();
    for (t, id) in &rendered {
        *renders.entry((acc[id].3.clone(), w.window_id(*t))).or_default() += 1;
    }
    if let Some(((s, _), n)) = renders.iter().find(|(_, n)| **n > 1) {
        return Err(format!("{s} rendered {n} times in one window"));
    }
    let hits: Vec<u32> = acc.iter().filter(|(_, v)| v.4).map(|(id, _)| *id).collect();
    if hits.is_empty() {
        return Err("no cache hit in the session".into());
    }
    if let Some(id) = hits.iter().find(|id| rendered_ids.contains(id)) {
        return Err(format!("cache hit {id} was rendered"));
    }
    let mut windows_per_subject: HashMap<&str, Vec<i64>> = HashMap::new();
    for (t, id) in &rendered {
        windows_per_subject.entry(acc[id].3.as_str()).or_default().push(w.window_id(*t));
    }
    if !windows_per_subject.values().any(|v| v.len() > 1) {
        return Err("no subject was rendered again in a later window".into());
    }
    Ok(())
}

/// User requests go on air in the order they entered the player queue.
pub fn check_fifo(log: &[ServerEvent]) -> Result<(), String> {
    let acc = accepted(log);
    let user = |id: &u32| acc.get(id).is_some_and(|a| a.2 == Class::User);
    let encoded: Vec<u32> = transitions(log, RequestState::Encoded).into_iter().map(|(_, id)| id).filter(user).collect();
    let played: Vec<u32> = transitions(log, RequestState::Playing).into_iter().map(|(_, id)| id).filter(user).collect();
    if played.len() < 2 {
        return Err("too few user transmissions to compare".into());
    }
    if encoded[..played.len()] != played[..] {
        return Err(format!("encode order {encoded:?} vs play order {played:?}"));
    }
    Ok(())
}

/// A rendered article page from the synthetic fixture set.
pub fn sample_page(id: u32, seed: u64, height: u32) -> SonicFile {
    let mut browser = FixtureBrowser::new();
    browser.insert("https://news.example/", FixturePage::article(seed, height));
    let cap = capture_page("https://news.example/", &browser).unwrap();
    render_page(id, &cap, &RenderConfig::default(), 1_700_000_000).unwrap().file
}

/// A stub LLM answer.
pub fn sample_text(id: u32, prompt: &str) -> SonicFile {
    let text = render_llm(prompt, &StubLlm, DEFAULT_LLM_CAP).unwrap();
    render_text_file(id, prompt, &text, 1_700_000_000).unwrap()
}

/// Reference concealment written directly from the rule: for each missing
/// pixel, walk left to the nearest received pixel in the row; with none,
/// take the concealed pixel above; at the top-left, mid-gray.
pub fn conceal_oracle(img: &image::RgbImage, missing: &[bool]) -> image::RgbImage {
    let (w, h) = img.dimensions();
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            if !missing[(y * w + x) as usize] {
                continue;
            }
            let left = (0..x).rev().find(|&xl| !missing[(y * w + xl) as usize]);
            let v = match left {
                Some(xl) => *img.get_pixel(xl, y),
                None if y > 0 => *out.get_pixel(x, y - 1),
                None => image::Rgb([128, 128, 128]),
            };
            out.put_pixel(x, y, v);
        }
    }
    out
}

/// Answer lengths in bytes spread around the workload's GPT median.
pub const ANSWER_LENGTHS: [usize; 5] = [800, 1200, 1500, 2000, 3000];

/// An LLM_TEXT transmission carrying an answer of exactly `len` bytes.
pub fn sized_answer(id: u32, len: usize) -> SonicFile {
    let sentence = "Boil drinking water for one minute and store it covered. ";
    let text: String = sentence.chars().cycle().take(len).collect();
    render_text_file(id, "is the river safe to drink", &text, 1_700_000_000).unwrap()
}
