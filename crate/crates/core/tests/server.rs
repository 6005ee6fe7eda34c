mod common;

use common::{at, check_cache, check_fifo, check_quota, check_window, scripted_session, stub_renderer};
use sonic_core::format::ContentType;
use sonic_core::hub::{decode_hub, HUB_SOURCE};
use sonic_core::server::{
    read_events, write_events, Action, Class, EventBody, Rejection, RequestState, Server, ServerConfig, UplinkMessage,
};
use sonic_core::window::TransmissionWindow;

#[test]
fn scripted_session_invariants() {
    let (server, log) = scripted_session();
    let w = TransmissionWindow::default();
    check_quota(&log, 10).unwrap();
    check_window(&log, &w).unwrap();
    check_cache(&log, &w).unwrap();
    check_fifo(&log).unwrap();
    // Everything accepted was eventually played.
    let st = server.status();
    assert_eq!(st.backlog, 0);
    assert_eq!(st.failed, 0);
    let played = server.records().values().filter(|r| r.state == RequestState::Done).count();
    assert_eq!(played, server.records().len());
}

#[test]
fn event_log_roundtrip() {
    let (_, log) = scripted_session();
    let mut buf = Vec::new();
    write_events(&mut buf, &log).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().count(), log.len());
    assert!(text.lines().next().unwrap().contains("\"event\":\"accepted\""));
    assert_eq!(read_events(&buf[..]).unwrap(), log);
    assert!(read_events(&b"{\"t\":1}\n"[..]).is_err());
}

#[test]
fn rejections_are_machine_readable() {
    let (_, log) = scripted_session();
    let reasons: Vec<Rejection> = log
        .iter()
        .filter_map(|e| match &e.body {
            EventBody::Rejected { reason, .. } => Some(*reason),
            _ => None,
        })
        .collect();
    assert_eq!(reasons, vec![Rejection::Quota, Rejection::UnknownType, Rejection::EmptyBody]);
    let json = serde_json::to_string(&Rejection::Quota).unwrap();
    assert_eq!(json, "\"QUOTA\"");
}

#[test]
fn window_gating() {
    let r = stub_renderer();
    let mut s = Server::new(ServerConfig::default(), at(0, 21, 0));
    s.submit(&UplinkMessage::new("x", "gpt hello"), at(0, 21, 0)).unwrap();
    let actions = s.advance_to(&r, at(0, 21, 59));
    assert!(actions.is_empty(), "{actions:?}");
    assert_eq!(s.status().depths.player, 1);
    let actions = s.advance_to(&r, at(0, 22, 30));
    // Hub index first, then the request.
    assert!(matches!(actions[0], Action::Play { start, .. } if start == at(0, 22, 0)));
    let ids: Vec<u32> = actions
        .iter()
        .filter_map(|a| match a {
            Action::Play { id, .. } => Some(*id),
            _ => None,
        })
        .collect();
    assert_eq!(s.record(ids[0]).unwrap().class, Class::Hub);
    assert_eq!(s.record(ids[1]).unwrap().subject, "hello");
}

#[test]
fn keepalive_cadence() {
    let r = stub_renderer();
    let mut s = Server::new(ServerConfig::default(), at(0, 22, 0));
    let actions = s.advance_to(&r, at(0, 22, 0) + 12.0);
    let kas: Vec<f64> = actions
        .iter()
        .filter_map(|a| match a {
            Action::Keepalive { t } => Some(*t),
            _ => None,
        })
        .collect();
    assert_eq!(kas, vec![at(0, 22, 0) + 5.0, at(0, 22, 0) + 10.0]);
    // Nothing outside the window.
    let mut s = Server::new(ServerConfig::default(), at(0, 12, 0));
    assert!(s.advance_to(&r, at(0, 12, 5)).is_empty());
}

#[test]
fn push_only_when_player_idle() {
    let r = stub_renderer();
    let mut s = Server::new(ServerConfig::default(), at(0, 20, 0));
    let page = s.submit(&UplinkMessage::new("x", "url https://news.example/"), at(0, 20, 0)).unwrap();
    s.advance_to(&r, at(0, 20, 1));
    let pushes: Vec<u32> = s.records().values().filter(|r| r.class == Class::Push).map(|r| r.id).collect();
    assert_eq!(pushes.len(), 3);
    assert!(s.record(pushes[0]).unwrap().subject.starts_with("https://news.example/"));
    let q = s.submit(&UplinkMessage::new("y", "gpt later question"), at(0, 21, 0)).unwrap();
    s.advance_to(&r, at(1, 5, 0));
    let start = |id: u32| s.record(id).unwrap().play_start.unwrap();
    // The user requests play before any push item, even the later one.
    for p in &pushes {
        assert!(start(*p) > start(page));
        assert!(start(*p) > start(q));
    }
}

#[test]
fn push_waits_for_busy_player() {
    let r = stub_renderer();
    let mut s = Server::new(ServerConfig::default(), at(0, 22, 0));
    s.advance_to(&r, at(0, 22, 0));
    s.submit(&UplinkMessage::new("x", "url https://news.example/"), at(0, 22, 0)).unwrap();
    s.advance_to(&r, at(0, 22, 0));
    // Push items are ready while the page is playing.
    assert_eq!(s.status().depths.push, 3);
    let late = s.submit(&UplinkMessage::new("y", "gpt queued behind"), at(0, 22, 0) + 1.0).unwrap();
    s.advance_to(&r, at(1, 5, 0));
    let first_push = s.records().values().filter(|r| r.class == Class::Push).filter_map(|r| r.play_start).fold(f64::INFINITY, f64::min);
    assert!(s.record(late).unwrap().play_start.unwrap() < first_push);
}

#[test]
fn item_not_fitting_waits_for_next_window() {
    let r = stub_renderer();
    let mut s = Server::new(ServerConfig::default(), at(0, 4, 59));
    let id = s.submit(&UplinkMessage::new("x", "url https://long.example/"), at(0, 4, 59)).unwrap();
    s.advance_to(&r, at(0, 22, 0) - 1.0);
    assert_eq!(s.record(id).unwrap().state, RequestState::Encoded);
    s.advance_to(&r, at(1, 5, 0));
    let rec = s.record(id).unwrap();
    assert!(rec.play_start.unwrap() >= at(0, 22, 0));
}

#[test]
fn overload_bound() {
    let cfg = ServerConfig { queue_bound: 2, quota_per_day: 100, ..ServerConfig::default() };
    let mut s = Server::new(cfg, at(0, 9, 0));
    for i in 0..2 {
        s.submit(&UplinkMessage::new("x", format!("gpt q{i}")), at(0, 9, 0)).unwrap();
    }
    assert_eq!(s.submit(&UplinkMessage::new("x", "gpt q3"), at(0, 9, 0)), Err(Rejection::Overload));
}

#[test]
fn quota_resets_at_local_midnight() {
    let cfg = ServerConfig { utc_offset_minutes: 180, ..ServerConfig::default() };
    let mut s = Server::new(cfg, at(0, 12, 0));
    for i in 0..10 {
        s.submit(&UplinkMessage::new("x", format!("gpt q{i}")), at(0, 12, 0)).unwrap();
    }
    assert_eq!(s.submit(&UplinkMessage::new("x", "gpt more"), at(0, 20, 59)), Err(Rejection::Quota));
    // 21:00 UTC is midnight at UTC+3.
    assert!(s.submit(&UplinkMessage::new("x", "gpt more"), at(0, 21, 0)).is_ok());
}

#[test]
fn hub_index_is_first_transmission() {
    let (server, log) = scripted_session();
    let first_play = log
        .iter()
        .find_map(|e| match &e.body {
            EventBody::State { id, to: RequestState::Playing, .. } => Some(*id),
            _ => None,
        })
        .unwrap();
    let rec = server.record(first_play).unwrap();
    assert_eq!(rec.class, Class::Hub);
    assert_eq!(rec.subject, HUB_SOURCE);
}

#[test]
fn hub_payload_ranks_subjects() {
    let r = stub_renderer();
    let mut s = Server::new(ServerConfig::default(), at(0, 9, 0));
    for who in ["a", "b", "c"] {
        s.submit(&UplinkMessage::new(who, "gpt popular"), at(0, 9, 0)).unwrap();
    }
    s.submit(&UplinkMessage::new("a", "gpt rare"), at(0, 9, 1)).unwrap();
    let actions = s.advance_to(&r, at(0, 22, 0));
    let Action::Play { file, .. } = &actions[0] else { panic!("{actions:?}") };
    assert_eq!(file.metadata.content_type, ContentType::LlmText);
    assert_eq!(file.metadata.source, HUB_SOURCE);
    let entries = decode_hub(std::str::from_utf8(&file.payload).unwrap()).unwrap();
    assert_eq!(entries.iter().map(|e| (e.subject.as_str(), e.count)).collect::<Vec<_>>(), [("popular", 3), ("rare", 1)]);
}

#[test]
fn empty_history_skips_hub() {
    let r = stub_renderer();
    let mut s = Server::new(ServerConfig::default(), at(0, 21, 0));
    s.advance_to(&r, at(0, 23, 0));
    assert!(s.records().is_empty());
}

#[test]
fn restart_preserves_log_and_quota() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.json");
    let mut s = Server::new(ServerConfig::default(), at(0, 9, 0));
    for i in 0..10 {
        s.submit(&UplinkMessage::new("x", format!("gpt q{i}")), at(0, 9, 0)).unwrap();
    }
    s.snapshot().save(&path).unwrap();
    let snap = sonic_core::server::Snapshot::load(&path).unwrap();
    let mut s2 = Server::restore(ServerConfig::default(), snap, at(0, 10, 0));
    assert_eq!(s2.records().len(), 10);
    assert_eq!(s2.submit(&UplinkMessage::new("x", "gpt again"), at(0, 10, 0)), Err(Rejection::Quota));
    let id = s2.submit(&UplinkMessage::new("y", "gpt new"), at(0, 10, 0)).unwrap();
    assert_eq!(id, 11);
    s2.advance_to(&stub_renderer(), at(1, 5, 0));
    assert!(s2.records().values().all(|r| r.state == RequestState::Done));
}

#[test]
fn status_reports_current_item() {
    let r = stub_renderer();
    let mut s = Server::new(ServerConfig::default(), at(0, 22, 0));
    s.advance_to(&r, at(0, 22, 0));
    s.submit(&UplinkMessage::new("x", "url https://news.example/"), at(0, 22, 0)).unwrap();
    s.advance_to(&r, at(0, 22, 0) + 1.0);
    let st = s.status();
    assert!(st.window_open);
    let cur = st.current.clone().unwrap();
    assert_eq!(cur.subject, "https://news.example/");
    assert!(cur.ends_at > at(0, 22, 0) + 10.0);
    let json = serde_json::to_value(&st).unwrap();
    assert!(json["depths"]["push"].is_u64());
}
