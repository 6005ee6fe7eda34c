use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Parser;
use serde::Serialize;
use sonic_core::config::Calibration;
use sonic_core::queue_sim::{generate_workload, replay_log, simulate, PushEvent, SimResult, WorkloadParams};
use sonic_core::server::read_events;
use sonic_core::window::{TimeOfDay, TransmissionWindow};

/// Discrete-event simulation of the broadcast queue over one day.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long, default_value_t = 15)]
    users: usize,
    #[arg(long, default_value_t = 1)]
    freqs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// JSON result; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-minute queue length as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Model constants; built-in defaults when absent.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Burst of push items, e.g. `09:30=10`. Repeatable.
    #[arg(long, value_parser = parse_push)]
    push: Vec<PushEvent>,
    /// Transmission window, e.g. `22:00-05:00`.
    #[arg(long, value_parser = parse_window)]
    window: Option<TransmissionWindow>,
    /// Multiplies every service time.
    #[arg(long, default_value_t = 1.0)]
    service_scale: f64,
    /// Run the four reference scenarios instead of a single configuration.
    #[arg(long, conflicts_with = "replay")]
    sweep: bool,
    /// Queue statistics from a server event log instead of a simulation.
    #[arg(long)]
    replay: Option<PathBuf>,
}

fn parse_push(s: &str) -> Result<PushEvent, String> {
    let (at, n) = s.split_once('=').ok_or("expected HH:MM=COUNT")?;
    Ok(PushEvent {
        at: at.parse::<TimeOfDay>()?,
        count: n.parse().map_err(|e| format!("{n}: {e}"))?,
    })
}

fn parse_window(s: &str) -> Result<TransmissionWindow, String> {
    let (a, b) = s.split_once('-').ok_or("expected HH:MM-HH:MM")?;
    let w = TransmissionWindow {
        start: a.parse()?,
        end: b.parse()?,
    };
    w.validate().map_err(String::from)?;
    Ok(w)
}

#[derive(Serialize)]
struct Run {
    label: String,
    users: usize,
    freqs: usize,
    seed: u64,
    result: SimResult,
}

/// The four reference scenarios: baseline with a push burst, then growing
/// user counts with more frequencies.
const SWEEP: [(&str, usize, usize, bool); 4] =
    [("a", 15, 1, true), ("b", 30, 1, false), ("c", 105, 2, false), ("d", 300, 10, false)];

fn sweep_csv(runs: &[Run]) -> String {
    let mut s = String::from("minute");
    for r in runs {
        s.push(',');
        s.push_str(&r.label);
    }
    s.push('\n');
    let rows = runs.iter().map(|r| r.result.queue_series.len()).max().unwrap_or(0);
    for m in 0..rows {
        s.push_str(&m.to_string());
        for r in runs {
            s.push(',');
            if let Some(q) = r.result.queue_series.get(m) {
                s.push_str(&q.to_string());
            }
        }
        s.push('\n');
    }
    s
}

fn write(path: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| p.display().to_string()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn main() -> anyhow::Result<()> {
    sonic_daemon::init_logging();
    let a = Args::parse();
    if a.freqs == 0 {
        bail!("--freqs must be at least 1");
    }
    if !(a.service_scale > 0.0 && a.service_scale.is_finite()) {
        bail!("--service-scale must be positive");
    }
    let cal = match &a.calibration {
        Some(p) => Calibration::load(p).with_context(|| p.display().to_string())?,
        None => Calibration::default(),
    };
    let window = a.window.unwrap_or_default();
    let svc = cal.service.scaled(a.service_scale);

    if let Some(p) = &a.replay {
        let f = std::fs::File::open(p).with_context(|| p.display().to_string())?;
        let events = read_events(std::io::BufReader::new(f))?;
        let r = replay_log(&events);
        write(a.out.as_ref(), &serde_json::to_string_pretty(&r)?)?;
        if let Some(c) = &a.csv {
            write(Some(c), &r.to_csv())?;
        }
        return Ok(());
    }

    let run = |label: &str, users: usize, freqs: usize, push: Vec<PushEvent>| -> anyhow::Result<Run> {
        let mut p = WorkloadParams { n_users: users, ..cal.workload.clone() };
        p.push_events.extend(push);
        p.validate().map_err(anyhow::Error::msg)?;
        let trace = generate_workload(&p, a.seed);
        let result = simulate(&trace, freqs, &window, &svc, p.cache_hit_rate);
        log::info!("{label}: peak {} unserved {}", result.peak_queue, result.unserved);
        Ok(Run { label: label.into(), users, freqs, seed: a.seed, result })
    };

    if a.sweep {
        let mut runs = Vec::new();
        for (label, users, freqs, burst) in SWEEP {
            let mut push = a.push.clone();
            if burst {
                push.push(PushEvent { at: TimeOfDay::hm(9, 30), count: 10 });
            }
            runs.push(run(label, users, freqs, push)?);
        }
        write(a.out.as_ref(), &serde_json::to_string_pretty(&runs)?)?;
        if let Some(c) = &a.csv {
            write(Some(c), &sweep_csv(&runs))?;
        }
    } else {
        let r = run("run", a.users, a.freqs, a.push.clone())?;
        write(a.out.as_ref(), &serde_json::to_string_pretty(&r)?)?;
        if let Some(c) = &a.csv {
            write(Some(c), &r.result.to_csv())?;
        }
    }
    Ok(())
}
