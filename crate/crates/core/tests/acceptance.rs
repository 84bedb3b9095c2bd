mod common;

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use rand::Rng;
use ward_monitor::activity::train_classifier;
use ward_monitor::demo::{run_demo, train_demo_models};
use ward_monitor::domain::{format_readings, ActivityLabel, TagReading};
use ward_monitor::eval::{
    confusion, confusion_from_labels, mae, majority_label, mse, split, split_by_label,
};
use ward_monitor::forecast::train_forecaster;
use ward_monitor::ingest::{load_mhealth, mhealth_path};
use ward_monitor::nn::{bce_loss, gradient_check, mae_loss, Activation, Loss, Mlp, TrainConfig};
use ward_monitor::service::{serve, MonitorService, ServiceConfig};
use ward_monitor::signal::{
    build_timeline, instance_count, segment_instances, ActivityWindow, ACTIVITY_FEATURES,
    FORECAST_TARGETS, HISTORY_MINUTES,
};
use ward_monitor::simulator::{
    drifting_vitals, simulate, ActivityScript, Schedule, SimConfig, Simulator,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn gradient_fidelity() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..6u64 {
        let mut r = rng(seed);
        for loss in [Loss::Mae, Loss::Bce] {
            let out_act = if loss == Loss::Bce {
                Activation::Sigmoid
            } else {
                Activation::Identity
            };
            let model = Mlp::random(&[7, 9, 6, 4], out_act, seed).unwrap();
            for _ in 0..3 {
                let x = random_vec(&mut r, 7, -2.0, 2.0);
                let y: Vec<f64> = match loss {
                    Loss::Bce => (0..4)
                        .map(|_| if r.random_bool(0.5) { 1.0 } else { 0.0 })
                        .collect(),
                    Loss::Mae => random_vec(&mut r, 4, -3.0, 3.0),
                };
                worst = worst.max(gradient_check(&model, &x, &y, loss));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-4 && secs < 30.0,
        format!(
            "6 seeds x {{MAE, BCE}}, max relative error {worst:.2e} (< 1e-4), {secs:.2} s (< 30 s)"
        ),
    )
}

fn ncs_roundtrip() -> Outcome {
    let start = Instant::now();
    let minutes = 6u32;
    let (mut ok, mut total) = (0usize, 0usize);
    let mut worst = (f64::INFINITY, 0.0, 0.0);
    for (i, hr) in [50.0, 72.0, 96.0, 120.0].into_iter().enumerate() {
        for (j, rr) in [8.0, 15.0, 20.0, 25.0].into_iter().enumerate() {
            let cfg = SimConfig {
                duration_minutes: minutes,
                hr_schedule: Schedule::constant(hr),
                rr_schedule: Schedule::constant(rr),
                seed: (i * 4 + j) as u64 + 100,
                ..SimConfig::default()
            };
            let stream =
                simulate(&cfg, &ActivityScript::constant(ActivityLabel::LyingDown)).unwrap();
            let timeline = build_timeline(&stream, cfg.sample_rate_hz).unwrap();
            let good = timeline
                .samples()
                .iter()
                .filter(|s| {
                    (s.heart_rate_bpm - hr).abs() <= 2.0 && (s.respiration_bpm - rr).abs() <= 1.0
                })
                .count();
            ok += good;
            total += minutes as usize;
            let frac = good as f64 / minutes as f64;
            if frac < worst.0 {
                worst = (frac, hr, rr);
            }
        }
    }
    let frac = ok as f64 / total as f64;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        frac >= 0.95 && secs < 120.0,
        format!(
            "{ok}/{total} minutes within +-2 HR / +-1 RR ({:.1}% >= 95%), worst cell hr {} rr {} at {:.0}%, {secs:.1} s",
            100.0 * frac,
            worst.1,
            worst.2,
            100.0 * worst.0
        ),
    )
}

fn windowing_arithmetic() -> Outcome {
    let mut r = rng(2024);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let len = r.random_range(0..20_000);
        if instance_count(len) != anchors_oracle(len).len() {
            mismatches += 1;
        }
    }
    let mut segmented = 0;
    for len in [0, 74, 254, 255, 269, 270, 271, 600, 1440] {
        let t = drifting_vitals(len, 1).unwrap();
        if segment_instances(&t, &person()).len() != anchors_oracle(len).len() {
            mismatches += 1;
        }
        segmented += 1;
    }
    outcome(
        mismatches == 0,
        format!("1000 random lengths plus {segmented} segmented timelines, {mismatches} mismatches (exact)"),
    )
}

fn forecaster_vs_persistence() -> Outcome {
    let start = Instant::now();
    let d = person();
    let instances = segment_instances(&drifting_vitals(24 * 60, 0).unwrap(), &d);
    let (train, test) = split(&instances).unwrap();
    let cfg = TrainConfig {
        epochs: 300,
        batch_size: 8,
        seed: 0,
        ..TrainConfig::default()
    };
    let model = train_forecaster(&train, &cfg).unwrap().model;
    let h = FORECAST_TARGETS / 2;
    let (mut t_hr, mut t_rr, mut m_hr, mut m_rr, mut p_hr, mut p_rr) =
        (vec![], vec![], vec![], vec![], vec![], vec![]);
    for inst in &test {
        let (hr, rr) = model.raw_outputs(&inst.features).unwrap();
        t_hr.extend_from_slice(&inst.targets[..h]);
        t_rr.extend_from_slice(&inst.targets[h..]);
        m_hr.extend(hr.iter().map(|v| v.clamp(20.0, 250.0)));
        m_rr.extend(rr.iter().map(|v| v.clamp(4.0, 60.0)));
        p_hr.extend(std::iter::repeat_n(inst.features[HISTORY_MINUTES - 1], h));
        p_rr.extend(std::iter::repeat_n(
            inst.features[2 * HISTORY_MINUTES - 1],
            h,
        ));
    }
    let (a, b, c, e) = (
        mae(&m_hr, &t_hr).unwrap(),
        mae(&p_hr, &t_hr).unwrap(),
        mae(&m_rr, &t_rr).unwrap(),
        mae(&p_rr, &t_rr).unwrap(),
    );
    let secs = start.elapsed().as_secs_f64();
    outcome(
        a <= b && c <= e && secs < 300.0,
        format!(
            "{} train / {} test instances; MAE hr {a:.3} vs persistence {b:.3}, rr {c:.3} vs {e:.3}; {secs:.1} s (< 300 s)",
            train.len(),
            test.len()
        ),
    )
}

fn two_cluster_windows(n: usize, seed: u64) -> Vec<ActivityWindow> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let label = if i % 2 == 0 {
                ActivityLabel::LyingDown
            } else {
                ActivityLabel::Running
            };
            let centre = if i % 2 == 0 { -1.5 } else { 1.5 };
            let mut features = [0.0; ACTIVITY_FEATURES];
            for f in &mut features {
                *f = centre + r.random_range(-1.0..1.0);
            }
            ActivityWindow {
                start_ms: i as i64 * 1280,
                features,
                truth: Some(label),
            }
        })
        .collect()
}

fn activity_cfg(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        loss: Loss::Bce,
        seed: 1,
        ..TrainConfig::default()
    }
}

fn evaluate_windows(windows: &[ActivityWindow], epochs: usize, csv: &Path) -> (f64, f64, usize) {
    let truth_of = |w: &ActivityWindow| w.truth.unwrap();
    let (train, test) = split_by_label(windows, truth_of);
    let (model, _) = train_classifier(&train, &activity_cfg(epochs)).unwrap();
    let decisions: Vec<_> = test
        .iter()
        .map(|w| model.classify(&w.features).unwrap())
        .collect();
    let truths: Vec<ActivityLabel> = test.iter().map(truth_of).collect();
    let counts = confusion(&decisions, &truths).unwrap();
    std::fs::write(csv, counts.to_csv()).unwrap();
    let majority = majority_label(&train.iter().map(truth_of).collect::<Vec<_>>()).unwrap();
    let baseline = confusion_from_labels(&vec![majority; truths.len()], &truths).unwrap();
    (
        counts.balanced_accuracy(),
        baseline.balanced_accuracy(),
        test.len(),
    )
}

fn classifier_two_cluster() -> Outcome {
    let windows = two_cluster_windows(400, 9);
    let dir = tempfile::tempdir().unwrap();
    let (ba, _, n) = evaluate_windows(&windows, 30, &dir.path().join("m.csv"));
    outcome(
        ba >= 0.95,
        format!("balanced accuracy {ba:.4} on {n} held-out windows (>= 0.95)"),
    )
}

fn classifier_mhealth() -> Option<Outcome> {
    let dir = std::env::var_os("WARD_MONITOR_DATA_DIR")?;
    let start = Instant::now();
    let windows = match load_mhealth(Path::new(&dir), 1) {
        Ok(w) => w,
        Err(e) => return Some(outcome(false, format!("could not load subject 1: {e}"))),
    };
    let csv = Path::new(env!("CARGO_TARGET_TMPDIR")).join("mhealth_subject1_confusion.csv");
    let (ba, majority, n) = evaluate_windows(&windows, 100, &csv);
    let secs = start.elapsed().as_secs_f64();
    Some(outcome(
        ba > 0.10 && ba > majority && secs < 300.0,
        format!(
            "balanced accuracy {ba:.4} vs chance 0.10 and majority {majority:.4} on {n} windows; CSV {}; {secs:.1} s",
            csv.display()
        ),
    ))
}

fn classifier_mhealth_format() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(5);
    let mut text = String::new();
    for code in [1u8, 2, 3, 4, 5, 6, 7, 8, 11, 12, 0] {
        for _ in 0..700 {
            let row: Vec<String> = (0..23)
                .map(|c| {
                    format!(
                        "{:.4}",
                        code as f64 * ((c % 5) as f64 - 2.0) + r.random_range(-0.5..0.5)
                    )
                })
                .collect();
            text.push_str(&format!("{}\t{code}\n", row.join("\t")));
        }
    }
    std::fs::write(mhealth_path(dir.path(), 1), text).unwrap();
    let windows = load_mhealth(dir.path(), 1).unwrap();
    let labels: std::collections::BTreeSet<_> = windows.iter().filter_map(|w| w.truth).collect();
    let csv = dir.path().join("confusion.csv");
    let (ba, majority, _) = evaluate_windows(&windows, 40, &csv);
    let rows = std::fs::read_to_string(&csv).unwrap().lines().count();
    outcome(
        labels.len() == 10 && rows == 12 && ba > 0.10 && ba > majority,
        format!(
            "synthetic MHEALTH-format file: {} windows over {} labels, confusion CSV {rows} lines, balanced accuracy {ba:.4} vs majority {majority:.4}",
            windows.len(),
            labels.len()
        ),
    )
}

fn loss_metric_oracles() -> Outcome {
    let mut r = rng(31);
    let mut worst = [0.0f64; 5];
    let mut count_mismatch = 0;
    for i in 0..100u64 {
        let n = r.random_range(1..40);
        let model = Mlp::random(&[5, 7, 3], Activation::Sigmoid, i).unwrap();
        let x = random_vec(&mut r, 5, -3.0, 3.0);
        let fwd = model.forward(&x).unwrap();
        let oracle = forward_oracle(&model, &x);
        worst[0] = worst[0].max(
            fwd.iter()
                .zip(&oracle)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );

        let p = random_vec(&mut r, n, -10.0, 10.0);
        let t = random_vec(&mut r, n, -10.0, 10.0);
        worst[1] = worst[1].max((mae_loss(&p, &t).unwrap() - mae_oracle(&p, &t)).abs());
        worst[1] = worst[1].max((mae(&p, &t).unwrap() - mae_oracle(&p, &t)).abs());
        worst[2] = worst[2]
            .max((mse(&p, &t).unwrap() - mse_oracle(&p, &t)).abs() / mse_oracle(&p, &t).max(1.0));

        let probs = random_vec(&mut r, n, 0.0, 1.0);
        let y: Vec<f64> = (0..n)
            .map(|_| if r.random_bool(0.5) { 1.0 } else { 0.0 })
            .collect();
        worst[3] = worst[3].max((bce_loss(&probs, &y).unwrap() - bce_oracle(&probs, &y)).abs());

        let m = r.random_range(1..80);
        let truth: Vec<ActivityLabel> = (0..m).map(|_| random_label(&mut r)).collect();
        let pred: Vec<ActivityLabel> = (0..m).map(|_| random_label(&mut r)).collect();
        let c = confusion_from_labels(&pred, &truth).unwrap();
        for l in ActivityLabel::ALL {
            let k = c.get(l);
            if (k.tp, k.fp, k.fn_, k.tn) != counts_oracle(&pred, &truth, l) {
                count_mismatch += 1;
            }
        }
        worst[4] =
            worst[4].max((c.balanced_accuracy() - balanced_accuracy_oracle(&pred, &truth)).abs());
    }
    let pass = worst[0] <= 1e-9
        && worst[1] <= 1e-12
        && worst[2] <= 1e-12
        && worst[3] <= 1e-12
        && worst[4] <= 1e-9
        && count_mismatch == 0;
    outcome(
        pass,
        format!(
            "100 fixtures; forward {:.1e} (1e-9), MAE {:.1e}, MSE {:.1e}, BCE {:.1e} (1e-12), confusion mismatches {count_mismatch}, balanced accuracy {:.1e} (1e-9)",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

struct Http {
    agent: ureq::Agent,
    base: String,
}

impl Http {
    fn post(&self, path: &str, body: &str) -> (u16, String) {
        let mut resp = self
            .agent
            .post(format!("{}{path}", self.base))
            .send(body)
            .unwrap();
        (
            resp.status().as_u16(),
            resp.body_mut().read_to_string().unwrap(),
        )
    }

    fn get(&self, path: &str) -> (u16, String) {
        let mut resp = self
            .agent
            .get(format!("{}{path}", self.base))
            .call()
            .unwrap();
        (
            resp.status().as_u16(),
            resp.body_mut().read_to_string().unwrap(),
        )
    }
}

fn start_server(service: MonitorService) -> SocketAddr {
    let (tx, rx) = std::sync::mpsc::channel();
    let service = Arc::new(service);
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(serve(
            service,
            SocketAddr::from(([127, 0, 0, 1], 0)),
            move |a| tx.send(a).unwrap(),
            std::future::pending(),
        ))
        .unwrap();
    });
    rx.recv_timeout(Duration::from_secs(10)).unwrap()
}

fn end_to_end_service() -> Outcome {
    let start = Instant::now();
    let (forecast, activity) = train_demo_models(3, Some(20)).unwrap();
    let addr = start_server(
        MonitorService::new(ServiceConfig::default(), Some(forecast), Some(activity)).unwrap(),
    );
    let http = Http {
        agent: ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into(),
        base: format!("http://{addr}/api/v1"),
    };
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok && !failures.iter().any(|f| f == what) {
            failures.push(what.to_string());
        }
    };

    let demographics = "age_years=41\nsex=Female\nheight_cm=168\nweight_kg=63.5\n";
    let (s, _) = http.post("/patients", &format!("patient_id=p1\n{demographics}"));
    check(s == 201, "register p1");
    let (s, _) = http.post("/patients", &format!("patient_id=fresh\n{demographics}"));
    check(s == 201, "register fresh");
    check(
        http.get("/patients/fresh/forecast").0 == 503,
        "forecast before history is 503",
    );
    check(
        http.get("/patients/fresh/activity").0 == 503,
        "activity before windows is 503",
    );
    check(
        http.get("/patients/ghost/forecast").0 == 404,
        "unknown patient is 404",
    );
    check(
        http.post("/patients/p1/readings", "not a reading\n").0 == 400,
        "malformed readings are 400",
    );
    check(
        http.post("/patients", "patient_id=p2\nage_years=-3\n").0 == 400,
        "bad demographics are 400",
    );
    check(
        http.get("/patients/p1/history?from=abc").0 == 400,
        "bad range is 400",
    );

    let cfg = SimConfig {
        duration_minutes: 255,
        seed: 17,
        ..SimConfig::default()
    };
    let script = ActivityScript::new(vec![
        (0, ActivityLabel::LyingDown),
        (200, ActivityLabel::Walking),
    ])
    .unwrap();
    let mut sim = Simulator::new(cfg, script).unwrap();
    let minutes: Vec<Vec<TagReading>> = std::iter::from_fn(|| sim.next_minute()).collect();
    let bodies: Vec<String> = minutes.iter().map(|m| format_readings(m)).collect();
    check(
        http.post("/patients/ghost/readings", &bodies[0]).0 == 404,
        "readings for unknown patient are 404",
    );
    let mut accepted = 0usize;
    for body in &bodies {
        let (s, text) = http.post("/patients/p1/readings", body);
        check(s == 200, "readings accepted with 200");
        accepted += text
            .trim()
            .strip_prefix("accepted=")
            .and_then(|v| v.parse::<usize>().ok())
            .unwrap_or(0);
    }
    check(
        accepted == minutes.iter().map(Vec::len).sum::<usize>(),
        "every reading accepted once",
    );

    let paths = [
        "/patients/p1/forecast",
        "/patients/p1/activity",
        "/patients/p1/vitals/current",
        "/patients/p1/history",
    ];
    let before: Vec<(u16, String)> = paths.iter().map(|p| http.get(p)).collect();
    check(
        before.iter().all(|(s, _)| *s == 200),
        "queries after ingest are 200",
    );
    let f = &before[0].1;
    let series_len = |key: &str| {
        f.lines()
            .find_map(|l| l.strip_prefix(&format!("{key}=")))
            .map(|v| v.split(',').count())
            .unwrap_or(0)
    };
    check(
        series_len("heart_rate") == 12 && series_len("respiration") == 12,
        "forecast has 12 steps per vital",
    );
    check(
        before[1].1.contains("current_status="),
        "activity decision present",
    );
    check(
        before[3].1.lines().count() == 256,
        "history has 255 minutes",
    );

    let mut replay_accepted = 0usize;
    for body in &bodies {
        let (_, text) = http.post("/patients/p1/readings", body);
        replay_accepted += text
            .trim()
            .strip_prefix("accepted=")
            .and_then(|v| v.parse::<usize>().ok())
            .unwrap_or(1);
    }
    let after: Vec<(u16, String)> = paths.iter().map(|p| http.get(p)).collect();
    check(
        replay_accepted == 0 && before == after,
        "replay changes nothing",
    );

    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < 180.0;
    let detail = if failures.is_empty() {
        format!("255 minutes over HTTP, 12x2 forecast, activity decision, idempotent replay, 200/201/400/404/503 contract; {secs:.1} s (< 180 s)")
    } else {
        format!("failed: {}; {secs:.1} s", failures.join(", "))
    };
    outcome(pass, detail)
}

fn demo_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let exe = env!("CARGO_BIN_EXE_ward-monitor");
    let mut outputs = Vec::new();
    for run in ["run1", "run2"] {
        let status = std::process::Command::new(exe)
            .args(["demo", "--seed", "7", "--out", run])
            .current_dir(dir.path())
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        if !status.success() {
            return outcome(false, format!("demo exited with {status}"));
        }
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path().join(run))
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        outputs.push(files);
    }
    let in_process = run_demo(7, None).unwrap();
    let matches_lib = in_process.files().iter().all(|(name, text)| {
        outputs[0]
            .iter()
            .any(|(n, b)| n == name && b == text.as_bytes())
    });
    outcome(
        outputs[0] == outputs[1] && outputs[0].len() == 4 && matches_lib,
        format!(
            "{} files byte-identical across two CLI runs and the library run",
            outputs[0].len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("gradient fidelity", gradient_fidelity),
        ("vitals roundtrip grid", ncs_roundtrip),
        ("windowing arithmetic", windowing_arithmetic),
        ("forecaster beats persistence", forecaster_vs_persistence),
        ("classifier two-cluster", classifier_two_cluster),
        ("classifier mhealth subject 1", || {
            classifier_mhealth().unwrap_or_else(|| {
                outcome(
                    false,
                    "NOT RUN: WARD_MONITOR_DATA_DIR unset, dataset unavailable",
                )
            })
        }),
        ("classifier mhealth file format", classifier_mhealth_format),
        ("loss and metric oracles", loss_metric_oracles),
        ("end-to-end service", end_to_end_service),
    ];
    let mut failed = 0;
    let mut not_run = 0;
    let all = criteria.iter().copied().chain(std::iter::once((
        "demo determinism",
        demo_determinism as fn() -> Outcome,
    )));
    for (name, f) in all {
        let o = f();
        let tag = if o.pass {
            "PASS"
        } else if o.detail.starts_with("NOT RUN") {
            not_run += 1;
            "NOT RUN"
        } else {
            failed += 1;
            "FAIL"
        };
        println!("[{tag}] {name}: {}", o.detail);
    }
    println!("acceptance: {failed} failed, {not_run} not run");
    if failed > 0 {
        std::process::exit(1);
    }
}
