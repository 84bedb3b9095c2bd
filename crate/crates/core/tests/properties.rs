mod common;

use std::f64::consts::TAU;
use std::sync::OnceLock;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use ward_monitor::activity::{train_classifier, ActivityDecision, ActivityModel};
use ward_monitor::domain::{
    bmi, label_from_index, label_index, ActivityLabel, ActivityProbabilities, Quality,
    TagPlacement, TagReading, VitalSample,
};
use ward_monitor::eval::{confusion_from_labels, mae, mse};
use ward_monitor::forecast::{train_forecaster, ForecastModel};
use ward_monitor::ingest::{mhealth_windows, MhealthRow};
use ward_monitor::nn::{
    adam_step, bce_loss, mae_loss, Activation, AdamState, Loss, Mlp, TrainConfig,
};
use ward_monitor::normalize::Normalizer;
use ward_monitor::service::{MonitorService, ServiceConfig};
use ward_monitor::signal::{
    history_features, instance_count, magnitude_spectrum, segment_instances, vitals_from_buffers,
    ActivityWindow, VitalsTimeline, ACTIVITY_FEATURES,
};
use ward_monitor::simulator::{
    drifting_vitals, simulate, ActivityScript, Schedule, SimConfig, Simulator,
};

fn forecaster() -> &'static ForecastModel {
    static MODEL: OnceLock<ForecastModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let t = drifting_vitals(400, 1).unwrap();
        let cfg = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        train_forecaster(&segment_instances(&t, &person()), &cfg)
            .unwrap()
            .model
    })
}

fn classifier() -> &'static ActivityModel {
    static MODEL: OnceLock<ActivityModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let mut r = rng(2);
        let windows: Vec<ActivityWindow> = (0..60)
            .map(|i| {
                let mut features = [0.0; ACTIVITY_FEATURES];
                features
                    .iter_mut()
                    .for_each(|f| *f = r.random_range(-1.0..1.0) + (i % 3) as f64);
                ActivityWindow {
                    start_ms: i * 1280,
                    features,
                    truth: Some(ActivityLabel::ALL[(i % 3) as usize]),
                }
            })
            .collect();
        let cfg = TrainConfig {
            epochs: 3,
            loss: Loss::Bce,
            ..TrainConfig::default()
        };
        train_classifier(&windows, &cfg).unwrap().0
    })
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

proptest! {
    #[test]
    fn label_index_round_trip(i in 0usize..10) {
        let l = label_from_index(i).unwrap();
        prop_assert_eq!(label_index(l), i);
        prop_assert_eq!(label_from_index(label_index(l)).unwrap(), l);
    }

    #[test]
    fn phase_outside_range_rejected(phase in prop_oneof![-50.0..-1e-12f64, TAU..50.0f64]) {
        prop_assert!(TagReading::new(TagPlacement::Chest, 0, -50.0, phase, 868.0).is_err());
    }

    #[test]
    fn phase_inside_range_accepted(phase in 0.0..TAU) {
        let r = TagReading::new(TagPlacement::LeftArm, 5, -50.0, phase, 868.0).unwrap();
        prop_assert_eq!(r.phase_rad(), phase);
    }

    #[test]
    fn bmi_scales(height in 50.0..250.0f64, weight in 2.0..300.0f64) {
        let mut d = person();
        d.height_cm = height;
        d.weight_kg = weight;
        let base = bmi(&d).unwrap();
        let heavier = bmi(&ward_monitor::domain::Demographics { weight_kg: 2.0 * weight, ..d }).unwrap();
        let taller = bmi(&ward_monitor::domain::Demographics { height_cm: 2.0 * height, ..d }).unwrap();
        prop_assert!((heavier - 2.0 * base).abs() < 1e-9 * base);
        prop_assert!((taller - base / 4.0).abs() < 1e-9 * base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sample_counts_exact(duration in 1u32..4, rate in 1.0..40.0f64) {
        let cfg = SimConfig { duration_minutes: duration, sample_rate_hz: rate, ..SimConfig::default() };
        let stream = simulate(&cfg, &ActivityScript::constant(ActivityLabel::Walking)).unwrap();
        let expected = (duration as f64 * 60.0 * rate).round() as usize;
        for p in TagPlacement::ALL {
            prop_assert_eq!(stream.iter().filter(|r| r.placement() == p).count(), expected);
        }
        prop_assert_eq!(cfg.samples_per_placement(), expected);
        prop_assert!(stream.windows(2).all(|w| w[0].timestamp_ms() <= w[1].timestamp_ms()));
    }

    #[test]
    fn seeds_change_noise_only(a in any::<u64>(), b in any::<u64>()) {
        prop_assume!(a != b);
        let cfg = |seed, noise| SimConfig {
            duration_minutes: 1,
            sample_rate_hz: 10.0,
            noise_sigma_db: noise,
            seed,
            ..SimConfig::default()
        };
        let script = ActivityScript::constant(ActivityLabel::Running);
        prop_assert_eq!(simulate(&cfg(a, 0.3), &script).unwrap(), simulate(&cfg(a, 0.3), &script).unwrap());
        prop_assert_ne!(simulate(&cfg(a, 0.3), &script).unwrap(), simulate(&cfg(b, 0.3), &script).unwrap());
        prop_assert_eq!(simulate(&cfg(a, 0.0), &script).unwrap(), simulate(&cfg(b, 0.0), &script).unwrap());
    }

    #[test]
    fn abdomen_spectrum_peaks_at_respiration_bin(rr in 4.0..40.0f64, minute in 0u32..3) {
        let cfg = SimConfig {
            duration_minutes: 3,
            rr_schedule: Schedule::constant(rr),
            noise_sigma_db: 0.0,
            ..SimConfig::default()
        };
        let stream = simulate(&cfg, &ActivityScript::constant(ActivityLabel::LyingDown)).unwrap();
        let abdomen: Vec<f64> = stream
            .iter()
            .filter(|r| r.placement() == TagPlacement::Abdomen && r.timestamp_ms() / 60_000 == minute as i64)
            .map(|r| r.rssi_dbm())
            .collect();
        let spectrum = magnitude_spectrum(&abdomen);
        let peak = (1..spectrum.len() / 2).max_by(|&i, &j| spectrum[i].total_cmp(&spectrum[j])).unwrap();
        prop_assert_eq!(peak, rr.round() as usize);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn instance_count_matches_enumeration(len in 0usize..5000) {
        prop_assert_eq!(instance_count(len), anchors_oracle(len).len());
    }
}

proptest! {
    #[test]
    fn instances_follow_anchor_enumeration(len in 200usize..700, seed in 0u64..1000) {
        let t = drifting_vitals(len, seed).unwrap();
        let instances = segment_instances(&t, &person());
        let anchors: Vec<usize> = instances.iter().map(|i| i.anchor_minute as usize).collect();
        prop_assert_eq!(anchors, anchors_oracle(len));
        let hr = t.heart_rates();
        let rr = t.respiration_rates();
        for inst in &instances {
            let a = inst.anchor_minute as usize;
            prop_assert_eq!(&inst.features[..75], &hr[a - 75..a]);
            prop_assert_eq!(&inst.features[75..150], &rr[a - 75..a]);
            prop_assert_eq!(&inst.features[150..], &person().features()[..]);
            for k in 0..12 {
                prop_assert_eq!(inst.targets[k], hr[a + 15 * k + 14]);
                prop_assert_eq!(inst.targets[12 + k], rr[a + 15 * k + 14]);
            }
        }
    }

    #[test]
    fn vitals_shift_invariant(hr in 50.0..130.0f64, rr in 6.0..30.0f64, shift in -40.0..40.0f64) {
        let n = 3000;
        let chest: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / 50.0;
                2.0 * (TAU * rr / 60.0 * t).sin() + 0.5 * (TAU * hr / 60.0 * t).sin()
            })
            .collect();
        let abdomen: Vec<f64> = (0..n).map(|i| 2.0 * (TAU * rr / 60.0 * i as f64 / 50.0).sin()).collect();
        let shifted = |v: &[f64]| v.iter().map(|x| x + shift).collect::<Vec<f64>>();
        let a = vitals_from_buffers(0, &chest, &abdomen);
        let b = vitals_from_buffers(0, &shifted(&chest), &shifted(&abdomen));
        prop_assert_eq!(a.quality, b.quality);
        prop_assert!((a.heart_rate_bpm - b.heart_rate_bpm).abs() < 1e-6);
        prop_assert!((a.respiration_bpm - b.respiration_bpm).abs() < 1e-6);
    }

    #[test]
    fn feature_layout_fixed(hr in prop::collection::vec(20.0..250.0f64, 75), rr in prop::collection::vec(4.0..60.0f64, 75)) {
        let d = person();
        let f = history_features(&hr, &rr, &d);
        prop_assert_eq!(f.len(), 154);
        prop_assert_eq!(&f[0..75], &hr[..]);
        prop_assert_eq!(&f[75..150], &rr[..]);
        prop_assert_eq!(f[150], d.age_years as f64);
        prop_assert_eq!(f[151], d.sex.code());
        prop_assert_eq!(f[152], d.height_cm);
        prop_assert_eq!(f[153], d.weight_kg);
    }

    #[test]
    fn forward_is_pure(seed in any::<u64>(), x in prop::collection::vec(-5.0..5.0f64, 6)) {
        let model = Mlp::random(&[6, 8, 3], Activation::Sigmoid, seed).unwrap();
        let a = model.forward(&x).unwrap();
        let b = model.forward(&x).unwrap();
        prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn losses_non_negative_and_zero_iff_equal(
        p in prop::collection::vec(-10.0..10.0f64, 1..20),
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let t: Vec<f64> = p.iter().map(|v| if r.random_bool(0.5) { *v } else { v + r.random_range(0.1..3.0) }).collect();
        let m = mae_loss(&p, &t).unwrap();
        prop_assert!(m >= 0.0);
        prop_assert_eq!(m == 0.0, p == t);

        let probs: Vec<f64> = p.iter().map(|v| sigmoid(*v)).collect();
        let y: Vec<f64> = probs.iter().map(|_| if r.random_bool(0.5) { 1.0 } else { 0.0 }).collect();
        prop_assert!(bce_loss(&probs, &y).unwrap() >= 0.0);
        let exact = bce_loss(&y, &y).unwrap();
        prop_assert!(exact <= -(1.0 - 1e-7f64).ln() + 1e-15);
    }

    #[test]
    fn adam_zero_rate_freezes(params in prop::collection::vec(-5.0..5.0f64, 1..30), steps in 1usize..5) {
        let cfg = TrainConfig { learning_rate: 0.0, ..TrainConfig::default() };
        let mut p = params.clone();
        let mut state = AdamState::new(p.len());
        let grads: Vec<f64> = params.iter().map(|v| v * 3.0 - 1.0).collect();
        for _ in 0..steps {
            adam_step(&mut p, &grads, &mut state, &cfg).unwrap();
        }
        prop_assert_eq!(p, params);
    }

    #[test]
    fn model_text_round_trip(seed in any::<u64>(), hidden in 1usize..12, sigmoid_out in any::<bool>()) {
        let act = if sigmoid_out { Activation::Sigmoid } else { Activation::Identity };
        let m = Mlp::random(&[5, hidden, 3], act, seed).unwrap();
        let text = m.to_text();
        let back = Mlp::from_text(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(back, m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forecast_shape_fixed(
        hr in prop::collection::vec(-1e3..1e3f64, 75..120),
        rr_level in -100.0..500.0f64,
    ) {
        let history: Vec<VitalSample> = hr
            .iter()
            .enumerate()
            .map(|(i, &h)| VitalSample { minute_index: i as u32, heart_rate_bpm: h, respiration_bpm: rr_level, quality: Quality::Good })
            .collect();
        let f = forecaster().predict(&history, &person()).unwrap();
        prop_assert_eq!(f.heart_rate.len(), 12);
        prop_assert_eq!(f.respiration.len(), 12);
        prop_assert_eq!(f.issued_at_minute as usize, hr.len());
        prop_assert!(f.heart_rate.iter().all(|v| (20.0..=250.0).contains(v)));
        prop_assert!(f.respiration.iter().all(|v| (4.0..=60.0).contains(v)));
    }

    #[test]
    fn normalized_training_set_is_centred(rows in prop::collection::vec(prop::collection::vec(-1e4..1e4f64, 6), 2..40)) {
        let n = Normalizer::fit(&rows).unwrap();
        for c in 0..6 {
            let mean = rows.iter().map(|r| n.apply(r).unwrap()[c]).sum::<f64>() / rows.len() as f64;
            prop_assert!(mean.abs() < 1e-9, "column {} mean {}", c, mean);
        }
    }

    #[test]
    fn probabilities_in_unit_range(x in prop::collection::vec(-1e6..1e6f64, 24)) {
        let d = classifier().classify(&x).unwrap();
        prop_assert!(d.probabilities.0.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn argmax_invariant_under_logit_scaling(z in prop::collection::vec(-5.0..5.0f64, 10), c in 0.1..3.0f64) {
        let probs = |scale: f64| {
            let p: [f64; 10] = std::array::from_fn(|i| sigmoid(scale * z[i]));
            ActivityProbabilities::new(p).unwrap()
        };
        let a = ActivityDecision::from_probabilities(probs(1.0), 0.5);
        let b = ActivityDecision::from_probabilities(probs(c), 0.5);
        prop_assert_eq!(a.current_status, b.current_status);
    }

    #[test]
    fn raising_threshold_never_grows_active_set(p in prop::collection::vec(0.0..=1.0f64, 10)) {
        let probs = ActivityProbabilities::new(p.try_into().unwrap()).unwrap();
        let mut previous: Option<Vec<ActivityLabel>> = None;
        for k in 1..=9 {
            let d = ActivityDecision::from_probabilities(probs, k as f64 / 10.0);
            if let Some(prev) = &previous {
                prop_assert!(d.active_labels.iter().all(|l| prev.contains(l)));
            }
            previous = Some(d.active_labels);
        }
    }

    #[test]
    fn regression_metrics_consistent(p in prop::collection::vec(-50.0..50.0f64, 1..30), same in any::<bool>()) {
        let t: Vec<f64> = if same { p.clone() } else { p.iter().map(|v| v * 0.5 + 1.0).collect() };
        let (a, s) = (mae(&p, &t).unwrap(), mse(&p, &t).unwrap());
        prop_assert!(a >= 0.0 && s >= 0.0);
        prop_assert_eq!(a == 0.0, s == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn confusion_conserves_totals(seed in any::<u64>(), n in 1usize..60) {
        let mut r = rng(seed);
        let truth: Vec<ActivityLabel> = (0..n).map(|_| random_label(&mut r)).collect();
        let pred: Vec<ActivityLabel> = (0..n).map(|_| random_label(&mut r)).collect();
        let c = confusion_from_labels(&pred, &truth).unwrap();
        let correct = (0..n).filter(|&i| pred[i] == truth[i]).count() as u64;
        let mut sums = (0, 0, 0);
        for counts in &c.per_label {
            prop_assert_eq!(counts.total(), n as u64);
            sums.0 += counts.tp;
            sums.1 += counts.fp;
            sums.2 += counts.fn_;
        }
        prop_assert_eq!(sums, (correct, n as u64 - correct, n as u64 - correct));
    }
}

#[test]
fn random_classifier_balanced_accuracy_near_chance() {
    let mut r = rng(77);
    for k in [2usize, 5, 10] {
        let truth: Vec<ActivityLabel> = (0..10_000).map(|i| ActivityLabel::ALL[i % k]).collect();
        let pred: Vec<ActivityLabel> = (0..10_000)
            .map(|_| ActivityLabel::ALL[r.random_range(0..k)])
            .collect();
        let ba = confusion_from_labels(&pred, &truth)
            .unwrap()
            .balanced_accuracy();
        assert!((ba - 1.0 / k as f64).abs() < 0.05, "k={k}: {ba}");
    }
}

fn mhealth_rows(runs: &[(u8, usize)]) -> Vec<MhealthRow> {
    let mut rows = Vec::new();
    for &(label, len) in runs {
        for i in 0..len {
            let mut sensors = [0.0; 23];
            sensors
                .iter_mut()
                .enumerate()
                .for_each(|(c, s)| *s = ((i * 7 + c) % 13) as f64);
            rows.push(MhealthRow { sensors, label });
        }
    }
    rows
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mhealth_windows_carry_mapped_labels(runs in prop::collection::vec((0u8..=12, 0usize..400), 1..8)) {
        let windows = mhealth_windows(&mhealth_rows(&runs));
        let mut merged: Vec<(u8, usize)> = Vec::new();
        for &(l, n) in &runs {
            match merged.last_mut() {
                Some((pl, pn)) if *pl == l => *pn += n,
                _ => merged.push((l, n)),
            }
        }
        let expected: usize = merged
            .iter()
            .filter(|(l, _)| ![0, 9, 10].contains(l))
            .map(|&(_, n)| (0..).take_while(|s| s * 64 + 128 <= n).count())
            .sum();
        prop_assert_eq!(windows.len(), expected);
        prop_assert!(windows.iter().all(|w| w.truth.is_some()));
    }

    #[test]
    fn single_run_window_count(r in 0usize..2000) {
        let windows = mhealth_windows(&mhealth_rows(&[(4, r)]));
        let brute = (0..r).filter(|s| s % 64 == 0 && s + 128 <= r).count();
        prop_assert_eq!(windows.len(), brute);
        if r >= 128 {
            prop_assert_eq!(windows.len(), (r - 128) / 64 + 1);
        }
    }
}

fn service_minutes() -> &'static Vec<Vec<TagReading>> {
    static DATA: OnceLock<Vec<Vec<TagReading>>> = OnceLock::new();
    DATA.get_or_init(|| {
        let cfg = SimConfig {
            duration_minutes: 3,
            seed: 5,
            ..SimConfig::default()
        };
        let mut sim =
            Simulator::new(cfg, ActivityScript::constant(ActivityLabel::Walking)).unwrap();
        std::iter::from_fn(|| sim.next_minute()).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn replay_is_idempotent(chunk in 500usize..20_000, replay_chunk in 500usize..20_000) {
        let stream: Vec<TagReading> = service_minutes().concat();
        let run = |chunks: &[usize]| {
            let svc = MonitorService::new(ServiceConfig::default(), Some(forecaster().clone()), Some(classifier().clone())).unwrap();
            svc.register("p", person()).unwrap();
            for &c in chunks {
                for batch in stream.chunks(c) {
                    svc.ingest("p", batch).unwrap();
                }
            }
            svc.snapshot("p").unwrap().fingerprint()
        };
        let once = run(&[chunk]);
        prop_assert_eq!(&once, &run(&[chunk, replay_chunk]));
        prop_assert_eq!(&once, &run(&[stream.len()]));
    }
}

#[test]
fn forecast_cadence_and_snapshot_consistency() {
    let timeline = drifting_vitals(150, 3).unwrap();
    let cfg = SimConfig {
        duration_minutes: 150,
        sample_rate_hz: 5.0,
        hr_schedule: Schedule::new(
            timeline
                .samples()
                .iter()
                .map(|s| (s.minute_index, s.heart_rate_bpm.round()))
                .collect(),
        )
        .unwrap(),
        ..SimConfig::default()
    };
    let svc = MonitorService::new(
        ServiceConfig {
            sample_rate_hz: 5.0,
            ..ServiceConfig::default()
        },
        Some(forecaster().clone()),
        None,
    )
    .unwrap();
    svc.register("p", person()).unwrap();
    let mut sim = Simulator::new(cfg, ActivityScript::constant(ActivityLabel::LyingDown)).unwrap();
    while let Some(batch) = sim.next_minute() {
        svc.ingest("p", &batch).unwrap();
        let snap = svc.snapshot("p").unwrap();
        let len = snap.timeline.len();
        let expected = if len >= 75 { (len - 75) / 15 + 1 } else { 0 };
        assert_eq!(snap.forecasts_issued, expected, "len {len}");
        if let Some(f) = &snap.latest_forecast {
            assert!(len as u32 <= f.issued_at_minute + 15);
        } else {
            assert!(len < 75);
        }
    }
    assert_eq!(svc.snapshot("p").unwrap().timeline.len(), 150);
    let t: VitalsTimeline = svc.query_history("p", 0, 150).unwrap();
    assert!(t.samples().iter().all(|s| s.quality == Quality::Good));
}
