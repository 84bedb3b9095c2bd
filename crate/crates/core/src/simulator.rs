//! Deterministic synthesis of four-tag RFID telemetry.
//!
//! Signal model per sample at time `t` (seconds):
//!
//! * Chest RSSI: `baseline + resp_depth * sin(2π·φ_rr(t)) + heart_depth * g(t) + noise`
//!   where `g` is a unit-energy Gaussian pulse train centred on each heartbeat.
//! * Abdomen RSSI: `baseline + resp_depth * sin(2π·φ_rr(t)) + noise`.
//! * Limb tags: RSSI and phase follow the motion template of the scripted
//!   activity, a sinusoid with a per-label amplitude, frequency and static
//!   phase offset.
//!
//! `φ_rr` and `φ_hr` are cycle counts integrated over the piecewise-constant
//! schedules, so phase stays continuous when the rate changes between minutes.
//! Noise is drawn from a ChaCha8 stream in emission order.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::domain::{
    ActivityLabel, TagPlacement, TagReading, HEART_RATE_BOUNDS, RESPIRATION_BOUNDS,
};
use crate::error::{Error, Result};
use crate::kv::KvMap;
use crate::signal::VitalsTimeline;

/// Carrier frequency reported on every reading.
pub const CHANNEL_MHZ: f64 = 868.0;
/// Width (seconds) of one heartbeat pulse.
const PULSE_SIGMA_S: f64 = 0.1;
/// Phase noise (rad) per dB of RSSI noise.
const PHASE_NOISE_PER_DB: f64 = 0.1;
const CHEST_PHASE: f64 = 1.0;
const ABDOMEN_PHASE: f64 = 2.0;

/// Piecewise-constant rate over minutes: `(start_minute, value)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    segments: Vec<(u32, f64)>,
}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Self {
            segments: vec![(0, value)],
        }
    }

    pub fn new(segments: Vec<(u32, f64)>) -> Result<Self> {
        match segments.first() {
            None => return Err(Error::InvalidSchedule("schedule is empty".into())),
            Some(&(start, _)) if start != 0 => {
                return Err(Error::InvalidSchedule(format!(
                    "schedule starts at minute {start}, leaving a gap from 0"
                )))
            }
            _ => {}
        }
        if segments.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidSchedule(
                "schedule start minutes must be strictly increasing".into(),
            ));
        }
        Ok(Self { segments })
    }

    /// Value governing `minute`.
    pub fn at(&self, minute: u32) -> f64 {
        let idx = self.segments.partition_point(|&(start, _)| start <= minute);
        self.segments[idx.saturating_sub(1)].1
    }

    pub fn segments(&self) -> &[(u32, f64)] {
        &self.segments
    }

    fn check_bounds(&self, name: &str, (lo, hi): (f64, f64)) -> Result<()> {
        for &(start, v) in &self.segments {
            if !(lo..=hi).contains(&v) {
                return Err(Error::InvalidSchedule(format!(
                    "{name} {v} at minute {start} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, (start, v)) in self.segments.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{start}:{v}");
        }
        s
    }

    fn parse(text: &str) -> Result<Self> {
        let segments =
            text.split(',')
                .map(|part| {
                    let (start, v) = part.trim().split_once(':').ok_or_else(|| {
                        Error::parse(format!("schedule segment {part:?} lacks ':'"))
                    })?;
                    Ok((
                        start
                            .trim()
                            .parse()
                            .map_err(|_| Error::parse(format!("bad start minute {start:?}")))?,
                        v.trim()
                            .parse()
                            .map_err(|_| Error::parse(format!("bad schedule value {v:?}")))?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
        Schedule::new(segments)
    }
}

/// Scripted activity timeline: `(start_minute, label)` segments.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityScript {
    segments: Vec<(u32, ActivityLabel)>,
}

impl ActivityScript {
    pub fn constant(label: ActivityLabel) -> Self {
        Self {
            segments: vec![(0, label)],
        }
    }

    pub fn new(segments: Vec<(u32, ActivityLabel)>) -> Result<Self> {
        if segments.first().map(|s| s.0) != Some(0) {
            return Err(Error::InvalidSchedule(
                "activity script must start at minute 0".into(),
            ));
        }
        if segments.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidSchedule(
                "activity script start minutes must be strictly increasing".into(),
            ));
        }
        Ok(Self { segments })
    }

    pub fn at(&self, minute: u32) -> ActivityLabel {
        let idx = self.segments.partition_point(|&(start, _)| start <= minute);
        self.segments[idx.saturating_sub(1)].1
    }

    pub fn segments(&self) -> &[(u32, ActivityLabel)] {
        &self.segments
    }

    pub fn to_text(&self) -> String {
        self.segments
            .iter()
            .map(|(s, l)| format!("{s}:{l}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let segments =
            text.split(',')
                .map(|part| {
                    let (start, label) = part.trim().split_once(':').ok_or_else(|| {
                        Error::parse(format!("script segment {part:?} lacks ':'"))
                    })?;
                    Ok((
                        start
                            .trim()
                            .parse()
                            .map_err(|_| Error::parse(format!("bad start minute {start:?}")))?,
                        label.trim().parse()?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
        ActivityScript::new(segments)
    }
}

/// Limb motion template for one activity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionTemplate {
    pub arm_amplitude_rad: f64,
    pub ankle_amplitude_rad: f64,
    pub frequency_hz: f64,
    pub arm_offset_rad: f64,
    pub ankle_offset_rad: f64,
}

const fn tpl(arm: f64, ankle: f64, freq: f64, arm_off: f64, ankle_off: f64) -> MotionTemplate {
    MotionTemplate {
        arm_amplitude_rad: arm,
        ankle_amplitude_rad: ankle,
        frequency_hz: freq,
        arm_offset_rad: arm_off,
        ankle_offset_rad: ankle_off,
    }
}

/// Indexed by `ActivityLabel::index()`. Static postures share near-zero
/// amplitude and differ by their phase offsets.
pub const MOTION_TEMPLATES: [MotionTemplate; 10] = [
    tpl(0.02, 0.02, 0.25, 0.6, 4.0), // StandingStill
    tpl(0.50, 0.90, 0.90, 1.0, 3.0), // ClimbingStairs
    tpl(0.02, 0.02, 0.20, 1.8, 5.0), // SittingRelaxing
    tpl(0.02, 0.02, 0.20, 3.0, 1.2), // LyingDown
    tpl(0.60, 0.80, 1.00, 1.0, 3.4), // Walking
    tpl(0.80, 0.20, 0.35, 2.2, 3.6), // WaistBendsForward
    tpl(1.20, 1.40, 2.60, 1.0, 3.2), // Running
    tpl(1.30, 0.05, 0.45, 1.4, 3.8), // FrontalElevationOfArms
    tpl(0.30, 0.90, 0.55, 1.6, 2.4), // KneesBending
    tpl(1.00, 1.20, 1.70, 0.8, 2.8), // JumpFrontBack
];

pub fn motion_template(label: ActivityLabel) -> MotionTemplate {
    MOTION_TEMPLATES[label.index()]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub duration_minutes: u32,
    pub sample_rate_hz: f64,
    pub hr_schedule: Schedule,
    pub rr_schedule: Schedule,
    pub heart_mod_depth: f64,
    pub resp_mod_depth: f64,
    pub motion_mod_depth: f64,
    pub noise_sigma_db: f64,
    pub baseline_rssi_dbm: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration_minutes: 60,
            sample_rate_hz: 50.0,
            hr_schedule: Schedule::constant(72.0),
            rr_schedule: Schedule::constant(15.0),
            heart_mod_depth: 0.5,
            resp_mod_depth: 2.0,
            motion_mod_depth: 1.0,
            noise_sigma_db: 0.3,
            baseline_rssi_dbm: -55.0,
            seed: 0,
        }
    }
}

const CONFIG_KEYS: &[&str] = &[
    "duration_minutes",
    "sample_rate_hz",
    "hr_schedule",
    "rr_schedule",
    "heart_mod_depth",
    "resp_mod_depth",
    "motion_mod_depth",
    "noise_sigma_db",
    "baseline_rssi_dbm",
    "seed",
    "activity_script",
];

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.duration_minutes == 0 {
            return Err(Error::InvalidSchedule(
                "duration_minutes must be > 0".into(),
            ));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz <= 1000.0) {
            return Err(Error::InvalidSchedule(format!(
                "sample_rate_hz {} outside (0, 1000]",
                self.sample_rate_hz
            )));
        }
        if !(self.noise_sigma_db >= 0.0) {
            return Err(Error::InvalidSchedule("noise_sigma_db must be >= 0".into()));
        }
        let depths = [
            self.heart_mod_depth,
            self.resp_mod_depth,
            self.motion_mod_depth,
            self.baseline_rssi_dbm,
        ];
        if depths.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidSchedule("non-finite signal parameter".into()));
        }
        self.hr_schedule
            .check_bounds("heart rate", HEART_RATE_BOUNDS)?;
        self.rr_schedule
            .check_bounds("respiration", RESPIRATION_BOUNDS)?;
        Ok(())
    }

    pub fn samples_per_minute(&self) -> usize {
        (60.0 * self.sample_rate_hz).round() as usize
    }

    /// Readings emitted for one placement over the whole run.
    pub fn samples_per_placement(&self) -> usize {
        (self.duration_minutes as f64 * 60.0 * self.sample_rate_hz).round() as usize
    }

    /// Parses the flat key=value config format. An optional
    /// `activity_script` key carries the script in the same file.
    pub fn parse(text: &str) -> Result<(SimConfig, Option<ActivityScript>)> {
        let map = KvMap::parse(text)?;
        map.reject_unknown(CONFIG_KEYS)?;
        let d = SimConfig::default();
        let schedule = |key: &str, default: Schedule| -> Result<Schedule> {
            match map.raw(key) {
                Some(raw) => Schedule::parse(raw),
                None => Ok(default),
            }
        };
        let cfg = SimConfig {
            duration_minutes: map.get_or("duration_minutes", d.duration_minutes)?,
            sample_rate_hz: map.get_or("sample_rate_hz", d.sample_rate_hz)?,
            hr_schedule: schedule("hr_schedule", d.hr_schedule)?,
            rr_schedule: schedule("rr_schedule", d.rr_schedule)?,
            heart_mod_depth: map.get_or("heart_mod_depth", d.heart_mod_depth)?,
            resp_mod_depth: map.get_or("resp_mod_depth", d.resp_mod_depth)?,
            motion_mod_depth: map.get_or("motion_mod_depth", d.motion_mod_depth)?,
            noise_sigma_db: map.get_or("noise_sigma_db", d.noise_sigma_db)?,
            baseline_rssi_dbm: map.get_or("baseline_rssi_dbm", d.baseline_rssi_dbm)?,
            seed: map.get_or("seed", d.seed)?,
        };
        cfg.validate()?;
        let script = map
            .raw("activity_script")
            .map(ActivityScript::parse)
            .transpose()?;
        Ok((cfg, script))
    }

    pub fn to_text(&self, script: Option<&ActivityScript>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "duration_minutes={}", self.duration_minutes);
        let _ = writeln!(s, "sample_rate_hz={}", self.sample_rate_hz);
        let _ = writeln!(s, "hr_schedule={}", self.hr_schedule.to_text());
        let _ = writeln!(s, "rr_schedule={}", self.rr_schedule.to_text());
        let _ = writeln!(s, "heart_mod_depth={}", self.heart_mod_depth);
        let _ = writeln!(s, "resp_mod_depth={}", self.resp_mod_depth);
        let _ = writeln!(s, "motion_mod_depth={}", self.motion_mod_depth);
        let _ = writeln!(s, "noise_sigma_db={}", self.noise_sigma_db);
        let _ = writeln!(s, "baseline_rssi_dbm={}", self.baseline_rssi_dbm);
        let _ = writeln!(s, "seed={}", self.seed);
        if let Some(script) = script {
            let _ = writeln!(s, "activity_script={}", script.to_text());
        }
        s
    }
}

/// Scheduled (hr, rr, activity) governing `minute`.
pub fn ground_truth(
    config: &SimConfig,
    script: &ActivityScript,
    minute: u32,
) -> Result<(f64, f64, ActivityLabel)> {
    if minute >= config.duration_minutes {
        return Err(Error::OutOfRange {
            minute,
            duration: config.duration_minutes,
        });
    }
    Ok((
        config.hr_schedule.at(minute),
        config.rr_schedule.at(minute),
        script.at(minute),
    ))
}

/// Per-minute vitals with slow sinusoidal drift plus Gaussian jitter, for
/// forecaster training and evaluation without running the RF simulator.
///
/// Heart rate: `72 + 4 sin(2πt/1440) + 6 sin(2πt/240 + 1) + N(0, 1)`;
/// respiration: `15 + sin(2πt/1440 + 2) + 1.5 sin(2πt/300) + N(0, 0.4²)`.
pub fn drifting_vitals(minutes: usize, seed: u64) -> Result<VitalsTimeline> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hr = Vec::with_capacity(minutes);
    let mut rr = Vec::with_capacity(minutes);
    for m in 0..minutes {
        let t = m as f64;
        let h_noise: f64 = StandardNormal.sample(&mut rng);
        let r_noise: f64 = StandardNormal.sample(&mut rng);
        hr.push(
            72.0 + 4.0 * (TAU * t / 1440.0).sin() + 6.0 * (TAU * t / 240.0 + 1.0).sin() + h_noise,
        );
        rr.push(
            15.0 + (TAU * t / 1440.0 + 2.0).sin() + 1.5 * (TAU * t / 300.0).sin() + 0.4 * r_noise,
        );
    }
    VitalsTimeline::from_values(&hr, &rr)
}

/// Whole-run synthesis; readings interleaved by timestamp in
/// `TagPlacement::ALL` order.
pub fn simulate(config: &SimConfig, script: &ActivityScript) -> Result<Vec<TagReading>> {
    let mut sim = Simulator::new(config.clone(), script.clone())?;
    let mut out = Vec::with_capacity(config.samples_per_placement() * 4);
    while let Some(minute) = sim.next_minute() {
        out.extend(minute);
    }
    Ok(out)
}

/// Minute-at-a-time generator; concatenating its output equals [`simulate`].
pub struct Simulator {
    config: SimConfig,
    script: ActivityScript,
    rng: ChaCha8Rng,
    next_minute: u32,
    next_sample: u64,
    rr_cycles_at_minute: f64,
    hr_cycles_at_minute: f64,
}

impl Simulator {
    pub fn new(config: SimConfig, script: ActivityScript) -> Result<Self> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self {
            config,
            script,
            rng,
            next_minute: 0,
            next_sample: 0,
            rr_cycles_at_minute: 0.0,
            hr_cycles_at_minute: 0.0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn next_minute(&mut self) -> Option<Vec<TagReading>> {
        let minute = self.next_minute;
        if minute >= self.config.duration_minutes {
            return None;
        }
        let cfg = &self.config;
        let rate = cfg.sample_rate_hz;
        let hr = cfg.hr_schedule.at(minute);
        let rr = cfg.rr_schedule.at(minute);
        let template = motion_template(self.script.at(minute));
        let beat_period = 60.0 / hr;
        let pulse_norm = (PULSE_SIGMA_S * PI.sqrt() / beat_period).sqrt();
        let minute_start_s = minute as f64 * 60.0;
        let phase_sigma = cfg.noise_sigma_db * PHASE_NOISE_PER_DB;

        // Sample indices belonging to this minute: t in [60m, 60(m+1)).
        let end_sample = ((minute as u64 + 1) as f64 * 60.0 * rate).round() as u64;
        let mut out = Vec::with_capacity((end_sample - self.next_sample) as usize * 4);
        for i in self.next_sample..end_sample {
            let t = i as f64 / rate;
            let ts = (i as f64 * 1000.0 / rate).round() as i64;
            let into_minute = (t - minute_start_s) / 60.0;

            let rr_cycles = self.rr_cycles_at_minute + rr * into_minute;
            let breath = cfg.resp_mod_depth * (TAU * rr_cycles).sin();

            let hr_cycles = self.hr_cycles_at_minute + hr * into_minute;
            let frac = hr_cycles - hr_cycles.floor();
            let lag_s = frac.min(1.0 - frac) * beat_period;
            let pulse = (-lag_s * lag_s / (2.0 * PULSE_SIGMA_S * PULSE_SIGMA_S)).exp() / pulse_norm;
            let heart = cfg.heart_mod_depth * pulse;

            let swing = (TAU * template.frequency_hz * t).sin();

            for placement in TagPlacement::ALL {
                let noise: f64 = StandardNormal.sample(&mut self.rng);
                let rssi_noise = cfg.noise_sigma_db * noise;
                let (rssi, phase) = match placement {
                    TagPlacement::Chest => (
                        cfg.baseline_rssi_dbm + breath + heart + rssi_noise,
                        CHEST_PHASE,
                    ),
                    TagPlacement::Abdomen => {
                        (cfg.baseline_rssi_dbm + breath + rssi_noise, ABDOMEN_PHASE)
                    }
                    TagPlacement::LeftArm | TagPlacement::RightAnkle => {
                        let (amp, offset) = if placement == TagPlacement::LeftArm {
                            (template.arm_amplitude_rad, template.arm_offset_rad)
                        } else {
                            (template.ankle_amplitude_rad, template.ankle_offset_rad)
                        };
                        let phase_noise: f64 = StandardNormal.sample(&mut self.rng);
                        (
                            cfg.baseline_rssi_dbm + cfg.motion_mod_depth * amp * swing + rssi_noise,
                            offset + amp * swing + phase_sigma * phase_noise,
                        )
                    }
                };
                let reading = TagReading::new(placement, ts, rssi, wrap_phase(phase), CHANNEL_MHZ)
                    .expect("simulator produces finite, wrapped readings");
                out.push(reading);
            }
        }

        self.next_sample = end_sample;
        self.rr_cycles_at_minute += rr;
        self.hr_cycles_at_minute += hr;
        self.next_minute += 1;
        Some(out)
    }
}

fn wrap_phase(phase: f64) -> f64 {
    let w = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if w >= TAU {
        0.0
    } else {
        w
    }
}
