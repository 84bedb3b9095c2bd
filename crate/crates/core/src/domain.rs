//! Shared vocabulary: tag readings, vitals, demographics, activity labels and
//! forecast series.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kv::{KvMap, KvRecord, KvWriter};

/// Plausible heart rate range (bpm) for a non-`Bad` sample.
pub const HEART_RATE_BOUNDS: (f64, f64) = (20.0, 250.0);
/// Plausible respiration range (breaths/min) for a non-`Bad` sample.
pub const RESPIRATION_BOUNDS: (f64, f64) = (4.0, 60.0);

/// Minutes between consecutive forecast points.
pub const FORECAST_STEP_MINUTES: u32 = 15;
/// Number of forecast points per vital (3 hours).
pub const FORECAST_HORIZON_STEPS: usize = 12;

/// Body location of one passive tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TagPlacement {
    /// Heartbeat source.
    Chest,
    /// Respiration source.
    Abdomen,
    LeftArm,
    RightAnkle,
}

impl TagPlacement {
    pub const ALL: [TagPlacement; 4] = [
        TagPlacement::Chest,
        TagPlacement::Abdomen,
        TagPlacement::LeftArm,
        TagPlacement::RightAnkle,
    ];

    /// Tags whose phase carries limb motion.
    pub const LIMBS: [TagPlacement; 2] = [TagPlacement::LeftArm, TagPlacement::RightAnkle];

    pub fn as_str(self) -> &'static str {
        match self {
            TagPlacement::Chest => "Chest",
            TagPlacement::Abdomen => "Abdomen",
            TagPlacement::LeftArm => "LeftArm",
            TagPlacement::RightAnkle => "RightAnkle",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TagPlacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TagPlacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TagPlacement::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::parse(format!("unknown tag placement {s:?}")))
    }
}

/// One RSSI/phase sample from one tag. Construction validates the phase range,
/// so an instance always satisfies `0 <= phase_rad < 2π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TagReading {
    placement: TagPlacement,
    timestamp_ms: i64,
    rssi_dbm: f64,
    phase_rad: f64,
    channel_mhz: f64,
}

impl TagReading {
    pub fn new(
        placement: TagPlacement,
        timestamp_ms: i64,
        rssi_dbm: f64,
        phase_rad: f64,
        channel_mhz: f64,
    ) -> Result<Self> {
        if !(0.0..TAU).contains(&phase_rad) {
            return Err(Error::InvalidReading(format!(
                "phase {phase_rad} outside [0, 2π)"
            )));
        }
        if !rssi_dbm.is_finite() || !channel_mhz.is_finite() {
            return Err(Error::InvalidReading("non-finite rssi or channel".into()));
        }
        Ok(Self {
            placement,
            timestamp_ms,
            rssi_dbm,
            phase_rad,
            channel_mhz,
        })
    }

    pub fn placement(&self) -> TagPlacement {
        self.placement
    }
    pub fn timestamp_ms(&self) -> i64 {
        self.timestamp_ms
    }
    pub fn rssi_dbm(&self) -> f64 {
        self.rssi_dbm
    }
    pub fn phase_rad(&self) -> f64 {
        self.phase_rad
    }
    pub fn channel_mhz(&self) -> f64 {
        self.channel_mhz
    }

    /// Stream record form: `timestamp_ms placement rssi_dbm phase_rad channel_mhz`.
    pub fn to_record(&self) -> String {
        format!(
            "{} {} {} {} {}",
            self.timestamp_ms, self.placement, self.rssi_dbm, self.phase_rad, self.channel_mhz
        )
    }

    pub fn from_record(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::parse(format!(
                "expected 5 fields in reading record, got {}",
                fields.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::parse(format!("invalid number {s:?}")))
        };
        let ts = fields[0]
            .parse()
            .map_err(|_| Error::parse(format!("invalid timestamp {:?}", fields[0])))?;
        TagReading::new(
            fields[1].parse()?,
            ts,
            num(fields[2])?,
            num(fields[3])?,
            num(fields[4])?,
        )
    }
}

/// Parses newline-delimited reading records, skipping blank lines.
pub fn parse_readings(text: &str) -> Result<Vec<TagReading>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            TagReading::from_record(l).map_err(|e| Error::MalformedRow {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn format_readings(readings: &[TagReading]) -> String {
    let mut out = String::with_capacity(readings.len() * 48);
    for r in readings {
        out.push_str(&r.to_record());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quality {
    Good,
    Degraded,
    Bad,
}

impl Quality {
    pub fn as_str(self) -> &'static str {
        match self {
            Quality::Good => "Good",
            Quality::Degraded => "Degraded",
            Quality::Bad => "Bad",
        }
    }

    pub fn is_usable(self) -> bool {
        self != Quality::Bad
    }
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Quality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Good" => Ok(Quality::Good),
            "Degraded" => Ok(Quality::Degraded),
            "Bad" => Ok(Quality::Bad),
            _ => Err(Error::parse(format!("unknown quality {s:?}"))),
        }
    }
}

/// Per-minute vitals. `Bad` samples carry NaN in both vitals ("unset").
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VitalSample {
    pub minute_index: u32,
    pub heart_rate_bpm: f64,
    pub respiration_bpm: f64,
    pub quality: Quality,
}

impl VitalSample {
    pub fn bad(minute_index: u32) -> Self {
        Self {
            minute_index,
            heart_rate_bpm: f64::NAN,
            respiration_bpm: f64::NAN,
            quality: Quality::Bad,
        }
    }

    /// True when the sample honours the plausibility bounds for its quality.
    pub fn is_plausible(&self) -> bool {
        if self.quality == Quality::Bad {
            return true;
        }
        let (hl, hh) = HEART_RATE_BOUNDS;
        let (rl, rh) = RESPIRATION_BOUNDS;
        (hl..=hh).contains(&self.heart_rate_bpm) && (rl..=rh).contains(&self.respiration_bpm)
    }
}

fn fmt_opt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn parse_opt(map: &KvMap, key: &str) -> Result<f64> {
    match map.raw(key) {
        Some("") => Ok(f64::NAN),
        _ => map.get(key),
    }
}

impl KvRecord for VitalSample {
    fn write_kv(&self, out: &mut KvWriter) {
        out.field("minute_index", self.minute_index)
            .field("heart_rate_bpm", fmt_opt(self.heart_rate_bpm))
            .field("respiration_bpm", fmt_opt(self.respiration_bpm))
            .field("quality", self.quality);
    }

    fn read_kv(map: &KvMap) -> Result<Self> {
        Ok(Self {
            minute_index: map.get("minute_index")?,
            heart_rate_bpm: parse_opt(map, "heart_rate_bpm")?,
            respiration_bpm: parse_opt(map, "respiration_bpm")?,
            quality: map.get("quality")?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sex {
    Female = 0,
    Male = 1,
}

impl Sex {
    /// Numeric model feature.
    pub fn code(self) -> f64 {
        self as u8 as f64
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sex::Female => "Female",
            Sex::Male => "Male",
        })
    }
}

impl FromStr for Sex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Female" | "0" => Ok(Sex::Female),
            "Male" | "1" => Ok(Sex::Male),
            _ => Err(Error::parse(format!("unknown sex {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Demographics {
    pub age_years: u32,
    pub sex: Sex,
    pub height_cm: f64,
    pub weight_kg: f64,
}

impl Demographics {
    pub fn validate(&self) -> Result<()> {
        if self.age_years > 120 {
            return Err(Error::InvalidDemographics(format!(
                "age {} outside [0, 120]",
                self.age_years
            )));
        }
        if !(self.height_cm.is_finite() && self.height_cm > 0.0) {
            return Err(Error::NonPositiveHeight(self.height_cm));
        }
        if !(self.weight_kg.is_finite() && self.weight_kg > 0.0) {
            return Err(Error::InvalidDemographics(format!(
                "weight {} must be positive",
                self.weight_kg
            )));
        }
        Ok(())
    }

    /// Model features in fixed order: age, sex, height, weight.
    pub fn features(&self) -> [f64; 4] {
        [
            self.age_years as f64,
            self.sex.code(),
            self.height_cm,
            self.weight_kg,
        ]
    }
}

impl KvRecord for Demographics {
    fn write_kv(&self, out: &mut KvWriter) {
        out.field("age_years", self.age_years)
            .field("sex", self.sex)
            .field("height_cm", self.height_cm)
            .field("weight_kg", self.weight_kg);
    }

    fn read_kv(map: &KvMap) -> Result<Self> {
        let d = Self {
            age_years: map.get("age_years")?,
            sex: map.get("sex")?,
            height_cm: map.get("height_cm")?,
            weight_kg: map.get("weight_kg")?,
        };
        d.validate()?;
        Ok(d)
    }
}

/// Body mass index in kg/m².
pub fn bmi(d: &Demographics) -> Result<f64> {
    if !(d.height_cm > 0.0) {
        return Err(Error::NonPositiveHeight(d.height_cm));
    }
    let metres = d.height_cm / 100.0;
    Ok(d.weight_kg / (metres * metres))
}

/// The ten recognised physical activities. Discriminants are the stable
/// model output indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActivityLabel {
    StandingStill = 0,
    ClimbingStairs = 1,
    SittingRelaxing = 2,
    LyingDown = 3,
    Walking = 4,
    WaistBendsForward = 5,
    Running = 6,
    FrontalElevationOfArms = 7,
    KneesBending = 8,
    JumpFrontBack = 9,
}

pub const NUM_ACTIVITIES: usize = 10;

impl ActivityLabel {
    pub const ALL: [ActivityLabel; NUM_ACTIVITIES] = [
        ActivityLabel::StandingStill,
        ActivityLabel::ClimbingStairs,
        ActivityLabel::SittingRelaxing,
        ActivityLabel::LyingDown,
        ActivityLabel::Walking,
        ActivityLabel::WaistBendsForward,
        ActivityLabel::Running,
        ActivityLabel::FrontalElevationOfArms,
        ActivityLabel::KneesBending,
        ActivityLabel::JumpFrontBack,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Result<Self> {
        Self::ALL
            .get(index)
            .copied()
            .ok_or(Error::UnknownIndex(index))
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivityLabel::StandingStill => "StandingStill",
            ActivityLabel::ClimbingStairs => "ClimbingStairs",
            ActivityLabel::SittingRelaxing => "SittingRelaxing",
            ActivityLabel::LyingDown => "LyingDown",
            ActivityLabel::Walking => "Walking",
            ActivityLabel::WaistBendsForward => "WaistBendsForward",
            ActivityLabel::Running => "Running",
            ActivityLabel::FrontalElevationOfArms => "FrontalElevationOfArms",
            ActivityLabel::KneesBending => "KneesBending",
            ActivityLabel::JumpFrontBack => "JumpFrontBack",
        }
    }
}

pub fn label_index(label: ActivityLabel) -> usize {
    label.index()
}

pub fn label_from_index(index: usize) -> Result<ActivityLabel> {
    ActivityLabel::from_index(index)
}

impl fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivityLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::parse(format!("unknown activity label {s:?}")))
    }
}

/// Independent per-label sigmoid outputs; entries need not sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityProbabilities(pub [f64; NUM_ACTIVITIES]);

impl ActivityProbabilities {
    pub fn new(probs: [f64; NUM_ACTIVITIES]) -> Result<Self> {
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::parse("activity probability outside [0, 1]"));
        }
        Ok(Self(probs))
    }

    pub fn get(&self, label: ActivityLabel) -> f64 {
        self.0[label.index()]
    }

    /// Highest-probability label; the lowest index wins ties.
    pub fn argmax(&self) -> ActivityLabel {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = i;
            }
        }
        ActivityLabel::ALL[best]
    }
}

/// Three-hour block forecast of both vitals at 15-minute steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSeries {
    pub issued_at_minute: u32,
    pub heart_rate: [f64; FORECAST_HORIZON_STEPS],
    pub respiration: [f64; FORECAST_HORIZON_STEPS],
    /// Set when any raw model output was pulled into the plausibility bounds.
    pub clamped: bool,
}

impl ForecastSeries {
    pub fn step_minutes(&self) -> u32 {
        FORECAST_STEP_MINUTES
    }

    pub fn horizon_steps(&self) -> usize {
        FORECAST_HORIZON_STEPS
    }

    /// Absolute minute index the `step`-th point (0-based) refers to.
    pub fn target_minute(&self, step: usize) -> u32 {
        self.issued_at_minute + (step as u32 + 1) * FORECAST_STEP_MINUTES - 1
    }
}

fn to_horizon(values: Vec<f64>, key: &str) -> Result<[f64; FORECAST_HORIZON_STEPS]> {
    values.try_into().map_err(|v: Vec<f64>| {
        Error::parse(format!(
            "{key} has {} values, expected {FORECAST_HORIZON_STEPS}",
            v.len()
        ))
    })
}

impl KvRecord for ForecastSeries {
    fn write_kv(&self, out: &mut KvWriter) {
        out.field("issued_at_minute", self.issued_at_minute)
            .field("step_minutes", FORECAST_STEP_MINUTES)
            .field("horizon_steps", FORECAST_HORIZON_STEPS)
            .list("heart_rate", self.heart_rate)
            .list("respiration", self.respiration)
            .field("clamped", self.clamped);
    }

    fn read_kv(map: &KvMap) -> Result<Self> {
        let step: u32 = map.get("step_minutes")?;
        let horizon: usize = map.get("horizon_steps")?;
        if step != FORECAST_STEP_MINUTES || horizon != FORECAST_HORIZON_STEPS {
            return Err(Error::parse("unsupported forecast step/horizon"));
        }
        Ok(Self {
            issued_at_minute: map.get("issued_at_minute")?,
            heart_rate: to_horizon(map.get_list("heart_rate")?, "heart_rate")?,
            respiration: to_horizon(map.get_list("respiration")?, "respiration")?,
            clamped: map.get_or("clamped", false)?,
        })
    }
}
