//! Loaders for the MHEALTH body-sensor logs and for plain vitals CSV files.

use std::path::{Path, PathBuf};

use crate::domain::ActivityLabel;
use crate::error::{Error, Result};
use crate::signal::{
    window_features, ActivityWindow, VitalsTimeline, WINDOW_CHANNELS, WINDOW_HOP, WINDOW_SAMPLES,
};

pub const MHEALTH_COLUMNS: usize = 24;
pub const MHEALTH_RATE_HZ: f64 = 50.0;
pub const MHEALTH_MAX_LABEL: u8 = 12;

/// Left-ankle acceleration x, y, z.
pub const ANKLE_ACCEL_COLUMNS: [usize; 3] = [5, 6, 7];
/// Right-lower-arm acceleration x, y, z.
pub const ARM_ACCEL_COLUMNS: [usize; 3] = [14, 15, 16];

/// Dataset label code to activity label. Codes 0 (null), 9 (cycling) and
/// 10 (jogging) have no counterpart.
pub const MHEALTH_LABEL_MAP: [(u8, ActivityLabel); 10] = [
    (1, ActivityLabel::StandingStill),
    (2, ActivityLabel::SittingRelaxing),
    (3, ActivityLabel::LyingDown),
    (4, ActivityLabel::Walking),
    (5, ActivityLabel::ClimbingStairs),
    (6, ActivityLabel::WaistBendsForward),
    (7, ActivityLabel::FrontalElevationOfArms),
    (8, ActivityLabel::KneesBending),
    (11, ActivityLabel::Running),
    (12, ActivityLabel::JumpFrontBack),
];

pub fn map_mhealth_label(code: u8) -> Option<ActivityLabel> {
    MHEALTH_LABEL_MAP
        .iter()
        .find(|(c, _)| *c == code)
        .map(|(_, l)| *l)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MhealthRow {
    pub sensors: [f64; MHEALTH_COLUMNS - 1],
    pub label: u8,
}

impl MhealthRow {
    /// The six window channels: arm x, y, z then ankle x, y, z.
    pub fn channels(&self) -> [f64; WINDOW_CHANNELS] {
        let s = &self.sensors;
        let [a, b, c] = ARM_ACCEL_COLUMNS;
        let [d, e, f] = ANKLE_ACCEL_COLUMNS;
        [s[a], s[b], s[c], s[d], s[e], s[f]]
    }
}

fn parse_row(line: &str, line_no: usize) -> Result<MhealthRow> {
    let malformed = |reason: String| Error::MalformedRow {
        line: line_no,
        reason,
    };
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != MHEALTH_COLUMNS {
        return Err(malformed(format!(
            "expected {MHEALTH_COLUMNS} columns, found {}",
            fields.len()
        )));
    }
    let mut sensors = [0.0; MHEALTH_COLUMNS - 1];
    for (slot, field) in sensors.iter_mut().zip(&fields) {
        *slot = field
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| malformed(format!("non-numeric field {field:?}")))?;
    }
    let raw = fields[MHEALTH_COLUMNS - 1];
    let label = raw
        .parse::<f64>()
        .ok()
        .filter(|v| v.fract() == 0.0 && (0.0..=MHEALTH_MAX_LABEL as f64).contains(v))
        .ok_or_else(|| malformed(format!("label {raw:?} outside 0..=12")))? as u8;
    Ok(MhealthRow { sensors, label })
}

/// Parses a whole log. Blank lines are skipped; line numbers are 1-based.
pub fn parse_mhealth(text: &str) -> Result<Vec<MhealthRow>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_row(l, i + 1))
        .collect()
}

/// Windows over each maximal run of consecutive rows sharing a mapped label.
/// A run of `R` rows yields `floor((R - 128) / 64) + 1` windows when
/// `R >= 128`. Windows never span two labels, so every window is pure.
pub fn mhealth_windows(rows: &[MhealthRow]) -> Vec<ActivityWindow> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let Some(label) = map_mhealth_label(rows[i].label) else {
            i += 1;
            continue;
        };
        let mut end = i + 1;
        while end < rows.len() && rows[end].label == rows[i].label {
            end += 1;
        }
        let run = &rows[i..end];
        let mut start = 0;
        while start + WINDOW_SAMPLES <= run.len() {
            let mut channels: [Vec<f64>; WINDOW_CHANNELS] = Default::default();
            for row in &run[start..start + WINDOW_SAMPLES] {
                for (ch, v) in channels.iter_mut().zip(row.channels()) {
                    ch.push(v);
                }
            }
            let row_index = (i + start) as f64;
            out.push(ActivityWindow {
                start_ms: (row_index * 1000.0 / MHEALTH_RATE_HZ).round() as i64,
                features: window_features(&channels, MHEALTH_RATE_HZ),
                truth: Some(label),
            });
            start += WINDOW_HOP;
        }
        i = end;
    }
    out
}

pub fn mhealth_path(dir: &Path, subject_id: u32) -> PathBuf {
    dir.join(format!("mHealth_subject{subject_id}.log"))
}

fn read_existing(path: &Path) -> Result<String> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    Ok(std::fs::read_to_string(path)?)
}

pub fn load_mhealth_file(path: &Path) -> Result<Vec<ActivityWindow>> {
    Ok(mhealth_windows(&parse_mhealth(&read_existing(path)?)?))
}

/// Loads `mHealth_subject<id>.log` from `dir` (or from its `MHEALTHDATASET`
/// subdirectory, the layout of the published archive).
pub fn load_mhealth(dir: &Path, subject_id: u32) -> Result<Vec<ActivityWindow>> {
    let direct = mhealth_path(dir, subject_id);
    let nested = mhealth_path(&dir.join("MHEALTHDATASET"), subject_id);
    if !direct.is_file() && nested.is_file() {
        return load_mhealth_file(&nested);
    }
    load_mhealth_file(&direct)
}

pub fn load_vitals_csv(path: &Path) -> Result<VitalsTimeline> {
    VitalsTimeline::from_csv(&read_existing(path)?)
}
