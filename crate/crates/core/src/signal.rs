//! Raw tag streams to per-minute vitals, forecast instances and activity
//! feature windows.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::domain::{
    ActivityLabel, Demographics, Quality, TagPlacement, TagReading, VitalSample,
    FORECAST_HORIZON_STEPS, FORECAST_STEP_MINUTES,
};
use crate::error::{Error, Result};
use crate::simulator::ActivityScript;

pub const MINUTE_MS: i64 = 60_000;
/// Fraction of a minute's expected samples required for extraction.
pub const MIN_COVERAGE: f64 = 0.8;
pub const HEART_BAND_HZ: (f64, f64) = (0.8, 2.5);
pub const RESPIRATION_BAND_HZ: (f64, f64) = (0.1, 0.5);
const GOOD_PEAK_RATIO: f64 = 3.0;
const DEGRADED_PEAK_RATIO: f64 = 1.5;
/// Peak amplitudes (dB) below this count as "no signal".
const FLAT_AMPLITUDE_DB: f64 = 1e-9;

pub const HISTORY_MINUTES: usize = 75;
/// Minutes from the first history sample to the last target.
pub const INSTANCE_SPAN_MINUTES: usize = HISTORY_MINUTES + HORIZON_MINUTES;
pub const HORIZON_MINUTES: usize = FORECAST_STEP_MINUTES as usize * FORECAST_HORIZON_STEPS;
pub const FORECAST_FEATURES: usize = 2 * HISTORY_MINUTES + 4;
pub const FORECAST_TARGETS: usize = 2 * FORECAST_HORIZON_STEPS;

pub const WINDOW_SAMPLES: usize = 128;
pub const WINDOW_HOP: usize = 64;
pub const CHANNELS_PER_TAG: usize = 3;
pub const WINDOW_CHANNELS: usize = 2 * CHANNELS_PER_TAG;
pub const STATS_PER_CHANNEL: usize = 4;
pub const ACTIVITY_FEATURES: usize = WINDOW_CHANNELS * STATS_PER_CHANNEL;

/// One-sided magnitude spectrum `|X_k|` for `k = 0..=n/2`.
pub fn magnitude_spectrum(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..=n / 2].iter().map(|c| c.norm()).collect()
}

/// Removes the least-squares line (and therefore the mean).
pub fn detrend(signal: &mut [f64]) {
    let n = signal.len();
    if n == 0 {
        return;
    }
    let nf = n as f64;
    let x_mean = (nf - 1.0) / 2.0;
    let y_mean = signal.iter().sum::<f64>() / nf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, &y) in signal.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    for (i, y) in signal.iter_mut().enumerate() {
        *y -= y_mean + slope * (i as f64 - x_mean);
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 0 {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

/// Dominant in-band frequency of a buffer spanning `duration_s` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPeak {
    pub frequency_hz: f64,
    pub quality: Quality,
}

/// Detrends, transforms and picks the strongest bin inside `band`, refined by
/// parabolic interpolation over the neighbouring bins. Quality compares the
/// peak with the median magnitude outside the band (DC excluded).
pub fn band_peak(buffer: &[f64], duration_s: f64, band: (f64, f64)) -> BandPeak {
    let mut x = buffer.to_vec();
    detrend(&mut x);
    let spectrum = magnitude_spectrum(&x);
    let bin_hz = 1.0 / duration_s;
    let lo = ((band.0 / bin_hz).ceil() as usize).max(1);
    let hi = ((band.1 / bin_hz).floor() as usize).min(spectrum.len().saturating_sub(1));
    if spectrum.len() < 3 || lo > hi {
        return BandPeak {
            frequency_hz: f64::NAN,
            quality: Quality::Bad,
        };
    }
    let mut peak = lo;
    for k in lo..=hi {
        if spectrum[k] > spectrum[peak] {
            peak = k;
        }
    }
    let peak_mag = spectrum[peak];
    let amplitude = 2.0 * peak_mag / buffer.len() as f64;
    if !(amplitude > FLAT_AMPLITUDE_DB) {
        return BandPeak {
            frequency_hz: f64::NAN,
            quality: Quality::Bad,
        };
    }
    let out_of_band: Vec<f64> = spectrum
        .iter()
        .enumerate()
        .skip(1)
        .filter(|&(k, _)| k < lo || k > hi)
        .map(|(_, &m)| m)
        .collect();
    let floor = median(out_of_band);
    let quality = if peak_mag >= GOOD_PEAK_RATIO * floor {
        Quality::Good
    } else if peak_mag >= DEGRADED_PEAK_RATIO * floor {
        Quality::Degraded
    } else {
        Quality::Bad
    };

    let mut offset = 0.0;
    if peak > 0 && peak + 1 < spectrum.len() {
        let (a, b, c) = (spectrum[peak - 1], spectrum[peak], spectrum[peak + 1]);
        let denom = a - 2.0 * b + c;
        if denom != 0.0 {
            offset = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    BandPeak {
        frequency_hz: (peak as f64 + offset) * bin_hz,
        quality,
    }
}

/// Heart rate from the chest buffer and respiration from the abdomen buffer,
/// both covering one minute. The worse of the two qualities wins.
pub fn vitals_from_buffers(minute: u32, chest: &[f64], abdomen: &[f64]) -> VitalSample {
    let heart = band_peak(chest, 60.0, HEART_BAND_HZ);
    let resp = band_peak(abdomen, 60.0, RESPIRATION_BAND_HZ);
    let quality = heart.quality.max(resp.quality);
    if quality == Quality::Bad {
        return VitalSample::bad(minute);
    }
    VitalSample {
        minute_index: minute,
        heart_rate_bpm: 60.0 * heart.frequency_hz,
        respiration_bpm: 60.0 * resp.frequency_hz,
        quality,
    }
}

fn minute_of(ts: i64) -> i64 {
    ts.div_euclid(MINUTE_MS)
}

fn required_samples(sample_rate_hz: f64) -> usize {
    (MIN_COVERAGE * 60.0 * sample_rate_hz).ceil() as usize
}

/// Vitals for one minute of the stream.
pub fn extract_vitals(
    stream: &[TagReading],
    minute: u32,
    sample_rate_hz: f64,
) -> Result<VitalSample> {
    let mut chest = Vec::new();
    let mut abdomen = Vec::new();
    for r in stream {
        if minute_of(r.timestamp_ms()) != minute as i64 {
            continue;
        }
        match r.placement() {
            TagPlacement::Chest => chest.push(r.rssi_dbm()),
            TagPlacement::Abdomen => abdomen.push(r.rssi_dbm()),
            _ => {}
        }
    }
    extract_from_buffers(minute, &chest, &abdomen, sample_rate_hz)
}

pub fn extract_from_buffers(
    minute: u32,
    chest: &[f64],
    abdomen: &[f64],
    sample_rate_hz: f64,
) -> Result<VitalSample> {
    let needed = required_samples(sample_rate_hz);
    for (what, buf) in [("chest", chest), ("abdomen", abdomen)] {
        if buf.len() < needed {
            return Err(Error::InsufficientSamples {
                what: format!("{what} minute {minute}"),
                found: buf.len(),
                needed,
            });
        }
    }
    Ok(vitals_from_buffers(minute, chest, abdomen))
}

/// Contiguous per-minute vitals starting at minute 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VitalsTimeline {
    samples: Vec<VitalSample>,
}

pub const TIMELINE_CSV_HEADER: &str = "minute,heart_rate,respiration,quality";

impl VitalsTimeline {
    pub fn new(samples: Vec<VitalSample>) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            if s.minute_index as usize != i {
                return Err(Error::NonContiguousMinutes {
                    expected: i as i64,
                    found: s.minute_index as i64,
                });
            }
        }
        Ok(Self { samples })
    }

    /// Builds a fully `Good` timeline from raw value series.
    pub fn from_values(heart_rate: &[f64], respiration: &[f64]) -> Result<Self> {
        if heart_rate.len() != respiration.len() {
            return Err(Error::DimensionMismatch {
                expected: heart_rate.len(),
                actual: respiration.len(),
            });
        }
        Ok(Self {
            samples: heart_rate
                .iter()
                .zip(respiration)
                .enumerate()
                .map(|(i, (&hr, &rr))| VitalSample {
                    minute_index: i as u32,
                    heart_rate_bpm: hr,
                    respiration_bpm: rr,
                    quality: Quality::Good,
                })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[VitalSample] {
        &self.samples
    }

    pub fn last(&self) -> Option<&VitalSample> {
        self.samples.last()
    }

    /// Appends the next minute; the sample's index must equal `len()`.
    pub fn push(&mut self, sample: VitalSample) -> Result<()> {
        if sample.minute_index as usize != self.samples.len() {
            return Err(Error::NonContiguousMinutes {
                expected: self.samples.len() as i64,
                found: sample.minute_index as i64,
            });
        }
        self.samples.push(sample);
        Ok(())
    }

    /// Minutes `[from, to)`, clipped to the timeline end.
    pub fn slice(&self, from: usize, to: usize) -> Result<VitalsTimeline> {
        if from > to {
            return Err(Error::BadRange { from, to });
        }
        let end = to.min(self.samples.len());
        let start = from.min(end);
        Ok(VitalsTimeline {
            samples: self.samples[start..end].to_vec(),
        })
    }

    /// Rebases `[from, to)` so the first minute becomes 0.
    pub fn window(&self, from: usize, to: usize) -> Result<VitalsTimeline> {
        let mut s = self.slice(from, to)?.samples;
        for (i, v) in s.iter_mut().enumerate() {
            v.minute_index = i as u32;
        }
        Ok(VitalsTimeline { samples: s })
    }

    pub fn heart_rates(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.heart_rate_bpm).collect()
    }

    pub fn respiration_rates(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.respiration_bpm).collect()
    }

    /// Replaces interior `Bad` runs with linear interpolation between the
    /// nearest usable neighbours, flagged `Degraded`. Leading and trailing
    /// `Bad` runs stay `Bad`.
    pub fn fill_gaps(&mut self) {
        let n = self.samples.len();
        let mut i = 0;
        while i < n {
            if self.samples[i].quality != Quality::Bad {
                i += 1;
                continue;
            }
            let start = i;
            while i < n && self.samples[i].quality == Quality::Bad {
                i += 1;
            }
            if start == 0 || i == n {
                continue;
            }
            let left = self.samples[start - 1];
            let right = self.samples[i];
            let span = (i - (start - 1)) as f64;
            for j in start..i {
                let w = (j - (start - 1)) as f64 / span;
                let s = &mut self.samples[j];
                s.heart_rate_bpm =
                    left.heart_rate_bpm + w * (right.heart_rate_bpm - left.heart_rate_bpm);
                s.respiration_bpm =
                    left.respiration_bpm + w * (right.respiration_bpm - left.respiration_bpm);
                s.quality = Quality::Degraded;
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TIMELINE_CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let fmt = |v: f64| {
                if v.is_nan() {
                    String::new()
                } else {
                    v.to_string()
                }
            };
            let _ = writeln!(
                out,
                "{},{},{},{}",
                s.minute_index,
                fmt(s.heart_rate_bpm),
                fmt(s.respiration_bpm),
                s.quality
            );
        }
        out
    }

    /// Parses the timeline CSV, enforcing the exact header and contiguous
    /// minutes starting at 0.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let header = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
        if header != TIMELINE_CSV_HEADER {
            return Err(Error::HeaderMismatch {
                found: header.to_string(),
                expected: TIMELINE_CSV_HEADER.to_string(),
            });
        }
        let mut samples = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = i + 1;
            let malformed = |reason: String| Error::MalformedRow { line: row, reason };
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(malformed(format!("expected 4 columns, got {}", cols.len())));
            }
            let minute: i64 = cols[0]
                .parse()
                .map_err(|_| malformed(format!("invalid minute {:?}", cols[0])))?;
            let expected = samples.len() as i64;
            if minute != expected {
                return Err(Error::NonContiguousMinutes {
                    expected,
                    found: minute,
                });
            }
            let value = |s: &str| -> Result<f64> {
                if s.is_empty() {
                    Ok(f64::NAN)
                } else {
                    s.parse()
                        .map_err(|_| malformed(format!("invalid number {s:?}")))
                }
            };
            let quality: Quality = cols[3]
                .parse()
                .map_err(|e: Error| malformed(e.to_string()))?;
            let sample = VitalSample {
                minute_index: minute as u32,
                heart_rate_bpm: value(cols[1])?,
                respiration_bpm: value(cols[2])?,
                quality,
            };
            if quality.is_usable()
                && !(sample.heart_rate_bpm.is_finite() && sample.respiration_bpm.is_finite())
            {
                return Err(malformed("usable sample with missing vitals".into()));
            }
            samples.push(sample);
        }
        Ok(Self { samples })
    }
}

/// Per-minute extraction over a whole stream, followed by gap filling.
/// Minutes below the coverage floor become `Bad`; a trailing partial minute is
/// dropped.
pub fn build_timeline(stream: &[TagReading], sample_rate_hz: f64) -> Result<VitalsTimeline> {
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    let mut buckets: BTreeMap<i64, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut last_minute = 0;
    for r in stream {
        let m = minute_of(r.timestamp_ms());
        if m < 0 {
            return Err(Error::InvalidReading(format!(
                "negative timestamp {}",
                r.timestamp_ms()
            )));
        }
        last_minute = last_minute.max(m);
        let entry = buckets.entry(m).or_default();
        match r.placement() {
            TagPlacement::Chest => entry.0.push(r.rssi_dbm()),
            TagPlacement::Abdomen => entry.1.push(r.rssi_dbm()),
            _ => {}
        }
    }
    let empty = (Vec::new(), Vec::new());
    let mut samples = Vec::with_capacity(last_minute as usize + 1);
    for m in 0..=last_minute {
        let (chest, abdomen) = buckets.get(&m).unwrap_or(&empty);
        match extract_from_buffers(m as u32, chest, abdomen, sample_rate_hz) {
            Ok(s) => samples.push(s),
            Err(Error::InsufficientSamples { .. }) if m == last_minute => {}
            Err(Error::InsufficientSamples { .. }) => samples.push(VitalSample::bad(m as u32)),
            Err(e) => return Err(e),
        }
    }
    let mut timeline = VitalsTimeline::new(samples)?;
    timeline.fill_gaps();
    Ok(timeline)
}

/// History features and multi-horizon targets anchored at `anchor_minute`.
///
/// Feature layout: `[0, 75)` heart rate history, `[75, 150)` respiration
/// history, `[150, 154)` age, sex, height, weight. Targets: 12 heart rate
/// values then 12 respiration values, each the value at the last minute of a
/// 15-minute step.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastInstance {
    pub anchor_minute: usize,
    pub features: Vec<f64>,
    pub targets: Vec<f64>,
}

/// Number of instances a timeline of `len` minutes yields.
pub fn instance_count(len: usize) -> usize {
    if len < INSTANCE_SPAN_MINUTES {
        0
    } else {
        (len - INSTANCE_SPAN_MINUTES) / FORECAST_STEP_MINUTES as usize + 1
    }
}

/// Feature vector for a 75-minute history ending just before the anchor.
pub fn history_features(heart_rate: &[f64], respiration: &[f64], d: &Demographics) -> Vec<f64> {
    let mut f = Vec::with_capacity(FORECAST_FEATURES);
    f.extend_from_slice(heart_rate);
    f.extend_from_slice(respiration);
    f.extend_from_slice(&d.features());
    f
}

/// One instance per anchor `a = 75, 90, ...` with `a + 180 <= len`. Anchors
/// whose span touches a `Bad` minute are skipped.
pub fn segment_instances(t: &VitalsTimeline, d: &Demographics) -> Vec<ForecastInstance> {
    let hr = t.heart_rates();
    let rr = t.respiration_rates();
    let step = FORECAST_STEP_MINUTES as usize;
    (0..instance_count(t.len()))
        .map(|j| HISTORY_MINUTES + j * step)
        .filter(|&a| {
            t.samples()[a - HISTORY_MINUTES..a + HORIZON_MINUTES]
                .iter()
                .all(|s| s.quality.is_usable())
        })
        .map(|a| {
            let features =
                history_features(&hr[a - HISTORY_MINUTES..a], &rr[a - HISTORY_MINUTES..a], d);
            let target_minutes = (1..=FORECAST_HORIZON_STEPS).map(|k| a + k * step - 1);
            let targets = target_minutes
                .clone()
                .map(|m| hr[m])
                .chain(target_minutes.map(|m| rr[m]))
                .collect();
            ForecastInstance {
                anchor_minute: a,
                features,
                targets,
            }
        })
        .collect()
}

/// Statistics of the two limb tags over one 128-sample window.
///
/// Layout: for tag in (LeftArm, RightAnkle), for channel in (RSSI, cos phase,
/// sin phase), the four statistics (mean, std, energy, dominant frequency).
/// Phase enters through its cosine and sine so wrap-around at 2π does not
/// register as motion.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityWindow {
    pub start_ms: i64,
    pub features: [f64; ACTIVITY_FEATURES],
    pub truth: Option<ActivityLabel>,
}

/// Mean, population std, energy after mean removal and dominant frequency.
pub fn channel_stats(x: &[f64], sample_rate_hz: f64) -> [f64; STATS_PER_CHANNEL] {
    let n = x.len() as f64;
    // Shifting by the first sample keeps a constant channel exactly zero.
    let origin = x[0];
    let shifted_mean = x.iter().map(|v| v - origin).sum::<f64>() / n;
    let centered: Vec<f64> = x.iter().map(|v| (v - origin) - shifted_mean).collect();
    let energy: f64 = centered.iter().map(|v| v * v).sum();
    let std = (energy / n).sqrt();
    let spectrum = magnitude_spectrum(&centered);
    let mut dominant = 0.0;
    let mut best = 1e-12;
    for (k, &m) in spectrum.iter().enumerate().skip(1) {
        if m > best {
            best = m;
            dominant = k as f64 * sample_rate_hz / x.len() as f64;
        }
    }
    [origin + shifted_mean, std, energy, dominant]
}

/// Features from six equally long channels (arm RSSI, arm cos, arm sin, ankle
/// RSSI, ankle cos, ankle sin).
pub fn window_features(
    channels: &[Vec<f64>; WINDOW_CHANNELS],
    sample_rate_hz: f64,
) -> [f64; ACTIVITY_FEATURES] {
    let mut out = [0.0; ACTIVITY_FEATURES];
    for (c, ch) in channels.iter().enumerate() {
        out[c * STATS_PER_CHANNEL..(c + 1) * STATS_PER_CHANNEL]
            .copy_from_slice(&channel_stats(ch, sample_rate_hz));
    }
    out
}

/// Per-tag limb channels `(timestamps, rssi, cos phase, sin phase)`.
#[derive(Debug, Default, Clone)]
pub struct LimbSeries {
    pub timestamps: Vec<i64>,
    pub rssi: Vec<f64>,
    pub cos_phase: Vec<f64>,
    pub sin_phase: Vec<f64>,
}

impl LimbSeries {
    pub fn push(&mut self, r: &TagReading) {
        self.timestamps.push(r.timestamp_ms());
        self.rssi.push(r.rssi_dbm());
        self.cos_phase.push(r.phase_rad().cos());
        self.sin_phase.push(r.phase_rad().sin());
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn drain_front(&mut self, n: usize) {
        let n = n.min(self.len());
        self.timestamps.drain(..n);
        self.rssi.drain(..n);
        self.cos_phase.drain(..n);
        self.sin_phase.drain(..n);
    }
}

pub fn limb_series(stream: &[TagReading]) -> [LimbSeries; 2] {
    let mut out = [LimbSeries::default(), LimbSeries::default()];
    for r in stream {
        match r.placement() {
            TagPlacement::LeftArm => out[0].push(r),
            TagPlacement::RightAnkle => out[1].push(r),
            _ => {}
        }
    }
    out
}

/// Window starting at sample `start` of both limb series.
pub fn window_at(
    limbs: &[LimbSeries; 2],
    start: usize,
    sample_rate_hz: f64,
) -> Result<ActivityWindow> {
    for (tag, s) in TagPlacement::LIMBS.iter().zip(limbs) {
        if s.len() < start + WINDOW_SAMPLES {
            return Err(Error::InsufficientSamples {
                what: format!("{tag} window"),
                found: s.len().saturating_sub(start),
                needed: WINDOW_SAMPLES,
            });
        }
    }
    let r = start..start + WINDOW_SAMPLES;
    let [arm, ankle] = limbs;
    let channels = [
        arm.rssi[r.clone()].to_vec(),
        arm.cos_phase[r.clone()].to_vec(),
        arm.sin_phase[r.clone()].to_vec(),
        ankle.rssi[r.clone()].to_vec(),
        ankle.cos_phase[r.clone()].to_vec(),
        ankle.sin_phase[r].to_vec(),
    ];
    Ok(ActivityWindow {
        start_ms: arm.timestamps[start],
        features: window_features(&channels, sample_rate_hz),
        truth: None,
    })
}

/// The window whose first limb samples are the first at or after `start_ms`.
pub fn activity_window(
    stream: &[TagReading],
    start_ms: i64,
    sample_rate_hz: f64,
) -> Result<ActivityWindow> {
    let after: Vec<TagReading> = stream
        .iter()
        .filter(|r| r.timestamp_ms() >= start_ms)
        .copied()
        .collect();
    window_at(&limb_series(&after), 0, sample_rate_hz)
}

/// All windows of 128 samples at hop 64 over the limb tags.
pub fn activity_windows(stream: &[TagReading], sample_rate_hz: f64) -> Vec<ActivityWindow> {
    let limbs = limb_series(stream);
    let n = limbs[0].len().min(limbs[1].len());
    if n < WINDOW_SAMPLES {
        return Vec::new();
    }
    (0..=(n - WINDOW_SAMPLES) / WINDOW_HOP)
        .map(|j| window_at(&limbs, j * WINDOW_HOP, sample_rate_hz).expect("bounds checked"))
        .collect()
}

/// Labels windows that lie entirely inside one script segment; windows
/// straddling a change keep `truth = None`.
pub fn label_from_script(
    windows: &mut [ActivityWindow],
    script: &ActivityScript,
    sample_rate_hz: f64,
) {
    let span_ms = ((WINDOW_SAMPLES - 1) as f64 * 1000.0 / sample_rate_hz).round() as i64;
    for w in windows {
        let first = script.at(minute_of(w.start_ms) as u32);
        let last = script.at(minute_of(w.start_ms + span_ms) as u32);
        w.truth = (first == last).then_some(first);
    }
}
