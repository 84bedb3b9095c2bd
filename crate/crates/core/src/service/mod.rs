//! Per-patient live monitoring: ingestion with watermarks, minute vitals,
//! periodic forecasts, continuous activity decisions and snapshot queries.

mod http;

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

pub use http::{router, serve, status_for};

use crate::activity::{ActivityDecision, ActivityModel};
use crate::domain::{
    parse_readings, Demographics, ForecastSeries, TagPlacement, TagReading, VitalSample,
    FORECAST_STEP_MINUTES,
};
use crate::error::{Error, Result};
use crate::forecast::ForecastModel;
use crate::kv::KvRecord;
use crate::signal::{
    extract_from_buffers, window_at, LimbSeries, VitalsTimeline, HISTORY_MINUTES, MINUTE_MS,
    WINDOW_HOP, WINDOW_SAMPLES,
};

/// Readings further than this many minutes past the open minute are refused.
pub const MAX_MINUTE_JUMP: u32 = 24 * 60;
pub const MAX_PATIENT_ID_LEN: usize = 64;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub sample_rate_hz: f64,
    /// Directory for per-patient append-only event logs.
    pub event_log_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 50.0,
            event_log_dir: None,
        }
    }
}

/// Point-in-time view of one patient published after every ingest batch.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub patient_id: String,
    pub demographics: Demographics,
    pub timeline: VitalsTimeline,
    pub latest_forecast: Option<ForecastSeries>,
    pub latest_activity: Option<ActivityDecision>,
    pub forecasts_issued: usize,
    pub activity_windows: usize,
    /// Last accepted timestamp per placement, indexed like `TagPlacement::ALL`.
    pub watermarks: [Option<i64>; 4],
}

impl Snapshot {
    /// Canonical text of the whole state; equal text means equal state.
    pub fn fingerprint(&self) -> String {
        let mut out = format!(
            "patient_id={}\n{}",
            self.patient_id,
            self.demographics.to_kv()
        );
        out.push_str(&self.timeline.to_csv());
        if let Some(f) = &self.latest_forecast {
            out.push_str(&f.to_kv());
        }
        if let Some(a) = &self.latest_activity {
            out.push_str(&a.to_kv());
        }
        out.push_str(&format!(
            "forecasts_issued={}\nactivity_windows={}\nwatermarks={:?}\n",
            self.forecasts_issued, self.activity_windows, self.watermarks
        ));
        out
    }
}

struct IngestState {
    snapshot: Snapshot,
    open_minute: u32,
    chest: Vec<f64>,
    abdomen: Vec<f64>,
    limbs: [LimbSeries; 2],
    log: Option<File>,
}

struct Session {
    ingest: Mutex<IngestState>,
    published: RwLock<Arc<Snapshot>>,
}

struct Models {
    forecast: Option<ForecastModel>,
    activity: Option<ActivityModel>,
}

pub struct MonitorService {
    config: ServiceConfig,
    models: Models,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
}

fn check_patient_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= MAX_PATIENT_ID_LEN
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidPatientId(id.to_string()))
    }
}

fn lock_err<T>(_: T) -> Error {
    Error::InvalidConfig("session lock poisoned".into())
}

impl MonitorService {
    pub fn new(
        config: ServiceConfig,
        forecast: Option<ForecastModel>,
        activity: Option<ActivityModel>,
    ) -> Result<Self> {
        if !(config.sample_rate_hz > 0.0 && config.sample_rate_hz <= 1000.0) {
            return Err(Error::InvalidConfig(format!(
                "sample rate {} Hz outside (0, 1000]",
                config.sample_rate_hz
            )));
        }
        if let Some(dir) = &config.event_log_dir {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Self {
            config,
            models: Models { forecast, activity },
            sessions: RwLock::new(HashMap::new()),
        })
    }

    /// Builds a service and replays every patient found in the event log
    /// directory.
    pub fn recover(
        config: ServiceConfig,
        forecast: Option<ForecastModel>,
        activity: Option<ActivityModel>,
    ) -> Result<Self> {
        let service = Self::new(config, forecast, activity)?;
        let Some(dir) = service.config.event_log_dir.clone() else {
            return Ok(service);
        };
        let mut ids: Vec<String> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                name.strip_suffix(".demographics").map(str::to_string)
            })
            .collect();
        ids.sort();
        for id in ids {
            let d = Demographics::from_kv(&std::fs::read_to_string(
                dir.join(format!("{id}.demographics")),
            )?)?;
            let readings_path = dir.join(format!("{id}.readings"));
            let readings = if readings_path.is_file() {
                parse_readings(&std::fs::read_to_string(&readings_path)?)?
            } else {
                Vec::new()
            };
            service.insert_session(&id, d, false)?;
            if !readings.is_empty() {
                service.ingest_inner(&id, &readings, false)?;
            }
        }
        Ok(service)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn has_forecast_model(&self) -> bool {
        self.models.forecast.is_some()
    }

    pub fn has_activity_model(&self) -> bool {
        self.models.activity.is_some()
    }

    pub fn patient_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .sessions
            .read()
            .map(|s| s.keys().cloned().collect())
            .unwrap_or_default();
        ids.sort();
        ids
    }

    pub fn register(&self, patient_id: &str, demographics: Demographics) -> Result<()> {
        self.insert_session(patient_id, demographics, true)
    }

    fn log_paths(&self, id: &str) -> Option<(PathBuf, PathBuf)> {
        self.config.event_log_dir.as_ref().map(|d| {
            (
                d.join(format!("{id}.demographics")),
                d.join(format!("{id}.readings")),
            )
        })
    }

    fn insert_session(
        &self,
        patient_id: &str,
        demographics: Demographics,
        write_log: bool,
    ) -> Result<()> {
        check_patient_id(patient_id)?;
        demographics.validate()?;
        let mut sessions = self.sessions.write().map_err(lock_err)?;
        if sessions.contains_key(patient_id) {
            return Err(Error::DuplicatePatient(patient_id.to_string()));
        }
        let log = match self.log_paths(patient_id) {
            Some((demo_path, readings_path)) => {
                if write_log {
                    std::fs::write(&demo_path, demographics.to_kv())?;
                }
                Some(
                    OpenOptions::new()
                        .create(true)
                        .append(true)
                        .open(readings_path)?,
                )
            }
            None => None,
        };
        let snapshot = Snapshot {
            patient_id: patient_id.to_string(),
            demographics,
            timeline: VitalsTimeline::default(),
            latest_forecast: None,
            latest_activity: None,
            forecasts_issued: 0,
            activity_windows: 0,
            watermarks: [None; 4],
        };
        let session = Session {
            published: RwLock::new(Arc::new(snapshot.clone())),
            ingest: Mutex::new(IngestState {
                snapshot,
                open_minute: 0,
                chest: Vec::new(),
                abdomen: Vec::new(),
                limbs: Default::default(),
                log,
            }),
        };
        sessions.insert(patient_id.to_string(), Arc::new(session));
        Ok(())
    }

    fn session(&self, patient_id: &str) -> Result<Arc<Session>> {
        self.sessions
            .read()
            .map_err(lock_err)?
            .get(patient_id)
            .cloned()
            .ok_or_else(|| Error::UnknownPatient(patient_id.to_string()))
    }

    /// Accepts readings newer than their placement's watermark and returns how
    /// many were accepted.
    pub fn ingest(&self, patient_id: &str, batch: &[TagReading]) -> Result<usize> {
        self.ingest_inner(patient_id, batch, true)
    }

    fn ingest_inner(
        &self,
        patient_id: &str,
        batch: &[TagReading],
        write_log: bool,
    ) -> Result<usize> {
        let session = self.session(patient_id)?;
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut state = session.ingest.lock().map_err(lock_err)?;
        let mut accepted = Vec::new();
        for r in batch {
            if self.accept(&mut state, r)? {
                accepted.push(*r);
            }
        }
        if write_log && !accepted.is_empty() {
            if let Some(log) = state.log.as_mut() {
                let mut text = String::new();
                for r in &accepted {
                    text.push_str(&r.to_record());
                    text.push('\n');
                }
                log.write_all(text.as_bytes())?;
            }
        }
        *session.published.write().map_err(lock_err)? = Arc::new(state.snapshot.clone());
        Ok(accepted.len())
    }

    fn accept(&self, state: &mut IngestState, r: &TagReading) -> Result<bool> {
        let ts = r.timestamp_ms();
        let slot = r.placement().index();
        if ts < 0 || state.snapshot.watermarks[slot].is_some_and(|w| ts <= w) {
            return Ok(false);
        }
        let minute = ts / MINUTE_MS;
        if minute > (state.open_minute + MAX_MINUTE_JUMP) as i64 {
            return Ok(false);
        }
        let minute = minute as u32;
        state.snapshot.watermarks[slot] = Some(ts);

        match r.placement() {
            TagPlacement::Chest | TagPlacement::Abdomen => {
                while minute > state.open_minute {
                    self.close_minute(state)?;
                }
                if minute == state.open_minute {
                    if r.placement() == TagPlacement::Chest {
                        state.chest.push(r.rssi_dbm());
                    } else {
                        state.abdomen.push(r.rssi_dbm());
                    }
                    let full = (60.0 * self.config.sample_rate_hz).round() as usize;
                    if state.chest.len() >= full && state.abdomen.len() >= full {
                        self.close_minute(state)?;
                    }
                }
            }
            TagPlacement::LeftArm | TagPlacement::RightAnkle => {
                let i = if r.placement() == TagPlacement::LeftArm {
                    0
                } else {
                    1
                };
                state.limbs[i].push(r);
                self.drain_windows(state)?;
            }
        }
        Ok(true)
    }

    fn close_minute(&self, state: &mut IngestState) -> Result<()> {
        let minute = state.open_minute;
        let sample = extract_from_buffers(
            minute,
            &state.chest,
            &state.abdomen,
            self.config.sample_rate_hz,
        )
        .unwrap_or_else(|_| VitalSample::bad(minute));
        state.chest.clear();
        state.abdomen.clear();
        state.open_minute += 1;
        let snap = &mut state.snapshot;
        snap.timeline.push(sample)?;
        if sample.quality.is_usable() {
            snap.timeline.fill_gaps();
        }
        let len = snap.timeline.len();
        let step = FORECAST_STEP_MINUTES as usize;
        if len >= HISTORY_MINUTES && (len - HISTORY_MINUTES) % step == 0 {
            if let Some(model) = &self.models.forecast {
                if let Ok(f) = model.predict(snap.timeline.samples(), &snap.demographics) {
                    snap.latest_forecast = Some(f);
                    snap.forecasts_issued += 1;
                }
            }
        }
        Ok(())
    }

    fn drain_windows(&self, state: &mut IngestState) -> Result<()> {
        while state.limbs[0].len() >= WINDOW_SAMPLES && state.limbs[1].len() >= WINDOW_SAMPLES {
            if let Some(model) = &self.models.activity {
                let w = window_at(&state.limbs, 0, self.config.sample_rate_hz)?;
                state.snapshot.latest_activity = Some(model.classify(&w.features)?);
            }
            state.snapshot.activity_windows += 1;
            state
                .limbs
                .iter_mut()
                .for_each(|l| l.drain_front(WINDOW_HOP));
        }
        Ok(())
    }

    pub fn snapshot(&self, patient_id: &str) -> Result<Arc<Snapshot>> {
        let session = self.session(patient_id)?;
        let snap = session.published.read().map_err(lock_err)?.clone();
        Ok(snap)
    }

    pub fn query_current(&self, patient_id: &str) -> Result<VitalSample> {
        self.snapshot(patient_id)?
            .timeline
            .last()
            .copied()
            .ok_or(Error::Unavailable("current vitals"))
    }

    pub fn query_forecast(&self, patient_id: &str) -> Result<ForecastSeries> {
        self.snapshot(patient_id)?
            .latest_forecast
            .clone()
            .ok_or(Error::Unavailable("forecast"))
    }

    pub fn query_activity(&self, patient_id: &str) -> Result<ActivityDecision> {
        self.snapshot(patient_id)?
            .latest_activity
            .clone()
            .ok_or(Error::Unavailable("activity"))
    }

    /// Minutes `[from, to)` of the timeline, clipped to its end.
    pub fn query_history(
        &self,
        patient_id: &str,
        from: usize,
        to: usize,
    ) -> Result<VitalsTimeline> {
        let snap = self.snapshot(patient_id)?;
        snap.timeline.slice(from, to)
    }
}

/// Path of the event log directory entry for a patient's readings.
pub fn readings_log_path(dir: &Path, patient_id: &str) -> PathBuf {
    dir.join(format!("{patient_id}.readings"))
}
