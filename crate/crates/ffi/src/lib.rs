//! C ABI over the ward-monitor forecaster, activity classifier and vitals
//! extraction.
//!
//! Every fallible function returns a [`WmStatus`]. On failure the message is
//! available from [`wm_last_error`] on the same thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ward_monitor::activity::ActivityModel;
use ward_monitor::domain::{bmi, Demographics, Quality, Sex, VitalSample};
use ward_monitor::forecast::ForecastModel;
use ward_monitor::signal::{extract_from_buffers, ACTIVITY_FEATURES};
use ward_monitor::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotFound = 3,
    Io = 4,
    Format = 5,
    Unavailable = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WmQuality {
    Good = 0,
    Degraded = 1,
    Bad = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WmDemographics {
    pub age_years: u32,
    /// 0 female, 1 male.
    pub sex: u32,
    pub height_cm: f64,
    pub weight_kg: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WmVitalSample {
    pub minute_index: u32,
    /// NaN when `quality` is bad.
    pub heart_rate_bpm: f64,
    pub respiration_bpm: f64,
    pub quality: WmQuality,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WmForecast {
    pub issued_at_minute: u32,
    pub heart_rate: [f64; 12],
    pub respiration: [f64; 12],
    pub clamped: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WmActivityDecision {
    pub probabilities: [f64; 10],
    /// Bit `i` set when label `i` is at or above the threshold.
    pub active_mask: u32,
    pub current_status: u32,
}

/// Opaque forecaster handle.
pub struct WmForecastModel(ForecastModel);

/// Opaque activity classifier handle.
pub struct WmActivityModel(ActivityModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> WmStatus {
    match err {
        Error::MissingFile(_) => WmStatus::NotFound,
        Error::Io(_) => WmStatus::Io,
        Error::ModelFormat(_) | Error::Parse(_) => WmStatus::Format,
        Error::Unavailable(_) | Error::IncompleteHistory { .. } | Error::InsufficientSamples { .. } => {
            WmStatus::Unavailable
        }
        _ => WmStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (WmStatus, String)>) -> WmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            WmStatus::Panic
        }
    }
}

fn fail(err: Error) -> (WmStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (WmStatus, String) {
    (WmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (WmStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, (WmStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| (WmStatus::InvalidArgument, "path is not UTF-8".into()))
}

fn demographics(d: &WmDemographics) -> Result<Demographics, (WmStatus, String)> {
    let sex = match d.sex {
        0 => Sex::Female,
        1 => Sex::Male,
        other => return Err((WmStatus::InvalidArgument, format!("sex code {other} is not 0 or 1"))),
    };
    Ok(Demographics {
        age_years: d.age_years,
        sex,
        height_cm: d.height_cm,
        weight_kg: d.weight_kg,
    })
}

/// Message of the last failure on this thread, or null. Valid until the next
/// call into this library on the same thread.
#[no_mangle]
pub extern "C" fn wm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn wm_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Static name of the activity label with the given index, or null.
#[no_mangle]
pub extern "C" fn wm_activity_label_name(index: u32) -> *const c_char {
    const NAMES: [&CStr; 10] = [
        c"StandingStill",
        c"ClimbingStairs",
        c"SittingRelaxing",
        c"LyingDown",
        c"Walking",
        c"WaistBendsForward",
        c"Running",
        c"FrontalElevationOfArms",
        c"KneesBending",
        c"JumpFrontBack",
    ];
    NAMES.get(index as usize).map_or(ptr::null(), |n| n.as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn wm_bmi(d: *const WmDemographics, out: *mut f64) -> WmStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("demographics"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = bmi(&demographics(d)?).map_err(fail)?;
        Ok(())
    })
}

/// Vitals for one minute from chest and abdomen RSSI buffers.
#[no_mangle]
pub unsafe extern "C" fn wm_vitals_from_buffers(
    minute: u32,
    chest: *const f64,
    chest_len: usize,
    abdomen: *const f64,
    abdomen_len: usize,
    sample_rate_hz: f64,
    out: *mut WmVitalSample,
) -> WmStatus {
    guard(|| {
        let chest = slice(chest, chest_len, "chest")?;
        let abdomen = slice(abdomen, abdomen_len, "abdomen")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if !(sample_rate_hz > 0.0) {
            return Err((WmStatus::InvalidArgument, "sample rate must be positive".into()));
        }
        let s = extract_from_buffers(minute, chest, abdomen, sample_rate_hz).map_err(fail)?;
        *out = WmVitalSample {
            minute_index: s.minute_index,
            heart_rate_bpm: s.heart_rate_bpm,
            respiration_bpm: s.respiration_bpm,
            quality: match s.quality {
                Quality::Good => WmQuality::Good,
                Quality::Degraded => WmQuality::Degraded,
                Quality::Bad => WmQuality::Bad,
            },
        };
        Ok(())
    })
}

/// Loads a forecaster bundle directory. Release with [`wm_forecast_model_free`].
#[no_mangle]
pub unsafe extern "C" fn wm_forecast_model_load(dir: *const c_char, out: *mut *mut WmForecastModel) -> WmStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let model = ForecastModel::load(path_arg(dir)?).map_err(fail)?;
        *out = Box::into_raw(Box::new(WmForecastModel(model)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wm_forecast_model_free(model: *mut WmForecastModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Forecast from per-minute history arrays (minute 0 first). Only the last
/// 75 minutes are used; NaN entries count as missing.
#[no_mangle]
pub unsafe extern "C" fn wm_forecast_predict(
    model: *const WmForecastModel,
    heart_rate: *const f64,
    respiration: *const f64,
    len: usize,
    d: *const WmDemographics,
    out: *mut WmForecast,
) -> WmStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let hr = slice(heart_rate, len, "heart_rate")?;
        let rr = slice(respiration, len, "respiration")?;
        let d = demographics(d.as_ref().ok_or_else(|| null("demographics"))?)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let history: Vec<VitalSample> = hr
            .iter()
            .zip(rr)
            .enumerate()
            .map(|(i, (&h, &r))| {
                if h.is_finite() && r.is_finite() {
                    VitalSample {
                        minute_index: i as u32,
                        heart_rate_bpm: h,
                        respiration_bpm: r,
                        quality: Quality::Good,
                    }
                } else {
                    VitalSample::bad(i as u32)
                }
            })
            .collect();
        let f = model.0.predict(&history, &d).map_err(fail)?;
        *out = WmForecast {
            issued_at_minute: f.issued_at_minute,
            heart_rate: f.heart_rate,
            respiration: f.respiration,
            clamped: f.clamped,
        };
        Ok(())
    })
}

/// Loads an activity classifier bundle directory. Release with
/// [`wm_activity_model_free`].
#[no_mangle]
pub unsafe extern "C" fn wm_activity_model_load(dir: *const c_char, out: *mut *mut WmActivityModel) -> WmStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let model = ActivityModel::load(path_arg(dir)?).map_err(fail)?;
        *out = Box::into_raw(Box::new(WmActivityModel(model)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn wm_activity_model_free(model: *mut WmActivityModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Classifies one 24-value window feature vector.
#[no_mangle]
pub unsafe extern "C" fn wm_activity_classify(
    model: *const WmActivityModel,
    features: *const f64,
    len: usize,
    out: *mut WmActivityDecision,
) -> WmStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let x = slice(features, len, "features")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if x.len() != ACTIVITY_FEATURES {
            return Err(fail(Error::DimensionMismatch {
                expected: ACTIVITY_FEATURES,
                actual: x.len(),
            }));
        }
        let d = model.0.classify(x).map_err(fail)?;
        *out = WmActivityDecision {
            probabilities: d.probabilities.0,
            active_mask: d.active_labels.iter().fold(0, |m, l| m | (1 << l.index())),
            current_status: d.current_status.index() as u32,
        };
        Ok(())
    })
}

/// Sets the decision threshold of a loaded classifier; must lie in (0, 1).
#[no_mangle]
pub unsafe extern "C" fn wm_activity_set_threshold(model: *mut WmActivityModel, threshold: f64) -> WmStatus {
    guard(|| {
        let model = model.as_mut().ok_or_else(|| null("model"))?;
        model.0.set_threshold(threshold).map_err(fail)
    })
}
