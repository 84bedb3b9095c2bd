//! Scripted six-hour patient run end to end through the live service,
//! producing plot-ready CSV series.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::activity::{train_classifier, ActivityModel};
use crate::domain::{ActivityLabel, Demographics, Sex};
use crate::error::Result;
use crate::forecast::{train_forecaster, ForecastModel};
use crate::nn::{Loss, TrainConfig};
use crate::service::{MonitorService, ServiceConfig};
use crate::signal::{activity_windows, label_from_script, segment_instances, ActivityWindow};
use crate::simulator::{drifting_vitals, simulate, ActivityScript, Schedule, SimConfig, Simulator};

pub const DEMO_MINUTES: u32 = 6 * 60;
pub const DEMO_PATIENT: &str = "demo-patient";
pub const FORECAST_EPOCHS: usize = 300;
pub const ACTIVITY_EPOCHS: usize = 60;
pub const TRAINING_MINUTES_PER_LABEL: u32 = 3;

pub const VITALS_FILE: &str = "vitals.csv";
pub const FORECAST_FILE: &str = "forecast.csv";
pub const ACTIVITY_FILE: &str = "activity.csv";
pub const PROBABILITIES_FILE: &str = "probabilities.csv";

pub fn demo_demographics() -> Demographics {
    Demographics {
        age_years: 34,
        sex: Sex::Male,
        height_cm: 180.0,
        weight_kg: 82.0,
    }
}

/// Rest, a short walk, stairs, more rest, an afternoon walk, then lying down.
pub fn demo_scenario(seed: u64) -> Result<(SimConfig, ActivityScript)> {
    use ActivityLabel::*;
    let script = ActivityScript::new(vec![
        (0, LyingDown),
        (60, SittingRelaxing),
        (90, StandingStill),
        (100, Walking),
        (120, ClimbingStairs),
        (128, StandingStill),
        (140, SittingRelaxing),
        (240, Walking),
        (270, SittingRelaxing),
        (300, LyingDown),
    ])?;
    let config = SimConfig {
        duration_minutes: DEMO_MINUTES,
        hr_schedule: Schedule::new(vec![
            (0, 64.0),
            (60, 70.0),
            (90, 74.0),
            (100, 92.0),
            (120, 112.0),
            (128, 96.0),
            (140, 78.0),
            (170, 74.0),
            (240, 90.0),
            (270, 76.0),
            (300, 66.0),
        ])?,
        rr_schedule: Schedule::new(vec![
            (0, 12.0),
            (60, 14.0),
            (100, 18.0),
            (120, 24.0),
            (128, 20.0),
            (140, 15.0),
            (240, 18.0),
            (270, 15.0),
            (300, 12.0),
        ])?,
        seed,
        ..SimConfig::default()
    };
    Ok((config, script))
}

/// Labelled limb windows from a simulated session visiting every activity
/// for `minutes_per_label` minutes.
pub fn simulated_activity_windows(
    seed: u64,
    minutes_per_label: u32,
) -> Result<Vec<ActivityWindow>> {
    let segments = ActivityLabel::ALL
        .iter()
        .enumerate()
        .map(|(i, &l)| (i as u32 * minutes_per_label, l))
        .collect();
    let script = ActivityScript::new(segments)?;
    let config = SimConfig {
        duration_minutes: minutes_per_label * ActivityLabel::ALL.len() as u32,
        seed,
        ..SimConfig::default()
    };
    let stream = simulate(&config, &script)?;
    let mut windows = activity_windows(&stream, config.sample_rate_hz);
    label_from_script(&mut windows, &script, config.sample_rate_hz);
    windows.retain(|w| w.truth.is_some());
    Ok(windows)
}

pub fn train_demo_models(
    seed: u64,
    epochs: Option<usize>,
) -> Result<(ForecastModel, ActivityModel)> {
    let timeline = drifting_vitals(24 * 60, seed)?;
    let instances = segment_instances(&timeline, &demo_demographics());
    let forecast_cfg = TrainConfig {
        epochs: epochs.unwrap_or(FORECAST_EPOCHS),
        batch_size: 8,
        seed,
        ..TrainConfig::default()
    };
    let forecast = train_forecaster(&instances, &forecast_cfg)?.model;

    let windows = simulated_activity_windows(seed.wrapping_add(1), TRAINING_MINUTES_PER_LABEL)?;
    let activity_cfg = TrainConfig {
        epochs: epochs.unwrap_or(ACTIVITY_EPOCHS),
        loss: Loss::Bce,
        seed,
        ..TrainConfig::default()
    };
    let (activity, _) = train_classifier(&windows, &activity_cfg)?;
    Ok((forecast, activity))
}

/// The four plot series, each a complete CSV document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemoOutput {
    pub vitals: String,
    pub forecast: String,
    pub activity: String,
    pub probabilities: String,
}

impl DemoOutput {
    pub fn files(&self) -> [(&'static str, &str); 4] {
        [
            (VITALS_FILE, &self.vitals),
            (FORECAST_FILE, &self.forecast),
            (ACTIVITY_FILE, &self.activity),
            (PROBABILITIES_FILE, &self.probabilities),
        ]
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for (name, text) in self.files() {
            let p = dir.join(name);
            std::fs::write(&p, text)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

pub fn run_demo(seed: u64, epochs: Option<usize>) -> Result<DemoOutput> {
    let (forecast_model, activity_model) = train_demo_models(seed, epochs)?;
    let service = MonitorService::new(
        ServiceConfig::default(),
        Some(forecast_model),
        Some(activity_model),
    )?;
    service.register(DEMO_PATIENT, demo_demographics())?;
    let (config, script) = demo_scenario(seed)?;
    let mut sim = Simulator::new(config, script.clone())?;

    let mut forecast =
        String::from("issued_at_minute,step,target_minute,heart_rate,respiration,clamped\n");
    let mut activity = String::from("minute,current_status,active_labels,scripted_label\n");
    let mut probabilities = String::from("minute");
    for l in ActivityLabel::ALL {
        let _ = write!(probabilities, ",{l}");
    }
    probabilities.push('\n');

    let mut issued = 0;
    let mut minute = 0u32;
    while let Some(batch) = sim.next_minute() {
        service.ingest(DEMO_PATIENT, &batch)?;
        let snap = service.snapshot(DEMO_PATIENT)?;
        if snap.forecasts_issued > issued {
            issued = snap.forecasts_issued;
            if let Some(f) = &snap.latest_forecast {
                for step in 0..f.heart_rate.len() {
                    let _ = writeln!(
                        forecast,
                        "{},{},{},{:.3},{:.3},{}",
                        f.issued_at_minute,
                        step + 1,
                        f.target_minute(step),
                        f.heart_rate[step],
                        f.respiration[step],
                        f.clamped
                    );
                }
            }
        }
        if let Some(d) = &snap.latest_activity {
            let active: Vec<&str> = d.active_labels.iter().map(|l| l.name()).collect();
            let _ = writeln!(
                activity,
                "{minute},{},{},{}",
                d.current_status,
                active.join(";"),
                script.at(minute)
            );
            let _ = write!(probabilities, "{minute}");
            for p in d.probabilities.0 {
                let _ = write!(probabilities, ",{p:.6}");
            }
            probabilities.push('\n');
        }
        minute += 1;
    }
    let vitals = service.snapshot(DEMO_PATIENT)?.timeline.to_csv();
    Ok(DemoOutput {
        vitals,
        forecast,
        activity,
        probabilities,
    })
}
