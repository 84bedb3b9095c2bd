//! Command-line entry points.

use std::ffi::OsString;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use crate::activity::{train_classifier, ActivityModel};
use crate::demo::{
    demo_demographics, run_demo, simulated_activity_windows, train_demo_models, FORECAST_EPOCHS,
};
use crate::domain::{format_readings, parse_readings, ActivityLabel, Demographics};
use crate::error::{Error, Result};
use crate::eval::{
    confusion, confusion_from_labels, mae, majority_label, mse, split, split_by_label,
};
use crate::forecast::{train_forecaster, ForecastModel};
use crate::ingest::{load_mhealth, load_vitals_csv};
use crate::kv::KvRecord;
use crate::nn::{Loss, TrainConfig};
use crate::service::{serve, MonitorService, ServiceConfig};
use crate::signal::{
    build_timeline, segment_instances, ActivityWindow, ForecastInstance, FORECAST_TARGETS,
    HISTORY_MINUTES,
};
use crate::simulator::{drifting_vitals, simulate, ActivityScript, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const DATA_DIR_ENV: &str = "WARD_MONITOR_DATA_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "ward-monitor",
    version,
    about = "Contactless ward monitoring toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Activity,
    Forecast,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a tag-reading stream from a configuration file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the configuration file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "stream.txt")]
        out: PathBuf,
    },
    /// Extract per-minute vitals from a reading stream.
    Extract {
        input: PathBuf,
        #[arg(long, default_value_t = 50.0)]
        sample_rate: f64,
        #[arg(long, default_value = "vitals.csv")]
        out: PathBuf,
    },
    /// Train the vital-sign forecaster on vitals CSV files (synthetic data when none are given).
    TrainForecast {
        inputs: Vec<PathBuf>,
        /// Demographics file (`age_years`, `sex`, `height_cm`, `weight_kg`).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = FORECAST_EPOCHS)]
        epochs: usize,
        #[arg(long, default_value = "forecast-model")]
        out: PathBuf,
    },
    /// Train the activity classifier on MHEALTH (simulated windows without a data directory).
    TrainActivity {
        #[arg(long, env = DATA_DIR_ENV)]
        data_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        subject: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value = "activity-model")]
        out: PathBuf,
    },
    /// Evaluate on the chronological 80/20 split and write a metrics CSV.
    Evaluate {
        #[arg(long, value_enum, default_value_t = Task::Activity)]
        task: Task,
        #[arg(long, env = DATA_DIR_ENV)]
        data_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        subject: u32,
        /// Vitals CSV for the forecast task (synthetic 24 h patient otherwise).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value = "metrics.csv")]
        out: PathBuf,
    },
    /// Run the monitoring HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory holding `forecast-model/` and `activity-model/` bundles.
        #[arg(long, env = DATA_DIR_ENV)]
        data_dir: Option<PathBuf>,
        /// Event log directory for restart recovery.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Run the scripted six-hour patient and write the four plot series.
    Demo {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value = "demo-output")]
        out: PathBuf,
    },
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate { config, seed, out } => cmd_simulate(&config, seed, &out),
        Command::Extract {
            input,
            sample_rate,
            out,
        } => cmd_extract(&input, sample_rate, &out),
        Command::TrainForecast {
            inputs,
            config,
            seed,
            epochs,
            out,
        } => cmd_train_forecast(&inputs, config.as_deref(), seed, epochs, &out),
        Command::TrainActivity {
            data_dir,
            subject,
            seed,
            epochs,
            out,
        } => cmd_train_activity(data_dir.as_deref(), subject, seed, epochs, &out),
        Command::Evaluate {
            task,
            data_dir,
            subject,
            config,
            seed,
            epochs,
            out,
        } => match task {
            Task::Activity => {
                cmd_evaluate_activity(data_dir.as_deref(), subject, seed, epochs, &out)
            }
            Task::Forecast => cmd_evaluate_forecast(config.as_deref(), seed, epochs, &out),
        },
        Command::Serve {
            port,
            data_dir,
            out,
            seed,
            epochs,
        } => cmd_serve(port, data_dir.as_deref(), out, seed, epochs),
        Command::Demo { seed, epochs, out } => {
            let output = run_demo(seed, epochs)?;
            for p in output.write(&out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn read_file(path: &Path) -> Result<String> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    Ok(std::fs::read_to_string(path)?)
}

fn cmd_simulate(config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let (mut cfg, script) = SimConfig::parse(&read_file(config)?)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let script = script.unwrap_or_else(|| ActivityScript::constant(ActivityLabel::LyingDown));
    let stream = simulate(&cfg, &script)?;
    std::fs::write(out, format_readings(&stream))?;
    println!("wrote {} readings to {}", stream.len(), out.display());
    Ok(())
}

fn cmd_extract(input: &Path, sample_rate: f64, out: &Path) -> Result<()> {
    let stream = parse_readings(&read_file(input)?)?;
    let timeline = build_timeline(&stream, sample_rate)?;
    std::fs::write(out, timeline.to_csv())?;
    println!("wrote {} minutes to {}", timeline.len(), out.display());
    Ok(())
}

fn demographics_from(config: Option<&Path>) -> Result<Demographics> {
    match config {
        Some(p) => Demographics::from_kv(&read_file(p)?),
        None => Ok(demo_demographics()),
    }
}

fn forecast_instances(
    inputs: &[PathBuf],
    d: &Demographics,
    seed: u64,
) -> Result<Vec<ForecastInstance>> {
    if inputs.is_empty() {
        return Ok(segment_instances(&drifting_vitals(24 * 60, seed)?, d));
    }
    let mut all = Vec::new();
    for p in inputs {
        all.extend(segment_instances(&load_vitals_csv(p)?, d));
    }
    Ok(all)
}

fn forecast_config(seed: u64, epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: 8,
        seed,
        ..TrainConfig::default()
    }
}

fn cmd_train_forecast(
    inputs: &[PathBuf],
    config: Option<&Path>,
    seed: u64,
    epochs: usize,
    out: &Path,
) -> Result<()> {
    let d = demographics_from(config)?;
    let instances = forecast_instances(inputs, &d, seed)?;
    let trained = train_forecaster(&instances, &forecast_config(seed, epochs))?;
    trained.model.save(out)?;
    println!(
        "trained on {} instances; final MAE hr {:.3} rr {:.3}; saved to {}",
        instances.len(),
        trained.hr_history.last().copied().unwrap_or(f64::NAN),
        trained.rr_history.last().copied().unwrap_or(f64::NAN),
        out.display()
    );
    Ok(())
}

fn activity_windows_for(
    data_dir: Option<&Path>,
    subject: u32,
    seed: u64,
) -> Result<Vec<ActivityWindow>> {
    match data_dir {
        Some(dir) => load_mhealth(dir, subject),
        None => simulated_activity_windows(seed, 3),
    }
}

fn activity_config(seed: u64, epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        loss: Loss::Bce,
        seed,
        ..TrainConfig::default()
    }
}

fn cmd_train_activity(
    data_dir: Option<&Path>,
    subject: u32,
    seed: u64,
    epochs: usize,
    out: &Path,
) -> Result<()> {
    let windows = activity_windows_for(data_dir, subject, seed)?;
    let (model, history) = train_classifier(&windows, &activity_config(seed, epochs))?;
    model.save(out)?;
    println!(
        "trained on {} windows; final loss {:.4}; saved to {}",
        windows.len(),
        history.last().copied().unwrap_or(f64::NAN),
        out.display()
    );
    Ok(())
}

fn truth_of(w: &ActivityWindow) -> ActivityLabel {
    w.truth.unwrap_or(ActivityLabel::StandingStill)
}

fn cmd_evaluate_activity(
    data_dir: Option<&Path>,
    subject: u32,
    seed: u64,
    epochs: usize,
    out: &Path,
) -> Result<()> {
    let windows = activity_windows_for(data_dir, subject, seed)?;
    if let Some(i) = windows.iter().position(|w| w.truth.is_none()) {
        return Err(Error::UnlabeledWindow(i));
    }
    let (train, test) = split_by_label(&windows, truth_of);
    if test.is_empty() {
        return Err(Error::TooFewInstances {
            found: windows.len(),
            needed: 5,
        });
    }
    let (model, _) = train_classifier(&train, &activity_config(seed, epochs))?;
    let decisions = test
        .iter()
        .map(|w| model.classify(&w.features))
        .collect::<Result<Vec<_>>>()?;
    let truths: Vec<ActivityLabel> = test.iter().map(truth_of).collect();
    let counts = confusion(&decisions, &truths)?;
    std::fs::write(out, counts.to_csv())?;

    let train_truths: Vec<ActivityLabel> = train.iter().map(truth_of).collect();
    let majority = majority_label(&train_truths).unwrap_or(ActivityLabel::StandingStill);
    let baseline = confusion_from_labels(&vec![majority; truths.len()], &truths)?;
    println!(
        "train {} / test {} windows; balanced accuracy {:.4} (majority baseline {:.4}); metrics in {}",
        train.len(),
        test.len(),
        counts.balanced_accuracy(),
        baseline.balanced_accuracy(),
        out.display()
    );
    Ok(())
}

fn cmd_evaluate_forecast(
    vitals: Option<&Path>,
    seed: u64,
    epochs: usize,
    out: &Path,
) -> Result<()> {
    let d = demo_demographics();
    let inputs: Vec<PathBuf> = vitals.map(Path::to_path_buf).into_iter().collect();
    let instances = forecast_instances(&inputs, &d, seed)?;
    let (train, test) = split(&instances)?;
    let model = train_forecaster(&train, &forecast_config(seed, epochs))?.model;
    let report = forecast_report(&model, &test)?;
    std::fs::write(out, &report)?;
    print!("{report}");
    Ok(())
}

/// `metric,model_hr,model_rr,persistence_hr,persistence_rr` rows for MAE and MSE.
pub fn forecast_report(model: &ForecastModel, test: &[ForecastInstance]) -> Result<String> {
    let h = FORECAST_TARGETS / 2;
    let (mut truth_hr, mut truth_rr, mut m_hr, mut m_rr, mut p_hr, mut p_rr) =
        (vec![], vec![], vec![], vec![], vec![], vec![]);
    for inst in test {
        let (hr, rr) = model.raw_outputs(&inst.features)?;
        let last_hr = inst.features[HISTORY_MINUTES - 1];
        let last_rr = inst.features[2 * HISTORY_MINUTES - 1];
        truth_hr.extend_from_slice(&inst.targets[..h]);
        truth_rr.extend_from_slice(&inst.targets[h..FORECAST_TARGETS]);
        m_hr.extend(hr);
        m_rr.extend(rr);
        p_hr.extend(std::iter::repeat_n(last_hr, h));
        p_rr.extend(std::iter::repeat_n(last_rr, h));
    }
    let mut out = String::from("metric,model_hr,model_rr,persistence_hr,persistence_rr\n");
    for (name, f) in [
        ("mae", mae as fn(&[f64], &[f64]) -> Result<f64>),
        ("mse", mse),
    ] {
        out.push_str(&format!(
            "{name},{:.6},{:.6},{:.6},{:.6}\n",
            f(&m_hr, &truth_hr)?,
            f(&m_rr, &truth_rr)?,
            f(&p_hr, &truth_hr)?,
            f(&p_rr, &truth_rr)?
        ));
    }
    Ok(out)
}

fn load_or_train(
    data_dir: Option<&Path>,
    seed: u64,
    epochs: Option<usize>,
) -> Result<(ForecastModel, ActivityModel)> {
    if let Some(dir) = data_dir {
        let (f, a) = (dir.join("forecast-model"), dir.join("activity-model"));
        if f.is_dir() && a.is_dir() {
            return Ok((ForecastModel::load(&f)?, ActivityModel::load(&a)?));
        }
    }
    eprintln!("no model bundles found; training synthetic models (seed {seed})");
    train_demo_models(seed, epochs)
}

fn cmd_serve(
    port: u16,
    data_dir: Option<&Path>,
    event_log: Option<PathBuf>,
    seed: u64,
    epochs: Option<usize>,
) -> Result<()> {
    let (forecast, activity) = load_or_train(data_dir, seed, epochs)?;
    let config = ServiceConfig {
        event_log_dir: event_log,
        ..ServiceConfig::default()
    };
    let service = Arc::new(MonitorService::recover(
        config,
        Some(forecast),
        Some(activity),
    )?);
    let runtime = tokio::runtime::Runtime::new()?;
    let addr = SocketAddr::from((Ipv4Addr::UNSPECIFIED, port));
    runtime.block_on(serve(
        service,
        addr,
        |a| eprintln!("listening on http://{a}"),
        async {
            let _ = tokio::signal::ctrl_c().await;
        },
    ))?;
    Ok(())
}
