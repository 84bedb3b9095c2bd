//! Three-hour vital-sign forecaster: one MLP per vital, each mapping the
//! 154-value history vector to 12 future values.

use std::path::Path;

use crate::domain::{
    Demographics, ForecastSeries, VitalSample, FORECAST_HORIZON_STEPS, HEART_RATE_BOUNDS,
    RESPIRATION_BOUNDS,
};
use crate::error::{Error, Result};
use crate::kv::{KvMap, KvWriter};
use crate::nn::{self, Activation, Loss, Mlp, TrainConfig};
use crate::normalize::Normalizer;
use crate::signal::{history_features, ForecastInstance, FORECAST_FEATURES, HISTORY_MINUTES};

/// Layer widths of each per-vital network.
pub const FORECAST_LAYERS: [usize; 5] = [FORECAST_FEATURES, 128, 64, 32, FORECAST_HORIZON_STEPS];

pub const FORECAST_BUNDLE_FORMAT: &str = "ward-forecast-model";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastModel {
    pub hr_net: Mlp,
    pub rr_net: Mlp,
    pub normalizer: Normalizer,
}

/// Per-epoch training loss of both networks.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastTraining {
    pub model: ForecastModel,
    pub hr_history: Vec<f64>,
    pub rr_history: Vec<f64>,
}

fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() as f64;
    let mut out = vec![0.0; rows[0].len()];
    for r in rows {
        out.iter_mut().zip(r).for_each(|(o, v)| *o += v / n);
    }
    out
}

/// Fits the normalizer on the instance features and trains both networks
/// against raw bpm targets with MAE. The output biases start at the mean
/// training target of each horizon step.
pub fn train_forecaster(
    instances: &[ForecastInstance],
    cfg: &TrainConfig,
) -> Result<ForecastTraining> {
    if cfg.loss != Loss::Mae {
        return Err(Error::InvalidConfig(
            "forecaster trains with MAE loss".into(),
        ));
    }
    if instances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let raw: Vec<Vec<f64>> = instances.iter().map(|i| i.features.clone()).collect();
    let normalizer = Normalizer::fit(&raw)?;
    let inputs: Vec<Vec<f64>> = raw
        .iter()
        .map(|x| normalizer.apply(x))
        .collect::<Result<_>>()?;
    let split = |range: std::ops::Range<usize>| -> Vec<Vec<f64>> {
        instances
            .iter()
            .map(|i| i.targets[range.clone()].to_vec())
            .collect()
    };
    let hr_targets = split(0..FORECAST_HORIZON_STEPS);
    let rr_targets = split(FORECAST_HORIZON_STEPS..2 * FORECAST_HORIZON_STEPS);

    let fit = |targets: &[Vec<f64>], seed: u64| -> Result<(Mlp, Vec<f64>)> {
        let mut net = Mlp::random(&FORECAST_LAYERS, Activation::Identity, seed)?;
        net.set_output_bias(&column_means(targets))?;
        let history = nn::train(
            &mut net,
            &inputs,
            targets,
            &TrainConfig {
                seed,
                ..cfg.clone()
            },
        )?;
        Ok((net, history))
    };
    let (hr_net, hr_history) = fit(&hr_targets, cfg.seed)?;
    let (rr_net, rr_history) = fit(&rr_targets, cfg.seed.wrapping_add(1))?;
    Ok(ForecastTraining {
        model: ForecastModel {
            hr_net,
            rr_net,
            normalizer,
        },
        hr_history,
        rr_history,
    })
}

fn to_horizon(v: Vec<f64>) -> [f64; FORECAST_HORIZON_STEPS] {
    v.try_into().expect("network emits the horizon width")
}

fn clamp_all(values: &mut [f64], (lo, hi): (f64, f64)) -> bool {
    let mut clamped = false;
    for v in values {
        let c = v.clamp(lo, hi);
        if c != *v {
            clamped = true;
            *v = c;
        }
    }
    clamped
}

/// Last 75 samples of `history`, or `IncompleteHistory` if they are missing
/// or include an unusable minute.
pub fn usable_history(history: &[VitalSample]) -> Result<&[VitalSample]> {
    if history.len() < HISTORY_MINUTES {
        return Err(Error::IncompleteHistory {
            found: history.len(),
            needed: HISTORY_MINUTES,
        });
    }
    let tail = &history[history.len() - HISTORY_MINUTES..];
    let usable = tail.iter().filter(|s| s.quality.is_usable()).count();
    if usable < HISTORY_MINUTES {
        return Err(Error::IncompleteHistory {
            found: usable,
            needed: HISTORY_MINUTES,
        });
    }
    Ok(tail)
}

impl ForecastModel {
    /// Raw (unclamped) network outputs for a feature vector.
    pub fn raw_outputs(&self, features: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let x = self.normalizer.apply(features)?;
        Ok((self.hr_net.forward(&x)?, self.rr_net.forward(&x)?))
    }

    /// Forecast from the most recent 75 minutes of `history`. Outputs are
    /// clamped into the plausibility bounds and `clamped` records whether that
    /// changed anything.
    pub fn predict(&self, history: &[VitalSample], d: &Demographics) -> Result<ForecastSeries> {
        let tail = usable_history(history)?;
        let hr: Vec<f64> = tail.iter().map(|s| s.heart_rate_bpm).collect();
        let rr: Vec<f64> = tail.iter().map(|s| s.respiration_bpm).collect();
        let (mut hr_out, mut rr_out) = self.raw_outputs(&history_features(&hr, &rr, d))?;
        let clamped =
            clamp_all(&mut hr_out, HEART_RATE_BOUNDS) | clamp_all(&mut rr_out, RESPIRATION_BOUNDS);
        Ok(ForecastSeries {
            issued_at_minute: tail[tail.len() - 1].minute_index + 1,
            heart_rate: to_horizon(hr_out),
            respiration: to_horizon(rr_out),
            clamped,
        })
    }

    /// Writes `manifest.txt`, both network files and the normalizer into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.hr_net.save(&dir.join("hr_net.txt"))?;
        self.rr_net.save(&dir.join("rr_net.txt"))?;
        self.normalizer.save(&dir.join("normalizer.txt"))?;
        let mut m = KvWriter::default();
        m.field("format", FORECAST_BUNDLE_FORMAT)
            .field("version", BUNDLE_VERSION)
            .field("hr_model", "hr_net.txt")
            .field("rr_model", "rr_net.txt")
            .field("normalizer", "normalizer.txt");
        std::fs::write(dir.join("manifest.txt"), m.finish())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = read_manifest(dir, FORECAST_BUNDLE_FORMAT)?;
        let hr_net = Mlp::load(&dir.join(manifest.get::<String>("hr_model")?))?;
        let rr_net = Mlp::load(&dir.join(manifest.get::<String>("rr_model")?))?;
        let normalizer = Normalizer::load(&dir.join(manifest.get::<String>("normalizer")?))?;
        for net in [&hr_net, &rr_net] {
            if net.input_dim() != FORECAST_FEATURES || net.output_dim() != FORECAST_HORIZON_STEPS {
                return Err(Error::ModelFormat(format!(
                    "forecast net must map {FORECAST_FEATURES} -> {FORECAST_HORIZON_STEPS}, got {:?}",
                    net.sizes()
                )));
            }
        }
        if normalizer.width() != FORECAST_FEATURES {
            return Err(Error::ModelFormat("normalizer width mismatch".into()));
        }
        Ok(Self {
            hr_net,
            rr_net,
            normalizer,
        })
    }
}

pub(crate) fn read_manifest(dir: &Path, format: &str) -> Result<KvMap> {
    let path = dir.join("manifest.txt");
    if !path.exists() {
        return Err(Error::MissingFile(path));
    }
    let manifest = KvMap::parse(&std::fs::read_to_string(&path)?)?;
    let found: String = manifest.get("format")?;
    let version: u32 = manifest.get("version")?;
    if found != format || version != BUNDLE_VERSION {
        return Err(Error::ModelFormat(format!(
            "expected {format} v{BUNDLE_VERSION}, found {found} v{version}"
        )));
    }
    Ok(manifest)
}

pub fn predict(
    model: &ForecastModel,
    history: &[VitalSample],
    d: &Demographics,
) -> Result<ForecastSeries> {
    model.predict(history, d)
}

/// Repeats the last usable heart rate and respiration for every step.
pub fn persistence_baseline(history: &[VitalSample]) -> Result<ForecastSeries> {
    let last = history
        .iter()
        .rev()
        .find(|s| s.quality.is_usable())
        .ok_or(Error::EmptyHistory)?;
    Ok(ForecastSeries {
        issued_at_minute: history[history.len() - 1].minute_index + 1,
        heart_rate: [last.heart_rate_bpm; FORECAST_HORIZON_STEPS],
        respiration: [last.respiration_bpm; FORECAST_HORIZON_STEPS],
        clamped: false,
    })
}
