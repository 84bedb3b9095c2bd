//! Ten-label activity classifier with independent sigmoid outputs.

use std::path::Path;

use crate::domain::{ActivityLabel, ActivityProbabilities, NUM_ACTIVITIES};
use crate::error::{Error, Result};
use crate::forecast::{read_manifest, BUNDLE_VERSION};
use crate::kv::{KvMap, KvRecord, KvWriter};
use crate::nn::{self, Activation, Loss, Mlp, TrainConfig};
use crate::normalize::Normalizer;
use crate::signal::{ActivityWindow, ACTIVITY_FEATURES};

pub const ACTIVITY_LAYERS: [usize; 5] = [ACTIVITY_FEATURES, 64, 32, 16, NUM_ACTIVITIES];
pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const ACTIVITY_BUNDLE_FORMAT: &str = "ward-activity-model";

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityModel {
    pub net: Mlp,
    pub normalizer: Normalizer,
    threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityDecision {
    pub probabilities: ActivityProbabilities,
    /// Labels with probability at or above the threshold, in index order.
    pub active_labels: Vec<ActivityLabel>,
    /// Argmax of the probabilities; lowest index wins ties.
    pub current_status: ActivityLabel,
}

impl ActivityDecision {
    pub fn from_probabilities(probabilities: ActivityProbabilities, threshold: f64) -> Self {
        let active_labels = ActivityLabel::ALL
            .into_iter()
            .filter(|&l| probabilities.get(l) >= threshold)
            .collect();
        Self {
            current_status: probabilities.argmax(),
            active_labels,
            probabilities,
        }
    }
}

impl KvRecord for ActivityDecision {
    fn write_kv(&self, out: &mut KvWriter) {
        out.list("probs", self.probabilities.0)
            .list("active_labels", &self.active_labels)
            .field("current_status", self.current_status);
    }

    fn read_kv(map: &KvMap) -> Result<Self> {
        let probs: Vec<f64> = map.get_list("probs")?;
        let probs: [f64; NUM_ACTIVITIES] = probs
            .try_into()
            .map_err(|_| Error::parse("probs must have 10 entries"))?;
        Ok(Self {
            probabilities: ActivityProbabilities::new(probs)?,
            active_labels: map.get_list("active_labels")?,
            current_status: map.get("current_status")?,
        })
    }
}

/// One-hot target for a label.
pub fn one_hot(label: ActivityLabel) -> Vec<f64> {
    let mut v = vec![0.0; NUM_ACTIVITIES];
    v[label.index()] = 1.0;
    v
}

fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "threshold {threshold} outside (0, 1)"
        )))
    }
}

/// Trains on labelled windows with BCE against one-hot targets. Returns the
/// model and the per-epoch loss history.
pub fn train_classifier(
    windows: &[ActivityWindow],
    cfg: &TrainConfig,
) -> Result<(ActivityModel, Vec<f64>)> {
    if cfg.loss != Loss::Bce {
        return Err(Error::InvalidConfig(
            "classifier trains with BCE loss".into(),
        ));
    }
    if windows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let targets: Vec<Vec<f64>> = windows
        .iter()
        .enumerate()
        .map(|(i, w)| w.truth.map(one_hot).ok_or(Error::UnlabeledWindow(i)))
        .collect::<Result<_>>()?;
    let raw: Vec<Vec<f64>> = windows.iter().map(|w| w.features.to_vec()).collect();
    let normalizer = Normalizer::fit(&raw)?;
    let inputs: Vec<Vec<f64>> = raw
        .iter()
        .map(|x| normalizer.apply(x))
        .collect::<Result<_>>()?;
    let mut net = Mlp::random(&ACTIVITY_LAYERS, Activation::Sigmoid, cfg.seed)?;
    let history = nn::train(&mut net, &inputs, &targets, cfg)?;
    Ok((
        ActivityModel {
            net,
            normalizer,
            threshold: DEFAULT_THRESHOLD,
        },
        history,
    ))
}

impl ActivityModel {
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn set_threshold(&mut self, threshold: f64) -> Result<()> {
        check_threshold(threshold)?;
        self.threshold = threshold;
        Ok(())
    }

    pub fn probabilities(&self, features: &[f64]) -> Result<ActivityProbabilities> {
        let x = self.normalizer.apply(features)?;
        let out = self.net.forward(&x)?;
        let probs: [f64; NUM_ACTIVITIES] = out
            .try_into()
            .map_err(|_| Error::ModelFormat("classifier must emit 10 outputs".into()))?;
        ActivityProbabilities::new(probs)
    }

    /// Pre-sigmoid outputs.
    pub fn logits(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.net.logits(&self.normalizer.apply(features)?)
    }

    pub fn classify(&self, features: &[f64]) -> Result<ActivityDecision> {
        if features.len() != ACTIVITY_FEATURES {
            return Err(Error::DimensionMismatch {
                expected: ACTIVITY_FEATURES,
                actual: features.len(),
            });
        }
        Ok(ActivityDecision::from_probabilities(
            self.probabilities(features)?,
            self.threshold,
        ))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.net.save(&dir.join("net.txt"))?;
        self.normalizer.save(&dir.join("normalizer.txt"))?;
        let mut m = KvWriter::default();
        m.field("format", ACTIVITY_BUNDLE_FORMAT)
            .field("version", BUNDLE_VERSION)
            .field("model", "net.txt")
            .field("normalizer", "normalizer.txt")
            .field("threshold", self.threshold);
        std::fs::write(dir.join("manifest.txt"), m.finish())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = read_manifest(dir, ACTIVITY_BUNDLE_FORMAT)?;
        let net = Mlp::load(&dir.join(manifest.get::<String>("model")?))?;
        let normalizer = Normalizer::load(&dir.join(manifest.get::<String>("normalizer")?))?;
        let threshold: f64 = manifest.get("threshold")?;
        check_threshold(threshold)?;
        if net.input_dim() != ACTIVITY_FEATURES || net.output_dim() != NUM_ACTIVITIES {
            return Err(Error::ModelFormat(format!(
                "activity net must map {ACTIVITY_FEATURES} -> {NUM_ACTIVITIES}, got {:?}",
                net.sizes()
            )));
        }
        if normalizer.width() != ACTIVITY_FEATURES {
            return Err(Error::ModelFormat("normalizer width mismatch".into()));
        }
        Ok(Self {
            net,
            normalizer,
            threshold,
        })
    }
}

pub fn classify(model: &ActivityModel, w: &ActivityWindow) -> Result<ActivityDecision> {
    model.classify(&w.features)
}
