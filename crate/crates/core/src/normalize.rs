//! Per-feature standardisation fitted on training inputs.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const NORMALIZER_HEADER: &str = "ward-normalizer 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Normalizer {
    /// Population mean and standard deviation of each column.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyDataset)?;
        let width = first.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != width) {
            return Err(Error::DimensionMismatch {
                expected: width,
                actual: bad.len(),
            });
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; width];
        for r in rows {
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for r in rows {
            var.iter_mut()
                .zip(r)
                .zip(&mean)
                .for_each(|((s, v), m)| *s += (v - m) * (v - m));
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Self { mean, std })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    /// `(x - mean) / std`; zero-variance features map to 0.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.width() {
            return Err(Error::DimensionMismatch {
                expected: self.width(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{NORMALIZER_HEADER}\nfeatures {}\n", self.width());
        for (tag, values) in [("mean", &self.mean), ("std", &self.std)] {
            out.push_str(tag);
            for v in values {
                let _ = write!(out, " {v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(NORMALIZER_HEADER) {
            return Err(Error::ModelFormat("missing normalizer header".into()));
        }
        let width: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("features "))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::ModelFormat("expected `features <n>`".into()))?;
        let mut row = |tag: &str| -> Result<Vec<f64>> {
            let line = lines
                .next()
                .and_then(|l| l.strip_prefix(tag))
                .ok_or_else(|| Error::ModelFormat(format!("expected `{tag}` row")))?;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::ModelFormat(format!("invalid number {s:?}")))
                })
                .collect::<Result<_>>()?;
            if values.len() != width {
                return Err(Error::ModelFormat(format!(
                    "{tag} row has {} values, expected {width}",
                    values.len()
                )));
            }
            Ok(values)
        };
        let mean = row("mean")?;
        let std = row("std")?;
        if std.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::ModelFormat("negative standard deviation".into()));
        }
        Ok(Self { mean, std })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
