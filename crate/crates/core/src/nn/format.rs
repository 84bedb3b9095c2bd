//! Versioned text model file.
//!
//! ```text
//! ward-mlp 1
//! layers <count>
//! layer <inputs> <outputs> <relu|identity|sigmoid>
//! w <inputs values>          (one line per output row)
//! b <outputs values>
//! ...
//! ```
//!
//! Values use `{:.16e}` (17 significant digits), which parses back to the
//! identical `f64`, so `save(load(save(m))) == save(m)` byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use super::{Activation, DenseLayer, Mlp};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_HEADER: &str = "ward-mlp 1";

fn write_values(out: &mut String, tag: char, values: &[f64]) {
    out.push(tag);
    for v in values {
        let _ = write!(out, " {v:.16e}");
    }
    out.push('\n');
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::ModelFormat(format!("line {line}: {msg}"))
}

impl Mlp {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MODEL_FORMAT_HEADER}");
        let _ = writeln!(out, "layers {}", self.layers().len());
        for layer in self.layers() {
            let _ = writeln!(
                out,
                "layer {} {} {}",
                layer.inputs(),
                layer.outputs(),
                layer.activation()
            );
            for row in layer.weights().chunks_exact(layer.inputs()) {
                write_values(&mut out, 'w', row);
            }
            write_values(&mut out, 'b', layer.bias());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| {
                Error::ModelFormat(format!("unexpected end of file, expected {what}"))
            })
        };
        let (ln, header) = next("header")?;
        if header != MODEL_FORMAT_HEADER {
            return Err(bad(ln, format!("unsupported header {header:?}")));
        }
        let (ln, count_line) = next("layer count")?;
        let count: usize = count_line
            .strip_prefix("layers ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(ln, "expected `layers <count>`"))?;

        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, spec) = next("layer header")?;
            let parts: Vec<&str> = spec.split(' ').collect();
            if parts.len() != 4 || parts[0] != "layer" {
                return Err(bad(ln, "expected `layer <in> <out> <activation>`"));
            }
            let inputs: usize = parts[1].parse().map_err(|_| bad(ln, "bad input width"))?;
            let outputs: usize = parts[2].parse().map_err(|_| bad(ln, "bad output width"))?;
            let activation: Activation = parts[3].parse()?;
            let mut weights = Vec::with_capacity(inputs * outputs);
            for _ in 0..outputs {
                let (ln, row) = next("weight row")?;
                weights.extend(parse_values(ln, row, 'w', inputs)?);
            }
            let (ln, row) = next("bias row")?;
            let bias = parse_values(ln, row, 'b', outputs)?;
            layers.push(DenseLayer::from_flat(
                inputs, outputs, weights, bias, activation,
            )?);
        }
        if let Some((ln, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(bad(ln, format!("trailing content {extra:?}")));
        }
        Mlp::new(layers)
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

fn parse_values(ln: usize, row: &str, tag: char, expected: usize) -> Result<Vec<f64>> {
    let mut parts = row.split(' ');
    if parts.next() != Some(tag.encode_utf8(&mut [0; 4])) {
        return Err(bad(ln, format!("expected `{tag}` row")));
    }
    let values: Vec<f64> = parts
        .map(|s| {
            s.parse()
                .map_err(|_| bad(ln, format!("invalid number {s:?}")))
        })
        .collect::<Result<_>>()?;
    if values.len() != expected {
        return Err(bad(
            ln,
            format!("expected {expected} values, got {}", values.len()),
        ));
    }
    Ok(values)
}
