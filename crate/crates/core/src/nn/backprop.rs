use super::{Loss, Mlp};
use crate::error::{Error, Result};

/// Parameter gradients shaped like the network: per layer, row-major weight
/// gradients and bias gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &Mlp) -> Self {
        Self {
            weights: model
                .layers()
                .iter()
                .map(|l| vec![0.0; l.weights().len()])
                .collect(),
            bias: model
                .layers()
                .iter()
                .map(|l| vec![0.0; l.bias().len()])
                .collect(),
        }
    }

    /// Same ordering as [`Mlp::flat_params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += scale * y);
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += scale * y);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.bias)
            .flatten()
            .fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Loss value and exact reverse-mode gradients for one sample.
pub fn backward(model: &Mlp, input: &[f64], truth: &[f64], loss: Loss) -> Result<(f64, Gradients)> {
    model.check_input(input)?;
    if truth.len() != model.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.output_dim(),
            actual: truth.len(),
        });
    }
    let trace = model.trace(input);
    let output = trace.post.last().expect("non-empty network");
    let value = loss.value(output, truth)?;
    let mut upstream = loss.grad(output, truth)?;
    let mut grads = Gradients::zeros_like(model);

    for (li, layer) in model.layers().iter().enumerate().rev() {
        let x = if li == 0 { input } else { &trace.post[li - 1] };
        let delta: Vec<f64> = upstream
            .iter()
            .zip(&trace.pre[li])
            .zip(&trace.post[li])
            .map(|((g, &z), &a)| g * layer.activation().derivative(z, a))
            .collect();
        let n_in = layer.inputs();
        let gw = &mut grads.weights[li];
        for (j, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            for (gw_ji, xi) in gw[j * n_in..(j + 1) * n_in].iter_mut().zip(x) {
                *gw_ji = d * xi;
            }
        }
        grads.bias[li].copy_from_slice(&delta);
        if li > 0 {
            let mut next = vec![0.0; n_in];
            for (j, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights()[j * n_in..(j + 1) * n_in];
                for (acc, w) in next.iter_mut().zip(row) {
                    *acc += w * d;
                }
            }
            upstream = next;
        }
    }
    Ok((value, grads))
}
