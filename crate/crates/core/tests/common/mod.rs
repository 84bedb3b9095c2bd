#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ward_monitor::domain::{ActivityLabel, Demographics, Sex};
use ward_monitor::nn::{Activation, Mlp};

pub fn person() -> Demographics {
    Demographics {
        age_years: 52,
        sex: Sex::Male,
        height_cm: 176.0,
        weight_kg: 81.0,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn random_label(rng: &mut ChaCha8Rng) -> ActivityLabel {
    ActivityLabel::ALL[rng.random_range(0..ActivityLabel::ALL.len())]
}

/// Forward pass by explicit double summation over `weight(o, i)`.
pub fn forward_oracle(model: &Mlp, input: &[f64]) -> Vec<f64> {
    let mut x = input.to_vec();
    for layer in model.layers() {
        let mut next = Vec::with_capacity(layer.outputs());
        for o in 0..layer.outputs() {
            let mut z = layer.bias()[o];
            for (i, xi) in x.iter().enumerate() {
                z += layer.weight(o, i) * xi;
            }
            next.push(match layer.activation() {
                Activation::Relu => {
                    if z > 0.0 {
                        z
                    } else {
                        0.0
                    }
                }
                Activation::Identity => z,
                Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            });
        }
        x = next;
    }
    x
}

pub fn mae_oracle(p: &[f64], t: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        s += (p[i] - t[i]).abs();
    }
    s / p.len() as f64
}

pub fn mse_oracle(p: &[f64], t: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        s += (p[i] - t[i]).powi(2);
    }
    s / p.len() as f64
}

pub fn bce_oracle(p: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        let q = p[i].max(1e-7).min(1.0 - 1e-7);
        s -= if y[i] == 1.0 {
            q.ln()
        } else if y[i] == 0.0 {
            (1.0 - q).ln()
        } else {
            y[i] * q.ln() + (1.0 - y[i]) * (1.0 - q).ln()
        };
    }
    s / p.len() as f64
}

/// `(tp, fp, fn, tn)` for one label by brute-force enumeration.
pub fn counts_oracle(
    pred: &[ActivityLabel],
    truth: &[ActivityLabel],
    label: ActivityLabel,
) -> (u64, u64, u64, u64) {
    let tp = (0..pred.len())
        .filter(|&i| pred[i] == label && truth[i] == label)
        .count() as u64;
    let fp = (0..pred.len())
        .filter(|&i| pred[i] == label && truth[i] != label)
        .count() as u64;
    let fn_ = (0..pred.len())
        .filter(|&i| pred[i] != label && truth[i] == label)
        .count() as u64;
    let tn = pred.len() as u64 - tp - fp - fn_;
    (tp, fp, fn_, tn)
}

pub fn balanced_accuracy_oracle(pred: &[ActivityLabel], truth: &[ActivityLabel]) -> f64 {
    let mut recalls = Vec::new();
    for label in ActivityLabel::ALL {
        let total = truth.iter().filter(|&&t| t == label).count();
        if total == 0 {
            continue;
        }
        let hit = (0..truth.len())
            .filter(|&i| truth[i] == label && pred[i] == label)
            .count();
        recalls.push(hit as f64 / total as f64);
    }
    recalls.iter().sum::<f64>() / recalls.len() as f64
}

/// Instance anchors by scanning every minute.
pub fn anchors_oracle(len: usize) -> Vec<usize> {
    (0..=len)
        .filter(|&a| a >= 75 && (a - 75) % 15 == 0 && a + 180 <= len)
        .collect()
}
