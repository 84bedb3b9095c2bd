use super::{backward, Activation, Loss, Mlp, PROB_CLAMP};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Discrete state of every non-smooth point the loss passes through: ReLU
/// on/off, MAE residual sign and BCE clamp activity. Finite differences are
/// only valid when this does not change inside `[θ - h, θ + h]`.
fn kink_signature(model: &Mlp, input: &[f64], truth: &[f64], loss: Loss) -> Vec<i8> {
    let trace = model.trace(input);
    let mut sig = Vec::new();
    for (layer, pre) in model.layers().iter().zip(&trace.pre) {
        if layer.activation() == Activation::Relu {
            sig.extend(pre.iter().map(|&z| (z > 0.0) as i8));
        }
    }
    let out = trace.post.last().expect("non-empty");
    match loss {
        Loss::Mae => sig.extend(out.iter().zip(truth).map(|(p, t)| (p - t).signum() as i8)),
        Loss::Bce => sig.extend(out.iter().map(|&p| {
            if p < PROB_CLAMP {
                -1
            } else if p > 1.0 - PROB_CLAMP {
                1
            } else {
                0
            }
        })),
    }
    sig
}

/// Largest relative disagreement between backpropagated and central-difference
/// gradients, `|a - n| / max(|a|, |n|, 1e-8)`. Parameters whose perturbation
/// crosses a kink are skipped.
pub fn gradient_check(model: &Mlp, input: &[f64], truth: &[f64], loss: Loss) -> f64 {
    let (_, grads) = backward(model, input, truth, loss).expect("shapes checked by caller");
    let analytic = grads.flatten();
    let base = model.flat_params();
    let reference = kink_signature(model, input, truth, loss);
    let mut probe = model.clone();
    let mut params = base.clone();
    let mut worst: f64 = 0.0;

    for i in 0..base.len() {
        let mut eval = |value: f64| {
            params[i] = value;
            probe.set_flat_params(&params).expect("same shape");
            let out = probe.forward(input).expect("same shape");
            let l = loss.value(&out, truth).expect("same shape");
            (l, kink_signature(&probe, input, truth, loss))
        };
        let (plus, sig_plus) = eval(base[i] + FD_STEP);
        let (minus, sig_minus) = eval(base[i] - FD_STEP);
        params[i] = base[i];
        if sig_plus != reference || sig_minus != reference {
            continue;
        }
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::DenseLayer;

    #[test]
    fn identity_layer_mae_is_near_exact() {
        let layer = DenseLayer::new(
            vec![vec![0.4, -0.3, 0.2], vec![0.1, 0.5, -0.6]],
            vec![0.05, -0.02],
            Activation::Identity,
        )
        .unwrap();
        let m = Mlp::new(vec![layer]).unwrap();
        let err = gradient_check(&m, &[0.7, -1.1, 0.4], &[2.0, -3.0], Loss::Mae);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn random_nets_both_losses() {
        for seed in 0..3 {
            let x: Vec<f64> = (0..5)
                .map(|i| ((seed * 7 + i) as f64 * 0.61).sin())
                .collect();
            let reg = Mlp::random(&[5, 7, 6, 4, 3], Activation::Identity, seed).unwrap();
            let err = gradient_check(&reg, &x, &[0.3, -0.8, 1.2], Loss::Mae);
            assert!(err < 1e-4, "mae seed {seed}: {err}");
            let cls = Mlp::random(&[5, 7, 6, 4, 3], Activation::Sigmoid, seed).unwrap();
            let err = gradient_check(&cls, &x, &[1.0, 0.0, 0.0], Loss::Bce);
            assert!(err < 1e-4, "bce seed {seed}: {err}");
        }
    }
}
