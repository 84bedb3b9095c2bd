use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{adam_step, backward, AdamState, Gradients, Mlp, TrainConfig};
use crate::error::{Error, Result};

/// Mini-batch Adam over shuffled batches. Returns the mean per-sample loss of
/// each epoch, measured on the batches as they were visited.
pub fn train(
    model: &mut Mlp,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if inputs.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            actual: targets.len(),
        });
    }
    for (x, y) in inputs.iter().zip(targets) {
        model.check_input(x)?;
        if y.len() != model.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: model.output_dim(),
                actual: y.len(),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = AdamState::new(model.param_count());
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut params = model.flat_params();

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut sum = Gradients::zeros_like(model);
            for &i in batch {
                let (loss, g) = backward(model, &inputs[i], &targets[i], cfg.loss)?;
                epoch_loss += loss;
                sum.add_scaled(&g, 1.0 / batch.len() as f64);
            }
            adam_step(&mut params, &sum.flatten(), &mut state, cfg)?;
            model.set_flat_params(&params)?;
        }
        history.push(epoch_loss / inputs.len() as f64);
    }
    Ok(history)
}
