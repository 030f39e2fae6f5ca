use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AdamState, Network, NeuralError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(NeuralError::InvalidConfig("epochs and batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NeuralError::InvalidConfig("learning_rate must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Dataset MSE before the first update.
    pub initial_loss: f64,
    /// Sample-weighted mean of the mini-batch losses of each epoch.
    pub epoch_losses: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        *self.epoch_losses.last().unwrap_or(&self.initial_loss)
    }
}

/// Mini-batch Adam on MSE. Sample order is reshuffled every epoch from `seed`; the run is
/// single-threaded and bit-reproducible.
pub fn train<N: Network>(
    net: &mut N,
    windows: &[Vec<f64>],
    targets: &[Vec<f64>],
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainReport, NeuralError> {
    config.validate()?;
    super::check_len(windows.len(), targets.len())?;
    if windows.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }
    let all_w: Vec<&[f64]> = windows.iter().map(|v| v.as_slice()).collect();
    let all_t: Vec<&[f64]> = targets.iter().map(|v| v.as_slice()).collect();
    let initial_loss = net.batch_loss(&all_w, &all_t)?;
    if !initial_loss.is_finite() {
        return Err(NeuralError::Diverged { epoch: 0 });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adam = AdamState::new(net.param_count(), config.learning_rate);
    let mut grads = net.zeros_like();
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let w: Vec<&[f64]> = batch.iter().map(|&i| all_w[i]).collect();
            let t: Vec<&[f64]> = batch.iter().map(|&i| all_t[i]).collect();
            let loss = net.batch_gradient(&w, &t, &mut grads)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(NeuralError::Diverged { epoch });
            }
            adam.update(net, &grads)?;
            total += loss * batch.len() as f64;
        }
        epoch_losses.push(total / windows.len() as f64);
    }
    if !net.is_finite() {
        return Err(NeuralError::Diverged { epoch: config.epochs });
    }
    Ok(TrainReport {
        initial_loss,
        epoch_losses,
    })
}
