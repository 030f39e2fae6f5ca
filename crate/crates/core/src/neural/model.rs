use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::{prefixed, Params};
use super::{check_len, mse_loss, Activation, Conv1dPool, Dense, Lstm, NeuralError, Tensor};

/// A window-to-horizon regression network trained with MSE.
pub trait Network: Params + Clone {
    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn predict(&self, window: &[f64]) -> Result<Vec<f64>, NeuralError>;

    /// Adds `weight` times the gradient of the sample's MSE to `grads`; returns the MSE.
    fn accumulate_gradient(
        &self,
        window: &[f64],
        target: &[f64],
        weight: f64,
        grads: &mut Self,
    ) -> Result<f64, NeuralError>;

    /// Parameter-shaped zeros, used as a gradient buffer.
    fn zeros_like(&self) -> Self;

    /// One-line architecture description, also the model-file header.
    fn describe(&self) -> String;

    /// Mean MSE over the batch; `grads` is overwritten with the averaged gradient.
    fn batch_gradient(&self, windows: &[&[f64]], targets: &[&[f64]], grads: &mut Self) -> Result<f64, NeuralError> {
        check_len(windows.len(), targets.len())?;
        if windows.is_empty() {
            return Err(NeuralError::EmptyDataset);
        }
        grads.zero();
        let weight = 1.0 / windows.len() as f64;
        let mut loss = 0.0;
        for (x, y) in windows.iter().zip(targets) {
            loss += self.accumulate_gradient(x, y, weight, grads)?;
        }
        Ok(loss * weight)
    }

    fn batch_loss(&self, windows: &[&[f64]], targets: &[&[f64]]) -> Result<f64, NeuralError> {
        check_len(windows.len(), targets.len())?;
        let mut loss = 0.0;
        for (x, y) in windows.iter().zip(targets) {
            loss += mse_loss(&self.predict(x)?, y)?.0;
        }
        Ok(loss / windows.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmShape {
    pub lookback: usize,
    pub units: usize,
    pub horizon: usize,
}

/// LSTM over the univariate lookback window, last hidden state, linear dense head.
#[derive(Debug, Clone)]
pub struct LstmNet {
    pub shape: LstmShape,
    pub lstm: Lstm,
    pub head: Dense,
}

impl LstmNet {
    pub fn new(shape: LstmShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lstm = Lstm::init(1, shape.units, &mut rng);
        let head = Dense::init(shape.units, shape.horizon, Activation::Linear, &mut rng);
        Self { shape, lstm, head }
    }
}

impl Params for LstmNet {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = prefixed("lstm", self.lstm.tensors());
        out.extend(prefixed("head", self.head.tensors()));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = self.lstm.tensors_mut();
        out.extend(self.head.tensors_mut());
        out
    }
}

impl Network for LstmNet {
    fn input_len(&self) -> usize {
        self.shape.lookback
    }

    fn output_len(&self) -> usize {
        self.shape.horizon
    }

    fn predict(&self, window: &[f64]) -> Result<Vec<f64>, NeuralError> {
        check_len(self.shape.lookback, window.len())?;
        let cache = self.lstm.forward_flat(window, window.len());
        Ok(self.head.forward(cache.last_hidden())?.0)
    }

    fn accumulate_gradient(
        &self,
        window: &[f64],
        target: &[f64],
        weight: f64,
        grads: &mut Self,
    ) -> Result<f64, NeuralError> {
        check_len(self.shape.lookback, window.len())?;
        let steps = window.len();
        let lstm_cache = self.lstm.forward_flat(window, steps);
        let (y, head_cache) = self.head.forward(lstm_cache.last_hidden())?;
        let (loss, mut dy) = mse_loss(&y, target)?;
        dy.iter_mut().for_each(|g| *g *= weight);
        let d_last = self.head.backward(&head_cache, &dy, &mut grads.head)?;
        let units = self.shape.units;
        let mut dh = vec![0.0; steps * units];
        dh[(steps - 1) * units..].copy_from_slice(&d_last);
        self.lstm.backward(&lstm_cache, &dh, &mut grads.lstm)?;
        Ok(loss)
    }

    fn zeros_like(&self) -> Self {
        Self {
            shape: self.shape,
            lstm: Lstm::zeros(1, self.shape.units),
            head: Dense::zeros(self.shape.units, self.shape.horizon, Activation::Linear),
        }
    }

    fn describe(&self) -> String {
        format!(
            "lstm lookback={} units={} horizon={}",
            self.shape.lookback, self.shape.units, self.shape.horizon
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CnnLstmShape {
    pub lookback: usize,
    pub filters: usize,
    pub kernel: usize,
    pub pool: usize,
    pub units: usize,
    pub dense: usize,
    pub horizon: usize,
}

/// Conv1D + LeakyReLU + max-pool encoder feeding an LSTM, then a LeakyReLU dense layer and a
/// linear head.
#[derive(Debug, Clone)]
pub struct CnnLstmNet {
    pub shape: CnnLstmShape,
    pub conv: Conv1dPool,
    pub lstm: Lstm,
    pub hidden: Dense,
    pub head: Dense,
}

impl CnnLstmNet {
    pub fn new(shape: CnnLstmShape, seed: u64) -> Result<Self, NeuralError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let conv = Conv1dPool::init(1, shape.filters, shape.kernel, shape.pool, &mut rng)?;
        if conv.output_len(shape.lookback) == 0 {
            return Err(NeuralError::SequenceTooShort {
                len: shape.lookback,
                kernel: shape.kernel,
            });
        }
        let lstm = Lstm::init(shape.filters, shape.units, &mut rng);
        let hidden = Dense::init(shape.units, shape.dense, Activation::LeakyRelu, &mut rng);
        let head = Dense::init(shape.dense, shape.horizon, Activation::Linear, &mut rng);
        Ok(Self {
            shape,
            conv,
            lstm,
            hidden,
            head,
        })
    }
}

impl Params for CnnLstmNet {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = prefixed("conv", self.conv.tensors());
        out.extend(prefixed("lstm", self.lstm.tensors()));
        out.extend(prefixed("hidden", self.hidden.tensors()));
        out.extend(prefixed("head", self.head.tensors()));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = self.conv.tensors_mut();
        out.extend(self.lstm.tensors_mut());
        out.extend(self.hidden.tensors_mut());
        out.extend(self.head.tensors_mut());
        out
    }
}

impl Network for CnnLstmNet {
    fn input_len(&self) -> usize {
        self.shape.lookback
    }

    fn output_len(&self) -> usize {
        self.shape.horizon
    }

    fn predict(&self, window: &[f64]) -> Result<Vec<f64>, NeuralError> {
        check_len(self.shape.lookback, window.len())?;
        let conv_cache = self.conv.forward_flat(window, window.len())?;
        let pooled = self.conv.pooled(&conv_cache);
        let steps = self.conv.output_len(window.len());
        let lstm_cache = self.lstm.forward_flat(&pooled, steps);
        let (z, _) = self.hidden.forward(lstm_cache.last_hidden())?;
        Ok(self.head.forward(&z)?.0)
    }

    fn accumulate_gradient(
        &self,
        window: &[f64],
        target: &[f64],
        weight: f64,
        grads: &mut Self,
    ) -> Result<f64, NeuralError> {
        check_len(self.shape.lookback, window.len())?;
        let conv_cache = self.conv.forward_flat(window, window.len())?;
        let pooled = self.conv.pooled(&conv_cache);
        let steps = self.conv.output_len(window.len());
        let lstm_cache = self.lstm.forward_flat(&pooled, steps);
        let (z, hidden_cache) = self.hidden.forward(lstm_cache.last_hidden())?;
        let (y, head_cache) = self.head.forward(&z)?;
        let (loss, mut dy) = mse_loss(&y, target)?;
        dy.iter_mut().for_each(|g| *g *= weight);
        let dz = self.head.backward(&head_cache, &dy, &mut grads.head)?;
        let d_last = self.hidden.backward(&hidden_cache, &dz, &mut grads.hidden)?;
        let units = self.shape.units;
        let mut dh = vec![0.0; steps * units];
        dh[(steps - 1) * units..].copy_from_slice(&d_last);
        let d_pooled = self.lstm.backward(&lstm_cache, &dh, &mut grads.lstm)?;
        self.conv.backward(&conv_cache, &d_pooled, &mut grads.conv)?;
        Ok(loss)
    }

    fn zeros_like(&self) -> Self {
        let s = self.shape;
        Self {
            shape: s,
            conv: Conv1dPool::zeros(1, s.filters, s.kernel, s.pool).expect("validated at construction"),
            lstm: Lstm::zeros(s.filters, s.units),
            hidden: Dense::zeros(s.units, s.dense, Activation::LeakyRelu),
            head: Dense::zeros(s.dense, s.horizon, Activation::Linear),
        }
    }

    fn describe(&self) -> String {
        let s = self.shape;
        format!(
            "cnn_lstm lookback={} filters={} kernel={} pool={} units={} dense={} horizon={}",
            s.lookback, s.filters, s.kernel, s.pool, s.units, s.dense, s.horizon
        )
    }
}
