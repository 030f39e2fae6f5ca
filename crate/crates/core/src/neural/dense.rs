use rand::Rng;

use super::params::Params;
use super::{check_len, glorot_uniform, NeuralError, Tensor};

pub const LEAKY_SLOPE: f64 = 0.01;

pub fn leaky_relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Tanh,
    LeakyRelu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Tanh => x.tanh(),
            Activation::LeakyRelu => leaky_relu(x),
        }
    }

    /// Derivative given the pre-activation `x` and the output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::LeakyRelu => {
                if x > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Linear => "linear",
            Activation::Tanh => "tanh",
            Activation::LeakyRelu => "leaky_relu",
        }
    }
}

/// Fully connected layer `y = act(W x + b)`, `W` of shape `[out, in]`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub w: Tensor,
    pub b: Tensor,
    pub activation: Activation,
    version: u64,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    x: Vec<f64>,
    pre: Vec<f64>,
    out: Vec<f64>,
    version: u64,
}

impl Dense {
    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Self {
            w: Tensor::zeros(&[output, input]),
            b: Tensor::zeros(&[output]),
            activation,
            version: 0,
        }
    }

    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, activation: Activation, rng: &mut R) -> Self {
        let mut layer = Self::zeros(input, output, activation);
        layer
            .w
            .data_mut()
            .copy_from_slice(&glorot_uniform(rng, input, output, input * output));
        layer
    }

    pub fn input_dim(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn output_dim(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, DenseCache), NeuralError> {
        let (n_in, n_out) = (self.input_dim(), self.output_dim());
        check_len(n_in, x.len())?;
        let w = self.w.data();
        let mut pre = self.b.data().to_vec();
        for (o, p) in pre.iter_mut().enumerate() {
            let row = &w[o * n_in..(o + 1) * n_in];
            *p += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        let out: Vec<f64> = pre.iter().map(|v| self.activation.apply(*v)).collect();
        debug_assert_eq!(out.len(), n_out);
        Ok((
            out.clone(),
            DenseCache {
                x: x.to_vec(),
                pre,
                out,
                version: self.version,
            },
        ))
    }

    /// Accumulates parameter gradients into `grads` and returns the input gradient.
    pub fn backward(&self, cache: &DenseCache, dy: &[f64], grads: &mut Dense) -> Result<Vec<f64>, NeuralError> {
        if cache.version != self.version {
            return Err(NeuralError::StaleCache);
        }
        let n_in = self.input_dim();
        check_len(self.output_dim(), dy.len())?;
        grads.w.expect_shape(self.w.shape())?;
        let w = self.w.data();
        let mut dx = vec![0.0; n_in];
        let gw = grads.w.data_mut();
        let mut gb = vec![0.0; dy.len()];
        for o in 0..dy.len() {
            let dz = dy[o] * self.activation.derivative(cache.pre[o], cache.out[o]);
            gb[o] = dz;
            if dz == 0.0 {
                continue;
            }
            let row = &w[o * n_in..(o + 1) * n_in];
            let grow = &mut gw[o * n_in..(o + 1) * n_in];
            for i in 0..n_in {
                grow[i] += dz * cache.x[i];
                dx[i] += dz * row[i];
            }
        }
        for (g, d) in grads.b.data_mut().iter_mut().zip(gb) {
            *g += d;
        }
        Ok(dx)
    }
}

impl Params for Dense {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        vec![("w".into(), &self.w), ("b".into(), &self.b)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.version += 1;
        vec![&mut self.w, &mut self.b]
    }
}
