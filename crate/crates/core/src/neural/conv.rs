use rand::Rng;

use super::dense::{leaky_relu, LEAKY_SLOPE};
use super::params::Params;
use super::{glorot_uniform, NeuralError, Tensor};

/// Valid 1-D cross-correlation, bias, LeakyReLU and non-overlapping max-pooling.
///
/// `w` has shape `[filters, in_channels, kernel]`. Input and output are time-major:
/// `[steps, channels]` in, `[(steps - kernel + 1) / pool, filters]` out.
#[derive(Debug, Clone)]
pub struct Conv1dPool {
    pub w: Tensor,
    pub b: Tensor,
    pub pool: usize,
    version: u64,
}

#[derive(Debug, Clone)]
pub struct ConvCache {
    steps: usize,
    x: Vec<f64>,
    pre: Vec<f64>,
    /// Conv position selected by each pooled output.
    argmax: Vec<usize>,
    version: u64,
}

impl Conv1dPool {
    pub fn zeros(in_channels: usize, filters: usize, kernel: usize, pool: usize) -> Result<Self, NeuralError> {
        if kernel == 0 || pool == 0 {
            return Err(NeuralError::InvalidConfig("kernel and pool sizes must be >= 1".into()));
        }
        Ok(Self {
            w: Tensor::zeros(&[filters, in_channels, kernel]),
            b: Tensor::zeros(&[filters]),
            pool,
            version: 0,
        })
    }

    pub fn init<R: Rng + ?Sized>(
        in_channels: usize,
        filters: usize,
        kernel: usize,
        pool: usize,
        rng: &mut R,
    ) -> Result<Self, NeuralError> {
        let mut layer = Self::zeros(in_channels, filters, kernel, pool)?;
        let n = layer.w.len();
        layer
            .w
            .data_mut()
            .copy_from_slice(&glorot_uniform(rng, in_channels * kernel, filters * kernel, n));
        Ok(layer)
    }

    pub fn filters(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn kernel(&self) -> usize {
        self.w.shape()[2]
    }

    /// Pooled length for an input of `steps` time steps.
    pub fn output_len(&self, steps: usize) -> usize {
        steps.saturating_sub(self.kernel() - 1) / self.pool
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, ConvCache), NeuralError> {
        if x.shape().len() != 2 || x.shape()[1] != self.in_channels() {
            return Err(NeuralError::ShapeMismatch {
                expected: vec![x.shape().first().copied().unwrap_or(0), self.in_channels()],
                found: x.shape().to_vec(),
            });
        }
        let cache = self.forward_flat(x.data(), x.shape()[0])?;
        let out = self.pooled(&cache);
        Ok((Tensor::new(vec![self.output_len(cache.steps), self.filters()], out)?, cache))
    }

    pub(crate) fn pooled(&self, cache: &ConvCache) -> Vec<f64> {
        let f = self.filters();
        cache
            .argmax
            .iter()
            .enumerate()
            .map(|(idx, &pos)| leaky_relu(cache.pre[pos * f + idx % f]))
            .collect()
    }

    pub(crate) fn forward_flat(&self, x: &[f64], steps: usize) -> Result<ConvCache, NeuralError> {
        let (f, ch, k) = (self.filters(), self.in_channels(), self.kernel());
        if steps < k {
            return Err(NeuralError::SequenceTooShort { len: steps, kernel: k });
        }
        let conv_len = steps - k + 1;
        let (w, b) = (self.w.data(), self.b.data());
        let mut pre = vec![0.0; conv_len * f];
        for t in 0..conv_len {
            for fi in 0..f {
                let mut acc = b[fi];
                for c in 0..ch {
                    let wk = &w[(fi * ch + c) * k..(fi * ch + c + 1) * k];
                    for j in 0..k {
                        acc += wk[j] * x[(t + j) * ch + c];
                    }
                }
                pre[t * f + fi] = acc;
            }
        }
        let out_len = conv_len / self.pool;
        let mut argmax = vec![0; out_len * f];
        for p in 0..out_len {
            for fi in 0..f {
                let mut best = p * self.pool;
                for t in p * self.pool + 1..(p + 1) * self.pool {
                    // first maximum wins ties; LeakyReLU is monotone so compare preactivations
                    if pre[t * f + fi] > pre[best * f + fi] {
                        best = t;
                    }
                }
                argmax[p * f + fi] = best;
            }
        }
        Ok(ConvCache {
            steps,
            x: x.to_vec(),
            pre,
            argmax,
            version: self.version,
        })
    }

    /// `dy` is `[pooled_len, filters]`; returns the input gradient `[steps, in_channels]`.
    pub fn backward(&self, cache: &ConvCache, dy: &[f64], grads: &mut Conv1dPool) -> Result<Vec<f64>, NeuralError> {
        if cache.version != self.version {
            return Err(NeuralError::StaleCache);
        }
        let (f, ch, k) = (self.filters(), self.in_channels(), self.kernel());
        super::check_len(cache.argmax.len(), dy.len())?;
        grads.w.expect_shape(self.w.shape())?;
        let w = self.w.data();
        let mut dx = vec![0.0; cache.steps * ch];
        let gw = grads.w.data_mut();
        let mut gb = vec![0.0; f];
        for (idx, &t) in cache.argmax.iter().enumerate() {
            let fi = idx % f;
            let slope = if cache.pre[t * f + fi] > 0.0 { 1.0 } else { LEAKY_SLOPE };
            let dz = dy[idx] * slope;
            gb[fi] += dz;
            for c in 0..ch {
                let base = (fi * ch + c) * k;
                for j in 0..k {
                    gw[base + j] += dz * cache.x[(t + j) * ch + c];
                    dx[(t + j) * ch + c] += dz * w[base + j];
                }
            }
        }
        for (g, d) in grads.b.data_mut().iter_mut().zip(gb) {
            *g += d;
        }
        Ok(dx)
    }
}

impl Params for Conv1dPool {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        vec![("w".into(), &self.w), ("b".into(), &self.b)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.version += 1;
        vec![&mut self.w, &mut self.b]
    }
}
