use rand::Rng;

use super::params::Params;
use super::{glorot_uniform, NeuralError, Tensor};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// LSTM layer with gates stacked in the order input, forget, cell candidate, output.
///
/// `w` has shape `[4 units, input]`, `u` `[4 units, units]`, `b` `[4 units]`. Every sequence
/// starts from `h = c = 0`.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub w: Tensor,
    pub u: Tensor,
    pub b: Tensor,
    version: u64,
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    steps: usize,
    x: Vec<f64>,
    /// Activated gates per step, `[i f g o]` blocks of `units`.
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
    version: u64,
}

impl LstmCache {
    /// Hidden states, `steps x units` row-major.
    pub fn hidden(&self) -> &[f64] {
        &self.h
    }

    pub fn last_hidden(&self) -> &[f64] {
        let u = self.h.len() / self.steps;
        &self.h[(self.steps - 1) * u..]
    }
}

impl Lstm {
    pub fn zeros(input: usize, units: usize) -> Self {
        Self {
            w: Tensor::zeros(&[4 * units, input]),
            u: Tensor::zeros(&[4 * units, units]),
            b: Tensor::zeros(&[4 * units]),
            version: 0,
        }
    }

    /// Glorot-uniform weights per gate block, zero biases except the forget gate (1).
    pub fn init<R: Rng + ?Sized>(input: usize, units: usize, rng: &mut R) -> Self {
        let mut layer = Self::zeros(input, units);
        for gate in 0..4 {
            let w = glorot_uniform(rng, input, units, units * input);
            layer.w.data_mut()[gate * units * input..(gate + 1) * units * input].copy_from_slice(&w);
            let u = glorot_uniform(rng, units, units, units * units);
            layer.u.data_mut()[gate * units * units..(gate + 1) * units * units].copy_from_slice(&u);
        }
        layer.b.data_mut()[units..2 * units].fill(1.0);
        layer
    }

    pub fn input_dim(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn units(&self) -> usize {
        self.u.shape()[1]
    }

    /// Runs the recurrence over `x` of shape `[steps, input]`; returns hidden states `[steps, units]`.
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, LstmCache), NeuralError> {
        if x.shape().len() != 2 || x.shape()[1] != self.input_dim() || x.shape()[0] == 0 {
            return Err(NeuralError::ShapeMismatch {
                expected: vec![x.shape().first().copied().unwrap_or(0).max(1), self.input_dim()],
                found: x.shape().to_vec(),
            });
        }
        let cache = self.forward_flat(x.data(), x.shape()[0]);
        let h = Tensor::new(vec![cache.steps, self.units()], cache.h.clone())?;
        Ok((h, cache))
    }

    pub(crate) fn forward_flat(&self, x: &[f64], steps: usize) -> LstmCache {
        let (n_in, n) = (self.input_dim(), self.units());
        let g4 = 4 * n;
        let (w, u, b) = (self.w.data(), self.u.data(), self.b.data());
        let mut gates = vec![0.0; steps * g4];
        let mut c = vec![0.0; steps * n];
        let mut tanh_c = vec![0.0; steps * n];
        let mut h = vec![0.0; steps * n];
        let zeros = vec![0.0; n];
        let mut z = vec![0.0; g4];
        for t in 0..steps {
            let xt = &x[t * n_in..(t + 1) * n_in];
            let (h_prev, c_prev) = if t == 0 {
                (&zeros[..], &zeros[..])
            } else {
                (&h[(t - 1) * n..t * n], &c[(t - 1) * n..t * n])
            };
            for r in 0..g4 {
                let wr = &w[r * n_in..(r + 1) * n_in];
                let ur = &u[r * n..(r + 1) * n];
                let mut acc = b[r];
                for j in 0..n_in {
                    acc += wr[j] * xt[j];
                }
                for j in 0..n {
                    acc += ur[j] * h_prev[j];
                }
                z[r] = acc;
            }
            let gt = &mut gates[t * g4..(t + 1) * g4];
            let mut ct = vec![0.0; n];
            let mut tct = vec![0.0; n];
            let mut ht = vec![0.0; n];
            for k in 0..n {
                let i = sigmoid(z[k]);
                let f = sigmoid(z[n + k]);
                let g = z[2 * n + k].tanh();
                let o = sigmoid(z[3 * n + k]);
                gt[k] = i;
                gt[n + k] = f;
                gt[2 * n + k] = g;
                gt[3 * n + k] = o;
                ct[k] = f * c_prev[k] + i * g;
                tct[k] = ct[k].tanh();
                ht[k] = o * tct[k];
            }
            c[t * n..(t + 1) * n].copy_from_slice(&ct);
            tanh_c[t * n..(t + 1) * n].copy_from_slice(&tct);
            h[t * n..(t + 1) * n].copy_from_slice(&ht);
        }
        LstmCache {
            steps,
            x: x.to_vec(),
            gates,
            c,
            tanh_c,
            h,
            version: self.version,
        }
    }

    /// Backpropagation through time. `dh` is the loss gradient with respect to every hidden
    /// state (`[steps, units]`, zero rows where a state is unused). Parameter gradients are
    /// accumulated into `grads`; the input gradient `[steps, input]` is returned.
    pub fn backward(&self, cache: &LstmCache, dh: &[f64], grads: &mut Lstm) -> Result<Vec<f64>, NeuralError> {
        if cache.version != self.version {
            return Err(NeuralError::StaleCache);
        }
        let (n_in, n) = (self.input_dim(), self.units());
        let g4 = 4 * n;
        let steps = cache.steps;
        if cache.h.len() != steps * n || cache.x.len() != steps * n_in {
            return Err(NeuralError::StaleCache);
        }
        super::check_len(steps * n, dh.len())?;
        grads.w.expect_shape(self.w.shape())?;
        grads.u.expect_shape(self.u.shape())?;

        let (w, u) = (self.w.data(), self.u.data());
        let mut dx = vec![0.0; steps * n_in];
        let mut dh_next = vec![0.0; n];
        let mut dc_next = vec![0.0; n];
        let mut dz = vec![0.0; g4];
        let zeros = vec![0.0; n];
        for t in (0..steps).rev() {
            let gt = &cache.gates[t * g4..(t + 1) * g4];
            let tct = &cache.tanh_c[t * n..(t + 1) * n];
            let (h_prev, c_prev) = if t == 0 {
                (&zeros[..], &zeros[..])
            } else {
                (&cache.h[(t - 1) * n..t * n], &cache.c[(t - 1) * n..t * n])
            };
            for k in 0..n {
                let (i, f, g, o) = (gt[k], gt[n + k], gt[2 * n + k], gt[3 * n + k]);
                let dht = dh[t * n + k] + dh_next[k];
                let dc = dc_next[k] + dht * o * (1.0 - tct[k] * tct[k]);
                dz[k] = dc * g * i * (1.0 - i);
                dz[n + k] = dc * c_prev[k] * f * (1.0 - f);
                dz[2 * n + k] = dc * i * (1.0 - g * g);
                dz[3 * n + k] = dht * tct[k] * o * (1.0 - o);
                dc_next[k] = dc * f;
            }
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            let xt = &cache.x[t * n_in..(t + 1) * n_in];
            let dxt = &mut dx[t * n_in..(t + 1) * n_in];
            let gw = grads.w.data_mut();
            for r in 0..g4 {
                let d = dz[r];
                let wr = &w[r * n_in..(r + 1) * n_in];
                let gwr = &mut gw[r * n_in..(r + 1) * n_in];
                for j in 0..n_in {
                    gwr[j] += d * xt[j];
                    dxt[j] += d * wr[j];
                }
            }
            let gu = grads.u.data_mut();
            for r in 0..g4 {
                let d = dz[r];
                let ur = &u[r * n..(r + 1) * n];
                let gur = &mut gu[r * n..(r + 1) * n];
                for j in 0..n {
                    gur[j] += d * h_prev[j];
                    dh_next[j] += d * ur[j];
                }
            }
            for (gb, d) in grads.b.data_mut().iter_mut().zip(&dz) {
                *gb += d;
            }
        }
        Ok(dx)
    }
}

impl Params for Lstm {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        vec![("w".into(), &self.w), ("u".into(), &self.u), ("b".into(), &self.b)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.version += 1;
        vec![&mut self.w, &mut self.u, &mut self.b]
    }
}
