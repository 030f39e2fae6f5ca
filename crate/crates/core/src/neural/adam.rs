use super::params::Params;
use super::NeuralError;

/// Adam moments and hyperparameters for one parameter set.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(param_count: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// One bias-corrected Adam step on `params` with gradients `grads` (same layout).
    pub fn update<P: Params>(&mut self, params: &mut P, grads: &P) -> Result<(), NeuralError> {
        let g: Vec<&[f64]> = grads.tensors().into_iter().map(|(_, t)| t.data()).collect();
        let total: usize = g.iter().map(|s| s.len()).sum();
        super::check_len(self.m.len(), total)?;
        super::check_len(self.m.len(), params.param_count())?;
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut offset = 0;
        for (p, g) in params.tensors_mut().into_iter().zip(g) {
            for (j, (theta, gj)) in p.data_mut().iter_mut().zip(g).enumerate() {
                let i = offset + j;
                self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * gj;
                self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * gj * gj;
                let m_hat = self.m[i] / c1;
                let v_hat = self.v[i] / c2;
                *theta -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
            offset += g.len();
        }
        Ok(())
    }
}
