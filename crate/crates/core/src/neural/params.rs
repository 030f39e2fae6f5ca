use super::{NeuralError, Tensor};

/// A collection of named parameter tensors in a fixed order.
///
/// Gradients use the same type as the parameters they belong to, so optimisers and checks can
/// walk both in lockstep.
pub trait Params {
    fn tensors(&self) -> Vec<(String, &Tensor)>;

    /// Mutable access. Layers treat this as a parameter change and invalidate older caches.
    fn tensors_mut(&mut self) -> Vec<&mut Tensor>;

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (_, t) in self.tensors() {
            out.extend_from_slice(t.data());
        }
        out
    }

    fn set_flat(&mut self, values: &[f64]) -> Result<(), NeuralError> {
        super::check_len(self.param_count(), values.len())?;
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.data_mut().copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    fn zero(&mut self) {
        for t in self.tensors_mut() {
            t.fill(0.0);
        }
    }

    fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.is_finite())
    }
}

pub(crate) fn prefixed<'a>(prefix: &str, inner: Vec<(String, &'a Tensor)>) -> Vec<(String, &'a Tensor)> {
    inner
        .into_iter()
        .map(|(name, t)| (format!("{prefix}.{name}"), t))
        .collect()
}
