use super::NeuralError;

/// Mean squared error and its gradient `2 (p - t) / N` with respect to the prediction.
pub fn mse_loss(prediction: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>), NeuralError> {
    super::check_len(prediction.len(), target.len())?;
    if prediction.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }
    let n = prediction.len() as f64;
    let mut loss = 0.0;
    let grad = prediction
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let e = p - t;
            loss += e * e;
            2.0 * e / n
        })
        .collect();
    Ok((loss / n, grad))
}
