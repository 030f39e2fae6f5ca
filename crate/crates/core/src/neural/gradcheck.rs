use super::params::Params;
use super::NeuralError;

/// Denominator floor of the relative error. Gradients smaller than this are compared in
/// absolute terms, where central differences are dominated by rounding noise of the loss.
pub const REL_ERROR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Flat index and tensor name of the worst parameter.
    pub worst_index: usize,
    pub worst_name: String,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

/// Compares analytic gradients with central differences `(f(θ+ε) − f(θ−ε)) / 2ε` for every
/// parameter. `loss_and_grad` must return the loss and its gradient in `P`'s layout.
pub fn grad_check<P, F>(params: &P, loss_and_grad: F, epsilon: f64) -> Result<GradCheckReport, NeuralError>
where
    P: Params + Clone,
    F: Fn(&P) -> Result<(f64, P), NeuralError>,
{
    if !(1e-6..=1e-4).contains(&epsilon) {
        return Err(NeuralError::InvalidConfig(format!(
            "epsilon {epsilon} outside [1e-6, 1e-4]"
        )));
    }
    let (_, grads) = loss_and_grad(params)?;
    let analytic = grads.flatten();
    let theta = params.flatten();
    let names: Vec<(String, usize)> = params
        .tensors()
        .into_iter()
        .map(|(name, t)| (name, t.len()))
        .collect();

    let mut probe = params.clone();
    let mut shifted = theta.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        worst_name: String::new(),
        analytic: 0.0,
        numeric: 0.0,
        checked: theta.len(),
    };
    for i in 0..theta.len() {
        shifted[i] = theta[i] + epsilon;
        probe.set_flat(&shifted)?;
        let plus = loss_and_grad(&probe)?.0;
        shifted[i] = theta[i] - epsilon;
        probe.set_flat(&shifted)?;
        let minus = loss_and_grad(&probe)?.0;
        shifted[i] = theta[i];

        let numeric = (plus - minus) / (2.0 * epsilon);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
        if rel > report.max_rel_error || i == 0 {
            report.max_rel_error = rel;
            report.worst_index = i;
            report.analytic = a;
            report.numeric = numeric;
        }
    }
    let mut offset = 0;
    for (name, len) in names {
        if report.worst_index < offset + len {
            report.worst_name = name;
            break;
        }
        offset += len;
    }
    Ok(report)
}
