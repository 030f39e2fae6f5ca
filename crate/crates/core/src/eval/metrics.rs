use serde::Serialize;

use super::{BacktestResult, EvalError};

fn check(pred: &[f64], actual: &[f64]) -> Result<(), EvalError> {
    if pred.len() != actual.len() {
        return Err(EvalError::LengthMismatch(pred.len(), actual.len()));
    }
    if pred.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64, EvalError> {
    check(pred, actual)?;
    let sse: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Mean absolute percentage error in percent, skipping pairs whose actual is zero.
/// Returns `(mape, excluded_pairs)`.
pub fn mape(pred: &[f64], actual: &[f64]) -> Result<(f64, usize), EvalError> {
    check(pred, actual)?;
    let mut sum = 0.0;
    let mut used = 0usize;
    for (p, a) in pred.iter().zip(actual) {
        if *a != 0.0 {
            sum += ((p - a) / a).abs();
            used += 1;
        }
    }
    if used == 0 {
        return Err(EvalError::AllZeroActuals);
    }
    Ok((100.0 * sum / used as f64, pred.len() - used))
}

/// RMSE per hour of day over all test days.
pub fn unfold_rmse_by_hour(result: &BacktestResult) -> Result<Vec<f64>, EvalError> {
    if result.days.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut sse = [0.0; 24];
    for day in &result.days {
        for h in 0..24 {
            let e = day.predictions[h] - day.actuals[h];
            sse[h] += e * e;
        }
    }
    let n = result.days.len() as f64;
    Ok(sse.iter().map(|s| (s / n).sqrt()).collect())
}

/// Relative error reduction of `candidate` against `baseline`, percent.
pub fn improvement(rmse_baseline: f64, rmse_candidate: f64) -> Result<f64, EvalError> {
    if !(rmse_baseline > 0.0) {
        return Err(EvalError::ZeroBaseline);
    }
    Ok(100.0 * (rmse_baseline - rmse_candidate) / rmse_baseline)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub rmse: f64,
    pub mape: f64,
    pub mape_excluded: usize,
    pub per_hour_rmse: Vec<f64>,
}

impl MetricReport {
    pub fn from_result(result: &BacktestResult) -> Result<Self, EvalError> {
        let (pred, actual) = result.pairs();
        let (mape, mape_excluded) = mape(&pred, &actual)?;
        Ok(Self {
            rmse: rmse(&pred, &actual)?,
            mape,
            mape_excluded,
            per_hour_rmse: unfold_rmse_by_hour(result)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::DayRecord;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap() - 3.5355339059327378).abs() < 1e-12);
        let base = rmse(&[1.0, 5.0, 2.0], &[2.0, 3.0, 2.5]).unwrap();
        let scaled = rmse(&[-3.0, 15.0, 6.0], &[-6.0, 9.0, 7.5]).unwrap();
        assert!((scaled - 3.0 * base).abs() < 1e-12);
        assert!(matches!(rmse(&[], &[]), Err(EvalError::Empty)));
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn mape_examples() {
        let (m, excluded) = mape(&[90.0, 110.0], &[100.0, 100.0]).unwrap();
        assert!((m - 10.0).abs() < 1e-12 && excluded == 0);
        assert_eq!(mape(&[4.0], &[4.0]).unwrap(), (0.0, 0));
        let (m, excluded) = mape(&[5.0, 110.0], &[0.0, 100.0]).unwrap();
        assert!((m - 10.0).abs() < 1e-12);
        assert_eq!(excluded, 1);
        assert!(matches!(mape(&[1.0], &[0.0]), Err(EvalError::AllZeroActuals)));
    }

    #[test]
    fn improvement_examples() {
        let v = improvement(579.9, 182.4).unwrap();
        assert!((v - 68.5).abs() < 0.05, "{v}");
        assert_eq!(improvement(3.0, 3.0).unwrap(), 0.0);
        assert_eq!(improvement(3.0, 0.0).unwrap(), 100.0);
        assert!(improvement(0.0, 1.0).is_err());
    }

    fn result(errors: impl Fn(usize, usize) -> f64, days: usize) -> BacktestResult {
        BacktestResult {
            estimator: "x".into(),
            scenario: "CS".into(),
            days: (0..days)
                .map(|d| DayRecord {
                    day: d,
                    predictions: (0..24).map(|h| 10.0 + errors(d, h)).collect(),
                    actuals: vec![10.0; 24],
                    fallback: false,
                })
                .collect(),
        }
    }

    #[test]
    fn per_hour_unfolding() {
        assert_eq!(unfold_rmse_by_hour(&result(|_, _| 1.0, 5)).unwrap(), vec![1.0; 24]);
        let only_noon = unfold_rmse_by_hour(&result(|_, h| if h == 12 { 2.0 } else { 0.0 }, 5)).unwrap();
        assert_eq!(only_noon.iter().filter(|v| **v != 0.0).count(), 1);
        assert_eq!(only_noon[12], 2.0);

        let r = result(|d, h| ((d * 7 + h * 3) % 11) as f64 - 5.0, 30);
        let per_hour = unfold_rmse_by_hour(&r).unwrap();
        let report = MetricReport::from_result(&r).unwrap();
        let mean_sq = per_hour.iter().map(|v| v * v).sum::<f64>() / 24.0;
        assert!((report.rmse * report.rmse - mean_sq).abs() < 1e-9);
    }
}
