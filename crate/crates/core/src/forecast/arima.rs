use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::linalg::{lstsq, Singular};
use super::{target_day, DayForecast, ForecastError, Forecaster, HORIZON};
use crate::data::HourlyTimeSeries;

/// ARIMA(p, d, q) re-estimated on the trailing `window` hours before every target day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub window: usize,
}

impl Default for ArimaOrder {
    fn default() -> Self {
        Self {
            p: 2,
            d: 1,
            q: 2,
            window: 120,
        }
    }
}

impl ArimaOrder {
    pub fn validate(&self) -> Result<(), ForecastError> {
        self.check_len(self.window)
    }

    fn check_len(&self, len: usize) -> Result<(), ForecastError> {
        let min = self.p + self.q + self.d + 10;
        if len <= min {
            return Err(ForecastError::InvalidOrder(format!(
                "fit window of {len} values must exceed p + d + q + 10 = {min}"
            )));
        }
        Ok(())
    }
}

/// Estimated ARMA part for the `d`-times differenced window, with intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct ArimaFit {
    pub order: ArimaOrder,
    pub intercept: f64,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    /// Long-autoregression residuals for the last `q` steps of the differenced window, oldest
    /// first. They stand in for the unobserved past innovations when forecasting.
    pub innovations: Vec<f64>,
}

fn difference(values: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    // last value of each differencing level 0..d, needed to integrate forecasts back
    let mut lasts = Vec::with_capacity(d);
    let mut y = values.to_vec();
    for _ in 0..d {
        lasts.push(*y.last().expect("window checked nonempty"));
        y = y.windows(2).map(|w| w[1] - w[0]).collect();
    }
    (y, lasts)
}

/// Order of the long autoregression used as the innovation proxy.
fn long_ar_order(n: usize, p: usize, q: usize) -> usize {
    let m = (10.0 * (n as f64).log10()).ceil() as usize;
    m.min(n / 3).max(p + q)
}

fn lagged_rows(y: &[f64], lags: usize, from: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rows = Vec::with_capacity(y.len() - from);
    for t in from..y.len() {
        let mut row = Vec::with_capacity(lags + 1);
        row.push(1.0);
        row.extend((1..=lags).map(|i| y[t - i]));
        rows.push(row);
    }
    (rows, y[from..].to_vec())
}

/// Hannan–Rissanen estimation: a long AR fit supplies innovation estimates, then `y_t` is
/// regressed on its own `p` lags and `q` lagged innovations. With `q = 0` this is ordinary
/// least squares on the lags.
pub fn fit_arima(window: &[f64], order: &ArimaOrder) -> Result<ArimaFit, ForecastError> {
    order.check_len(window.len())?;
    let (y, _) = difference(window, order.d);
    let n = y.len();
    let (p, q) = (order.p, order.q);
    let singular = |_: Singular| ForecastError::SingularRegression;

    if p == 0 && q == 0 {
        return Ok(ArimaFit {
            order: *order,
            intercept: y.iter().sum::<f64>() / n as f64,
            phi: Vec::new(),
            theta: Vec::new(),
            innovations: Vec::new(),
        });
    }
    if q == 0 {
        let (rows, target) = lagged_rows(&y, p, p);
        let b = lstsq(&rows, &target).map_err(singular)?;
        return Ok(ArimaFit {
            order: *order,
            intercept: b[0],
            phi: b[1..].to_vec(),
            theta: Vec::new(),
            innovations: Vec::new(),
        });
    }

    let m = long_ar_order(n, p, q);
    let (rows, target) = lagged_rows(&y, m, m);
    let a = lstsq(&rows, &target).map_err(singular)?;
    let mut e = vec![0.0; n];
    for (t, row) in (m..n).zip(&rows) {
        let fitted: f64 = row.iter().zip(&a).map(|(x, c)| x * c).sum();
        e[t] = y[t] - fitted;
    }
    let from = (m + q).max(p);
    if n - from <= 1 + p + q {
        // too few rows left after the long autoregression
        return Err(ForecastError::SingularRegression);
    }
    let mut rows2 = Vec::with_capacity(n - from);
    for t in from..n {
        let mut row = Vec::with_capacity(1 + p + q);
        row.push(1.0);
        row.extend((1..=p).map(|i| y[t - i]));
        row.extend((1..=q).map(|j| e[t - j]));
        rows2.push(row);
    }
    let b = lstsq(&rows2, &y[from..]).map_err(singular)?;
    Ok(ArimaFit {
        order: *order,
        intercept: b[0],
        phi: b[1..=p].to_vec(),
        theta: b[p + 1..].to_vec(),
        innovations: e[n - q..].to_vec(),
    })
}

/// Recursive `horizon`-step forecast on the original scale from the window the model was fitted
/// on. Past innovations are the stored long-AR residuals rather than a recursive filter, which
/// stays bounded when the estimated MA part is not invertible. Future innovations are zero.
pub fn forecast_arima(fit: &ArimaFit, window: &[f64], horizon: usize) -> Vec<f64> {
    let (mut y, lasts) = difference(window, fit.order.d);
    let n = y.len();
    let (p, q) = (fit.phi.len(), fit.theta.len());
    let start = p.max(q);
    let mut e = vec![0.0; n + horizon];
    let known = fit.innovations.len().min(n);
    e[n - known..n].copy_from_slice(&fit.innovations[fit.innovations.len() - known..]);
    let predict = |y: &[f64], e: &[f64], t: usize| {
        let mut v = fit.intercept;
        for i in 1..=p {
            v += fit.phi[i - 1] * y[t - i];
        }
        for j in 1..=q {
            v += fit.theta[j - 1] * e[t - j];
        }
        v
    };
    for t in n..n + horizon {
        let v = if t >= start { predict(&y, &e, t) } else { fit.intercept };
        y.push(v);
    }
    let mut out = y[n..].to_vec();
    for level in lasts.iter().rev() {
        let mut acc = *level;
        for v in out.iter_mut() {
            acc += *v;
            *v = acc;
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ArimaForecaster {
    pub order: ArimaOrder,
}

impl ArimaForecaster {
    pub fn new(order: ArimaOrder) -> Self {
        Self { order }
    }

    fn drift(window: &[f64]) -> DayForecast {
        DayForecast {
            values: vec![window.last().expect("nonempty window").max(0.0); HORIZON],
            fallback: true,
        }
    }
}

impl Forecaster for ArimaForecaster {
    fn id(&self) -> &'static str {
        "arima"
    }

    fn fit(&mut self, _series: &HourlyTimeSeries, _train_days: Range<usize>) -> Result<(), ForecastError> {
        self.order.validate()
    }

    fn predict(&self, history: &HourlyTimeSeries) -> Result<DayForecast, ForecastError> {
        target_day(history)?;
        self.order.validate()?;
        let n = history.len();
        if n < self.order.window {
            return Err(ForecastError::InsufficientHistory {
                needed: self.order.window,
                available: n,
            });
        }
        let window = &history.values()[n - self.order.window..];
        let fit = match fit_arima(window, &self.order) {
            Ok(fit) => fit,
            Err(ForecastError::SingularRegression) => return Ok(Self::drift(window)),
            Err(e) => return Err(e),
        };
        let values = forecast_arima(&fit, window, HORIZON);
        let (lo, hi) = window
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let slack = 10.0 * (hi - lo).max(1e-9 * hi.abs());
        let explosive = values
            .iter()
            .any(|v| !v.is_finite() || *v > hi + slack || *v < lo - slack);
        if explosive {
            return Ok(Self::drift(window));
        }
        Ok(DayForecast {
            values: values.into_iter().map(|v| v.max(0.0)).collect(),
            fallback: false,
        })
    }

    fn refits_per_day(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::default_start;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn white_noise_mean_forecast() {
        let w: Vec<f64> = noise(120, 1).iter().map(|z| 5.0 + z).collect();
        let order = ArimaOrder { p: 0, d: 0, q: 0, window: 120 };
        let fit = fit_arima(&w, &order).unwrap();
        let mean = w.iter().sum::<f64>() / 120.0;
        for v in forecast_arima(&fit, &w, 24) {
            assert!((v - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn ramp_is_continued() {
        let w: Vec<f64> = (0..120).map(|t| 3.0 + 0.5 * t as f64).collect();
        let order = ArimaOrder { p: 0, d: 1, q: 0, window: 120 };
        let fit = fit_arima(&w, &order).unwrap();
        let f = forecast_arima(&fit, &w, 24);
        for (h, v) in f.iter().enumerate() {
            assert!((v - (3.0 + 0.5 * (120 + h) as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn arma_coefficients_are_recovered() {
        // y_t = 0.5 y_{t-1} - 0.3 y_{t-2} + e_t + 0.4 e_{t-1}
        let z = noise(20_000, 2);
        let mut y = vec![0.0; z.len()];
        for t in 2..z.len() {
            y[t] = 0.5 * y[t - 1] - 0.3 * y[t - 2] + z[t] + 0.4 * z[t - 1];
        }
        let order = ArimaOrder { p: 2, d: 0, q: 1, window: y.len() };
        let fit = fit_arima(&y, &order).unwrap();
        assert!((fit.phi[0] - 0.5).abs() < 0.05, "{fit:?}");
        assert!((fit.phi[1] + 0.3).abs() < 0.05, "{fit:?}");
        assert!((fit.theta[0] - 0.4).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn constant_window_falls_back_to_drift() {
        let s = HourlyTimeSeries::new(default_start(), vec![7.0; 240]).unwrap();
        let f = ArimaForecaster::new(ArimaOrder::default()).predict(&s).unwrap();
        assert!(f.fallback);
        assert_eq!(f.values, vec![7.0; 24]);
    }

    #[test]
    fn window_length_rule() {
        let order = ArimaOrder { window: 15, ..Default::default() };
        assert!(order.validate().is_err());
        assert!(ArimaOrder::default().validate().is_ok());
        let s = HourlyTimeSeries::new(default_start(), vec![1.0; 96]).unwrap();
        assert!(matches!(
            ArimaForecaster::new(ArimaOrder::default()).predict(&s),
            Err(ForecastError::InsufficientHistory { needed: 120, .. })
        ));
    }

    #[test]
    fn forecasts_are_nonnegative_and_finite() {
        let s: Vec<f64> = (0..240)
            .map(|h| 50.0 + 40.0 * (2.0 * std::f64::consts::PI * h as f64 / 24.0).sin())
            .zip(noise(240, 3))
            .map(|(a, b)| (a + 2.0 * b).max(0.0))
            .collect();
        let s = HourlyTimeSeries::new(default_start(), s).unwrap();
        let f = ArimaForecaster::new(ArimaOrder::default()).predict(&s).unwrap();
        assert!(f.values.iter().all(|v| v.is_finite() && *v >= 0.0));
    }
}
