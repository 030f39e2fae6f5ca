/// Design matrix is rank deficient or has fewer rows than columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("singular least-squares problem")]
pub struct Singular;

/// Relative threshold on the diagonal of `R` below which the design counts as rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Least-squares solution of `X b = y` by Householder QR. `rows` are the rows of `X`.
pub fn lstsq(rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>, Singular> {
    let m = rows.len();
    let k = rows.first().map_or(0, |r| r.len());
    if k == 0 || m < k || y.len() != m || rows.iter().any(|r| r.len() != k) {
        return Err(Singular);
    }
    // column-major copy
    let mut a: Vec<Vec<f64>> = (0..k).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let mut b = y.to_vec();
    let mut diag = vec![0.0; k];
    for j in 0..k {
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Singular);
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        // v = x - alpha e1, stored in place of column j
        let mut v = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        diag[j] = alpha;
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(j + 1) {
                let dot: f64 = v.iter().zip(&col[j..]).map(|(p, q)| p * q).sum();
                let s = 2.0 * dot / vnorm2;
                for (c, vi) in col[j..].iter_mut().zip(&v) {
                    *c -= s * vi;
                }
            }
            let dot: f64 = v.iter().zip(&b[j..]).map(|(p, q)| p * q).sum();
            let s = 2.0 * dot / vnorm2;
            for (c, vi) in b[j..].iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
    }
    let max_diag = diag.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    if !(max_diag > 0.0) || diag.iter().any(|d| d.abs() <= RANK_TOL * max_diag) {
        return Err(Singular);
    }
    let mut coef = vec![0.0; k];
    for j in (0..k).rev() {
        let mut s = b[j];
        for (i, c) in coef.iter().enumerate().skip(j + 1) {
            s -= a[i][j] * c;
        }
        coef[j] = s / diag[j];
    }
    if coef.iter().all(|c| c.is_finite()) {
        Ok(coef)
    } else {
        Err(Singular)
    }
}
