use serde::{Deserialize, Serialize};

use crate::integration::Estimate;

/// Radii used for extrapolation, counted from the smallest.
const FIT_POINTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitShape {
    /// No consecutive difference exceeds its noise level.
    Constant,
    /// `a + b r^p` with `p > 0` fitted from the differences.
    Power,
    /// Differences of both signs, or growing as `r` shrinks.
    Irregular,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fit {
    pub limit: f64,
    /// Propagated standard error of the limit plus the largest fit residual.
    pub limit_error: f64,
    pub rate: Option<f64>,
    pub coefficient: f64,
    pub shape: FitShape,
}

/// Fits `v(r) = a + b r^p` to the (at most five) smallest radii.
///
/// Consecutive differences `d_i = v_i - v_{i+1}` carry the rate: for a power
/// law `log |d_i| = log |b| + p log r_i + log(1 - (r_{i+1}/r_i)^p)`, which is
/// solved for `p` by fixed-point iteration on the regression slope. A
/// difference counts as significant when it exceeds three combined standard
/// errors plus `floor`, and `1e-9` of the value scale for quadrature and
/// rounding error.
pub fn fit_limit(radii: &[f64], values: &[Estimate], floor: f64) -> Fit {
    let start = radii.len().saturating_sub(FIT_POINTS);
    let (r, v) = (&radii[start..], &values[start..]);
    let n = r.len();
    let scale = v.iter().map(|e| e.value.abs()).fold(0.0, f64::max);
    if n == 1 {
        return Fit { limit: v[0].value, limit_error: v[0].std_error, rate: None, coefficient: 0.0, shape: FitShape::Constant };
    }
    let diffs: Vec<(f64, bool)> = v
        .windows(2)
        .map(|w| {
            let d = w[0].value - w[1].value;
            let noise = 3.0 * w[0].std_error.hypot(w[1].std_error) + 1e-9 * scale + floor;
            (d, d.abs() > noise)
        })
        .collect();
    let significant: Vec<usize> = (0..n - 1).filter(|&i| diffs[i].1).collect();
    if significant.is_empty() {
        return constant(v);
    }
    let same_sign = significant.iter().all(|&i| diffs[i].0.signum() == diffs[significant[0]].0.signum());
    if same_sign && significant.len() >= 2 {
        if let Some(fit) = power(r, v, &diffs, &significant) {
            return fit;
        }
    }
    // Converged within noise after an early transient.
    let tail = significant.last().unwrap() + 1;
    if n - tail >= 3 {
        return constant(&v[tail..]);
    }
    let last = v[n - 1].value;
    let spread = v.iter().map(|e| (e.value - last).abs()).fold(0.0, f64::max);
    Fit { limit: last, limit_error: spread + v[n - 1].std_error, rate: None, coefficient: 0.0, shape: FitShape::Irregular }
}

fn constant(v: &[Estimate]) -> Fit {
    let n = v.len() as f64;
    let mean = v.iter().map(|e| e.value).sum::<f64>() / n;
    let se = v.iter().map(|e| e.std_error * e.std_error).sum::<f64>().sqrt() / n;
    let spread = v.iter().map(|e| (e.value - mean).abs()).fold(0.0, f64::max);
    Fit { limit: mean, limit_error: se + spread, rate: None, coefficient: 0.0, shape: FitShape::Constant }
}

fn power(r: &[f64], v: &[Estimate], diffs: &[(f64, bool)], significant: &[usize]) -> Option<Fit> {
    let xs: Vec<f64> = significant.iter().map(|&i| r[i].ln()).collect();
    let logd: Vec<f64> = significant.iter().map(|&i| diffs[i].0.abs().ln()).collect();
    let mut p = slope(&xs, &logd)?;
    for _ in 0..50 {
        if !(p > 0.0) || p > 12.0 {
            return None;
        }
        let ys: Vec<f64> = significant
            .iter()
            .zip(&logd)
            .map(|(&i, l)| l - (1.0 - (r[i + 1] / r[i]).powf(p)).ln())
            .collect();
        let next = slope(&xs, &ys)?;
        let done = (next - p).abs() < 1e-13;
        p = next;
        if done {
            break;
        }
    }
    if !(p > 0.0 && p <= 12.0) {
        return None;
    }
    // Least squares for (a, b) on x = (r / r_max)^p.
    let rmax = r[0];
    let x: Vec<f64> = r.iter().map(|ri| (ri / rmax).powf(p)).collect();
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sxx: f64 = x.iter().map(|t| t * t).sum();
    let det = n * sxx - sx * sx;
    if !(det > 0.0) {
        return None;
    }
    let ca: Vec<f64> = x.iter().map(|t| (sxx - t * sx) / det).collect();
    let cb: Vec<f64> = x.iter().map(|t| (n * t - sx) / det).collect();
    let a: f64 = ca.iter().zip(v).map(|(c, e)| c * e.value).sum();
    let b: f64 = cb.iter().zip(v).map(|(c, e)| c * e.value).sum();
    let stat = ca.iter().zip(v).map(|(c, e)| (c * e.std_error).powi(2)).sum::<f64>().sqrt();
    let resid = x.iter().zip(v).map(|(t, e)| (e.value - a - b * t).abs()).fold(0.0, f64::max);
    Some(Fit {
        limit: a,
        limit_error: stat + resid,
        rate: Some(p),
        coefficient: b / rmax.powf(p),
        shape: FitShape::Power,
    })
}

fn slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
