//! Summary statistics and line fits used by the experiments.

/// Least-squares line `y ≈ intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    /// Slope.
    pub slope: f64,
    /// Intercept.
    pub intercept: f64,
    /// Number of points used.
    pub points: usize,
}

/// Ordinary least-squares line through `(x, y)` pairs; `None` for fewer than
/// two points or a degenerate abscissa.
pub fn line_fit(points: impl IntoIterator<Item = (f64, f64)>) -> Option<LineFit> {
    let pts: Vec<(f64, f64)> = points.into_iter().collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(LineFit { slope, intercept: my - slope * mx, points: n })
}

/// Line through `(ln k, ln v)` over the pairs with `k ≥ 1` and finite `v > 0`.
pub fn loglog_fit(values: impl IntoIterator<Item = (usize, f64)>) -> Option<LineFit> {
    line_fit(
        values
            .into_iter()
            .filter(|&(k, v)| k >= 1 && v > 0.0 && v.is_finite())
            .map(|(k, v)| ((k as f64).ln(), v.ln())),
    )
}

/// Line through `(k, ln v)` over the pairs with finite `v > 0`; the slope is a
/// per-step log-rate.
pub fn semilog_fit(values: impl IntoIterator<Item = (usize, f64)>) -> Option<LineFit> {
    line_fit(
        values
            .into_iter()
            .filter(|&(_, v)| v > 0.0 && v.is_finite())
            .map(|(k, v)| (k as f64, v.ln())),
    )
}

/// Mean and sample standard deviation (`n − 1` denominator, `0` for one value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}
