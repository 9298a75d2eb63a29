//! Growth-rate estimation: least-squares slope of log(value) against
//! log(T) across checkpoint horizons. A cumulative quantity growing like
//! `c * T^p` fits slope `p` regardless of `c`.

use crate::error::RunError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Positive part clamped at one, the sanitizer applied before taking logs.
pub fn positive_part(v: f64) -> f64 {
    v.max(1.0)
}

/// Fits `ln(value) = slope * ln(T) + intercept` by least squares.
/// Values are clamped below at 1 before the log so that vanishing or
/// negative cumulative quantities read as slope zero instead of poisoning
/// the fit.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit, RunError> {
    if points.len() < 3 {
        return Err(RunError::Config(format!(
            "rate fit needs at least 3 checkpoints, got {}",
            points.len()
        )));
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(RunError::Config(
                "rate fit checkpoints must be strictly increasing".into(),
            ));
        }
    }
    if points.iter().any(|(t, v)| *t <= 0.0 || !t.is_finite() || !v.is_finite()) {
        return Err(RunError::Config("rate fit needs finite positive horizons".into()));
    }
    let xs: Vec<f64> = points.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| positive_part(*v).ln()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { slope, intercept, r_squared })
}
