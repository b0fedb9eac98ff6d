use super::Density;
use crate::error::Result;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogConcavityReport {
    /// Largest positive second difference of log f seen (0 if none).
    pub max_violation: f64,
    pub lines: usize,
    pub points_per_line: usize,
}

/// Largest positive second difference of log f at `n_points` equally spaced
/// points on the segment [a, b]. An interior zero of f between positive
/// values counts as an infinite violation.
pub fn max_second_difference(density: &dyn Density, a: &[f64], b: &[f64], n_points: usize) -> f64 {
    let n = n_points.max(3);
    let vals: Vec<f64> = (0..n)
        .map(|k| {
            let s = k as f64 / (n - 1) as f64;
            let x: Vec<f64> = a.iter().zip(b).map(|(u, v)| u + s * (v - u)).collect();
            density.log_eval(&x)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for w in vals.windows(3) {
        if w[0].is_finite() && w[2].is_finite() {
            let sd = if w[1].is_finite() {
                w[0] - 2.0 * w[1] + w[2]
            } else {
                f64::INFINITY
            };
            worst = worst.max(sd);
        }
    }
    worst
}

/// Check log-concavity along `n_lines` random segments whose endpoints are
/// drawn from the density itself.
pub fn verify_log_concave(density: &dyn Density, n_lines: usize, n_points: usize, seed: u64) -> Result<LogConcavityReport> {
    let ends = density.sample(2 * n_lines.max(1), seed)?;
    let mut worst: f64 = 0.0;
    for k in 0..n_lines {
        worst = worst.max(max_second_difference(density, ends.point(2 * k), ends.point(2 * k + 1), n_points));
    }
    Ok(LogConcavityReport {
        max_violation: worst,
        lines: n_lines,
        points_per_line: n_points,
    })
}
