use super::{gaussian_vec, Density, TailEnvelope};
use crate::error::{Result, ShapeError};
use crate::points::{norm, PointSet};
use rand::rngs::StdRng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Isotropic Gaussian N(mean, σ² I).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    mean: Vec<f64>,
    sigma: f64,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, sigma: f64) -> Result<Self> {
        if mean.is_empty() {
            return Err(ShapeError::InvalidDimension {
                dim: 0,
                reason: "Gaussian mean must be a point of R^d".into(),
            });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(ShapeError::Domain(format!("σ must be positive, got {sigma}")));
        }
        Ok(Gaussian { mean, sigma })
    }

    /// Standard Gaussian γ in R^d.
    pub fn standard(d: usize) -> Result<Self> {
        Gaussian::new(vec![0.0; d], 1.0)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Density for Gaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_eval(&self, x: &[f64]) -> f64 {
        let d = self.dim() as f64;
        let r2: f64 = x.iter().zip(&self.mean).map(|(a, b)| (a - b) * (a - b)).sum();
        -0.5 * r2 / (self.sigma * self.sigma) - 0.5 * d * (2.0 * PI * self.sigma * self.sigma).ln()
    }

    fn support_radius(&self) -> f64 {
        // chi tail: P(‖Z‖ > √d + t) ≤ e^{−t²/2}
        let t = (2.0 * 1e12f64.ln()).sqrt();
        norm(&self.mean) + self.sigma * ((self.dim() as f64).sqrt() + t)
    }

    fn is_log_concave(&self) -> bool {
        true
    }

    fn sample_with(&self, n: usize, rng: &mut StdRng) -> Result<PointSet> {
        let d = self.dim();
        let mut out = PointSet::with_capacity(d, n);
        for _ in 0..n {
            let g = gaussian_vec(d, rng);
            let x: Vec<f64> = g.iter().zip(&self.mean).map(|(z, m)| m + self.sigma * z).collect();
            out.push(&x);
        }
        Ok(out)
    }

    fn cdf(&self, x: f64) -> Option<f64> {
        (self.dim() == 1).then(|| 0.5 * libm::erfc(-(x - self.mean[0]) / (self.sigma * std::f64::consts::SQRT_2)))
    }

    fn tail_envelope(&self) -> Option<TailEnvelope> {
        let d = self.dim() as f64;
        Some(TailEnvelope::new(
            self.dim(),
            1.0 / self.sigma,
            0.5 + norm(&self.mean) / self.sigma - 0.5 * d * (2.0 * PI * self.sigma * self.sigma).ln(),
        ))
    }
}
