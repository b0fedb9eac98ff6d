use super::Density;
use crate::geometry::ball_volume;
use crate::rng::stream;
use rand::RngExt;
use serde::{Deserialize, Serialize};

/// Exponential envelope f(x) ≤ exp(−c_A‖x‖ + C_B).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEnvelope {
    pub dim: usize,
    pub c_a: f64,
    pub c_b: f64,
}

impl TailEnvelope {
    pub fn new(dim: usize, c_a: f64, c_b: f64) -> Self {
        TailEnvelope { dim, c_a, c_b }
    }

    pub fn bound(&self, x: &[f64]) -> f64 {
        (-self.c_a * crate::points::norm(x) + self.c_b).exp()
    }

    /// M_r(f) = sup_{‖x‖ ≥ r} f(x) · d · vol(B_d), bounded through the envelope.
    pub fn m_r(&self, r: f64) -> f64 {
        let d = self.dim;
        (-self.c_a * r + self.c_b).exp() * d as f64 * ball_volume(d, 1.0).expect("positive dimension")
    }

    /// Check the envelope at `n_points` random points spread over a ball of
    /// radius twice the density's support radius. Returns the largest ratio
    /// f / envelope seen.
    pub fn max_ratio(&self, density: &dyn Density, n_points: usize, seed: u64) -> f64 {
        let mut rng = stream(seed, &[]);
        let d = density.dim();
        let r_max = 2.0 * density.support_radius();
        let mut worst: f64 = 0.0;
        for k in 0..n_points {
            // half the points within the support radius, half beyond
            let r = if k % 2 == 0 { 0.5 } else { 1.0 } * r_max * rng.random::<f64>();
            let u = super::gaussian_vec(d, &mut rng);
            let s = r / crate::points::norm(&u).max(1e-300);
            let x: Vec<f64> = u.iter().map(|v| v * s).collect();
            let f = density.eval(&x);
            if f > 0.0 {
                worst = worst.max(f / self.bound(&x));
            }
        }
        worst
    }
}
