//! Evaluable, sampleable densities and numerical distances between them.

mod affine;
mod bump;
mod capfam;
mod distance;
mod envelope;
mod gaussian;
mod logconcave;
mod noise;
mod spec;
mod uniform;

pub use affine::AffineDensity;
pub use bump::{ball_gaussian_integral, bump_g, BumpFamily, BumpFamilyDensity, BumpOptions};
pub use capfam::{CapFamily, CapFamilyDensity};
pub use distance::{hellinger_sq, total_variation, DistanceMethod, DistanceOptions, Estimate};
pub use envelope::TailEnvelope;
pub use gaussian::Gaussian;
pub use logconcave::{max_second_difference, verify_log_concave, LogConcavityReport};
pub use noise::{NoiseKind, NoiseSpec};
pub use spec::FamilySpec;
pub use uniform::{UniformBall, UniformBody, UniformInterval};

use crate::error::{Result, ShapeError};
use crate::points::PointSet;
use crate::rng::stream;
use rand::rngs::StdRng;
use rand::RngExt;
use rand_distr::StandardNormal;

/// A probability density on R^d.
pub trait Density: Send + Sync + std::fmt::Debug {
    fn dim(&self) -> usize;

    /// log f(x), −∞ outside the support.
    fn log_eval(&self, x: &[f64]) -> f64;

    fn eval(&self, x: &[f64]) -> f64 {
        let l = self.log_eval(x);
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            l.exp()
        }
    }

    /// R with P(‖X‖ > R) ≤ 1e−12.
    fn support_radius(&self) -> f64;

    fn is_log_concave(&self) -> bool;

    fn sample_with(&self, n: usize, rng: &mut StdRng) -> Result<PointSet>;

    fn sample(&self, n: usize, seed: u64) -> Result<PointSet> {
        if n == 0 {
            return Err(ShapeError::Domain("sample size must be at least 1".into()));
        }
        self.sample_with(n, &mut stream(seed, &[]))
    }

    /// Points where the density or its derivative jumps (d = 1).
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Outer breakpoints in the second coordinate (d = 2).
    fn breakpoints_y(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Inner breakpoints in the first coordinate along the line at height y (d = 2).
    fn breakpoints_x(&self, _y: f64) -> Vec<f64> {
        Vec::new()
    }

    /// Distribution function, when available in closed form (d = 1).
    fn cdf(&self, _x: f64) -> Option<f64> {
        None
    }

    fn tail_envelope(&self) -> Option<TailEnvelope> {
        None
    }
}

pub(crate) fn gaussian_vec(d: usize, rng: &mut StdRng) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniform draw from the unit ball B_d.
pub(crate) fn uniform_in_unit_ball(d: usize, rng: &mut StdRng) -> Vec<f64> {
    loop {
        let g = gaussian_vec(d, rng);
        let r = crate::points::norm(&g);
        if r > 0.0 {
            let s = rng.random::<f64>().powf(1.0 / d as f64) / r;
            return g.iter().map(|v| v * s).collect();
        }
    }
}

/// Rejection loop shared by the samplers: `draw` proposes and returns
/// `Some` on acceptance. Fails once the running acceptance rate is below
/// 1e−6 after 10⁷ proposals.
pub(crate) fn rejection_sample<F>(n: usize, d: usize, rng: &mut StdRng, mut draw: F) -> Result<PointSet>
where
    F: FnMut(&mut StdRng) -> Option<Vec<f64>>,
{
    let mut out = PointSet::with_capacity(d, n);
    let mut tries: u64 = 0;
    while out.len() < n {
        tries += 1;
        if let Some(x) = draw(rng) {
            out.push(&x);
        }
        if tries >= 10_000_000 && tries % 1_000_000 == 0 {
            let rate = out.len() as f64 / tries as f64;
            if rate < 1e-6 {
                return Err(ShapeError::Envelope { rate });
            }
        }
    }
    Ok(out)
}

/// log of the standard Gaussian density in R^d.
pub(crate) fn log_gamma_density(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    -0.5 * crate::points::dot(x, x) - 0.5 * d * (2.0 * std::f64::consts::PI).ln()
}
