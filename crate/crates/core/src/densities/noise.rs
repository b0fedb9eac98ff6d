//! Regression noise laws with their moment and tail constants.

use crate::error::{Result, ShapeError};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use rand::rngs::StdRng;
use rand::RngExt;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseKind {
    Zero,
    Gaussian { sigma: f64 },
    Laplace { scale: f64 },
    Uniform { half_width: f64 },
}

/// A noise law ξ together with q = 2+ε, a bound L on E|ξ|^q and
/// C_ξ = ∫₀^∞ √P(|ξ| > t) dt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub moment_order: f64,
    pub moment_bound: f64,
    pub tail_integral: f64,
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

impl NoiseKind {
    /// P(|ξ| > t).
    pub fn tail(&self, t: f64) -> f64 {
        match *self {
            NoiseKind::Zero => 0.0,
            NoiseKind::Gaussian { sigma } => libm::erfc(t / (sigma * SQRT_2)),
            NoiseKind::Laplace { scale } => (-t / scale).exp(),
            NoiseKind::Uniform { half_width } => (1.0 - t / half_width).max(0.0),
        }
    }

    /// E|ξ|^q in closed form.
    pub fn abs_moment(&self, q: f64) -> f64 {
        match *self {
            NoiseKind::Zero => 0.0,
            NoiseKind::Gaussian { sigma } => {
                sigma.powf(q) * (0.5 * q * 2f64.ln() + ln_gamma(0.5 * (q + 1.0)) - 0.5 * PI.ln()).exp()
            }
            NoiseKind::Laplace { scale } => scale.powf(q) * ln_gamma(q + 1.0).exp(),
            NoiseKind::Uniform { half_width } => half_width.powf(q) / (q + 1.0),
        }
    }

    pub fn sample(&self, rng: &mut StdRng) -> f64 {
        match *self {
            NoiseKind::Zero => 0.0,
            NoiseKind::Gaussian { sigma } => sigma * rng.sample::<f64, _>(StandardNormal),
            NoiseKind::Laplace { scale } => {
                let e = -(1.0 - rng.random::<f64>()).ln() * scale;
                if rng.random_bool(0.5) {
                    e
                } else {
                    -e
                }
            }
            NoiseKind::Uniform { half_width } => rng.random_range(-half_width..=half_width),
        }
    }

    fn check(&self) -> Result<()> {
        let ok = match *self {
            NoiseKind::Zero => true,
            NoiseKind::Gaussian { sigma } => sigma > 0.0,
            NoiseKind::Laplace { scale } => scale > 0.0,
            NoiseKind::Uniform { half_width } => half_width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(ShapeError::Domain(format!("noise scale must be positive: {self:?}")))
        }
    }
}

impl NoiseSpec {
    /// Builds the spec for moment order q = 2+ε (ε > 0). L is the larger
    /// of the exact moment and C_ξ, so both documented bounds hold.
    pub fn new(kind: NoiseKind, moment_order: f64) -> Result<Self> {
        kind.check()?;
        if !(moment_order > 2.0) {
            return Err(ShapeError::Domain(format!("moment order must exceed 2, got {moment_order}")));
        }
        let tail_integral = match kind {
            NoiseKind::Zero => 0.0,
            NoiseKind::Laplace { scale } => 2.0 * scale,
            NoiseKind::Uniform { half_width } => 2.0 * half_width / 3.0,
            NoiseKind::Gaussian { sigma } => {
                integrate_with_breaks(|t| kind.tail(t).sqrt(), &[0.0, sigma, 4.0 * sigma, 40.0 * sigma], QuadOptions::default()).value
            }
        };
        let moment_bound = kind.abs_moment(moment_order).max(tail_integral);
        Ok(NoiseSpec {
            kind,
            moment_order,
            moment_bound,
            tail_integral,
        })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        NoiseSpec::new(NoiseKind::Gaussian { sigma }, 2.5)
    }

    pub fn sample(&self, rng: &mut StdRng) -> f64 {
        self.kind.sample(rng)
    }
}
