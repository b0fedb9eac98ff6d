//! Uniform densities on the ball with a selection of packing caps removed.

use super::uniform::unit_ball_volume;
use super::{rejection_sample, uniform_in_unit_ball, Density, TailEnvelope};
use crate::error::{Result, ShapeError};
use crate::geometry::{CapOracle, CapPacking, SetOracle};
use crate::points::{dot, PointSet};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use rand::rngs::StdRng;
use std::sync::Arc;

/// A cap packing together with the MC budget used for its union volumes.
#[derive(Debug, Clone)]
pub struct CapFamily {
    packing: CapPacking,
    draws: usize,
}

impl CapFamily {
    pub fn new(packing: CapPacking, draws: usize) -> Arc<Self> {
        Arc::new(CapFamily { packing, draws })
    }

    pub fn packing(&self) -> &CapPacking {
        &self.packing
    }

    pub fn len(&self) -> usize {
        self.packing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packing.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.packing.dimension
    }

    pub(crate) fn oracle(&self) -> CapOracle {
        self.packing.oracle(self.draws)
    }

    /// f_α, uniform on (B_d minus all caps) ∪ (caps with α_i = 1).
    pub fn density(self: &Arc<Self>, alpha: Vec<bool>) -> Result<CapFamilyDensity> {
        let k = self.len();
        if alpha.len() != k {
            return Err(ShapeError::InvalidFamily(format!("alpha has {} bits for K = {k} caps", alpha.len())));
        }
        let d = self.dim();
        let vol_ball = unit_ball_volume(d);
        // removed volume: deselected caps outside every selected cap
        let oracle = self.oracle();
        let mut outside: Vec<usize> = (0..k).filter(|&i| alpha[i]).collect();
        let mut removed = 0.0;
        for i in (0..k).filter(|&i| !alpha[i]) {
            removed += oracle.residual(i, &outside);
            outside.push(i);
        }
        let normalizer = vol_ball - removed;
        if !(normalizer > 0.0) {
            return Err(ShapeError::InvalidFamily("empty support".into()));
        }
        Ok(CapFamilyDensity {
            family: Arc::clone(self),
            alpha,
            normalizer,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CapFamilyDensity {
    family: Arc<CapFamily>,
    alpha: Vec<bool>,
    normalizer: f64,
}

impl CapFamilyDensity {
    pub fn family(&self) -> &Arc<CapFamily> {
        &self.family
    }

    pub fn alpha(&self) -> &[bool] {
        &self.alpha
    }

    /// vol(support) = (1 − C_α) vol(B_d).
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// C_α = 1 − vol(support)/vol(B_d).
    pub fn c_alpha(&self) -> f64 {
        1.0 - self.normalizer / unit_ball_volume(self.dim())
    }

    pub fn in_support(&self, x: &[f64]) -> bool {
        if dot(x, x) > 1.0 {
            return false;
        }
        let p = &self.family.packing;
        let mut in_any = false;
        for (i, c) in p.centers.iter().enumerate() {
            if dot(c, x) >= p.t {
                if self.alpha[i] {
                    return true;
                }
                in_any = true;
            }
        }
        !in_any
    }

    fn chord_points(&self) -> Vec<[f64; 2]> {
        let p = &self.family.packing;
        let s = (1.0 - p.t * p.t).sqrt();
        p.centers
            .iter()
            .flat_map(|c| {
                [
                    [p.t * c[0] - s * c[1], p.t * c[1] + s * c[0]],
                    [p.t * c[0] + s * c[1], p.t * c[1] - s * c[0]],
                ]
            })
            .collect()
    }
}

impl Density for CapFamilyDensity {
    fn dim(&self) -> usize {
        self.family.dim()
    }

    fn log_eval(&self, x: &[f64]) -> f64 {
        if self.in_support(x) {
            -self.normalizer.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn support_radius(&self) -> f64 {
        1.0
    }

    /// The support is convex only when no cap is removed.
    fn is_log_concave(&self) -> bool {
        self.alpha.iter().all(|&a| a)
    }

    fn sample_with(&self, n: usize, rng: &mut StdRng) -> Result<PointSet> {
        let d = self.dim();
        rejection_sample(n, d, rng, |rng| {
            let x = uniform_in_unit_ball(d, rng);
            self.in_support(&x).then_some(x)
        })
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.dim() != 1 {
            return Vec::new();
        }
        let t = self.family.packing.t;
        vec![-1.0, -t, t, 1.0]
    }

    fn breakpoints_y(&self) -> Vec<f64> {
        if self.dim() != 2 {
            return Vec::new();
        }
        let mut ys = vec![-1.0, 1.0];
        ys.extend(self.chord_points().iter().map(|p| p[1]));
        ys
    }

    fn breakpoints_x(&self, y: f64) -> Vec<f64> {
        if self.dim() != 2 || y.abs() >= 1.0 {
            return Vec::new();
        }
        let h = (1.0 - y * y).sqrt();
        let mut xs = vec![-h, h];
        let p = &self.family.packing;
        for c in &p.centers {
            if c[0].abs() > 1e-14 {
                let x = (p.t - c[1] * y) / c[0];
                if x.abs() < h {
                    xs.push(x);
                }
            }
        }
        xs
    }

    fn cdf(&self, x: f64) -> Option<f64> {
        if self.dim() != 1 {
            return None;
        }
        let hi = x.clamp(-1.0, 1.0);
        if hi <= -1.0 {
            return Some(0.0);
        }
        let mut b: Vec<f64> = self.breakpoints().into_iter().filter(|&v| v < hi).collect();
        b.push(hi);
        Some(integrate_with_breaks(|s| self.eval(&[s]), &b, QuadOptions::default()).value.clamp(0.0, 1.0))
    }

    fn tail_envelope(&self) -> Option<TailEnvelope> {
        Some(TailEnvelope::new(self.dim(), 1.0, 1.0 - self.normalizer.ln()))
    }
}
