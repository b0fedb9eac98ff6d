use super::{rejection_sample, uniform_in_unit_ball, Density, TailEnvelope};
use crate::error::{Result, ShapeError};
use crate::geometry::{ball_volume, ConvexBody};
use crate::points::{dist, norm, PointSet};
use rand::rngs::StdRng;
use rand::RngExt;
use serde::{Deserialize, Serialize};

/// Uniform density on [a, b].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformInterval {
    a: f64,
    b: f64,
}

impl UniformInterval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(b > a && a.is_finite() && b.is_finite()) {
            return Err(ShapeError::Domain(format!("empty interval [{a}, {b}]")));
        }
        Ok(UniformInterval { a, b })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}

impl Density for UniformInterval {
    fn dim(&self) -> usize {
        1
    }

    fn log_eval(&self, x: &[f64]) -> f64 {
        if x[0] >= self.a && x[0] <= self.b {
            -(self.b - self.a).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn support_radius(&self) -> f64 {
        self.a.abs().max(self.b.abs())
    }

    fn is_log_concave(&self) -> bool {
        true
    }

    fn sample_with(&self, n: usize, rng: &mut StdRng) -> Result<PointSet> {
        let xs: Vec<f64> = (0..n).map(|_| self.a + (self.b - self.a) * rng.random::<f64>()).collect();
        Ok(PointSet::from_scalars(&xs))
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.a, self.b]
    }

    fn cdf(&self, x: f64) -> Option<f64> {
        Some(((x - self.a) / (self.b - self.a)).clamp(0.0, 1.0))
    }

    fn tail_envelope(&self) -> Option<TailEnvelope> {
        Some(TailEnvelope::new(1, 1.0, self.support_radius() - (self.b - self.a).ln()))
    }
}

/// Uniform density on a Euclidean ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformBall {
    center: Vec<f64>,
    radius: f64,
    ln_volume: f64,
}

impl UniformBall {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(ShapeError::Domain(format!("radius must be positive, got {radius}")));
        }
        let ln_volume = crate::geometry::ln_ball_volume(center.len(), radius)?;
        Ok(UniformBall {
            center,
            radius,
            ln_volume,
        })
    }

    /// Uniform on the unit ball B_d.
    pub fn unit(d: usize) -> Result<Self> {
        UniformBall::new(vec![0.0; d], 1.0)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl Density for UniformBall {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn log_eval(&self, x: &[f64]) -> f64 {
        if dist(x, &self.center) <= self.radius {
            -self.ln_volume
        } else {
            f64::NEG_INFINITY
        }
    }

    fn support_radius(&self) -> f64 {
        norm(&self.center) + self.radius
    }

    fn is_log_concave(&self) -> bool {
        true
    }

    fn sample_with(&self, n: usize, rng: &mut StdRng) -> Result<PointSet> {
        let d = self.dim();
        let mut out = PointSet::with_capacity(d, n);
        for _ in 0..n {
            let u = uniform_in_unit_ball(d, rng);
            let x: Vec<f64> = u.iter().zip(&self.center).map(|(a, c)| c + self.radius * a).collect();
            out.push(&x);
        }
        Ok(out)
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.dim() == 1 {
            vec![self.center[0] - self.radius, self.center[0] + self.radius]
        } else {
            Vec::new()
        }
    }

    fn breakpoints_y(&self) -> Vec<f64> {
        if self.dim() == 2 {
            vec![self.center[1] - self.radius, self.center[1], self.center[1] + self.radius]
        } else {
            Vec::new()
        }
    }

    fn breakpoints_x(&self, y: f64) -> Vec<f64> {
        let dy = y - self.center[1];
        if self.dim() == 2 && dy.abs() < self.radius {
            let h = (self.radius * self.radius - dy * dy).sqrt();
            vec![self.center[0] - h, self.center[0] + h]
        } else {
            Vec::new()
        }
    }

    fn cdf(&self, x: f64) -> Option<f64> {
        (self.dim() == 1).then(|| ((x - self.center[0] + self.radius) / (2.0 * self.radius)).clamp(0.0, 1.0))
    }

    fn tail_envelope(&self) -> Option<TailEnvelope> {
        Some(TailEnvelope::new(self.dim(), 1.0, self.support_radius() - self.ln_volume))
    }
}

/// Uniform density on a convex polytope with known volume (d ≤ 3).
#[derive(Debug, Clone, PartialEq)]
pub struct UniformBody {
    body: ConvexBody,
    volume: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl UniformBody {
    pub fn new(body: ConvexBody) -> Result<Self> {
        let volume = body
            .volume()
            .ok_or_else(|| ShapeError::Domain("uniform-on-body needs an exact volume (d ≤ 3)".into()))?;
        if !(volume > 0.0) {
            return Err(ShapeError::Domain("body has zero volume".into()));
        }
        let d = body.dimension();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in body.vertices().iter() {
            for k in 0..d {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Ok(UniformBody { body, volume, lo, hi })
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }
}

impl Density for UniformBody {
    fn dim(&self) -> usize {
        self.body.dimension()
    }

    fn log_eval(&self, x: &[f64]) -> f64 {
        if self.body.contains(x) {
            -self.volume.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn support_radius(&self) -> f64 {
        self.body.vertices().iter().map(norm).fold(0.0, f64::max)
    }

    fn is_log_concave(&self) -> bool {
        true
    }

    fn sample_with(&self, n: usize, rng: &mut StdRng) -> Result<PointSet> {
        let d = self.dim();
        let (lo, hi) = (self.lo.clone(), self.hi.clone());
        rejection_sample(n, d, rng, |rng| {
            let x: Vec<f64> = (0..d).map(|k| rng.random_range(lo[k]..=hi[k])).collect();
            self.body.contains(&x).then_some(x)
        })
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.dim() == 1 {
            vec![self.lo[0], self.hi[0]]
        } else {
            Vec::new()
        }
    }

    fn breakpoints_y(&self) -> Vec<f64> {
        if self.dim() == 2 {
            self.body.vertices().iter().map(|p| p[1]).collect()
        } else {
            Vec::new()
        }
    }

    fn breakpoints_x(&self, y: f64) -> Vec<f64> {
        if self.dim() != 2 || y < self.lo[1] || y > self.hi[1] {
            return Vec::new();
        }
        let (mut a, mut b) = (f64::NEG_INFINITY, f64::INFINITY);
        for f in self.body.facets() {
            let (n0, n1) = (f.normal[0], f.normal[1]);
            let rhs = f.offset - n1 * y;
            if n0 > 1e-14 {
                b = b.min(rhs / n0);
            } else if n0 < -1e-14 {
                a = a.max(rhs / n0);
            }
        }
        if a < b {
            vec![a, b]
        } else {
            Vec::new()
        }
    }

    fn cdf(&self, x: f64) -> Option<f64> {
        (self.dim() == 1).then(|| ((x - self.lo[0]) / (self.hi[0] - self.lo[0])).clamp(0.0, 1.0))
    }

    fn tail_envelope(&self) -> Option<TailEnvelope> {
        Some(TailEnvelope::new(self.dim(), 1.0, self.support_radius() - self.volume.ln()))
    }
}

pub(crate) fn unit_ball_volume(d: usize) -> f64 {
    ball_volume(d, 1.0).expect("positive dimension")
}
