use super::ball::{ball_volume, sphere_area, unit_ball_volume_or_one};
use crate::error::{Result, ShapeError};
use crate::points::{dot, norm};
use crate::quadrature::{integrate, QuadOptions};
use rand::rngs::StdRng;
use rand::RngExt;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// The part of the unit ball beyond the hyperplane `centerᵀx = t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    center: Vec<f64>,
    t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CapVolumeMethod {
    Exact,
    Asymptotic,
}

impl Cap {
    pub fn new(center: Vec<f64>, t: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(ShapeError::InvalidDimension {
                dim: 0,
                reason: "cap center must be a point of R^d".into(),
            });
        }
        if (norm(&center) - 1.0).abs() > 1e-12 {
            return Err(ShapeError::Domain(format!(
                "cap center must be a unit vector (norm {})",
                norm(&center)
            )));
        }
        check_height(t)?;
        Ok(Cap { center, t })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        dot(&self.center, x) >= self.t && dot(x, x) <= 1.0
    }

    pub fn volume(&self) -> f64 {
        cap_volume(self.dim(), self.t, CapVolumeMethod::Exact).expect("validated cap")
    }

    /// Uniform draw from the cap: height along the axis with density
    /// ∝ (1 − s²)^{(d−1)/2} by rejection, then a uniform point of the
    /// orthogonal (d−1)-ball slice.
    pub fn sample_uniform(&self, rng: &mut StdRng) -> Vec<f64> {
        let d = self.dim();
        let expo = (d as f64 - 1.0) / 2.0;
        let env = (1.0 - self.t * self.t).powf(expo);
        let s = loop {
            let s: f64 = rng.random_range(self.t..1.0);
            if d == 1 || rng.random::<f64>() * env <= (1.0 - s * s).powf(expo) {
                break s;
            }
        };
        let mut x: Vec<f64> = self.center.iter().map(|c| c * s).collect();
        if d > 1 {
            let mut g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let proj = dot(&g, &self.center);
            g.iter_mut().zip(&self.center).for_each(|(gi, ci)| *gi -= proj * ci);
            let gn = norm(&g);
            let rad = (1.0 - s * s).max(0.0).sqrt() * rng.random::<f64>().powf(1.0 / (d as f64 - 1.0));
            if gn > 0.0 {
                x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi += rad * gi / gn);
            }
        }
        x
    }
}

fn check_height(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(ShapeError::Domain(format!("cap height parameter t must lie in (0,1), got {t}")));
    }
    Ok(())
}

/// Volume of a cap {x ∈ B_d : x₀ᵀx ≥ t}.
///
/// `Exact` integrates the slice volumes vol(B_{d−1})(1−s²)^{(d−1)/2} over
/// s ∈ [t, 1]; `Asymptotic` returns vol(B_{d−1})(1−t²)^{(d+1)/2} / (t(d−1)),
/// accurate up to a relative O(1/d) term.
pub fn cap_volume(d: usize, t: f64, method: CapVolumeMethod) -> Result<f64> {
    if d == 0 {
        return Err(ShapeError::InvalidDimension {
            dim: 0,
            reason: "cap dimension must be at least 1".into(),
        });
    }
    check_height(t)?;
    let slice = unit_ball_volume_or_one(d - 1);
    let expo = (d as f64 - 1.0) / 2.0;
    match method {
        CapVolumeMethod::Exact => {
            let r = integrate(
                |s: f64| (1.0 - s * s).max(0.0).powf(expo),
                t,
                1.0,
                QuadOptions {
                    abs_tol: 0.0,
                    rel_tol: 1e-12,
                    max_intervals: 10_000,
                },
            );
            Ok(slice * r.value)
        }
        CapVolumeMethod::Asymptotic => {
            if d == 1 {
                return Err(ShapeError::InvalidDimension {
                    dim: 1,
                    reason: "the asymptotic cap formula needs d ≥ 2".into(),
                });
            }
            Ok(slice * (1.0 - t * t).powf((d as f64 + 1.0) / 2.0) / (t * (d as f64 - 1.0)))
        }
    }
}

/// Height parameter t_{d,N} = sqrt(1 − (vol(∂B_d) / (N vol(B_{d−1})))^{2/(d−1)})
/// of N caps that together have roughly the surface area of the sphere.
pub fn packing_height(d: usize, n_caps: usize) -> Result<f64> {
    if d < 2 {
        return Err(ShapeError::InvalidDimension {
            dim: d,
            reason: "cap packings need d ≥ 2".into(),
        });
    }
    let ratio = sphere_area(d)? / (n_caps as f64 * ball_volume(d - 1, 1.0)?);
    let inner = ratio.powf(2.0 / (d as f64 - 1.0));
    if !(inner < 1.0) || n_caps == 0 {
        return Err(ShapeError::InfeasiblePacking(format!(
            "N = {n_caps} caps is too few in dimension {d}: t would not lie in (0,1)"
        )));
    }
    Ok((1.0 - inner).sqrt())
}

/// Exact area of the intersection of two caps of the unit disk with the same
/// height parameter `t` and centers at angles `a`, `b`.
pub fn cap_pair_intersection_2d(a: f64, b: f64, t: f64) -> f64 {
    let theta = t.acos();
    let mut phi = (a - b).rem_euclid(std::f64::consts::TAU);
    if phi > std::f64::consts::PI {
        phi = std::f64::consts::TAU - phi;
    }
    if phi >= 2.0 * theta {
        return 0.0;
    }
    let psi = 2.0 * theta - phi;
    let segment = 0.5 * (psi - psi.sin());
    if phi < 1e-12 {
        return segment;
    }
    // arc endpoints at angular offsets ±psi/2 around the bisector; the two
    // chords meet on the bisector at distance t / cos(phi/2)
    let q = t / (0.5 * phi).cos();
    let (s, c) = (0.5 * psi).sin_cos();
    let p1 = (c, -s);
    let p2 = (c, s);
    let tri = 0.5 * ((p1.0 - q) * (p2.1) - (p2.0 - q) * (p1.1)).abs();
    segment + tri
}
