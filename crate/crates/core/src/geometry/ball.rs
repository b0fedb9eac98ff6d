use crate::error::{Result, ShapeError};
use std::f64::consts::PI;

pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(ShapeError::InvalidDimension {
            dim: d,
            reason: "ball dimension must be at least 1".into(),
        });
    }
    Ok(())
}

/// log vol(B_d(r)), finite for r > 0.
pub fn ln_ball_volume(d: usize, r: f64) -> Result<f64> {
    check_dim(d)?;
    if !(r >= 0.0) {
        return Err(ShapeError::Domain(format!("radius must be nonnegative, got {r}")));
    }
    let df = d as f64;
    Ok(0.5 * df * PI.ln() + df * r.ln() - ln_gamma(0.5 * df + 1.0))
}

/// Volume of the d-dimensional Euclidean ball of radius `r`:
/// π^{d/2} r^d / Γ(d/2 + 1), evaluated in log space.
pub fn ball_volume(d: usize, r: f64) -> Result<f64> {
    if r == 0.0 {
        check_dim(d)?;
        return Ok(0.0);
    }
    Ok(ln_ball_volume(d, r)?.exp())
}

/// Surface area of the unit sphere ∂B_d, equal to d·vol(B_d).
pub fn sphere_area(d: usize) -> Result<f64> {
    Ok(d as f64 * ball_volume(d, 1.0)?)
}

/// vol(B_0) is taken as 1 so that cap formulas stay uniform in d = 1.
pub(crate) fn unit_ball_volume_or_one(d: usize) -> f64 {
    if d == 0 {
        1.0
    } else {
        ball_volume(d, 1.0).expect("positive dimension")
    }
}
