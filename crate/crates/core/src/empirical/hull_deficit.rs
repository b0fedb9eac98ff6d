use crate::densities::{Density, UniformBall};
use crate::error::{Result, ShapeError};
use crate::experiments::{RateReport, RateRow};
use crate::geometry::{ball_volume, convex_hull};
use crate::rng::{derive_seed, stream};
use rayon::prelude::*;

/// Membership draws per hull in d ≥ 4.
pub const HULL_MC_DRAWS: usize = 4000;

/// 1 − P(conv(X_1..X_n)) for one uniform sample from B_d.
pub fn hull_deficit(d: usize, n: usize, seed: u64) -> Result<f64> {
    let ball = UniformBall::unit(d)?;
    let pts = ball.sample(n, seed)?;
    if d == 1 {
        let xs = pts.scalars();
        let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
        return Ok(1.0 - (hi - lo) / 2.0);
    }
    let body = convex_hull(&pts)?;
    match body.volume() {
        Some(v) => Ok(1.0 - v / ball_volume(d, 1.0)?),
        None => {
            let mut rng = stream(seed, &[0x4d43]);
            let probe = ball.sample_with(HULL_MC_DRAWS, &mut rng)?;
            let inside = probe.iter().filter(|x| body.contains(x)).count();
            Ok(1.0 - inside as f64 / HULL_MC_DRAWS as f64)
        }
    }
}

/// E[1 − P(hull)] for uniform samples on B_d over an n-grid, with the
/// log-log slope against the target −2/(d+1).
pub fn hull_deficit_experiment(d: usize, n_grid: &[usize], trials: usize, seed: u64) -> Result<RateReport> {
    if !(1..=5).contains(&d) {
        return Err(ShapeError::InvalidDimension {
            dim: d,
            reason: "hull deficits are computed for 1 ≤ d ≤ 5".into(),
        });
    }
    let mut rows = Vec::with_capacity(n_grid.len() * trials);
    for &n in n_grid {
        let cell: Result<Vec<RateRow>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let s = derive_seed(seed, &[n as u64, t as u64]);
                Ok(RateRow {
                    n,
                    trial: t,
                    risk: hull_deficit(d, n, s)?,
                    seed: s,
                })
            })
            .collect();
        rows.extend(cell?);
    }
    let tol = if d == 1 { 0.05 } else { 0.08 };
    RateReport::from_rows(rows, -2.0 / (d as f64 + 1.0), tol)
}
