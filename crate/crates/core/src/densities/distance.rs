//! Squared Hellinger and total-variation distances by quadrature or
//! importance-sampled Monte Carlo.

use super::Density;
use crate::error::{Result, ShapeError};
use crate::quadrature::{integrate_2d, integrate_with_breaks, QuadOptions};
use crate::rng::stream;
use rand::RngExt;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DistanceMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy)]
pub struct DistanceOptions {
    pub method: DistanceMethod,
    /// Monte-Carlo draws.
    pub budget: usize,
    /// Quadrature tolerances.
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    pub seed: u64,
}

impl DistanceOptions {
    /// Quadrature with the default tolerance for dimension d
    /// (1e−8 absolute in d = 1, 1e−6 in d = 2).
    pub fn quadrature(d: usize) -> Self {
        DistanceOptions {
            method: DistanceMethod::Quadrature,
            budget: 0,
            abs_tol: if d == 1 { 1e-8 } else { 1e-6 },
            rel_tol: 1e-8,
            max_intervals: 50_000,
            seed: 0,
        }
    }

    pub fn monte_carlo(budget: usize, seed: u64) -> Self {
        DistanceOptions {
            method: DistanceMethod::MonteCarlo,
            budget,
            abs_tol: 0.0,
            rel_tol: 0.0,
            max_intervals: 0,
            seed,
        }
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

/// A numerical value with its standard error (MC) or error estimate
/// (quadrature); `converged` is false when the budget ran out first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub converged: bool,
}

/// h²(p, q) = ½∫(√p − √q)².
pub fn hellinger_sq(p: &dyn Density, q: &dyn Density, opts: DistanceOptions) -> Result<Estimate> {
    distance(p, q, opts, |a, b| {
        let s = a.sqrt() + b.sqrt();
        if s == 0.0 {
            0.0
        } else {
            // (√a − √b)² without cancellation
            let diff = (a - b) / s;
            0.5 * diff * diff
        }
    })
}

/// d_TV(p, q) = ½∫|p − q|.
pub fn total_variation(p: &dyn Density, q: &dyn Density, opts: DistanceOptions) -> Result<Estimate> {
    distance(p, q, opts, |a, b| 0.5 * (a - b).abs())
}

fn distance<F>(p: &dyn Density, q: &dyn Density, opts: DistanceOptions, kernel: F) -> Result<Estimate>
where
    F: Fn(f64, f64) -> f64 + Copy,
{
    let d = p.dim();
    if q.dim() != d {
        return Err(ShapeError::InvalidDimension {
            dim: q.dim(),
            reason: format!("densities live in different dimensions ({d} and {})", q.dim()),
        });
    }
    match opts.method {
        DistanceMethod::Quadrature => quadrature(p, q, opts, kernel),
        DistanceMethod::MonteCarlo => Ok(monte_carlo(p, q, opts, kernel)?),
    }
}

fn sorted_within(mut v: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    v.retain(|x| x.is_finite() && *x > lo && *x < hi);
    v.push(lo);
    v.push(hi);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn quadrature<F>(p: &dyn Density, q: &dyn Density, opts: DistanceOptions, kernel: F) -> Result<Estimate>
where
    F: Fn(f64, f64) -> f64 + Copy,
{
    let r = p.support_radius().max(q.support_radius());
    let qopts = QuadOptions {
        abs_tol: opts.abs_tol,
        rel_tol: opts.rel_tol,
        max_intervals: opts.max_intervals,
    };
    let res = match p.dim() {
        1 => {
            let mut b = p.breakpoints();
            b.extend(q.breakpoints());
            let b = sorted_within(b, -r, r);
            integrate_with_breaks(|x| kernel(p.eval(&[x]), q.eval(&[x])), &b, qopts)
        }
        2 => {
            let mut ys = p.breakpoints_y();
            ys.extend(q.breakpoints_y());
            let ys = sorted_within(ys, -r, r);
            integrate_2d(
                |x, y| kernel(p.eval(&[x, y]), q.eval(&[x, y])),
                &ys,
                |y| {
                    let mut xs = p.breakpoints_x(y);
                    xs.extend(q.breakpoints_x(y));
                    sorted_within(xs, -r, r)
                },
                qopts,
            )
        }
        d => {
            return Err(ShapeError::InvalidDimension {
                dim: d,
                reason: "quadrature distances are available for d ≤ 2; use Monte Carlo".into(),
            })
        }
    };
    Ok(Estimate {
        value: res.value.max(0.0),
        se: res.error,
        converged: res.converged,
    })
}

/// Importance sampling from the mixture m = (p + q)/2.
fn monte_carlo<F>(p: &dyn Density, q: &dyn Density, opts: DistanceOptions, kernel: F) -> Result<Estimate>
where
    F: Fn(f64, f64) -> f64,
{
    let n = opts.budget.max(2);
    let mut rng = stream(opts.seed, &[]);
    let from_p = (0..n).filter(|_| rng.random_bool(0.5)).count();
    let xs_p = if from_p > 0 { Some(p.sample_with(from_p, &mut rng)?) } else { None };
    let xs_q = if n - from_p > 0 {
        Some(q.sample_with(n - from_p, &mut rng)?)
    } else {
        None
    };
    let (mut sum, mut sum2) = (0.0, 0.0);
    for x in xs_p.iter().flat_map(|s| s.iter()).chain(xs_q.iter().flat_map(|s| s.iter())) {
        let (a, b) = (p.eval(x), q.eval(x));
        let m = 0.5 * (a + b);
        let w = if m > 0.0 { kernel(a, b) / m } else { 0.0 };
        sum += w;
        sum2 += w * w;
    }
    let mean = sum / n as f64;
    let var = (sum2 / n as f64 - mean * mean).max(0.0);
    Ok(Estimate {
        value: mean,
        se: (var / n as f64).sqrt(),
        converged: true,
    })
}
