//! |P_n(W) − P(W)| over intervals (exactly) and over convex polygons or
//! hulls (from below).

use crate::densities::Density;
use crate::error::{Result, ShapeError};
use crate::geometry::{convex_hull, ConvexBody};
use crate::points::PointSet;
use crate::quadrature::{integrate_2d, integrate_with_breaks, QuadOptions};
use crate::rng::stream;
use rand::RngExt;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiscrepancyMode {
    Exact,
    HullStatistic,
    LocalSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DiscrepancyWitness {
    /// [a, b] when `closed`, otherwise (a, b); a may be −∞ and b +∞.
    Interval { a: f64, b: f64, closed: bool },
    /// Convex hull of these sample indices.
    Polygon { indices: Vec<usize> },
    /// Convex hull of the whole sample.
    Hull,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub value: f64,
    pub witness: DiscrepancyWitness,
    pub mode: DiscrepancyMode,
}

/// Exact sup over all intervals of |P_n(I) − P(I)| for a continuous `cdf`.
///
/// P_n − P is maximized by closed intervals between sample points and
/// P − P_n by open intervals between sample points (or ±∞), so after
/// sorting both are prefix-maximum scans.
pub fn interval_discrepancy_1d<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> DiscrepancyReport {
    let n = samples.len();
    if n == 0 {
        return DiscrepancyReport {
            value: 0.0,
            witness: DiscrepancyWitness::Interval {
                a: 0.0,
                b: 0.0,
                closed: false,
            },
            mode: DiscrepancyMode::Exact,
        };
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let mut u: Vec<f64> = Vec::new();
    let mut below: Vec<f64> = Vec::new(); // P_n(x < u_k)
    let mut upto: Vec<f64> = Vec::new(); // P_n(x ≤ u_k)
    for (i, &x) in xs.iter().enumerate() {
        if u.last() == Some(&x) {
            *upto.last_mut().expect("non-empty") = (i + 1) as f64 / n as f64;
        } else {
            u.push(x);
            below.push(i as f64 / n as f64);
            upto.push((i + 1) as f64 / n as f64);
        }
    }
    let f: Vec<f64> = u.iter().map(|&x| cdf(x)).collect();
    let m = u.len();
    // closed [u_i, u_j]: upto_j − below_i − (F_j − F_i)
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize, true);
    let mut run = (f64::NEG_INFINITY, 0usize);
    for j in 0..m {
        let cand = f[j] - below[j];
        if cand > run.0 {
            run = (cand, j);
        }
        let v = upto[j] - f[j] + run.0;
        // ties go to the longer interval
        if v >= best.0 {
            best = (v, run.1, j, true);
        }
    }
    // open (u_i, u_j) with u_{−1} = −∞, u_m = +∞: F_j − F_i − (below_j − upto_i)
    let ext = |k: isize| -> (f64, f64) {
        if k < 0 {
            (0.0, 0.0)
        } else if k as usize >= m {
            (1.0, 1.0)
        } else {
            (f[k as usize], upto[k as usize])
        }
    };
    let below_ext = |k: isize| if k as usize >= m { 1.0 } else { below[k as usize] };
    let mut run = (f64::NEG_INFINITY, -1isize);
    for j in 0..=m as isize {
        let (fi, ui) = ext(j - 1);
        if ui - fi > run.0 {
            run = (ui - fi, j - 1);
        }
        let (fj, _) = ext(j);
        let v = fj - below_ext(j) + run.0;
        if v > best.0 {
            best = (v, run.1 as usize, j as usize, false);
        }
    }
    let (value, i, j, closed) = best;
    let witness = if closed {
        DiscrepancyWitness::Interval {
            a: u[i],
            b: u[j],
            closed: true,
        }
    } else {
        let a = if i == usize::MAX { f64::NEG_INFINITY } else { u[i] };
        let b = if j >= m { f64::INFINITY } else { u[j] };
        DiscrepancyWitness::Interval { a, b, closed: false }
    };
    DiscrepancyReport {
        value: value.max(0.0),
        witness,
        mode: DiscrepancyMode::Exact,
    }
}

/// P(polygon) for a density in the plane, by iterated quadrature.
pub fn polygon_probability(density: &dyn Density, body: &ConvexBody) -> f64 {
    let v = body.vertices();
    let mut ys: Vec<f64> = v.iter().map(|p| p[1]).collect();
    let (ylo, yhi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(*y), b.max(*y)));
    ys.extend(density.breakpoints_y().into_iter().filter(|y| *y > ylo && *y < yhi));
    let slice = |y: f64| -> Vec<f64> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let k = v.len();
        for e in 0..k {
            let (p, q) = (v.point(e), v.point((e + 1) % k));
            let (y0, y1) = (p[1].min(q[1]), p[1].max(q[1]));
            if y < y0 || y > y1 {
                continue;
            }
            if y1 - y0 < 1e-300 {
                lo = lo.min(p[0].min(q[0]));
                hi = hi.max(p[0].max(q[0]));
            } else {
                let x = p[0] + (q[0] - p[0]) * (y - p[1]) / (q[1] - p[1]);
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        if lo >= hi {
            return vec![];
        }
        let mut pts = vec![lo, hi];
        pts.extend(density.breakpoints_x(y).into_iter().filter(|x| *x > lo && *x < hi));
        pts
    };
    integrate_2d(|x, y| density.eval(&[x, y]), &ys, slice, QuadOptions::abs(1e-9)).value
}

fn hull_probability(density: &dyn Density, body: &ConvexBody, seed: u64) -> Result<f64> {
    match body.dimension() {
        1 => {
            let v = body.vertices().scalars();
            let (a, b) = (v[0], v[v.len() - 1]);
            Ok(match (density.cdf(a), density.cdf(b)) {
                (Some(fa), Some(fb)) => fb - fa,
                _ => {
                    let mut pts = vec![a, b];
                    pts.extend(density.breakpoints().into_iter().filter(|x| *x > a && *x < b));
                    integrate_with_breaks(|x| density.eval(&[x]), &pts, QuadOptions::abs(1e-11)).value
                }
            })
        }
        2 => Ok(polygon_probability(density, body)),
        _ => {
            let draws = 200_000;
            let pts = density.sample_with(draws, &mut stream(seed, &[0x4855_4c4c]))?;
            Ok(pts.iter().filter(|x| body.contains(x)).count() as f64 / draws as f64)
        }
    }
}

/// Lower bound on sup over convex sets of |P_n(C) − P(C)|.
///
/// `HullStatistic` (d ≤ 3) returns 1 − P(conv(samples)); `LocalSearch`
/// (d ≤ 2) starts there and anneals over hulls of sample subsets, and in
/// d = 1 is the exact interval scan. The d = 3 probability is a Monte-Carlo
/// estimate.
pub fn convex_discrepancy(samples: &PointSet, density: &dyn Density, mode: DiscrepancyMode, seed: u64) -> Result<DiscrepancyReport> {
    let d = samples.dim();
    if d != density.dim() {
        return Err(ShapeError::Domain("sample and density dimensions differ".into()));
    }
    let max_d = if mode == DiscrepancyMode::HullStatistic { 3 } else { 2 };
    if d > max_d || d == 0 {
        return Err(ShapeError::InvalidDimension {
            dim: d,
            reason: format!("{mode:?} is available for d ≤ {max_d}"),
        });
    }
    if mode == DiscrepancyMode::Exact && d != 1 {
        return Err(ShapeError::InvalidDimension {
            dim: d,
            reason: "the exact statistic exists only on the line".into(),
        });
    }
    let body = convex_hull(samples)?;
    let hull_value = 1.0 - hull_probability(density, &body, seed)?;
    let hull = DiscrepancyReport {
        value: hull_value,
        witness: DiscrepancyWitness::Hull,
        mode,
    };
    match (mode, d) {
        (DiscrepancyMode::HullStatistic, _) => Ok(hull),
        (_, 1) => {
            let cdf_ok = density.cdf(0.0).is_some();
            let exact = if cdf_ok {
                interval_discrepancy_1d(samples.scalars(), |x| density.cdf(x).expect("checked"))
            } else {
                let r = density.support_radius();
                let mut pts = vec![-r];
                pts.extend(density.breakpoints());
                interval_discrepancy_1d(samples.scalars(), |x| {
                    let mut p: Vec<f64> = pts.iter().copied().filter(|b| *b < x).collect();
                    p.push(x.min(r));
                    integrate_with_breaks(|t| density.eval(&[t]), &p, QuadOptions::abs(1e-11)).value
                })
            };
            Ok(if exact.value >= hull.value {
                DiscrepancyReport { mode, ..exact }
            } else {
                hull
            })
        }
        _ => local_search_2d(samples, density, hull, seed),
    }
}

const ANNEAL_STEPS: usize = 400;

fn local_search_2d(samples: &PointSet, density: &dyn Density, hull: DiscrepancyReport, seed: u64) -> Result<DiscrepancyReport> {
    let n = samples.len();
    let mut rng = stream(seed, &[0x414e_4e45]);
    let mut members = vec![true; n];
    let mut current = hull.value;
    let mut best = hull;
    let evaluate = |members: &[bool]| -> Option<(f64, Vec<usize>)> {
        let idx: Vec<usize> = (0..n).filter(|&i| members[i]).collect();
        if idx.len() < 3 {
            return None;
        }
        let rows: Vec<&[f64]> = idx.iter().map(|&i| samples.point(i)).collect();
        let body = convex_hull(&PointSet::from_rows(2, &rows)).ok()?;
        let count = samples.iter().filter(|x| body.contains(x)).count();
        let p = polygon_probability(density, &body);
        Some(((count as f64 / n as f64 - p).abs(), idx))
    };
    for step in 0..ANNEAL_STEPS {
        let temp = 0.02 * (1.0 - step as f64 / ANNEAL_STEPS as f64) / (n as f64).sqrt();
        let k = rng.random_range(0..n);
        members[k] = !members[k];
        match evaluate(&members) {
            Some((v, idx)) => {
                let accept = v >= current || (temp > 0.0 && rng.random::<f64>() < ((v - current) / temp).exp());
                if accept {
                    current = v;
                    if v > best.value {
                        best = DiscrepancyReport {
                            value: v,
                            witness: DiscrepancyWitness::Polygon { indices: idx },
                            mode: DiscrepancyMode::LocalSearch,
                        };
                    }
                } else {
                    members[k] = !members[k];
                }
            }
            None => members[k] = !members[k],
        }
    }
    Ok(best)
}
