//! Randomized cap packings of the unit sphere and antipodal ball packings.

use super::ball::{ball_volume, ln_ball_volume};
use super::cap::{cap_volume, packing_height, Cap, CapVolumeMethod};
use super::greedy::{greedy_disjointify, SetOracle};
use crate::error::{Result, ShapeError};
use crate::points::{dist, dot, norm};
use crate::rng::stream;
use rand::RngExt;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Default Monte-Carlo budget for one residual-volume query.
pub const CAP_RESIDUAL_DRAWS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapPacking {
    pub dimension: usize,
    pub n_requested: usize,
    pub t: f64,
    pub centers: Vec<Vec<f64>>,
    pub per_cap_volume: f64,
    /// Union fraction c₃ reported by the greedy step.
    pub c3: f64,
    /// MC residual volume of each kept cap outside the other kept caps.
    pub residuals: Vec<f64>,
    pub seed: u64,
}

impl CapPacking {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn cap(&self, i: usize) -> Cap {
        Cap::new(self.centers[i].clone(), self.t).expect("packing caps are valid")
    }

    /// Index of the first kept cap containing `x` (x assumed inside B_d).
    pub fn caps_containing(&self, x: &[f64]) -> impl Iterator<Item = usize> + '_ {
        let x = x.to_vec();
        self.centers
            .iter()
            .enumerate()
            .filter(move |(_, c)| dot(c, &x) >= self.t)
            .map(|(i, _)| i)
    }

    /// Packing on explicit unit centers with a common height, with residuals
    /// and union fraction measured by the MC oracle.
    pub fn from_centers(d: usize, t: f64, centers: Vec<Vec<f64>>, seed: u64, draws: usize) -> Result<Self> {
        if centers.is_empty() {
            return Err(ShapeError::InfeasiblePacking("no caps".into()));
        }
        for c in &centers {
            if c.len() != d {
                return Err(ShapeError::InvalidDimension {
                    dim: c.len(),
                    reason: format!("cap center in a {d}-dimensional packing"),
                });
            }
            Cap::new(c.clone(), t)?;
        }
        let v = cap_volume(d, t, CapVolumeMethod::Exact)?;
        let mut p = CapPacking {
            dimension: d,
            n_requested: centers.len(),
            t,
            centers,
            per_cap_volume: v,
            c3: 1.0,
            residuals: Vec::new(),
            seed,
        };
        let oracle = p.oracle(draws);
        let k = p.len();
        let all: Vec<usize> = (0..k).collect();
        p.residuals = (0..k)
            .map(|i| {
                let others: Vec<usize> = all.iter().copied().filter(|&j| j != i).collect();
                oracle.residual(i, &others)
            })
            .collect();
        p.c3 = oracle.union_volume(&all) / (k as f64 * v);
        Ok(p)
    }

    /// Residual-volume oracle over the kept caps.
    pub fn oracle(&self, draws: usize) -> CapOracle {
        CapOracle::new(self.centers.clone(), self.t, self.per_cap_volume, draws, self.seed ^ 0x5ca1_ab1e)
    }
}

/// Monte-Carlo residual volumes for caps with a common height.
pub struct CapOracle {
    centers: Vec<Vec<f64>>,
    t: f64,
    volume: f64,
    draws: usize,
    seed: u64,
    min_cos: f64,
}

impl CapOracle {
    pub fn new(centers: Vec<Vec<f64>>, t: f64, volume: f64, draws: usize, seed: u64) -> Self {
        // two caps can meet only when their axes are within twice the cap angle
        let min_cos = 2.0 * t * t - 1.0 - 1e-12;
        CapOracle {
            centers,
            t,
            volume,
            draws,
            seed,
            min_cos,
        }
    }
}

impl SetOracle for CapOracle {
    fn len(&self) -> usize {
        self.centers.len()
    }

    fn volume(&self, _: usize) -> f64 {
        self.volume
    }

    fn residual(&self, i: usize, others: &[usize]) -> f64 {
        let ci = &self.centers[i];
        let near: Vec<&[f64]> = others
            .iter()
            .filter(|&&j| j != i && dot(ci, &self.centers[j]) > self.min_cos)
            .map(|&j| self.centers[j].as_slice())
            .collect();
        if near.is_empty() {
            return self.volume;
        }
        let key = others.iter().fold(others.len() as u64, |h, &j| h.wrapping_mul(0x100_0000_01b3) ^ j as u64);
        let mut rng = stream(self.seed, &[i as u64, key]);
        let cap = Cap::new(ci.clone(), self.t).expect("valid cap");
        let mut outside = 0usize;
        for _ in 0..self.draws {
            let x = cap.sample_uniform(&mut rng);
            if near.iter().all(|c| dot(c, &x) < self.t) {
                outside += 1;
            }
        }
        self.volume * outside as f64 / self.draws as f64
    }
}

/// Draw `n_caps` uniform sphere points, set t = t_{d,N}, and thin them with
/// the greedy disjointification step using MC residual volumes.
pub fn cap_packing(d: usize, n_caps: usize, seed: u64) -> Result<CapPacking> {
    cap_packing_with(d, n_caps, seed, CAP_RESIDUAL_DRAWS)
}

pub fn cap_packing_with(d: usize, n_caps: usize, seed: u64, draws: usize) -> Result<CapPacking> {
    if n_caps < 2 {
        return Err(ShapeError::InfeasiblePacking(format!("need N ≥ 2 caps, got {n_caps}")));
    }
    let t = packing_height(d, n_caps)?;
    let v = cap_volume(d, t, CapVolumeMethod::Exact)?;
    let mut rng = stream(seed, &[0]);
    let centers: Vec<Vec<f64>> = (0..n_caps)
        .map(|_| loop {
            let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let r = norm(&g);
            if r > 1e-300 {
                break g.iter().map(|x| x / r).collect();
            }
        })
        .collect();
    let oracle = CapOracle::new(centers.clone(), t, v, draws, crate::rng::derive_seed(seed, &[1]));
    let out = greedy_disjointify(&oracle, v, None).map_err(|e| e.context("cap packing"))?;
    if out.kept.is_empty() {
        return Err(ShapeError::InfeasiblePacking("greedy step kept no caps".into()));
    }
    Ok(CapPacking {
        dimension: d,
        n_requested: n_caps,
        t,
        centers: out.kept.iter().map(|&i| centers[i].clone()).collect(),
        per_cap_volume: v,
        c3: out.c,
        residuals: out.residuals,
        seed,
    })
}

/// Radius-δ balls in B_d(√(2d)), all with first coordinate ≥ δ, together
/// with their mirror images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntipodalPacking {
    pub dimension: usize,
    pub delta: f64,
    pub radius: f64,
    /// One center of each antipodal pair; the partner is its negation.
    pub centers: Vec<Vec<f64>>,
    /// Empirical constant c with K = (c/2)^d vol(B_d(R)) / vol(B_d(δ)).
    pub c: f64,
}

impl AntipodalPacking {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// All 2K centers, pair k at positions 2k and 2k+1.
    pub fn all_centers(&self) -> Vec<Vec<f64>> {
        self.centers
            .iter()
            .flat_map(|c| [c.clone(), c.iter().map(|x| -x).collect()])
            .collect()
    }
}

/// Options for [`antipodal_ball_packing_with`].
#[derive(Debug, Clone, Copy)]
pub struct AntipodalOptions {
    /// δ must lie below e^{−C d}.
    pub c_bound: f64,
    /// Stop after this many consecutive rejected candidates (d ≥ 2).
    pub max_failures: usize,
    /// Hard cap on the number of pairs.
    pub max_pairs: usize,
}

impl Default for AntipodalOptions {
    fn default() -> Self {
        AntipodalOptions {
            c_bound: 1.0,
            max_failures: 5_000,
            max_pairs: 100_000,
        }
    }
}

pub fn antipodal_ball_packing(d: usize, delta: f64, seed: u64) -> Result<AntipodalPacking> {
    antipodal_ball_packing_with(d, delta, seed, AntipodalOptions::default())
}

/// Greedy packing of radius-δ balls in the half ball {x₁ ≥ δ} of
/// B_d(√(2d)), mirrored through the origin. In d = 1 the packing is the
/// deterministic left-to-right one; otherwise uniform candidates are
/// accepted when they clear all previous centers by 2δ.
pub fn antipodal_ball_packing_with(d: usize, delta: f64, seed: u64, opts: AntipodalOptions) -> Result<AntipodalPacking> {
    if d == 0 {
        return Err(ShapeError::InvalidDimension {
            dim: 0,
            reason: "packing dimension must be positive".into(),
        });
    }
    let bound = (-opts.c_bound * d as f64).exp();
    if !(delta > 0.0 && delta < bound) {
        return Err(ShapeError::Domain(format!("δ = {delta} must lie in (0, e^(-{} d) = {bound:.3e})", opts.c_bound)));
    }
    let radius = (2.0 * d as f64).sqrt();
    // centers live in the half ball of radius R − δ with x₁ ≥ δ
    let inner = radius - delta;
    let mut centers: Vec<Vec<f64>> = Vec::new();
    if d == 1 {
        let step = 2.0 * delta * (1.0 + 1e-6);
        let mut x = delta * (1.0 + 1e-6);
        while x <= inner * (1.0 - 1e-12) && centers.len() < opts.max_pairs {
            centers.push(vec![x]);
            x += step;
        }
    } else {
        let mut rng = stream(seed, &[]);
        let cell = 2.0 * delta;
        let use_grid = d <= 6;
        let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        let key = |x: &[f64]| -> Vec<i64> { x.iter().map(|v| (v / cell).floor() as i64).collect() };
        let offsets: Vec<Vec<i64>> = if use_grid {
            (0..3usize.pow(d as u32))
                .map(|mut m| {
                    (0..d)
                        .map(|_| {
                            let o = (m % 3) as i64 - 1;
                            m /= 3;
                            o
                        })
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };
        let mut failures = 0usize;
        while failures < opts.max_failures && centers.len() < opts.max_pairs {
            // uniform point of the ball of radius `inner`
            let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let r = inner * rng.random::<f64>().powf(1.0 / d as f64) / norm(&g);
            let mut x: Vec<f64> = g.iter().map(|v| v * r).collect();
            x[0] = x[0].abs();
            if x[0] < delta {
                failures += 1;
                continue;
            }
            let clear = if use_grid {
                let k = key(&x);
                offsets.iter().all(|o| {
                    let nk: Vec<i64> = k.iter().zip(o).map(|(a, b)| a + b).collect();
                    grid.get(&nk).is_none_or(|ids| ids.iter().all(|&j| dist(&centers[j], &x) >= 2.0 * delta))
                })
            } else {
                centers.iter().all(|c| dist(c, &x) >= 2.0 * delta)
            };
            if clear {
                if use_grid {
                    grid.entry(key(&x)).or_default().push(centers.len());
                }
                centers.push(x);
                failures = 0;
            } else {
                failures += 1;
            }
        }
    }
    if centers.is_empty() {
        return Err(ShapeError::InfeasiblePacking(format!("no radius-{delta} ball fits")));
    }
    let ln_ratio = ln_ball_volume(d, delta)? - ln_ball_volume(d, radius)?;
    let c = 2.0 * ((centers.len() as f64).ln() + ln_ratio).exp().powf(1.0 / d as f64);
    debug_assert!(ball_volume(d, delta)? > 0.0);
    Ok(AntipodalPacking {
        dimension: d,
        delta,
        radius,
        centers,
        c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::cap::cap_pair_intersection_2d;

    #[test]
    fn cap_packing_d2() {
        let p = cap_packing(2, 100, 3).unwrap();
        assert!((p.t - 0.999_506_5).abs() < 1e-6);
        assert!(p.len() >= 25, "kept {}", p.len());
        let thr = 0.5 * p.c3 * p.per_cap_volume;
        for &r in &p.residuals {
            assert!(r >= thr);
        }
        for c in &p.centers {
            assert!((norm(c) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mc_pair_intersection_matches_exact_in_2d() {
        let t = 0.8;
        let v = cap_volume(2, t, CapVolumeMethod::Exact).unwrap();
        let (a, b) = (0.0f64, 0.5f64);
        let centers = vec![vec![a.cos(), a.sin()], vec![b.cos(), b.sin()]];
        let oracle = CapOracle::new(centers, t, v, 200_000, 9);
        let inter = v - oracle.residual(0, &[1]);
        let exact = cap_pair_intersection_2d(a, b, t);
        assert!((inter - exact).abs() <= 0.02 * exact, "{inter} vs {exact}");
    }

    #[test]
    fn too_few_caps_is_infeasible() {
        assert!(matches!(cap_packing(2, 3, 0), Err(ShapeError::InfeasiblePacking(_))));
    }

    #[test]
    fn antipodal_1d() {
        let p = antipodal_ball_packing(1, 0.1, 0).unwrap();
        let lower = ((2f64.sqrt() - 0.2) / 0.2).floor() as usize;
        assert!(p.len() >= lower);
        for c in &p.centers {
            assert!(c[0] > 0.1 && c[0] < 2f64.sqrt() - 0.1);
        }
    }

    #[test]
    fn antipodal_2d_disjoint_and_inside() {
        let p = antipodal_ball_packing(2, 0.05, 4).unwrap();
        let all = p.all_centers();
        for i in 0..all.len() {
            assert!(norm(&all[i]) + 0.05 <= p.radius + 1e-12);
            for j in 0..i {
                assert!(dist(&all[i], &all[j]) >= 0.1 - 1e-12);
            }
        }
        let bound = (0.5 * p.c).powi(2) * ball_volume(2, 2.0).unwrap() / ball_volume(2, 0.05).unwrap();
        assert!(p.len() as f64 >= bound * (1.0 - 1e-9));
        assert!(p.c > 0.5, "c = {}", p.c);
    }

    #[test]
    fn antipodal_rejects_large_delta() {
        assert!(antipodal_ball_packing(2, 0.2, 0).is_err());
    }
}
