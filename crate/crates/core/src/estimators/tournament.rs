//! Minimum-distance selection over a finite net of candidate densities,
//! with distance measured on a finite family of witness sets.

use crate::densities::Density;
use crate::error::{Result, ShapeError};
use crate::points::PointSet;
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::rng::stream;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// Union of disjoint half-open intervals [a, b).
    Intervals(Vec<(f64, f64)>),
    /// {x : f_i(x) > f_j(x)}.
    Scheffe { i: usize, j: usize },
}

#[derive(Debug, Clone)]
pub struct TournamentNet {
    candidates: Vec<Arc<dyn Density>>,
    witnesses: Vec<Witness>,
    /// probs[a][k] = P_{f_k}(A_a).
    probs: Vec<Vec<f64>>,
    separation: f64,
}

const GRID: usize = 4000;

impl TournamentNet {
    /// Scheffé witnesses for every pair. In d = 1 the sets are resolved into
    /// intervals and their probabilities integrated; otherwise probabilities
    /// are Monte-Carlo estimates from `mc_draws` draws per candidate.
    pub fn scheffe(candidates: Vec<Arc<dyn Density>>, mc_draws: usize, seed: u64) -> Result<Self> {
        let dim = check_candidates(&candidates)?;
        let m = candidates.len();
        let mut witnesses = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                if dim == 1 {
                    witnesses.push(Witness::Intervals(scheffe_intervals(&*candidates[i], &*candidates[j])));
                } else {
                    witnesses.push(Witness::Scheffe { i, j });
                }
            }
        }
        let probs = if dim == 1 {
            interval_probs(&candidates, &witnesses)
        } else {
            let mut probs = vec![vec![0.0; m]; witnesses.len()];
            for (k, f) in candidates.iter().enumerate() {
                let pts = f.sample_with(mc_draws.max(1), &mut stream(seed, &[k as u64]))?;
                for (a, w) in witnesses.iter().enumerate() {
                    let hits = pts.iter().filter(|x| member(&candidates, w, x)).count();
                    probs[a][k] = hits as f64 / pts.len() as f64;
                }
            }
            probs
        };
        Ok(Self::finish(candidates, witnesses, probs))
    }

    /// Explicit interval witnesses on the line.
    pub fn with_intervals(candidates: Vec<Arc<dyn Density>>, witnesses: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        let dim = check_candidates(&candidates)?;
        if dim != 1 {
            return Err(ShapeError::InvalidDimension {
                dim,
                reason: "interval witnesses need d = 1".into(),
            });
        }
        let witnesses: Vec<Witness> = witnesses.into_iter().map(Witness::Intervals).collect();
        let probs = interval_probs(&candidates, &witnesses);
        Ok(Self::finish(candidates, witnesses, probs))
    }

    fn finish(candidates: Vec<Arc<dyn Density>>, witnesses: Vec<Witness>, probs: Vec<Vec<f64>>) -> Self {
        let m = candidates.len();
        let mut separation = f64::INFINITY;
        for i in 0..m {
            for j in i + 1..m {
                let gap = probs.iter().fold(0.0f64, |s, p| s.max((p[i] - p[j]).abs()));
                separation = separation.min(gap);
            }
        }
        TournamentNet {
            candidates,
            witnesses,
            probs,
            separation,
        }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[Arc<dyn Density>] {
        &self.candidates
    }

    pub fn witnesses(&self) -> &[Witness] {
        &self.witnesses
    }

    pub fn probability(&self, witness: usize, candidate: usize) -> f64 {
        self.probs[witness][candidate]
    }

    /// Smallest pairwise witness gap; equals the smallest pairwise TV for
    /// Scheffé witnesses.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// Empirical measure of every witness set.
    pub fn empirical(&self, samples: &PointSet) -> Vec<f64> {
        let n = samples.len() as f64;
        if samples.dim() == 1 {
            let mut xs = samples.scalars().to_vec();
            xs.sort_by(f64::total_cmp);
            return self
                .witnesses
                .iter()
                .map(|w| match w {
                    Witness::Intervals(iv) => {
                        let c: usize = iv
                            .iter()
                            .map(|&(a, b)| xs.partition_point(|v| *v < b) - xs.partition_point(|v| *v < a))
                            .sum();
                        c as f64 / n
                    }
                    w => samples.iter().filter(|x| member(&self.candidates, w, x)).count() as f64 / n,
                })
                .collect();
        }
        self.witnesses
            .iter()
            .map(|w| samples.iter().filter(|x| member(&self.candidates, w, x)).count() as f64 / n)
            .collect()
    }

    /// max_A |P_n(A) − P_f(A)| for every candidate f.
    pub fn scores(&self, samples: &PointSet) -> Vec<f64> {
        let emp = self.empirical(samples);
        (0..self.candidates.len())
            .map(|k| {
                emp.iter()
                    .zip(&self.probs)
                    .fold(0.0f64, |s, (e, p)| s.max((e - p[k]).abs()))
            })
            .collect()
    }
}

/// Index of the candidate with the smallest score; ties go to the smallest index.
pub fn tournament_estimate(samples: &PointSet, net: &TournamentNet) -> usize {
    let scores = net.scores(samples);
    let mut best = 0;
    for (k, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = k;
        }
    }
    best
}

fn check_candidates(c: &[Arc<dyn Density>]) -> Result<usize> {
    let first = c.first().ok_or_else(|| ShapeError::Domain("the net needs at least one candidate".into()))?;
    let d = first.dim();
    if c.iter().any(|f| f.dim() != d) {
        return Err(ShapeError::Domain("candidates live in different dimensions".into()));
    }
    Ok(d)
}

fn member(c: &[Arc<dyn Density>], w: &Witness, x: &[f64]) -> bool {
    match w {
        Witness::Intervals(iv) => iv.iter().any(|&(a, b)| x[0] >= a && x[0] < b),
        Witness::Scheffe { i, j } => c[*i].eval(x) > c[*j].eval(x),
    }
}

/// {f > g} on the line as intervals: sign changes of f − g on a grid over
/// both supports (plus breakpoints), refined by bisection.
fn scheffe_intervals(f: &dyn Density, g: &dyn Density) -> Vec<(f64, f64)> {
    let r = f.support_radius().max(g.support_radius());
    let mut grid: Vec<f64> = (0..=GRID).map(|k| -r + 2.0 * r * k as f64 / GRID as f64).collect();
    for b in f.breakpoints().into_iter().chain(g.breakpoints()) {
        if b.is_finite() {
            grid.push(b);
            // both sides of a jump
            grid.push(b - 1e-12 * (1.0 + b.abs()));
            grid.push(b + 1e-12 * (1.0 + b.abs()));
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let pos = |x: f64| f.eval(&[x]) > g.eval(&[x]);
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut start: Option<f64> = if pos(grid[0]) { Some(f64::NEG_INFINITY) } else { None };
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (pa, pb) = (pos(a), pos(b));
        if pa == pb {
            continue;
        }
        let (mut lo, mut hi) = (a, b);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if pos(mid) == pa {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if pa {
            out.push((start.take().expect("open interval"), hi));
        } else {
            start = Some(hi);
        }
    }
    if let Some(s) = start {
        out.push((s, f64::INFINITY));
    }
    out
}

fn interval_probs(c: &[Arc<dyn Density>], witnesses: &[Witness]) -> Vec<Vec<f64>> {
    witnesses
        .iter()
        .map(|w| {
            let Witness::Intervals(iv) = w else {
                unreachable!("interval witnesses only")
            };
            c.iter().map(|f| iv.iter().map(|&(a, b)| interval_mass(&**f, a, b)).sum()).collect()
        })
        .collect()
}

fn interval_mass(f: &dyn Density, a: f64, b: f64) -> f64 {
    if let (Some(fa), Some(fb)) = (cdf_at(f, a), cdf_at(f, b)) {
        return (fb - fa).max(0.0);
    }
    let r = f.support_radius();
    let (lo, hi) = (a.max(-r), b.min(r));
    if lo >= hi {
        return 0.0;
    }
    let mut pts = vec![lo, hi];
    pts.extend(f.breakpoints().into_iter().filter(|x| *x > lo && *x < hi));
    integrate_with_breaks(|x| f.eval(&[x]), &pts, QuadOptions::abs(1e-11)).value
}

fn cdf_at(f: &dyn Density, x: f64) -> Option<f64> {
    f.cdf(x.clamp(f64::MIN, f64::MAX))
}
