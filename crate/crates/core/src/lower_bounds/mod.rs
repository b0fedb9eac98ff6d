//! Assouad-type lower bounds from the cap and bump hypercube families.

mod verify;


pub use verify::{verify_bump_family, verify_cap_family, FamilyVerification, PairMeasurement};

use crate::densities::{BumpFamily, BumpOptions, CapFamily};
use crate::error::{Result, ShapeError};
use crate::experiments::{fit_slope, RateRow};
use crate::geometry::{cap_packing_with, packing_height};
use crate::rng::{derive_seed, stream};
use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Family-size constant: N = ⌈c₁ n^{(d−1)/(d+1)}⌉ caps are requested.
pub const CAP_C1: f64 = 2.0;
/// Bump radius constant: δ = c₅ √d n^{−1/(d+4)}.
pub const BUMP_C5: f64 = 0.25;
/// MC draws per residual-volume or symmetric-difference query.
pub const LB_DRAWS: usize = 20_000;
/// Hamming-1 pairs sampled to set η and c of a cap instance.
pub const ONE_BIT_PAIRS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssouadInstance {
    pub k: usize,
    pub eta: f64,
    pub c: f64,
}

impl AssouadInstance {
    /// η = 0 is accepted (the bound is then trivially 0).
    pub fn new(k: usize, eta: f64, c: f64) -> Result<Self> {
        if k == 0 {
            return Err(ShapeError::InvalidFamily("hypercube dimension K must be at least 1".into()));
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(ShapeError::Domain(format!("η must be finite and nonnegative, got {eta}")));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(ShapeError::OutOfRegime(format!("closeness constant c = {c} must lie in (0,1)")));
        }
        Ok(AssouadInstance { k, eta, c })
    }
}

/// (K/8)(1 − √c) η.
pub fn assouad_bound(inst: &AssouadInstance) -> f64 {
    inst.k as f64 / 8.0 * (1.0 - inst.c.sqrt()) * inst.eta
}

/// One-bit distances: sampled Hamming-1 pairs for caps, every coordinate
/// for bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneBit {
    pub h2: Vec<f64>,
    pub tv: Vec<f64>,
}

impl OneBit {
    fn min_h2(&self) -> f64 {
        self.h2.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn max_h2(&self) -> f64 {
        self.h2.iter().copied().fold(0.0, f64::max)
    }

    fn min_tv(&self) -> f64 {
        self.tv.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn instance_from(n: usize, k: usize, bits: &OneBit) -> Result<(AssouadInstance, AssouadInstance)> {
    let c = n.max(1) as f64 * bits.max_h2();
    let hel = AssouadInstance::new(k, bits.min_h2(), c)?;
    let tv = AssouadInstance::new(k, bits.min_tv(), c)?;
    Ok((hel, tv))
}

pub struct CapInstance {
    pub family: Arc<CapFamily>,
    pub n_requested: usize,
    pub one_bit: OneBit,
    pub hellinger: AssouadInstance,
    pub tv: AssouadInstance,
}

/// Smallest N for which the packing height lies in (0,1).
fn min_caps(d: usize) -> usize {
    (2..).find(|&m| packing_height(d, m).is_ok()).expect("large N is always feasible")
}

/// Cap family for sample size n. η and c are the smallest and largest h²
/// (times n for c) over random Hamming-1 pairs.
pub fn build_cap_instance(d: usize, n: usize, seed: u64) -> Result<CapInstance> {
    if d < 2 {
        return Err(ShapeError::InvalidDimension {
            dim: d,
            reason: "the cap family needs d ≥ 2".into(),
        });
    }
    let rule = (CAP_C1 * (n.max(1) as f64).powf((d as f64 - 1.0) / (d as f64 + 1.0))).ceil() as usize;
    let n_caps = rule.max(min_caps(d));
    let packing = cap_packing_with(d, n_caps, derive_seed(seed, &[0]), LB_DRAWS).map_err(|e| e.context("cap family"))?;
    let family = CapFamily::new(packing, LB_DRAWS);
    let k = family.len();
    let mut rng = stream(seed, &[1]);
    let draws: Vec<(Vec<bool>, usize)> = (0..ONE_BIT_PAIRS)
        .map(|_| ((0..k).map(|_| rng.random_bool(0.5)).collect(), rng.random_range(0..k)))
        .collect();
    let pairs: Vec<PairMeasurement> = draws
        .into_par_iter()
        .enumerate()
        .map(|(t, (base, i))| {
            let mut other = base.clone();
            other[i] = !other[i];
            let da = family.density(base)?;
            let v = da.normalizer();
            verify::cap_pair(&family, &da, v, &other, derive_seed(seed, &[2, t as u64]))
        })
        .collect::<Result<_>>()?;
    let one_bit = OneBit {
        h2: pairs.iter().map(|p| p.h2).collect(),
        tv: pairs.iter().map(|p| p.tv).collect(),
    };
    let (hellinger, tv) = instance_from(n, k, &one_bit)?;
    Ok(CapInstance {
        family,
        n_requested: n_caps,
        one_bit,
        hellinger,
        tv,
    })
}

pub struct BumpInstance {
    pub family: Arc<BumpFamily>,
    pub delta: f64,
    pub one_bit: OneBit,
    pub hellinger: AssouadInstance,
    pub tv: AssouadInstance,
}

pub fn bump_delta(d: usize, n: usize) -> f64 {
    BUMP_C5 * (d as f64).sqrt() * (n.max(1) as f64).powf(-1.0 / (d as f64 + 4.0))
}

/// Smallest n whose δ lies below the e^{−Cd} bound.
pub fn min_bump_n(d: usize) -> usize {
    let bound = (-BumpOptions::default().c_bound * d as f64).exp();
    let x = (BUMP_C5 * (d as f64).sqrt() / bound).powf(d as f64 + 4.0);
    let mut m = x.floor().max(1.0) as usize;
    while bump_delta(d, m) >= bound {
        m += 1;
    }
    m
}

/// Bump family for sample size n; one-bit distances are exact.
pub fn build_bump_instance(d: usize, n: usize, seed: u64) -> Result<BumpInstance> {
    if d == 0 {
        return Err(ShapeError::InvalidDimension {
            dim: 0,
            reason: "the bump family needs d ≥ 1".into(),
        });
    }
    let delta = bump_delta(d, n);
    let bound = (-BumpOptions::default().c_bound * d as f64).exp();
    if delta >= bound {
        return Err(ShapeError::OutOfRegime(format!(
            "δ = {delta:.4} is not below e^(-d) = {bound:.4} at n = {n}; need n ≥ {}",
            min_bump_n(d)
        )));
    }
    let family = BumpFamily::new(d, delta, None, seed, BumpOptions::default())?;
    let (tv, h2): (Vec<f64>, Vec<f64>) = (0..family.len()).map(|i| family.one_bit(i)).unzip();
    let one_bit = OneBit { h2, tv };
    let (hellinger, tv) = instance_from(n, family.len(), &one_bit)?;
    Ok(BumpInstance {
        family,
        delta,
        one_bit,
        hellinger,
        tv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LbFamily {
    Cap,
    Bump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbRow {
    pub n: usize,
    pub seed: u64,
    pub k: usize,
    pub eta: f64,
    pub c: f64,
    pub hellinger_lb: f64,
    pub tv_lb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxReport {
    pub family: LbFamily,
    pub dim: usize,
    pub rows: Vec<LbRow>,
    /// Fitted log-log slopes over n; absent with fewer than three n values.
    pub hellinger_exponent: Option<f64>,
    pub tv_exponent: Option<f64>,
}

impl MinimaxReport {
    /// Mean (hellinger_lb, tv_lb) per n, increasing in n.
    pub fn means(&self) -> Vec<(usize, f64, f64)> {
        let mut ns: Vec<usize> = self.rows.iter().map(|r| r.n).collect();
        ns.sort_unstable();
        ns.dedup();
        ns.into_iter()
            .map(|n| {
                let rs: Vec<&LbRow> = self.rows.iter().filter(|r| r.n == n).collect();
                let m = rs.len() as f64;
                (n, rs.iter().map(|r| r.hellinger_lb).sum::<f64>() / m, rs.iter().map(|r| r.tv_lb).sum::<f64>() / m)
            })
            .collect()
    }
}

/// Lower bounds of one family across an n-grid, averaged over seeds.
pub fn minimax_lb_report(family: LbFamily, d: usize, n_grid: &[usize], seeds: &[u64]) -> Result<MinimaxReport> {
    if n_grid.is_empty() || seeds.is_empty() {
        return Err(ShapeError::Usage("empty n-grid or seed list".into()));
    }
    let mut rows = Vec::new();
    for &n in n_grid {
        for &seed in seeds {
            let (k, hel, tv) = match family {
                LbFamily::Cap => {
                    let inst = build_cap_instance(d, n, seed)?;
                    (inst.family.len(), inst.hellinger, inst.tv)
                }
                LbFamily::Bump => {
                    let inst = build_bump_instance(d, n, seed)?;
                    (inst.family.len(), inst.hellinger, inst.tv)
                }
            };
            rows.push(LbRow {
                n,
                seed,
                k,
                eta: hel.eta,
                c: hel.c,
                hellinger_lb: assouad_bound(&hel),
                tv_lb: assouad_bound(&tv),
            });
        }
    }
    let slope = |f: fn(&LbRow) -> f64| -> Option<f64> {
        let rr: Vec<RateRow> = rows
            .iter()
            .enumerate()
            .map(|(t, r)| RateRow {
                n: r.n,
                trial: t,
                risk: f(r),
                seed: r.seed,
            })
            .collect();
        fit_slope(&rr).ok().map(|s| s.slope)
    };
    let hellinger_exponent = slope(|r| r.hellinger_lb);
    let tv_exponent = slope(|r| r.tv_lb);
    Ok(MinimaxReport {
        family,
        dim: d,
        rows,
        hellinger_exponent,
        tv_exponent,
    })
}
