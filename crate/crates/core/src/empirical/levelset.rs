use super::discrepancy::interval_discrepancy_1d;
use crate::densities::Density;
use crate::error::{Result, ShapeError};
use crate::rng::{derive_seed, stream};
use rand::RngExt;
use serde::Serialize;

/// Threshold levels in [0, Γ] for the level-set sup.
pub const LEVELS: usize = 64;
/// Reference draws for level-set probabilities when d ≥ 2.
pub const REFERENCE_DRAWS: usize = 20_000;

pub type ClassMember<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelsetReport {
    /// Mean of sup_h (1/n) Σ ε_i h(X_i).
    pub lhs: f64,
    pub lhs_se: f64,
    /// Mean of Γ·sup_C |P_n(C) − P(C)| + CΓ/√n.
    pub rhs: f64,
    pub rhs_se: f64,
    pub holds: bool,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let m = v.iter().sum::<f64>() / k;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
    (m, (var / k).sqrt())
}

/// Monte-Carlo check of the level-set reduction for a finite class of
/// [0, Γ]-valued functions. On the line the set sup is the exact interval
/// discrepancy (needs a cdf); otherwise it is the largest discrepancy over
/// the sublevel sets {h ≤ t} on a grid of thresholds, with P taken from a
/// reference sample.
pub fn levelset_rademacher_check(
    class: &[ClassMember<'_>],
    density: &dyn Density,
    gamma: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<LevelsetReport> {
    if class.is_empty() || n == 0 || trials == 0 {
        return Err(ShapeError::Domain("need a nonempty class, n ≥ 1 and trials ≥ 1".into()));
    }
    let d = density.dim();
    if d == 1 && density.cdf(0.0).is_none() {
        return Err(ShapeError::Domain("the one-dimensional check needs a closed-form cdf".into()));
    }
    let reference = if d > 1 {
        Some(density.sample_with(REFERENCE_DRAWS, &mut stream(seed, &[u64::MAX]))?)
    } else {
        None
    };
    // P({h ≤ t}) on the grid, per function
    let levels: Vec<f64> = (0..LEVELS).map(|k| gamma * (k as f64 + 0.5) / LEVELS as f64).collect();
    let ref_probs: Vec<Vec<f64>> = match &reference {
        Some(r) => class
            .iter()
            .map(|h| {
                let vals: Vec<f64> = r.iter().map(|x| h(x)).collect();
                levels
                    .iter()
                    .map(|t| vals.iter().filter(|v| **v <= *t).count() as f64 / vals.len() as f64)
                    .collect()
            })
            .collect(),
        None => Vec::new(),
    };
    let mut lhs = Vec::with_capacity(trials);
    let mut rhs = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = stream(derive_seed(seed, &[t as u64]), &[]);
        let x = density.sample_with(n, &mut rng)?;
        let eps: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let mut best = f64::NEG_INFINITY;
        for h in class {
            let s: f64 = x.iter().zip(&eps).map(|(p, e)| e * h(p)).sum::<f64>() / n as f64;
            best = best.max(s);
        }
        lhs.push(best);
        let sup = if d == 1 {
            interval_discrepancy_1d(x.scalars(), |v| density.cdf(v).expect("checked")).value
        } else {
            let mut sup: f64 = 0.0;
            for (k, h) in class.iter().enumerate() {
                let vals: Vec<f64> = x.iter().map(|p| h(p)).collect();
                for (l, lev) in levels.iter().enumerate() {
                    let pn = vals.iter().filter(|v| **v <= *lev).count() as f64 / n as f64;
                    sup = sup.max((pn - ref_probs[k][l]).abs());
                }
            }
            sup
        };
        rhs.push(gamma * sup + gamma / (n as f64).sqrt());
    }
    let (l, lse) = mean_se(&lhs);
    let (r, rse) = mean_se(&rhs);
    Ok(LevelsetReport {
        lhs: l,
        lhs_se: lse,
        rhs: r,
        rhs_se: rse,
        holds: l <= r + 3.0 * (lse * lse + rse * rse).sqrt(),
    })
}
