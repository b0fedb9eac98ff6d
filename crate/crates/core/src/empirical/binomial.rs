use crate::error::{Result, ShapeError};
use crate::rng::{derive_seed, stream};
use rand::RngExt;
use rand_distr::Binomial;
use serde::Serialize;

/// Constant in the bound C·√(p log k / n).
pub const BERNSTEIN_C: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinomialReport {
    /// Monte-Carlo mean of max_i |Y_i/n − p_i|.
    pub emp: f64,
    pub se: f64,
    pub bound: f64,
    pub holds: bool,
}

/// E max_i |Y_i/n − p_i| for independent Y_i ~ Bin(n, p_i), p_i ≤ p, against
/// C√(p log k / n). Refuses parameters with log k > np/3.
pub fn binomial_max_bound_check(p_list: &[f64], p: f64, n: u64, trials: usize, seed: u64) -> Result<BinomialReport> {
    binomial_max_bound_check_with(p_list, p, n, trials, seed, BERNSTEIN_C)
}

pub fn binomial_max_bound_check_with(p_list: &[f64], p: f64, n: u64, trials: usize, seed: u64, c: f64) -> Result<BinomialReport> {
    let k = p_list.len();
    if k < 2 {
        return Err(ShapeError::Domain(format!("need k ≥ 2 binomials, got {k}")));
    }
    if !(0.0..=1.0).contains(&p) || p_list.iter().any(|q| !(0.0..=p).contains(q)) {
        return Err(ShapeError::Domain("need 0 ≤ p_i ≤ p ≤ 1".into()));
    }
    let logk = (k as f64).ln();
    if logk > n as f64 * p / 3.0 {
        return Err(ShapeError::OutOfRegime(format!(
            "log k = {logk:.4} exceeds np/3 = {:.4}",
            n as f64 * p / 3.0
        )));
    }
    let dists: Vec<Binomial> = p_list
        .iter()
        .map(|q| Binomial::new(n, *q).map_err(|e| ShapeError::Domain(e.to_string())))
        .collect::<Result<_>>()?;
    let mut vals = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = stream(derive_seed(seed, &[t as u64]), &[]);
        let mut worst: f64 = 0.0;
        for (dist, q) in dists.iter().zip(p_list) {
            let y = rng.sample(dist) as f64;
            worst = worst.max((y / n as f64 - q).abs());
        }
        vals.push(worst);
    }
    let m = vals.iter().sum::<f64>() / trials as f64;
    let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (trials.max(2) - 1) as f64;
    let bound = c * (p * logk / n as f64).sqrt();
    Ok(BinomialReport {
        emp: m,
        se: (var / trials as f64).sqrt(),
        bound,
        holds: m <= bound,
    })
}
