use super::{BumpInstance, CapInstance};
use crate::densities::{CapFamily, CapFamilyDensity};
use crate::error::Result;
use crate::points::dot;
use crate::rng::{derive_seed, stream};
use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

const PAIRS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMeasurement {
    pub hamming: usize,
    pub h2: f64,
    pub h2_se: f64,
    pub tv: f64,
    pub tv_se: f64,
    pub predicted_h2: f64,
    pub predicted_tv: f64,
    /// Cap families only: vol(supp f_α △ supp f_β) and the sum of the
    /// packing residuals of the differing caps, which bounds it from below.
    pub sym_diff: Option<f64>,
    pub sym_diff_se: Option<f64>,
    pub residual_floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyVerification {
    pub family: String,
    pub k: usize,
    /// Prediction: scale · hamming · rate, with rate the family's one-bit
    /// power law and scale fitted on the Hamming-1 pairs.
    pub rate_h2: f64,
    pub rate_tv: f64,
    pub scale_h2: f64,
    pub scale_tv: f64,
    pub pairs: Vec<PairMeasurement>,
    pub max_relative_deviation: f64,
}

impl FamilyVerification {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    fn finish(mut self) -> Self {
        let ones: Vec<&PairMeasurement> = self.pairs.iter().filter(|p| p.hamming == 1).collect();
        let m = ones.len().max(1) as f64;
        self.scale_h2 = ones.iter().map(|p| p.h2).sum::<f64>() / m / self.rate_h2;
        self.scale_tv = ones.iter().map(|p| p.tv).sum::<f64>() / m / self.rate_tv;
        let mut worst: f64 = 0.0;
        for p in &mut self.pairs {
            p.predicted_h2 = self.scale_h2 * p.hamming as f64 * self.rate_h2;
            p.predicted_tv = self.scale_tv * p.hamming as f64 * self.rate_tv;
            if p.hamming > 0 {
                worst = worst.max((p.h2 / p.predicted_h2 - 1.0).abs());
                worst = worst.max((p.tv / p.predicted_tv - 1.0).abs());
            }
        }
        self.max_relative_deviation = worst;
        self
    }
}

fn in_support(family: &CapFamily, alpha: &[bool], x: &[f64]) -> bool {
    let p = family.packing();
    let mut in_any = false;
    for (i, c) in p.centers.iter().enumerate() {
        if dot(c, x) >= p.t {
            if alpha[i] {
                return true;
            }
            in_any = true;
        }
    }
    !in_any
}

/// h² and d_TV between f_a and f_b for uniform members of a cap family.
/// Only the caps where a and b differ can separate the supports, so the two
/// one-sided differences are estimated by sampling those caps (each point
/// credited to the first differing cap containing it). Standard errors are
/// the leading-order propagation of the cap-wise binomial errors; the
/// normalizer of f_a is taken as exact.
pub(crate) fn cap_pair(
    family: &Arc<CapFamily>,
    a: &CapFamilyDensity,
    v_a: f64,
    b: &[bool],
    seed: u64,
) -> Result<PairMeasurement> {
    let alpha = a.alpha();
    let p = family.packing();
    let diff: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] != b[i]).collect();
    let (mut a_only, mut b_only, mut var_a, mut var_b) = (0.0, 0.0, 0.0, 0.0);
    let m = super::LB_DRAWS;
    for (slot, &i) in diff.iter().enumerate() {
        let cap = p.cap(i);
        let mut rng = stream(seed, &[i as u64]);
        let (mut ca, mut cb) = (0usize, 0usize);
        for _ in 0..m {
            let x = cap.sample_uniform(&mut rng);
            if diff[..slot].iter().any(|&j| dot(&p.centers[j], &x) >= p.t) {
                continue;
            }
            match (in_support(family, alpha, &x), in_support(family, b, &x)) {
                (true, false) => ca += 1,
                (false, true) => cb += 1,
                _ => {}
            }
        }
        let v = p.per_cap_volume;
        let (fa, fb) = (ca as f64 / m as f64, cb as f64 / m as f64);
        a_only += v * fa;
        b_only += v * fb;
        var_a += v * v * fa * (1.0 - fa) / m as f64;
        var_b += v * v * fb * (1.0 - fb) / m as f64;
    }
    let v_b = v_a - a_only + b_only;
    let inter = v_a - a_only;
    let h2 = (1.0 - inter / (v_a * v_b).sqrt()).max(0.0);
    let tv = 0.5 * (a_only / v_a + b_only / v_b + inter * (1.0 / v_a - 1.0 / v_b).abs());
    let se = (var_a + var_b).sqrt() / v_a;
    Ok(PairMeasurement {
        hamming: diff.len(),
        h2,
        h2_se: se,
        tv,
        tv_se: se,
        predicted_h2: 0.0,
        predicted_tv: 0.0,
        sym_diff: Some(a_only + b_only),
        sym_diff_se: Some((var_a + var_b).sqrt()),
        residual_floor: Some(diff.iter().map(|&i| p.residuals[i]).sum()),
    })
}

fn random_pairs(k: usize, seed: u64) -> Vec<(Vec<bool>, Vec<bool>)> {
    let mut rng = stream(seed, &[]);
    let mut out = Vec::with_capacity(2 * PAIRS);
    for _ in 0..PAIRS {
        let a: Vec<bool> = (0..k).map(|_| rng.random_bool(0.5)).collect();
        let mut b = a.clone();
        let i = rng.random_range(0..k);
        b[i] = !b[i];
        out.push((a, b));
    }
    for _ in 0..PAIRS {
        let a: Vec<bool> = (0..k).map(|_| rng.random_bool(0.5)).collect();
        let mut b: Vec<bool> = (0..k).map(|_| rng.random_bool(0.5)).collect();
        if a == b {
            b[0] = !b[0];
        }
        out.push((a, b));
    }
    out
}

/// Ten random Hamming-1 pairs and ten random far pairs, measured by MC.
pub fn verify_cap_family(inst: &CapInstance, seed: u64) -> Result<FamilyVerification> {
    let fam = &inst.family;
    let d = fam.dim() as f64;
    let pairs: Vec<PairMeasurement> = random_pairs(fam.len(), seed)
        .into_par_iter()
        .enumerate()
        .map(|(t, (a, b))| {
            let da = fam.density(a)?;
            let v = da.normalizer();
            cap_pair(fam, &da, v, &b, derive_seed(seed, &[1, t as u64]))
        })
        .collect::<Result<_>>()?;
    let rate = (inst.n_requested as f64).powf(-(1.0 + 2.0 / (d - 1.0)));
    Ok(FamilyVerification {
        family: "cap".into(),
        k: fam.len(),
        rate_h2: rate,
        rate_tv: rate,
        scale_h2: 0.0,
        scale_tv: 0.0,
        pairs,
        max_relative_deviation: 0.0,
    }
    .finish())
}

/// Same pair design for a bump family, whose distances are exact sums of
/// per-coordinate quadratures (errors at the quadrature tolerance).
pub fn verify_bump_family(inst: &BumpInstance, seed: u64) -> Result<FamilyVerification> {
    let fam = &inst.family;
    let d = fam.dim() as f64;
    let pairs: Vec<PairMeasurement> = random_pairs(fam.len(), seed)
        .into_par_iter()
        .map(|(a, b)| {
            let h2 = fam.pair_h2(&a, &b);
            let tv = fam.pair_tv(&a, &b);
            PairMeasurement {
                hamming: a.iter().zip(&b).filter(|(x, y)| x != y).count(),
                h2,
                h2_se: 1e-12 * h2,
                tv,
                tv_se: 1e-12 * tv,
                predicted_h2: 0.0,
                predicted_tv: 0.0,
                sym_diff: None,
                sym_diff_se: None,
                residual_floor: None,
            }
        })
        .collect();
    Ok(FamilyVerification {
        family: "bump".into(),
        k: fam.len(),
        rate_h2: inst.delta.powf(d + 4.0),
        rate_tv: inst.delta.powf(d + 2.0),
        scale_h2: 0.0,
        scale_tv: 0.0,
        pairs,
        max_relative_deviation: 0.0,
    }
    .finish())
}
