//! Gaussian densities with antipodal quadratic bumps.

use super::{log_gamma_density, rejection_sample, Density, TailEnvelope};
use crate::error::{Result, ShapeError};
use crate::geometry::{antipodal_ball_packing_with, ball_volume, AntipodalOptions};
use crate::points::{dist, norm, PointSet};
use crate::quadrature::{integrate, integrate_2d, integrate_with_breaks, QuadOptions};
use rand::rngs::StdRng;
use rand::RngExt;
use std::f64::consts::PI;
use std::sync::Arc;

/// g_{x₀,δ} as a function of r = ‖x − x₀‖: ¼(δ − r)² inside the ball, 0 outside.
pub fn bump_g(delta: f64, r: f64) -> f64 {
    if r <= delta {
        0.25 * (delta - r) * (delta - r)
    } else {
        0.0
    }
}

fn tight() -> QuadOptions {
    QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-12,
        max_intervals: 10_000,
    }
}

/// ∫_{B(x₀,δ)} h(‖x − x₀‖) γ(x) dx for the standard Gaussian γ in R^d,
/// where `a` = ‖x₀‖. Reduced to nested one-dimensional quadrature through
/// the radial symmetry of h.
pub fn ball_gaussian_integral(d: usize, a: f64, delta: f64, h: &dyn Fn(f64) -> f64) -> f64 {
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    if d == 1 {
        return integrate(|r| h(r) * (phi(a + r) + phi(a - r)), 0.0, delta, tight()).value;
    }
    let df = d as f64;
    let sphere = (df - 1.0) * ball_volume(d - 1, 1.0).expect("d ≥ 2");
    let pref = (2.0 * PI).powf(-0.5 * df) * sphere;
    integrate(
        |r| {
            if r == 0.0 {
                return 0.0;
            }
            let ang = integrate(|t: f64| (-a * r * t.cos()).exp() * t.sin().powi(d as i32 - 2), 0.0, PI, tight()).value;
            h(r) * r.powi(d as i32 - 1) * pref * (-0.5 * (a * a + r * r)).exp() * ang
        },
        0.0,
        delta,
        tight(),
    )
    .value
}

#[derive(Debug, Clone, Copy)]
pub struct BumpOptions {
    /// δ must lie below e^{−C d}.
    pub c_bound: f64,
    /// Reject center sets with a pair closer than 2δ.
    pub check_spacing: bool,
}

impl Default for BumpOptions {
    fn default() -> Self {
        BumpOptions {
            c_bound: 1.0,
            check_spacing: true,
        }
    }
}

/// The shared part of a bump family: δ, the K antipodal center pairs and
/// the per-coordinate local integrals.
#[derive(Debug, Clone)]
pub struct BumpFamily {
    dim: usize,
    delta: f64,
    centers: Vec<Vec<f64>>,
    disjoint: bool,
    /// ∫_{B(x_i,δ)} (e^g − 1) γ
    local_tv: Vec<f64>,
    /// ∫_{B(x_i,δ)} (e^{g/2} − 1)² γ
    local_h2: Vec<f64>,
    normalizer: f64,
}

impl BumpFamily {
    /// Family on centers from the antipodal packing, truncated to
    /// `k_requested` pairs when given.
    pub fn new(d: usize, delta: f64, k_requested: Option<usize>, seed: u64, opts: BumpOptions) -> Result<Arc<Self>> {
        let packing = antipodal_ball_packing_with(
            d,
            delta,
            seed,
            AntipodalOptions {
                c_bound: opts.c_bound,
                ..AntipodalOptions::default()
            },
        )?;
        let mut centers = packing.centers;
        if let Some(k) = k_requested {
            if k == 0 {
                return Err(ShapeError::InvalidFamily("K must be at least 1".into()));
            }
            centers.truncate(k);
        }
        Ok(Arc::new(Self::from_centers(d, delta, centers, opts)?))
    }

    /// Family on explicit centers; the partner of x_i is −x_i.
    pub fn from_centers(d: usize, delta: f64, centers: Vec<Vec<f64>>, opts: BumpOptions) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(ShapeError::Domain(format!("δ must be positive, got {delta}")));
        }
        if centers.is_empty() {
            return Err(ShapeError::InvalidFamily("no bump centers".into()));
        }
        if centers.iter().any(|c| c.len() != d) {
            return Err(ShapeError::InvalidFamily("center dimension mismatch".into()));
        }
        let all: Vec<Vec<f64>> = centers
            .iter()
            .flat_map(|c| [c.clone(), c.iter().map(|x| -x).collect()])
            .collect();
        let mut min_gap = f64::INFINITY;
        for i in 0..all.len() {
            for j in 0..i {
                min_gap = min_gap.min(dist(&all[i], &all[j]));
            }
        }
        let disjoint = min_gap >= 2.0 * delta * (1.0 - 1e-12);
        if opts.check_spacing && !disjoint {
            return Err(ShapeError::InvalidFamily(format!(
                "bump centers only {min_gap:.3e} apart, need at least 2δ = {:.3e}",
                2.0 * delta
            )));
        }
        let local_tv: Vec<f64> = centers
            .iter()
            .map(|c| ball_gaussian_integral(d, norm(c), delta, &|r| bump_g(delta, r).exp_m1()))
            .collect();
        let local_h2: Vec<f64> = centers
            .iter()
            .map(|c| ball_gaussian_integral(d, norm(c), delta, &|r| (0.5 * bump_g(delta, r)).exp_m1().powi(2)))
            .collect();
        let normalizer = 1.0 + local_tv.iter().sum::<f64>();
        Ok(BumpFamily {
            dim: d,
            delta,
            centers,
            disjoint,
            local_tv,
            local_h2,
            normalizer,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number K of antipodal pairs (hypercube dimension).
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn is_disjoint(&self) -> bool {
        self.disjoint
    }

    /// C_{d,δ}, common to every α when the balls are disjoint.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn density(self: &Arc<Self>, alpha: Vec<bool>) -> Result<BumpFamilyDensity> {
        if alpha.len() != self.len() {
            return Err(ShapeError::InvalidFamily(format!(
                "alpha has {} bits for K = {} pairs",
                alpha.len(),
                self.len()
            )));
        }
        let active: Vec<Vec<f64>> = self
            .centers
            .iter()
            .zip(&alpha)
            .map(|(c, &a)| if a { c.clone() } else { c.iter().map(|x| -x).collect() })
            .collect();
        let mut dens = BumpFamilyDensity {
            family: Arc::clone(self),
            alpha,
            active,
            ln_normalizer: self.normalizer.ln(),
        };
        if !self.disjoint {
            dens.ln_normalizer = dens.normalize_by_quadrature()?.ln();
        }
        Ok(dens)
    }

    /// Exact d_TV (½∫|p−q|) between two members of a disjoint family.
    pub fn pair_tv(&self, a: &[bool], b: &[bool]) -> f64 {
        self.pair_sum(a, b, &self.local_tv)
    }

    /// Exact h² (½∫(√p−√q)²) between two members of a disjoint family.
    pub fn pair_h2(&self, a: &[bool], b: &[bool]) -> f64 {
        self.pair_sum(a, b, &self.local_h2)
    }

    /// One-bit (d_TV, h²) for coordinate i.
    pub fn one_bit(&self, i: usize) -> (f64, f64) {
        (self.local_tv[i] / self.normalizer, self.local_h2[i] / self.normalizer)
    }

    fn pair_sum(&self, a: &[bool], b: &[bool], local: &[f64]) -> f64 {
        assert!(self.disjoint, "closed-form pair distances need disjoint bumps");
        a.iter()
            .zip(b)
            .zip(local)
            .filter(|((x, y), _)| x != y)
            .map(|(_, v)| v)
            .sum::<f64>()
            / self.normalizer
    }
}

/// f_α(x) = C⁻¹ γ(x) exp(Σ_i g_{±x_i,δ}(x)), the sign chosen by α_i.
#[derive(Debug, Clone)]
pub struct BumpFamilyDensity {
    family: Arc<BumpFamily>,
    alpha: Vec<bool>,
    active: Vec<Vec<f64>>,
    ln_normalizer: f64,
}

impl BumpFamilyDensity {
    pub fn family(&self) -> &Arc<BumpFamily> {
        &self.family
    }

    pub fn alpha(&self) -> &[bool] {
        &self.alpha
    }

    pub fn normalizer(&self) -> f64 {
        self.ln_normalizer.exp()
    }

    pub fn active_centers(&self) -> &[Vec<f64>] {
        &self.active
    }

    /// Σ of the active bumps at x.
    pub fn bump_sum(&self, x: &[f64]) -> f64 {
        let delta = self.family.delta;
        self.active.iter().map(|c| bump_g(delta, dist(x, c))).sum()
    }

    /// Sample like [`Density::sample`] and also report how many Gaussian
    /// proposals were needed.
    pub fn sample_counting(&self, n: usize, seed: u64) -> Result<(PointSet, u64)> {
        let mut proposals = 0u64;
        let d = self.dim();
        let cap = 0.25 * self.family.delta * self.family.delta;
        let mut rng = crate::rng::stream(seed, &[]);
        let pts = rejection_sample(n, d, &mut rng, |rng| {
            proposals += 1;
            let x = super::gaussian_vec(d, rng);
            (rng.random::<f64>() < (self.bump_sum(&x) - cap).exp()).then_some(x)
        })?;
        Ok((pts, proposals))
    }

    fn normalize_by_quadrature(&self) -> Result<f64> {
        let d = self.family.dim;
        let excess = |x: &[f64]| self.bump_sum(x).exp_m1() * log_gamma_density(x).exp();
        let opts = QuadOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-10,
            max_intervals: 20_000,
        };
        let r = match d {
            1 => {
                let mut b = self.breakpoints();
                b.sort_by(f64::total_cmp);
                b.dedup();
                integrate_with_breaks(|x| excess(&[x]), &b, opts)
            }
            2 => {
                let mut ys = self.breakpoints_y();
                ys.sort_by(f64::total_cmp);
                ys.dedup();
                integrate_2d(
                    |x, y| excess(&[x, y]),
                    &ys,
                    |y| {
                        let mut xs = self.breakpoints_x(y);
                        if xs.is_empty() {
                            xs = vec![0.0, 0.0];
                        }
                        xs.sort_by(f64::total_cmp);
                        xs
                    },
                    opts,
                )
            }
            _ => {
                return Err(ShapeError::InvalidFamily(
                    "overlapping bump families are only normalized in d ≤ 2".into(),
                ))
            }
        };
        Ok(1.0 + r.value)
    }
}

impl Density for BumpFamilyDensity {
    fn dim(&self) -> usize {
        self.family.dim
    }

    fn log_eval(&self, x: &[f64]) -> f64 {
        log_gamma_density(x) + self.bump_sum(x) - self.ln_normalizer
    }

    fn support_radius(&self) -> f64 {
        (self.dim() as f64).sqrt() + (2.0 * 1e12f64.ln()).sqrt()
    }

    fn is_log_concave(&self) -> bool {
        self.family.disjoint
    }

    fn sample_with(&self, n: usize, rng: &mut StdRng) -> Result<PointSet> {
        let d = self.dim();
        let cap = 0.25 * self.family.delta * self.family.delta;
        rejection_sample(n, d, rng, |rng| {
            let x = super::gaussian_vec(d, rng);
            (rng.random::<f64>() < (self.bump_sum(&x) - cap).exp()).then_some(x)
        })
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.dim() != 1 {
            return Vec::new();
        }
        let delta = self.family.delta;
        self.active.iter().flat_map(|c| [c[0] - delta, c[0], c[0] + delta]).collect()
    }

    fn breakpoints_y(&self) -> Vec<f64> {
        if self.dim() != 2 {
            return Vec::new();
        }
        let delta = self.family.delta;
        self.active.iter().flat_map(|c| [c[1] - delta, c[1], c[1] + delta]).collect()
    }

    fn breakpoints_x(&self, y: f64) -> Vec<f64> {
        if self.dim() != 2 {
            return Vec::new();
        }
        let delta = self.family.delta;
        let mut out = Vec::new();
        for c in &self.active {
            let dy = y - c[1];
            if dy.abs() < delta {
                let h = (delta * delta - dy * dy).sqrt();
                out.extend([c[0] - h, c[0], c[0] + h]);
            }
        }
        out
    }

    fn tail_envelope(&self) -> Option<TailEnvelope> {
        let d = self.dim() as f64;
        let delta = self.family.delta;
        Some(TailEnvelope::new(
            self.dim(),
            1.0,
            0.5 + 0.25 * delta * delta - 0.5 * d * (2.0 * PI).ln() - self.ln_normalizer,
        ))
    }
}
