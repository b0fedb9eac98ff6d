//! Log-concave maximum likelihood on the line.
//!
//! The log-density is piecewise linear between order statistics. An
//! active-set method maximizes Σ w_i φ(x_i) − ∫ e^φ: Newton steps over the
//! values at the current knots, a step back (dropping a knot) whenever a
//! step would break concavity, and a new knot wherever the directional
//! derivative of a concave kink is positive.

use crate::densities::{Density, TailEnvelope};
use crate::error::{Result, ShapeError};
use crate::points::PointSet;
use rand::rngs::StdRng;
use rand::RngExt;
use serde::{Deserialize, Serialize};

const ADD_TOL: f64 = 1e-11;
const GRAD_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mle1d {
    /// Distinct sorted sample points.
    xs: Vec<f64>,
    /// Log-density at each of `xs`.
    phi: Vec<f64>,
    /// Indices into `xs` where the slope changes (always includes both ends).
    knots: Vec<usize>,
    /// F(xs[i]).
    cum: Vec<f64>,
    /// Mean log-likelihood (1/n) Σ log f̂(X_i).
    log_likelihood: f64,
    n: usize,
}

/// ∫₀¹ t^k e^{td} dt for k = 0, 1, 2.
fn moments(d: f64) -> [f64; 3] {
    if d.abs() < 1.0 {
        let mut out = [0.0; 3];
        let mut term = 1.0; // d^m / m!
        for m in 0..30 {
            for (k, o) in out.iter_mut().enumerate() {
                *o += term / (m + k + 1) as f64;
            }
            term *= d / (m + 1) as f64;
        }
        out
    } else {
        let e = d.exp();
        let i0 = d.exp_m1() / d;
        let i1 = (e * (d - 1.0) + 1.0) / (d * d);
        let i2 = ((d * d - 2.0 * d + 2.0) * e - 2.0) / (d * d * d);
        [i0, i1, i2]
    }
}

/// (e^t − 1)/t, 1 at t = 0.
fn rel_expm1(t: f64) -> f64 {
    if t.abs() < 1e-10 {
        1.0 + 0.5 * t
    } else {
        t.exp_m1() / t
    }
}

struct Problem<'a> {
    xs: &'a [f64],
    w: &'a [f64],
}

impl Problem<'_> {
    /// Gradient of the linear data term with respect to the knot values.
    fn data_grad(&self, knots: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; knots.len()];
        for l in 0..knots.len() {
            c[l] += self.w[knots[l]];
            if l + 1 < knots.len() {
                let (p, q) = (knots[l], knots[l + 1]);
                let (a, span) = (self.xs[p], self.xs[q] - self.xs[p]);
                for j in p + 1..q {
                    let lam = (self.xs[j] - a) / span;
                    c[l] += self.w[j] * (1.0 - lam);
                    c[l + 1] += self.w[j] * lam;
                }
            }
        }
        c
    }

    fn objective(&self, knots: &[usize], c: &[f64], theta: &[f64]) -> f64 {
        let lin: f64 = c.iter().zip(theta).map(|(a, b)| a * b).sum();
        let mut integral = 0.0;
        for l in 0..knots.len() - 1 {
            let span = self.xs[knots[l + 1]] - self.xs[knots[l]];
            integral += span * theta[l].exp() * rel_expm1(theta[l + 1] - theta[l]);
        }
        lin - integral
    }

    /// Maximize over knot values; returns the maximizer.
    fn newton(&self, knots: &[usize], mut theta: Vec<f64>) -> Vec<f64> {
        let r = knots.len();
        let c = self.data_grad(knots);
        let mut f = self.objective(knots, &c, &theta);
        for _ in 0..200 {
            let mut grad = c.clone();
            let mut diag = vec![0.0; r];
            let mut off = vec![0.0; r.saturating_sub(1)];
            for l in 0..r - 1 {
                let span = self.xs[knots[l + 1]] - self.xs[knots[l]];
                let [i0, i1, i2] = moments(theta[l + 1] - theta[l]);
                let s = span * theta[l].exp();
                grad[l] -= s * (i0 - i1);
                grad[l + 1] -= s * i1;
                diag[l] += s * (i0 - 2.0 * i1 + i2);
                diag[l + 1] += s * i2;
                off[l] += s * (i1 - i2);
            }
            if grad.iter().all(|g| g.abs() < GRAD_TOL) {
                break;
            }
            let step = solve_tridiagonal(&diag, &off, &grad);
            let slope: f64 = step.iter().zip(&grad).map(|(a, b)| a * b).sum();
            let mut t = 1.0;
            let mut moved = false;
            while t > 1e-12 {
                let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, b)| a + t * b).collect();
                let fc = self.objective(knots, &c, &cand);
                if fc.is_finite() && fc >= f + 1e-4 * t * slope {
                    moved = fc > f || t == 1.0;
                    theta = cand;
                    f = fc;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        theta
    }
}

/// Solves the symmetric tridiagonal system (diag, off) x = rhs.
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let r = diag.len();
    let mut cp = vec![0.0; r];
    let mut dp = vec![0.0; r];
    let mut denom = diag[0];
    dp[0] = rhs[0] / denom;
    for i in 1..r {
        cp[i - 1] = off[i - 1] / denom;
        denom = diag[i] - off[i - 1] * cp[i - 1];
        dp[i] = (rhs[i] - off[i - 1] * dp[i - 1]) / denom;
    }
    let mut x = dp;
    for i in (0..r - 1).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    x
}

/// Slope drops s_{l−1} − s_l at interior knots (non-negative when concave).
fn slope_drops(xs: &[f64], knots: &[usize], theta: &[f64]) -> Vec<f64> {
    let slopes: Vec<f64> = (0..knots.len() - 1)
        .map(|l| (theta[l + 1] - theta[l]) / (xs[knots[l + 1]] - xs[knots[l]]))
        .collect();
    slopes.windows(2).map(|w| w[0] - w[1]).collect()
}

fn interpolate(xs: &[f64], knots: &[usize], theta: &[f64]) -> Vec<f64> {
    let mut phi = vec![0.0; xs.len()];
    for l in 0..knots.len() - 1 {
        let (p, q) = (knots[l], knots[l + 1]);
        let span = xs[q] - xs[p];
        for j in p..=q {
            let lam = (xs[j] - xs[p]) / span;
            phi[j] = theta[l] * (1.0 - lam) + theta[l + 1] * lam;
        }
    }
    phi
}

pub fn logconcave_mle_1d(x: &[f64]) -> Result<Mle1d> {
    let n = x.len();
    if n < 2 {
        return Err(ShapeError::DegenerateSample("the log-concave MLE needs at least two points".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ShapeError::Domain("non-finite sample".into()));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut xs: Vec<f64> = Vec::new();
    let mut w: Vec<f64> = Vec::new();
    for v in sorted {
        if xs.last() == Some(&v) {
            *w.last_mut().expect("non-empty") += 1.0 / n as f64;
        } else {
            xs.push(v);
            w.push(1.0 / n as f64);
        }
    }
    let m = xs.len();
    if m < 2 {
        return Err(ShapeError::DegenerateSample("all sample points are equal".into()));
    }
    let prob = Problem { xs: &xs, w: &w };
    let mut knots = vec![0, m - 1];
    let mut theta = prob.newton(&knots, vec![-(xs[m - 1] - xs[0]).ln(); 2]);
    for _ in 0..4 * m + 50 {
        // restore concavity after the Newton step, dropping knots as needed
        loop {
            let target = prob.newton(&knots, theta.clone());
            let drops_new = slope_drops(&xs, &knots, &target);
            if drops_new.iter().all(|&v| v >= 0.0) {
                theta = target;
                break;
            }
            let drops_old = slope_drops(&xs, &knots, &theta);
            let mut t = 1.0f64;
            for (a, b) in drops_old.iter().zip(&drops_new) {
                if *b < 0.0 {
                    t = t.min((a.max(0.0) / (a - b)).clamp(0.0, 1.0));
                }
            }
            theta = theta.iter().zip(&target).map(|(a, b)| a + t * (b - a)).collect();
            let drops = slope_drops(&xs, &knots, &theta);
            let scale = drops_old.iter().chain(&drops_new).fold(0.0f64, |s, v| s.max(v.abs()));
            let mut keep = vec![true; knots.len()];
            for (l, v) in drops.iter().enumerate() {
                if *v <= 1e-12 * scale.max(1.0) {
                    keep[l + 1] = false;
                }
            }
            let mut k2 = Vec::new();
            let mut t2 = Vec::new();
            for l in 0..knots.len() {
                if keep[l] {
                    k2.push(knots[l]);
                    t2.push(theta[l]);
                }
            }
            knots = k2;
            theta = t2;
        }
        // most useful new knot
        let phi = interpolate(&xs, &knots, &theta);
        let deriv = kink_derivatives(&xs, &w, &phi);
        let mut best = (ADD_TOL, usize::MAX);
        for (i, &dv) in deriv.iter().enumerate() {
            if dv > best.0 && knots.binary_search(&i).is_err() {
                best = (dv, i);
            }
        }
        if best.1 == usize::MAX {
            break;
        }
        let pos = knots.binary_search(&best.1).unwrap_err();
        knots.insert(pos, best.1);
        theta.insert(pos, phi[best.1]);
    }
    let mut phi = interpolate(&xs, &knots, &theta);
    let masses = segment_masses(&xs, &phi);
    let total: f64 = masses.iter().sum();
    phi.iter_mut().for_each(|v| *v -= total.ln());
    let masses = segment_masses(&xs, &phi);
    let mut cum = vec![0.0; m];
    for j in 0..m - 1 {
        cum[j + 1] = cum[j] + masses[j];
    }
    let log_likelihood = phi.iter().zip(&w).map(|(p, wi)| p * wi).sum();
    Ok(Mle1d {
        xs,
        phi,
        knots,
        cum,
        log_likelihood,
        n,
    })
}

fn segment_masses(xs: &[f64], phi: &[f64]) -> Vec<f64> {
    (0..xs.len() - 1)
        .map(|j| (xs[j + 1] - xs[j]) * phi[j].exp() * rel_expm1(phi[j + 1] - phi[j]))
        .collect()
}

/// D_i = ∫_{x_i}(x − x_i) f̂ − Σ_j w_j (x_j − x_i)_+, the derivative of the
/// penalized likelihood in the direction −(x − x_i)_+.
fn kink_derivatives(xs: &[f64], w: &[f64], phi: &[f64]) -> Vec<f64> {
    let m = xs.len();
    let mut out = vec![0.0; m];
    let (mut t, mut s0, mut u, mut w0) = (0.0, 0.0, 0.0, 0.0);
    for i in (0..m - 1).rev() {
        let span = xs[i + 1] - xs[i];
        let [i0, i1, _] = moments(phi[i + 1] - phi[i]);
        let e = phi[i].exp();
        w0 += w[i + 1];
        u += span * w0;
        t += span * s0 + span * span * e * i1;
        s0 += span * e * i0;
        out[i] = t - u;
    }
    out
}

impl Mle1d {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Log-density at each distinct sample point.
    pub fn log_density(&self) -> &[f64] {
        &self.phi
    }

    pub fn knots(&self) -> Vec<f64> {
        self.knots.iter().map(|&k| self.xs[k]).collect()
    }

    pub fn support(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    /// ∫ f̂; one up to rounding.
    pub fn total_mass(&self) -> f64 {
        self.cum[self.cum.len() - 1]
    }

    pub fn mean(&self) -> f64 {
        let mut mean = 0.0;
        for j in 0..self.xs.len() - 1 {
            let span = self.xs[j + 1] - self.xs[j];
            let [i0, i1, _] = moments(self.phi[j + 1] - self.phi[j]);
            let e = self.phi[j].exp();
            mean += self.xs[j] * span * e * i0 + span * span * e * i1;
        }
        mean
    }

    /// Largest increase of slope between consecutive segments (≤ 0 when concave).
    pub fn max_concavity_violation(&self) -> f64 {
        let all: Vec<usize> = (0..self.xs.len()).collect();
        slope_drops(&self.xs, &all, &self.phi).iter().fold(f64::NEG_INFINITY, |m, v| m.max(-v))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn segment(&self, x: f64) -> Option<usize> {
        let m = self.xs.len();
        if !(x >= self.xs[0] && x <= self.xs[m - 1]) {
            return None;
        }
        let j = self.xs.partition_point(|v| *v <= x);
        Some(j.saturating_sub(1).min(m - 2))
    }
}

impl Density for Mle1d {
    fn dim(&self) -> usize {
        1
    }

    fn log_eval(&self, x: &[f64]) -> f64 {
        match self.segment(x[0]) {
            None => f64::NEG_INFINITY,
            Some(j) => {
                let lam = (x[0] - self.xs[j]) / (self.xs[j + 1] - self.xs[j]);
                self.phi[j] * (1.0 - lam) + self.phi[j + 1] * lam
            }
        }
    }

    fn support_radius(&self) -> f64 {
        self.xs[0].abs().max(self.xs[self.xs.len() - 1].abs())
    }

    fn is_log_concave(&self) -> bool {
        true
    }

    fn sample_with(&self, n: usize, rng: &mut StdRng) -> Result<PointSet> {
        let total = self.total_mass();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let r = rng.random::<f64>() * total;
            let j = self.cum.partition_point(|c| *c <= r).saturating_sub(1).min(self.xs.len() - 2);
            let span = self.xs[j + 1] - self.xs[j];
            let s = (self.phi[j + 1] - self.phi[j]) / span;
            let mass = (r - self.cum[j]) * (-self.phi[j]).exp();
            let z = s * mass;
            let u = if z.abs() < 1e-12 { mass } else { z.ln_1p() / s };
            out.push(self.xs[j] + u.clamp(0.0, span));
        }
        Ok(PointSet::from_scalars(&out))
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.knots()
    }

    fn cdf(&self, x: f64) -> Option<f64> {
        let m = self.xs.len();
        if x <= self.xs[0] {
            return Some(0.0);
        }
        if x >= self.xs[m - 1] {
            return Some(self.total_mass());
        }
        let j = self.segment(x)?;
        let u = x - self.xs[j];
        let s = (self.phi[j + 1] - self.phi[j]) / (self.xs[j + 1] - self.xs[j]);
        Some(self.cum[j] + self.phi[j].exp() * u * rel_expm1(s * u))
    }

    fn tail_envelope(&self) -> Option<TailEnvelope> {
        let top = self.phi.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        Some(TailEnvelope::new(1, 1.0, self.support_radius() + top))
    }
}
