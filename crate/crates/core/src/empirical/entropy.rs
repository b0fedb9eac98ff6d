//! Power-law entropy models, the dyadic chaining bound and the four
//! fixed-point rate equations.

use crate::error::{Result, ShapeError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BracketKind {
    L1Bracketing,
    L2Metric,
}

/// H(δ) = A·δ^{−p} on [delta_min, delta_max].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyModel {
    pub amplitude: f64,
    pub exponent: f64,
    pub kind: BracketKind,
    pub delta_min: f64,
    pub delta_max: f64,
}

impl EntropyModel {
    /// Valid on (0, 1]. A = 0 (a finite class with one element) and p = 0
    /// (a constant entropy, the parametric case) are allowed.
    pub fn new(amplitude: f64, exponent: f64, kind: BracketKind) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite() && exponent >= 0.0 && exponent.is_finite()) {
            return Err(ShapeError::Domain(format!(
                "entropy model needs A ≥ 0 and p ≥ 0, got A = {amplitude}, p = {exponent}"
            )));
        }
        Ok(EntropyModel {
            amplitude,
            exponent,
            kind,
            delta_min: 0.0,
            delta_max: 1.0,
        })
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo) {
            return Err(ShapeError::Domain(format!("bad δ-range [{lo}, {hi}]")));
        }
        self.delta_min = lo;
        self.delta_max = hi;
        Ok(self)
    }

    /// L1 bracketing of convex subsets of a bounded set: exponent (d − 1)/2.
    pub fn convex_sets(d: usize, amplitude: f64) -> Result<Self> {
        Self::new(amplitude, (d as f64 - 1.0) / 2.0, BracketKind::L1Bracketing)
    }

    pub fn h(&self, delta: f64) -> f64 {
        self.amplitude * delta.powf(-self.exponent)
    }

    fn covers(&self, lo: f64, hi: f64) -> Result<()> {
        if lo < self.delta_min || hi > self.delta_max {
            return Err(ShapeError::OutOfRange(format!(
                "scales [{lo:e}, {hi:e}] leave the model's range [{:e}, {:e}]",
                self.delta_min, self.delta_max
            )));
        }
        Ok(())
    }

    /// ∫_a^b √(H(δ)·δ^w) dδ in closed form (∞ when it diverges at 0).
    fn root_integral(&self, a: f64, b: f64, w: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let s = 0.5 * (w - self.exponent) + 1.0;
        let amp = self.amplitude.sqrt();
        if s.abs() < 1e-12 {
            return amp * (b / a).ln();
        }
        if a == 0.0 {
            return if s > 0.0 { amp * b.powf(s) / s } else { f64::INFINITY };
        }
        amp * (b.powf(s) - a.powf(s)) / s
    }
}

pub const CHAINING_C: f64 = 2.0;

/// ε + C Σ_j √(δ_j H(δ_j) / n) over the dyadic scales δ_j = ε·2^j ≤ ε₀.
pub fn chaining_bound(model: &EntropyModel, n: f64, epsilon: f64, epsilon0: f64) -> Result<f64> {
    chaining_bound_with(model, n, epsilon, epsilon0, CHAINING_C)
}

pub fn chaining_bound_with(model: &EntropyModel, n: f64, epsilon: f64, epsilon0: f64, c: f64) -> Result<f64> {
    if model.kind != BracketKind::L1Bracketing {
        return Err(ShapeError::Domain("the chaining bound uses L1 bracketing entropy".into()));
    }
    if !(epsilon > 0.0 && epsilon <= epsilon0 && n >= 1.0) {
        return Err(ShapeError::Domain(format!("need 0 < ε ≤ ε₀ and n ≥ 1 (ε = {epsilon}, ε₀ = {epsilon0}, n = {n})")));
    }
    model.covers(epsilon, epsilon0)?;
    let h = model.h(epsilon);
    if h > epsilon * n / 3.0 {
        return Err(ShapeError::OutOfRegime(format!(
            "log N(ε) = {h:e} exceeds εn/3 = {:e} at ε = {epsilon:e}",
            epsilon * n / 3.0
        )));
    }
    let mut sum = 0.0;
    let mut delta = epsilon;
    while delta <= epsilon0 * (1.0 + 1e-12) {
        sum += (delta * model.h(delta) / n).sqrt();
        delta *= 2.0;
    }
    Ok(epsilon + c * sum)
}

/// The chaining bound minimized over admissible ε ∈ [(3A/n)^{1/(p+1)}, ε₀].
/// Returns (ε, bound).
pub fn chaining_bound_min(model: &EntropyModel, n: f64, epsilon0: f64) -> Result<(f64, f64)> {
    let lo = if model.amplitude == 0.0 {
        model.delta_min.max(epsilon0 * 1e-300)
    } else {
        (3.0 * model.amplitude / n).powf(1.0 / (model.exponent + 1.0)) * (1.0 + 1e-12)
    }
    .max(model.delta_min);
    if lo > epsilon0 {
        return Err(ShapeError::OutOfRegime(format!(
            "no ε ≤ ε₀ = {epsilon0} satisfies log N(ε) ≤ εn/3 (smallest admissible ε is {lo:e})"
        )));
    }
    let (a, b) = (lo.ln(), epsilon0.ln());
    let grid = 4000;
    let eval = |u: f64| chaining_bound(model, n, u.exp(), epsilon0).unwrap_or(f64::INFINITY);
    let mut best = (f64::INFINITY, a);
    for k in 0..=grid {
        let u = a + (b - a) * k as f64 / grid as f64;
        let v = eval(u);
        if v < best.0 {
            best = (v, u);
        }
    }
    // golden-section polish within one grid cell either side
    let step = (b - a) / grid as f64;
    let (mut l, mut r) = ((best.1 - step).max(a), (best.1 + step).min(b));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let m1 = r - g * (r - l);
        let m2 = l + g * (r - l);
        if eval(m1) <= eval(m2) {
            r = m2;
        } else {
            l = m1;
        }
    }
    let u = 0.5 * (l + r);
    let v = eval(u);
    Ok(if v < best.0 { (u.exp(), v) } else { (best.1.exp(), best.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellBound {
    /// Σ_i M_i^{(d−1)/(d+1)} (i+1)^{d(d−1)/(d+1)}.
    pub series: f64,
    pub terms: usize,
    /// C · series · n^{−2/(d+1)}.
    pub value: f64,
}

/// Bound for densities with unbounded support from the tail bounds M_i on
/// the shells i ≤ ‖x‖ < i + 1. Fails if the series has not settled after
/// 10⁶ shells.
pub fn shell_bound<M: Fn(usize) -> f64>(d: usize, tail: M, n: f64, c: f64) -> Result<ShellBound> {
    if d == 0 {
        return Err(ShapeError::InvalidDimension {
            dim: 0,
            reason: "need d ≥ 1".into(),
        });
    }
    let df = d as f64;
    let (a, b) = ((df - 1.0) / (df + 1.0), df * (df - 1.0) / (df + 1.0));
    let mut series = 0.0;
    let mut small = 0;
    for i in 0..1_000_000usize {
        let m = tail(i);
        if !(m >= 0.0 && m.is_finite()) {
            return Err(ShapeError::Domain(format!("tail bound M_{i} = {m} is not a nonnegative number")));
        }
        let term = if m == 0.0 && a > 0.0 { 0.0 } else { m.powf(a) * ((i + 1) as f64).powf(b) };
        series += term;
        if term <= 1e-17 * series {
            small += 1;
            if small >= 20 {
                return Ok(ShellBound {
                    series,
                    terms: i + 1,
                    value: c * series * n.powf(-2.0 / (df + 1.0)),
                });
            }
        } else {
            small = 0;
        }
    }
    Err(ShapeError::OutOfRange("the shell series did not converge within 10⁶ terms".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixedPointKind {
    /// H(ε)/n = ε².
    LeCam,
    /// n^{−1/2} ∫_0^ε √H = ε².
    Donsker,
    /// n^{−1/2} ∫_ε^1 √H = ε.
    Bracket13,
    /// n^{−1/2} ∫_{ε²}^1 √(H(δ)/δ) dδ = ε².
    NewFp,
}

impl std::str::FromStr for FixedPointKind {
    type Err = ShapeError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lecam" => Ok(FixedPointKind::LeCam),
            "donsker" => Ok(FixedPointKind::Donsker),
            "bracket13" => Ok(FixedPointKind::Bracket13),
            "newfp" => Ok(FixedPointKind::NewFp),
            other => Err(ShapeError::Usage(format!("unknown fixed-point kind `{other}`"))),
        }
    }
}

/// Solves the balance equation of `kind` for ε ∈ (0, 1] by bisection in
/// log ε to 1e−12 relative.
pub fn fixed_point(model: &EntropyModel, kind: FixedPointKind, n: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(ShapeError::Domain(format!("need n ≥ 1, got {n}")));
    }
    if model.delta_min > 0.0 || model.delta_max < 1.0 {
        return Err(ShapeError::OutOfRange("fixed points need a model valid on (0, 1]".into()));
    }
    if kind == FixedPointKind::Donsker && model.exponent >= 2.0 && model.amplitude > 0.0 {
        return Err(ShapeError::OutOfRange(format!(
            "the Dudley integral diverges for p = {} ≥ 2",
            model.exponent
        )));
    }
    let sn = n.sqrt();
    // log(lhs) − log(rhs), decreasing in u = log ε
    let gap = |u: f64| -> f64 {
        let e = u.exp();
        let (lhs, rhs) = match kind {
            FixedPointKind::LeCam => (model.h(e) / n, e * e),
            FixedPointKind::Donsker => (model.root_integral(0.0, e, 0.0) / sn, e * e),
            FixedPointKind::Bracket13 => (model.root_integral(e, 1.0, 0.0) / sn, e),
            FixedPointKind::NewFp => (model.root_integral(e * e, 1.0, -1.0) / sn, e * e),
        };
        lhs.ln() - rhs.ln()
    };
    let (mut lo, mut hi) = (-300.0f64, 0.0f64);
    if !(gap(lo) > 0.0) || gap(hi) > 0.0 {
        return Err(ShapeError::OutOfRange(format!("no {kind:?} fixed point in (0, 1] for n = {n:e}")));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}
