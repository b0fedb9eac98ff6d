//! Least squares over convex functions bounded in [0, Γ].
//!
//! The finite-dimensional problem in (g, ξ) is solved by an interior-point
//! QP solver over a growing subset of the n² subgradient constraints: start
//! from nearest-neighbour pairs, then add the most violated pairs of each
//! point until every pair holds.

use crate::error::{Result, ShapeError};
use crate::points::PointSet;
use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Debug, Clone, Copy)]
pub struct ConvexFitOptions {
    /// Target KKT residual and pair-violation tolerance.
    pub tol: f64,
    /// Rounds of constraint generation.
    pub max_rounds: usize,
    /// Initial nearest neighbours per point (d ≥ 2).
    pub neighbors: usize,
    /// Violated pairs added per point and round.
    pub add_per_point: usize,
    /// Ridge weight on ξ; selects the minimum-norm subgradients.
    pub ridge: f64,
}

impl Default for ConvexFitOptions {
    fn default() -> Self {
        ConvexFitOptions {
            tol: 1e-6,
            max_rounds: 60,
            neighbors: 12,
            add_per_point: 12,
            ridge: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexFit {
    pub x: PointSet,
    pub y: Vec<f64>,
    pub g: Vec<f64>,
    /// Subgradient ξ_i at X_i, row i.
    pub xi: PointSet,
    pub gamma: f64,
    pub objective: f64,
    /// Y_i − g_i.
    pub residuals: Vec<f64>,
    pub kkt_residual: f64,
    /// Largest violation of g_j ≥ g_i + ξ_iᵀ(X_j − X_i) over all pairs.
    pub max_violation: f64,
    pub converged: bool,
    pub rounds: usize,
    pub active_pairs: usize,
}

impl ConvexFit {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn convex_ls_fit(x: &PointSet, y: &[f64], gamma: f64, tol: f64) -> Result<ConvexFit> {
    convex_ls_fit_with(
        x,
        y,
        gamma,
        ConvexFitOptions {
            tol,
            ..ConvexFitOptions::default()
        },
    )
}

pub fn convex_ls_fit_with(x: &PointSet, y: &[f64], gamma: f64, opts: ConvexFitOptions) -> Result<ConvexFit> {
    let n = x.len();
    let d = x.dim();
    if n == 0 {
        return Err(ShapeError::Domain("convex regression needs at least one point".into()));
    }
    if y.len() != n {
        return Err(ShapeError::Domain(format!("{n} design points but {} responses", y.len())));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(ShapeError::Domain(format!("Γ must be positive, got {gamma}")));
    }
    if y.iter().chain(x.as_flat()).any(|v| !v.is_finite()) {
        return Err(ShapeError::Domain("non-finite input".into()));
    }
    if d == 1 {
        return fit_line(x, y, gamma, opts);
    }
    let mut pairs: Vec<(usize, usize)> = initial_pairs(x, opts.neighbors);
    let mut seen: HashSet<(usize, usize)> = pairs.iter().copied().collect();
    let viol_tol = 1e-8 * gamma.max(1.0);
    let mut rounds = 0;
    let mut best: Option<(Vec<f64>, Vec<f64>, Vec<f64>, bool)> = None;
    let mut complete = false;
    while rounds < opts.max_rounds {
        rounds += 1;
        let (sol, duals, ok) = solve_qp(x, y, gamma, &pairs, opts.ridge, false)?;
        let (g, xi) = sol.split_at(n);
        let added = most_violated(x, g, xi, opts.add_per_point, viol_tol, &mut seen);
        best = Some((g.to_vec(), xi.to_vec(), duals, ok));
        if added.is_empty() {
            complete = true;
            break;
        }
        pairs.extend(added);
    }
    let (g, mut xi, duals, mut solver_ok) = best.expect("at least one round");
    let mut g = clamp(g, gamma);
    let mut max_violation = max_pair_violation(x, &g, &xi);
    let mut kkt_residual = kkt(x, y, gamma, &g, &xi, &pairs, &duals, max_violation);
    if complete && kkt_residual > opts.tol {
        // polish the final working set at tight tolerances
        let (sol, z, ok) = solve_qp(x, y, gamma, &pairs, opts.ridge, true)?;
        let (g2, xi2) = sol.split_at(n);
        let g2 = clamp(g2.to_vec(), gamma);
        let v2 = max_pair_violation(x, &g2, xi2);
        let k2 = kkt(x, y, gamma, &g2, xi2, &pairs, &z, v2);
        if k2 < kkt_residual {
            (g, xi, solver_ok, max_violation, kkt_residual) = (g2, xi2.to_vec(), ok, v2, k2);
        }
    }
    let residuals: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - b).collect();
    let objective = residuals.iter().map(|r| r * r).sum();
    let converged = complete && solver_ok && kkt_residual <= opts.tol;
    let xi = PointSet::from_flat(d, xi);
    Ok(ConvexFit {
        x: x.clone(),
        y: y.to_vec(),
        g,
        xi,
        gamma,
        objective,
        residuals,
        kkt_residual,
        max_violation,
        converged,
        rounds,
        active_pairs: pairs.len(),
    })
}

/// clamp(max_i g_i + ξ_iᵀ(x − X_i), 0, Γ).
pub fn convex_predict(fit: &ConvexFit, x: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..fit.g.len() {
        let xi = fit.xi.point(i);
        let xi_pt = fit.x.point(i);
        let mut v = fit.g[i];
        for k in 0..x.len() {
            v += xi[k] * (x[k] - xi_pt[k]);
        }
        best = best.max(v);
    }
    best.clamp(0.0, fit.gamma)
}

/// On the line convexity is monotonicity of consecutive slopes, so the QP
/// needs only n − 2 constraints over the distinct design points (tied
/// points share one value and enter through their mean response).
fn fit_line(x: &PointSet, y: &[f64], gamma: f64, opts: ConvexFitOptions) -> Result<ConvexFit> {
    let n = x.len();
    let xs = x.scalars();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ux: Vec<f64> = Vec::new();
    let mut cnt: Vec<f64> = Vec::new();
    let mut ysum: Vec<f64> = Vec::new();
    let mut group = vec![0usize; n];
    for &i in &order {
        if ux.last() != Some(&xs[i]) {
            ux.push(xs[i]);
            cnt.push(0.0);
            ysum.push(0.0);
        }
        let u = ux.len() - 1;
        cnt[u] += 1.0;
        ysum[u] += y[i];
        group[i] = u;
    }
    let m = ux.len();
    let p = CscMatrix::new(m, m, (0..=m).collect(), (0..m).collect(), cnt.iter().map(|c| 2.0 * c).collect());
    let q: Vec<f64> = ysum.iter().map(|s| -2.0 * s).collect();
    let rows = m.saturating_sub(2) + 2 * m;
    let (mut ri, mut ci, mut vv) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..m.saturating_sub(2) {
        let (h1, h2) = (ux[k + 1] - ux[k], ux[k + 2] - ux[k + 1]);
        for (c, v) in [(k, -1.0 / h1), (k + 1, 1.0 / h1 + 1.0 / h2), (k + 2, -1.0 / h2)] {
            ri.push(k);
            ci.push(c);
            vv.push(v);
        }
    }
    let off = m.saturating_sub(2);
    let mut b = vec![0.0; rows];
    for u in 0..m {
        ri.push(off + u);
        ci.push(u);
        vv.push(-1.0);
        ri.push(off + m + u);
        ci.push(u);
        vv.push(1.0);
        b[off + m + u] = gamma;
    }
    let a = CscMatrix::new_from_triplets(rows, m, ri, ci, vv);
    let (sol, duals, ok) = run_solver(&p, &q, &a, &b, rows, true)?;
    let gu = lower_hull_values(&ux, &clamp(sol, gamma));
    // stationarity and complementarity of this QP
    let mut grad: Vec<f64> = (0..m).map(|u| 2.0 * (cnt[u] * gu[u] - ysum[u])).collect();
    let mut comp: f64 = 0.0;
    for k in 0..off {
        let (h1, h2) = (ux[k + 1] - ux[k], ux[k + 2] - ux[k + 1]);
        let lam = duals[k].max(0.0);
        grad[k] -= lam / h1;
        grad[k + 1] += lam * (1.0 / h1 + 1.0 / h2);
        grad[k + 2] -= lam / h2;
        let drop = (gu[k + 1] - gu[k]) / h1 - (gu[k + 2] - gu[k + 1]) / h2;
        comp = comp.max((lam * drop).abs());
    }
    for u in 0..m {
        let (lo, hi) = (duals[off + u].max(0.0), duals[off + m + u].max(0.0));
        grad[u] += hi - lo;
        comp = comp.max(lo * gu[u]).max(hi * (gamma - gu[u]));
    }
    // minimum-norm subgradient between the adjacent slopes
    let slope = |k: usize| (gu[k + 1] - gu[k]) / (ux[k + 1] - ux[k]);
    let mut xi_u = vec![0.0; m];
    for u in 0..m {
        let lo = if u > 0 { slope(u - 1) } else { f64::NEG_INFINITY };
        let hi = if u + 1 < m { slope(u) } else { f64::INFINITY };
        xi_u[u] = if lo <= hi { 0.0f64.clamp(lo, hi) } else { 0.5 * (lo + hi) };
    }
    let g: Vec<f64> = (0..n).map(|i| gu[group[i]]).collect();
    let xi: Vec<f64> = (0..n).map(|i| xi_u[group[i]]).collect();
    let max_violation = max_pair_violation(x, &g, &xi);
    let scale = y.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let stat = grad.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let kkt_residual = stat.max(comp).max(max_violation) / scale;
    let residuals: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - b).collect();
    Ok(ConvexFit {
        x: x.clone(),
        y: y.to_vec(),
        g,
        xi: PointSet::from_flat(1, xi),
        gamma,
        objective: residuals.iter().map(|r| r * r).sum(),
        residuals,
        kkt_residual,
        max_violation,
        converged: ok && kkt_residual <= opts.tol,
        rounds: 1,
        active_pairs: off,
    })
}

/// Values at `xs` of the greatest convex minorant of the points (xs, v):
/// removes the rounding-level non-convexity a numerical solution carries.
fn lower_hull_values(xs: &[f64], v: &[f64]) -> Vec<f64> {
    let mut hull: Vec<usize> = Vec::new();
    for k in 0..xs.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (xs[b] - xs[a]) * (v[k] - v[a]) - (v[b] - v[a]) * (xs[k] - xs[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let mut out = v.to_vec();
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        for k in a + 1..b {
            let lam = (xs[k] - xs[a]) / (xs[b] - xs[a]);
            out[k] = v[a] * (1.0 - lam) + v[b] * lam;
        }
    }
    out
}

fn clamp(mut g: Vec<f64>, gamma: f64) -> Vec<f64> {
    g.iter_mut().for_each(|v| *v = v.clamp(0.0, gamma));
    g
}

fn initial_pairs(x: &PointSet, k: usize) -> Vec<(usize, usize)> {
    let n = x.len();
    let mut pairs = Vec::new();
    if n < 2 {
        return pairs;
    }
    let k = k.min(n - 1);
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        dist.clear();
        let p = x.point(i);
        dist.extend((0..n).filter(|&j| j != i).map(|j| (sq_dist(p, x.point(j)), j)));
        dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
        for &(_, j) in &dist[..k] {
            pairs.push((i, j));
        }
    }
    pairs
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Violation g_i + ξ_iᵀ(X_j − X_i) − g_j of pair (i, j).
fn violation(x: &PointSet, g: &[f64], xi: &[f64], i: usize, j: usize) -> f64 {
    let d = x.dim();
    let (pi, pj) = (x.point(i), x.point(j));
    let s = &xi[i * d..(i + 1) * d];
    let mut v = g[i] - g[j];
    for k in 0..d {
        v += s[k] * (pj[k] - pi[k]);
    }
    v
}

fn most_violated(
    x: &PointSet,
    g: &[f64],
    xi: &[f64],
    per_point: usize,
    tol: f64,
    seen: &mut HashSet<(usize, usize)>,
) -> Vec<(usize, usize)> {
    let n = x.len();
    let mut out = Vec::new();
    let mut cand: Vec<(f64, usize)> = Vec::new();
    for i in 0..n {
        cand.clear();
        for j in 0..n {
            if j != i {
                let v = violation(x, g, xi, i, j);
                if v > tol && !seen.contains(&(i, j)) {
                    cand.push((v, j));
                }
            }
        }
        cand.sort_by(|a, b| b.0.total_cmp(&a.0));
        for &(_, j) in cand.iter().take(per_point) {
            seen.insert((i, j));
            out.push((i, j));
        }
    }
    out
}

fn max_pair_violation(x: &PointSet, g: &[f64], xi: &[f64]) -> f64 {
    let n = x.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                worst = worst.max(violation(x, g, xi, i, j));
            }
        }
    }
    worst
}

/// Solve the QP over the listed pairs. Returns the primal vector (g then
/// ξ), the duals (pairs, then lower and upper bounds) and a success flag.
fn solve_qp(x: &PointSet, y: &[f64], gamma: f64, pairs: &[(usize, usize)], ridge: f64, tight: bool) -> Result<(Vec<f64>, Vec<f64>, bool)> {
    let n = x.len();
    let d = x.dim();
    let nv = n * (1 + d);
    let p_diag: Vec<f64> = (0..nv).map(|k| if k < n { 2.0 } else { 2.0 * ridge }).collect();
    let p = CscMatrix::new(nv, nv, (0..=nv).collect(), (0..nv).collect(), p_diag);
    let mut q = vec![0.0; nv];
    for i in 0..n {
        q[i] = -2.0 * y[i];
    }
    let m = pairs.len() + 2 * n;
    let mut ri = Vec::with_capacity(pairs.len() * (2 + d) + 2 * n);
    let mut ci = Vec::with_capacity(ri.capacity());
    let mut vv = Vec::with_capacity(ri.capacity());
    for (r, &(i, j)) in pairs.iter().enumerate() {
        ri.push(r);
        ci.push(i);
        vv.push(1.0);
        ri.push(r);
        ci.push(j);
        vv.push(-1.0);
        let (pi, pj) = (x.point(i), x.point(j));
        for k in 0..d {
            let c = pj[k] - pi[k];
            if c != 0.0 {
                ri.push(r);
                ci.push(n + i * d + k);
                vv.push(c);
            }
        }
    }
    let mut b = vec![0.0; m];
    for i in 0..n {
        ri.push(pairs.len() + i);
        ci.push(i);
        vv.push(-1.0);
        ri.push(pairs.len() + n + i);
        ci.push(i);
        vv.push(1.0);
        b[pairs.len() + n + i] = gamma;
    }
    let a = CscMatrix::new_from_triplets(m, nv, ri, ci, vv);
    run_solver(&p, &q, &a, &b, m, tight)
}

fn run_solver(p: &CscMatrix<f64>, q: &[f64], a: &CscMatrix<f64>, b: &[f64], m: usize, tight: bool) -> Result<(Vec<f64>, Vec<f64>, bool)> {
    let (feas, gap) = if tight { (1e-12, 1e-14) } else { (1e-8, 1e-8) };
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(500)
        .tol_feas(feas)
        .tol_gap_abs(gap)
        .tol_gap_rel(gap)
        .build()
        .map_err(|e| ShapeError::Solver(format!("settings: {e}")))?;
    let cones = [NonnegativeConeT(m)];
    let mut solver =
        DefaultSolver::new(p, q, a, b, &cones, settings).map_err(|e| ShapeError::Solver(format!("setup: {e:?}")))?;
    solver.solve();
    let ok = matches!(solver.solution.status, SolverStatus::Solved | SolverStatus::AlmostSolved);
    if solver.solution.x.iter().any(|v| !v.is_finite()) {
        return Err(ShapeError::Solver(format!("QP solver returned {:?}", solver.solution.status)));
    }
    Ok((solver.solution.x.clone(), solver.solution.z.clone(), ok))
}

/// Max of stationarity, complementarity and primal infeasibility for the
/// unregularized problem, with the generated pairs' duals (all other duals
/// zero). Scaled by max(1, ‖Y‖∞).
#[allow(clippy::too_many_arguments)]
fn kkt(
    x: &PointSet,
    y: &[f64],
    gamma: f64,
    g: &[f64],
    xi: &[f64],
    pairs: &[(usize, usize)],
    duals: &[f64],
    max_violation: f64,
) -> f64 {
    let n = x.len();
    let d = x.dim();
    let mut grad_g: Vec<f64> = (0..n).map(|i| 2.0 * (g[i] - y[i])).collect();
    let mut grad_xi = vec![0.0; n * d];
    let mut comp: f64 = 0.0;
    for (r, &(i, j)) in pairs.iter().enumerate() {
        let lam = duals[r].max(0.0);
        grad_g[i] += lam;
        grad_g[j] -= lam;
        let (pi, pj) = (x.point(i), x.point(j));
        for k in 0..d {
            grad_xi[i * d + k] += lam * (pj[k] - pi[k]);
        }
        comp = comp.max((lam * violation(x, g, xi, i, j)).abs());
    }
    let off = pairs.len();
    for i in 0..n {
        let lo = duals[off + i].max(0.0);
        let hi = duals[off + n + i].max(0.0);
        grad_g[i] += hi - lo;
        comp = comp.max((lo * g[i]).abs()).max((hi * (gamma - g[i])).abs());
    }
    let stat = grad_g.iter().chain(&grad_xi).fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    stat.max(comp).max(max_violation) / scale
}
