//! Convex-hull membership by a phase-one simplex: q ∈ conv(P) iff the system
//! Σλᵢpᵢ = q, Σλᵢ = 1, λ ≥ 0 is feasible.

use crate::points::PointSet;

const PIVOT_TOL: f64 = 1e-11;

/// `true` when `q` lies in the convex hull of `points` up to `tol` (the
/// optimal phase-one infeasibility).
pub fn in_hull_lp(points: &PointSet, q: &[f64], tol: f64) -> bool {
    phase_one_infeasibility(points, q) <= tol
}

fn phase_one_infeasibility(points: &PointSet, q: &[f64]) -> f64 {
    let d = points.dim();
    let m = points.len();
    if m == 0 {
        return f64::INFINITY;
    }
    let rows = d + 1;
    // columns: m structural, `rows` artificial, then rhs
    let cols = m + rows + 1;
    let mut tab = vec![0.0; rows * cols];
    for r in 0..rows {
        let rhs = if r < d { q[r] } else { 1.0 };
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        for (j, p) in points.iter().enumerate() {
            let a = if r < d { p[r] } else { 1.0 };
            tab[r * cols + j] = sign * a;
        }
        tab[r * cols + m + r] = 1.0;
        tab[r * cols + cols - 1] = sign * rhs;
    }
    let mut basis: Vec<usize> = (m..m + rows).collect();
    // reduced costs of min Σ artificials
    let mut cost = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            if c < m || c == cols - 1 {
                cost[c] -= tab[r * cols + c];
            }
        }
    }
    for _ in 0..(50 * (m + rows)) {
        // Bland's rule: first improving column
        let Some(enter) = (0..m + rows).find(|&c| cost[c] < -PIVOT_TOL && !basis.contains(&c)) else {
            break;
        };
        let mut leave = None;
        let mut best = f64::INFINITY;
        for r in 0..rows {
            let a = tab[r * cols + enter];
            if a > PIVOT_TOL {
                let ratio = tab[r * cols + cols - 1] / a;
                if ratio < best - 1e-15 || (ratio <= best + 1e-15 && leave.is_some_and(|l: usize| basis[r] < basis[l])) {
                    best = ratio;
                    leave = Some(r);
                }
            }
        }
        let Some(lr) = leave else { break };
        let piv = tab[lr * cols + enter];
        for c in 0..cols {
            tab[lr * cols + c] /= piv;
        }
        for r in 0..rows {
            if r != lr {
                let f = tab[r * cols + enter];
                if f != 0.0 {
                    for c in 0..cols {
                        tab[r * cols + c] -= f * tab[lr * cols + c];
                    }
                }
            }
        }
        let f = cost[enter];
        for c in 0..cols {
            cost[c] -= f * tab[lr * cols + c];
        }
        basis[lr] = enter;
    }
    -cost[cols - 1]
}
