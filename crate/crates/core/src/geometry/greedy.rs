//! Greedy disjointification of a family of equal-volume sets.

use crate::error::{Result, ShapeError};
use serde::Serialize;

/// Volume queries over an indexed family of sets.
pub trait SetOracle {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn volume(&self, i: usize) -> f64;

    /// vol(S_i minus the union of S_j for j in `others`).
    fn residual(&self, i: usize, others: &[usize]) -> f64;

    /// Volume of the union of the listed sets.
    fn union_volume(&self, members: &[usize]) -> f64 {
        members
            .iter()
            .enumerate()
            .map(|(k, &i)| self.residual(i, &members[..k]))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyOutcome {
    pub kept: Vec<usize>,
    /// Union fraction c = vol(∪S_i) / (N v).
    pub c: f64,
    pub v: f64,
    /// Residual of each kept set outside the union of the other kept sets.
    pub residuals: Vec<f64>,
}

/// Scan the sets in index order, removing set i whenever its volume outside
/// the union of the other surviving sets is below vc/2.
///
/// `c` is computed from the oracle when not supplied.
pub fn greedy_disjointify<O: SetOracle + ?Sized>(oracle: &O, v: f64, c: Option<f64>) -> Result<GreedyOutcome> {
    let n = oracle.len();
    if n == 0 {
        return Err(ShapeError::Oracle("empty family".into()));
    }
    if !(v > 0.0 && v.is_finite()) {
        return Err(ShapeError::Oracle(format!("common volume {v} must be positive")));
    }
    for i in 0..n {
        let vi = oracle.volume(i);
        if ((vi - v) / v).abs() > 1e-9 {
            return Err(ShapeError::Oracle(format!("set {i} has volume {vi}, expected {v}")));
        }
    }
    let all: Vec<usize> = (0..n).collect();
    let c = match c {
        Some(c) => c,
        None => oracle.union_volume(&all) / (n as f64 * v),
    };
    if !(c > 0.0 && c <= 1.0 + 1e-9) {
        return Err(ShapeError::Oracle(format!("union fraction {c} outside (0, 1]")));
    }
    let tol = 1e-9 * v;
    let threshold = 0.5 * v * c;
    let mut alive = vec![true; n];
    let mut others = Vec::with_capacity(n);
    for i in 0..n {
        others.clear();
        others.extend((0..n).filter(|&j| j != i && alive[j]));
        let r = checked_residual(oracle, i, &others, v, tol)?;
        if r < threshold {
            alive[i] = false;
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    let mut residuals = Vec::with_capacity(kept.len());
    for &i in &kept {
        others.clear();
        others.extend(kept.iter().copied().filter(|&j| j != i));
        residuals.push(checked_residual(oracle, i, &others, v, tol)?);
    }
    Ok(GreedyOutcome { kept, c, v, residuals })
}

fn checked_residual<O: SetOracle + ?Sized>(oracle: &O, i: usize, others: &[usize], v: f64, tol: f64) -> Result<f64> {
    let r = oracle.residual(i, others);
    if !(r >= -tol && r <= v + tol) {
        return Err(ShapeError::Oracle(format!("residual {r} of set {i} outside [0, {v}]")));
    }
    Ok(r.max(0.0))
}

/// Closed intervals on the line, with exact lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalFamily {
    pub intervals: Vec<(f64, f64)>,
}

impl IntervalFamily {
    pub fn new(intervals: Vec<(f64, f64)>) -> Self {
        IntervalFamily { intervals }
    }
}

/// Total length of a union of intervals.
pub fn union_length(mut iv: Vec<(f64, f64)>) -> f64 {
    iv.retain(|(a, b)| b > a);
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in iv {
        match cur {
            Some((ca, cb)) if a <= cb => cur = Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                cur = Some((a, b));
            }
            None => cur = Some((a, b)),
        }
    }
    if let Some((ca, cb)) = cur {
        total += cb - ca;
    }
    total
}

impl SetOracle for IntervalFamily {
    fn len(&self) -> usize {
        self.intervals.len()
    }

    fn volume(&self, i: usize) -> f64 {
        let (a, b) = self.intervals[i];
        b - a
    }

    fn residual(&self, i: usize, others: &[usize]) -> f64 {
        let (a, b) = self.intervals[i];
        let clipped: Vec<(f64, f64)> = others
            .iter()
            .map(|&j| {
                let (c, d) = self.intervals[j];
                (c.max(a), d.min(b))
            })
            .collect();
        (b - a) - union_length(clipped)
    }

    fn union_volume(&self, members: &[usize]) -> f64 {
        union_length(members.iter().map(|&i| self.intervals[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_sets_all_kept() {
        let fam = IntervalFamily::new((0..6).map(|k| (k as f64, k as f64 + 0.5)).collect());
        let out = greedy_disjointify(&fam, 0.5, None).unwrap();
        assert_eq!(out.kept, vec![0, 1, 2, 3, 4, 5]);
        assert!((out.c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_copies_keep_one() {
        let fam = IntervalFamily::new(vec![(0.0, 1.0); 5]);
        let out = greedy_disjointify(&fam, 1.0, None).unwrap();
        assert_eq!(out.kept.len(), 1);
        assert!((out.c - 0.2).abs() < 1e-12);
    }

    #[test]
    fn sliding_intervals_kept_set_is_feasible_and_maximal() {
        let fam = IntervalFamily::new((0..9).map(|k| (k as f64 / 10.0, k as f64 / 10.0 + 0.2)).collect());
        let out = greedy_disjointify(&fam, 0.2, None).unwrap();
        let n = fam.len();
        let thr = 0.5 * out.v * out.c;
        let feasible = |members: &[usize]| {
            members.iter().all(|&i| {
                let others: Vec<usize> = members.iter().copied().filter(|&j| j != i).collect();
                fam.residual(i, &others) >= thr - 1e-12
            })
        };
        // the kept set is feasible and inclusion-maximal among feasible subsets
        assert_eq!(out.kept, vec![0, 2, 4, 6, 8]);
        assert!(feasible(&out.kept));
        let kept_mask: u32 = out.kept.iter().map(|&i| 1u32 << i).sum();
        for mask in 1u32..(1 << n) {
            if mask & kept_mask == kept_mask && mask != kept_mask {
                let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
                assert!(!feasible(&members), "{members:?}");
            }
        }
        assert!(out.kept.len() as f64 >= n as f64 * out.c / 2.0);
        assert!(out.residuals.iter().all(|&r| r >= thr));
    }

    #[test]
    fn inconsistent_oracle_rejected() {
        struct Bad;
        impl SetOracle for Bad {
            fn len(&self) -> usize {
                2
            }
            fn volume(&self, _: usize) -> f64 {
                1.0
            }
            fn residual(&self, _: usize, _: &[usize]) -> f64 {
                -0.5
            }
        }
        assert!(matches!(greedy_disjointify(&Bad, 1.0, Some(0.5)), Err(ShapeError::Oracle(_))));
        let fam = IntervalFamily::new(vec![(0.0, 1.0), (0.0, 2.0)]);
        assert!(greedy_disjointify(&fam, 1.0, None).is_err());
    }
}
