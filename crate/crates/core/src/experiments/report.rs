use crate::error::{Result, ShapeError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub trial: usize,
    pub risk: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

/// Per-trial risks with the log-log slope of the mean risk against n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Serialize)]
struct Summary {
    slope: f64,
    intercept: f64,
    stderr: f64,
    target: f64,
    pass: bool,
}

/// Mean risk per distinct n, in increasing n.
pub fn mean_by_n(rows: &[RateRow]) -> Vec<(usize, f64)> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for r in rows {
        let e = acc.entry(r.n).or_insert((0.0, 0));
        e.0 += r.risk;
        e.1 += 1;
    }
    acc.into_iter().map(|(n, (s, c))| (n, s / c as f64)).collect()
}

/// Ordinary least squares of log mean-risk on log n.
pub fn fit_slope(rows: &[RateRow]) -> Result<SlopeFit> {
    let means = mean_by_n(rows);
    if means.len() < 3 {
        return Err(ShapeError::InsufficientData {
            needed: 3,
            got: means.len(),
        });
    }
    if let Some((n, m)) = means.iter().find(|(_, m)| !(*m > 0.0 && m.is_finite())) {
        return Err(ShapeError::Domain(format!("mean risk {m} at n = {n} has no logarithm")));
    }
    let xs: Vec<f64> = means.iter().map(|(n, _)| *n as f64).collect();
    let ys: Vec<f64> = means.iter().map(|(_, m)| *m).collect();
    Ok(fit_loglog(&xs, &ys))
}

/// Least squares of ln y on ln x; positive inputs assumed.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> SlopeFit {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = if pts.len() > 2 { (ssr / (k - 2.0) / sxx).sqrt() } else { 0.0 };
    SlopeFit { slope, intercept, stderr }
}

impl RateReport {
    pub fn from_rows(mut rows: Vec<RateRow>, target: f64, tolerance: f64) -> Result<Self> {
        rows.sort_by_key(|r| (r.n, r.trial));
        let fit = fit_slope(&rows)?;
        Ok(RateReport {
            rows,
            slope: fit.slope,
            intercept: fit.intercept,
            stderr: fit.stderr,
            target,
            tolerance,
            pass: (fit.slope - target).abs() <= tolerance,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,trial,risk,seed\n");
        for r in &self.rows {
            writeln!(s, "{},{},{:e},{}", r.n, r.trial, r.risk, r.seed).expect("string write");
        }
        s
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&Summary {
            slope: self.slope,
            intercept: self.intercept,
            stderr: self.stderr,
            target: self.target,
            pass: self.pass,
        })
        .expect("plain struct")
    }

    /// Writes `<out>.csv` and `<out>.json` (extensions replaced).
    pub fn write(&self, out: &Path) -> Result<()> {
        std::fs::write(out.with_extension("csv"), self.to_csv())?;
        std::fs::write(out.with_extension("json"), self.summary_json())?;
        Ok(())
    }
}
