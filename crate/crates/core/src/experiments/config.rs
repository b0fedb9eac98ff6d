use crate::error::{Result, ShapeError};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    HullDeficit,
    ConvregRate,
    Mle1dRate,
    TournamentRate,
    Discrepancy,
    VerifyFamily,
    ChainingEval,
    FixedPoint,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::HullDeficit,
        ExperimentKind::ConvregRate,
        ExperimentKind::Mle1dRate,
        ExperimentKind::TournamentRate,
        ExperimentKind::Discrepancy,
        ExperimentKind::VerifyFamily,
        ExperimentKind::ChainingEval,
        ExperimentKind::FixedPoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::HullDeficit => "hull-deficit",
            ExperimentKind::ConvregRate => "convreg-rate",
            ExperimentKind::Mle1dRate => "mle1d-rate",
            ExperimentKind::TournamentRate => "tournament-rate",
            ExperimentKind::Discrepancy => "discrepancy",
            ExperimentKind::VerifyFamily => "verify-family",
            ExperimentKind::ChainingEval => "chaining-eval",
            ExperimentKind::FixedPoint => "fixed-point",
        }
    }

    /// Kinds whose output is a report without a pass/fail verdict.
    pub fn report_only(self) -> bool {
        matches!(self, ExperimentKind::VerifyFamily | ExperimentKind::ChainingEval)
    }
}

impl FromStr for ExperimentKind {
    type Err = ShapeError;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ShapeError::Usage(format!("unknown experiment kind `{s}`")))
    }
}

/// One experiment. `n_grid` holds sample sizes as reals so that the
/// analytic kinds can go far beyond machine integers; the simulation kinds
/// require integral values.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub dim: usize,
    pub n_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Everything else (noise, sigma, gamma, family, fp, p, amplitude,
    /// tolerance, ...), interpreted by the owning experiment.
    pub params: BTreeMap<String, String>,
}

const KNOWN: [&str; 9] = ["kind", "dim", "nmin", "nmax", "grid", "ngrid", "trials", "seed", "out"];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ShapeError::Usage(format!("config line {}: expected key = value", no + 1)))?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

fn get<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|_| ShapeError::Usage(format!("bad value `{v}` for `{key}`"))))
        .transpose()
}

/// `count` log-spaced values from `lo` to `hi`, rounded to integers when
/// `integral`; by default one point per doubling.
pub fn log_grid(lo: f64, hi: f64, count: Option<usize>, integral: bool) -> Result<Vec<f64>> {
    if !(lo >= 1.0 && hi >= lo && hi.is_finite()) {
        return Err(ShapeError::Usage(format!("need 1 ≤ nmin ≤ nmax, got {lo} and {hi}")));
    }
    let count = count.unwrap_or_else(|| (hi / lo).log2().round() as usize + 1);
    if count == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    let mut g: Vec<f64> = (0..count)
        .map(|i| {
            let v = lo * (step * i as f64).exp();
            if integral {
                v.round()
            } else {
                v
            }
        })
        .collect();
    g[0] = lo;
    g[count - 1] = hi;
    Ok(g)
}

impl ExperimentConfig {
    /// Config from merged key-value pairs. The grid is either an explicit
    /// comma list (`ngrid`) or `nmin`/`nmax` with `grid` points.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let kind: ExperimentKind = get(map, "kind")?.ok_or_else(|| ShapeError::Usage("missing experiment kind".into()))?;
        let integral = !matches!(kind, ExperimentKind::ChainingEval | ExperimentKind::FixedPoint);
        let n_grid = match map.get("ngrid") {
            Some(list) => list
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| ShapeError::Usage(format!("bad grid entry `{v}`")))
                })
                .collect::<Result<Vec<f64>>>()?,
            None => {
                let (lo, hi, count) = if integral { (64.0, 1024.0, None) } else { (1e20, 1e80, Some(7)) };
                let lo: f64 = get(map, "nmin")?.unwrap_or(lo);
                let hi: f64 = get(map, "nmax")?.unwrap_or(hi);
                log_grid(lo, hi, get(map, "grid")?.or(count), integral)?
            }
        };
        let cfg = ExperimentConfig {
            kind,
            dim: get(map, "dim")?.unwrap_or(1),
            n_grid,
            trials: get(map, "trials")?.unwrap_or(10),
            seed: get(map, "seed")?.unwrap_or(0),
            out: map.get("out").map(PathBuf::from),
            params: map.iter().filter(|(k, _)| !KNOWN.contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ShapeError::Usage(format!("n-grid must be strictly increasing: {:?}", self.n_grid)));
        }
        if self.n_grid.iter().any(|n| !(*n >= 1.0 && n.is_finite())) {
            return Err(ShapeError::Usage("n-grid entries must be finite and at least 1".into()));
        }
        let integral = !matches!(self.kind, ExperimentKind::ChainingEval | ExperimentKind::FixedPoint);
        if integral && self.n_grid.iter().any(|n| n.fract() != 0.0 || *n > 9.0e15) {
            return Err(ShapeError::Usage(format!("{} needs integer sample sizes", self.kind.name())));
        }
        if self.trials == 0 {
            return Err(ShapeError::Usage("trials must be at least 1".into()));
        }
        if self.dim == 0 {
            return Err(ShapeError::Usage("dimension must be at least 1".into()));
        }
        Ok(())
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.n_grid.iter().map(|n| *n as usize).collect()
    }

    pub fn param<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(get(&self.params, key)?.unwrap_or(default))
    }
}
