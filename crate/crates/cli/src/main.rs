use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use shapelab::estimators::{convex_ls_fit, logconcave_mle_1d};
use shapelab::experiments::{parse_kv, run_experiment, ExperimentConfig};
use shapelab::PointSet;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "shapelab", version, about = "Shape-constrained estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Missing hull mass of uniform samples on the ball.
    HullDeficit(RunArgs),
    /// Convex least-squares risk against n.
    ConvregRate(RunArgs),
    /// Hellinger risk of the 1-D log-concave MLE against n.
    Mle1dRate(RunArgs),
    /// TV risk of the Scheffé tournament over a location net.
    TournamentRate(RunArgs),
    /// Empirical discrepancy of uniform samples.
    Discrepancy(RunArgs),
    /// Pair distances of a lower-bound family (report only).
    VerifyFamily(RunArgs),
    /// Minimized chaining bound across n (report only).
    ChainingEval(RunArgs),
    /// Fixed-point rate equations across n.
    FixedPoint(RunArgs),
    /// Fit a bounded convex function to `x1,..,xd,y` rows.
    FitConvex {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Log-concave MLE of a univariate sample.
    Mle1d {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Default)]
struct RunArgs {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    nmin: Option<String>,
    #[arg(long)]
    nmax: Option<String>,
    /// Number of log-spaced grid points (default: one per doubling).
    #[arg(long)]
    grid: Option<usize>,
    /// Explicit comma-separated n-grid.
    #[arg(long)]
    ngrid: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output stem; writes <out>.csv and/or <out>.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    truth: Option<String>,
    #[arg(long)]
    family: Option<String>,
    /// Fixed-point equation: lecam, donsker, bracket13 or newfp.
    #[arg(long)]
    fp: Option<String>,
    /// Entropy exponent p (default (d−1)/2).
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    /// Slope tolerance for the pass flag.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Any other parameter as key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn merged(&self, kind: &str) -> anyhow::Result<BTreeMap<String, String>> {
        let mut map = match &self.config {
            Some(p) => parse_kv(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
            None => BTreeMap::new(),
        };
        map.insert("kind".into(), kind.into());
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                map.insert(k.into(), v);
            }
        };
        put("dim", self.dim.map(|v| v.to_string()));
        put("nmin", self.nmin.clone());
        put("nmax", self.nmax.clone());
        put("grid", self.grid.map(|v| v.to_string()));
        put("ngrid", self.ngrid.clone());
        put("trials", self.trials.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("noise", self.noise.clone());
        put("sigma", self.sigma.map(|v| v.to_string()));
        put("gamma", self.gamma.map(|v| v.to_string()));
        put("truth", self.truth.clone());
        put("family", self.family.clone());
        put("fp", self.fp.clone());
        put("p", self.p.map(|v| v.to_string()));
        put("amplitude", self.amplitude.map(|v| v.to_string()));
        put("tolerance", self.tolerance.map(|v| v.to_string()));
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got `{kv}`");
            };
            map.insert(k.trim().replace('_', "-"), v.trim().into());
        }
        Ok(map)
    }
}

fn read_numbers(path: &Path) -> anyhow::Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = line.split([',', ' ', '\t']).filter(|s| !s.is_empty()).map(str::parse::<f64>).collect();
        match parsed {
            Ok(r) => rows.push(r),
            // a leading header line is skipped
            Err(_) if rows.is_empty() && no == 0 => continue,
            Err(e) => bail!("{}:{}: {e}", path.display(), no + 1),
        }
    }
    Ok(rows)
}

fn emit(json: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, json).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let (kind, args) = match &cli.command {
        Command::HullDeficit(a) => ("hull-deficit", a),
        Command::ConvregRate(a) => ("convreg-rate", a),
        Command::Mle1dRate(a) => ("mle1d-rate", a),
        Command::TournamentRate(a) => ("tournament-rate", a),
        Command::Discrepancy(a) => ("discrepancy", a),
        Command::VerifyFamily(a) => ("verify-family", a),
        Command::ChainingEval(a) => ("chaining-eval", a),
        Command::FixedPoint(a) => ("fixed-point", a),
        Command::FitConvex { input, gamma, tol, out } => {
            let rows = read_numbers(input)?;
            let Some(width) = rows.first().map(Vec::len) else {
                bail!("{} holds no data rows", input.display());
            };
            if width < 2 || rows.iter().any(|r| r.len() != width) {
                bail!("every row needs the same number (≥ 2) of columns: x1,..,xd,y");
            }
            let x = PointSet::from_rows(width - 1, &rows.iter().map(|r| r[..width - 1].to_vec()).collect::<Vec<_>>());
            let y: Vec<f64> = rows.iter().map(|r| r[width - 1]).collect();
            let fit = convex_ls_fit(&x, &y, *gamma, *tol)?;
            emit(&fit.to_json()?, out.as_deref())?;
            return Ok(fit.converged);
        }
        Command::Mle1d { input, out } => {
            let xs: Vec<f64> = read_numbers(input)?.into_iter().flatten().collect();
            let mle = logconcave_mle_1d(&xs)?;
            emit(&mle.to_json()?, out.as_deref())?;
            return Ok(true);
        }
    };
    let cfg = ExperimentConfig::from_map(&args.merged(kind)?)?;
    let out = run_experiment(&cfg)?;
    println!("{}", out.summary());
    Ok(out.pass())
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("SHAPELAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second global init can only fail if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
