use super::*;
use crate::rng::stream;
use rand::RngExt;
use std::collections::BTreeMap;

fn rows_from(f: impl Fn(usize, usize) -> f64) -> Vec<RateRow> {
    let mut rows = Vec::new();
    for k in 6..=12 {
        let n = 1usize << k;
        for t in 0..5 {
            rows.push(RateRow {
                n,
                trial: t,
                risk: f(n, t),
                seed: 0,
            });
        }
    }
    rows
}

#[test]
fn slope_of_exact_power_law() {
    let fit = fit_slope(&rows_from(|n, _| 1.0 / n as f64)).unwrap();
    assert!((fit.slope + 1.0).abs() < 1e-12);
    assert!(fit.stderr < 1e-12);
    let flat = fit_slope(&rows_from(|_, _| 0.3)).unwrap();
    assert!(flat.slope.abs() < 1e-12);
}

#[test]
fn slope_with_noise() {
    let mut rng = stream(4, &[]);
    let noise: Vec<f64> = (0..35).map(|_| rng.random_range(-0.01..0.01)).collect();
    let fit = fit_slope(&rows_from(|n, t| 3.0 * (n as f64).powf(-2.0 / 3.0) * (1.0 + noise[(n.trailing_zeros() as usize - 6) * 5 + t]))).unwrap();
    assert!((fit.slope + 2.0 / 3.0).abs() < 0.02, "{}", fit.slope);
}

#[test]
fn slope_needs_three_sizes() {
    let rows: Vec<RateRow> = rows_from(|n, _| 1.0 / n as f64).into_iter().filter(|r| r.n < 256).collect();
    assert!(matches!(fit_slope(&rows), Err(crate::ShapeError::InsufficientData { needed: 3, got: 2 })));
}

fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[test]
fn config_parsing() {
    let text = "# rate run\nkind = convreg-rate\ndim = 2\nnmin = 64\nnmax = 512\ntrials=3\nfit_tol = 1e-7 # tight\n";
    let mut m = parse_kv(text).unwrap();
    m.insert("trials".into(), "4".into());
    let cfg = ExperimentConfig::from_map(&m).unwrap();
    assert_eq!(cfg.kind, ExperimentKind::ConvregRate);
    assert_eq!(cfg.n_grid, vec![64.0, 128.0, 256.0, 512.0]);
    assert_eq!(cfg.trials, 4);
    assert_eq!(cfg.param("fit-tol", 0.0).unwrap(), 1e-7);
    assert!(parse_kv("just words").is_err());
    assert!(ExperimentConfig::from_map(&map(&[("kind", "nope")])).is_err());
    assert!(ExperimentConfig::from_map(&map(&[("kind", "hull-deficit"), ("ngrid", "10,10,20")])).is_err());
    assert!(ExperimentConfig::from_map(&map(&[("kind", "hull-deficit"), ("trials", "0")])).is_err());
    assert!(ExperimentConfig::from_map(&map(&[("kind", "hull-deficit"), ("ngrid", "10.5,20,40")])).is_err());
    let fp = ExperimentConfig::from_map(&map(&[("kind", "fixed-point")])).unwrap();
    assert_eq!(fp.n_grid.len(), 7);
    assert_eq!(fp.n_grid[6], 1e80);
}

#[test]
fn grid_points_are_powers_of_two() {
    let g = log_grid(64.0, 4096.0, None, true).unwrap();
    assert_eq!(g, (6..=12).map(|k| (1u64 << k) as f64).collect::<Vec<_>>());
}

#[test]
fn fixed_point_exponent_is_analytic() {
    let cfg = ExperimentConfig::from_map(&map(&[("kind", "fixed-point"), ("dim", "4"), ("fp", "newfp")])).unwrap();
    let out = run_experiment(&cfg).unwrap();
    assert!(out.pass());
    let v: serde_json::Value = serde_json::from_str(&out.summary()).unwrap();
    assert_eq!(v["target"].as_f64().unwrap(), -0.4);
    assert!((v["slope"].as_f64().unwrap() + 0.4).abs() < 1e-3, "{v}");
    for key in ["slope", "intercept", "stderr", "target", "pass"] {
        assert!(v.get(key).is_some());
    }
}

#[test]
fn chaining_and_family_reports() {
    let cfg = ExperimentConfig::from_map(&map(&[("kind", "chaining-eval"), ("dim", "4"), ("nmin", "1e8"), ("nmax", "1e12"), ("grid", "5")])).unwrap();
    let out = run_experiment(&cfg).unwrap();
    assert!(out.pass() && cfg.kind.report_only());
    let cfg = ExperimentConfig::from_map(&map(&[("kind", "verify-family"), ("dim", "1"), ("ngrid", "1000")])).unwrap();
    let v: serde_json::Value = serde_json::from_str(&run_experiment(&cfg).unwrap().summary()).unwrap();
    assert_eq!(v["pairs"].as_array().unwrap().len(), 20);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}"));
        let cfg = ExperimentConfig::from_map(&map(&[
            ("kind", "convreg-rate"),
            ("nmin", "16"),
            ("nmax", "64"),
            ("trials", "3"),
            ("seed", "11"),
            ("out", out.to_str().unwrap()),
        ]))
        .unwrap();
        run_experiment(&cfg).unwrap();
        bytes.push((std::fs::read(out.with_extension("csv")).unwrap(), std::fs::read(out.with_extension("json")).unwrap()));
    }
    assert_eq!(bytes[0], bytes[1]);
    let csv = String::from_utf8(bytes[0].0.clone()).unwrap();
    assert!(csv.starts_with("n,trial,risk,seed\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 3);
}

#[test]
fn zero_noise_is_no_worse() {
    let run = |noise: &str| {
        let cfg = ExperimentConfig::from_map(&map(&[
            ("kind", "convreg-rate"),
            ("nmin", "32"),
            ("nmax", "256"),
            ("trials", "4"),
            ("seed", "5"),
            ("noise", noise),
        ]))
        .unwrap();
        match run_experiment(&cfg).unwrap() {
            ExperimentOutput::Rate(r) => mean_by_n(&r.rows),
            _ => unreachable!(),
        }
    };
    let clean = run("zero");
    let noisy = run("gaussian");
    for (c, s) in clean.iter().zip(&noisy) {
        assert!(c.1 <= s.1, "n = {}: {} > {}", c.0, c.1, s.1);
    }
}

#[test]
fn interval_discrepancy_rate() {
    let cfg = ExperimentConfig::from_map(&map(&[("kind", "discrepancy"), ("nmin", "64"), ("nmax", "16384"), ("trials", "100")])).unwrap();
    match run_experiment(&cfg).unwrap() {
        ExperimentOutput::Rate(r) => assert!(r.pass, "slope {}", r.slope),
        _ => unreachable!(),
    }
}

#[test]
fn small_density_runs() {
    for kind in ["mle1d-rate", "tournament-rate"] {
        let cfg = ExperimentConfig::from_map(&map(&[("kind", kind), ("nmin", "32"), ("nmax", "128"), ("trials", "2")])).unwrap();
        let out = run_experiment(&cfg).unwrap();
        match out {
            ExperimentOutput::Rate(r) => assert!(r.rows.iter().all(|x| x.risk > 0.0 && x.risk < 1.0), "{kind}: {:?}", r.rows),
            _ => unreachable!(),
        }
    }
}
