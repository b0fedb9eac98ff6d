//! End-to-end acceptance checks. Every test prints one PASS/FAIL line to the
//! real stdout (not the captured one) and then asserts.

use rand::RngExt;
use shapelab::densities::{max_second_difference, verify_log_concave, BumpFamily, BumpOptions, Density, Gaussian, UniformBall};
use shapelab::empirical::{
    binomial_max_bound_check, chaining_bound_min, fixed_point, hull_deficit_experiment, EntropyModel, FixedPointKind,
};
use shapelab::estimators::{convex_ls_fit, tournament_estimate, TournamentNet};
use shapelab::experiments::{run_experiment, ExperimentConfig, ExperimentKind, ExperimentOutput, RateReport};
use shapelab::geometry::{greedy_disjointify, IntervalFamily};
use shapelab::lower_bounds::{minimax_lb_report, LbFamily};
use shapelab::quadrature::{integrate_2d, integrate_with_breaks, QuadOptions};
use shapelab::rng::stream;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{} [{id:>2}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    let _ = out.flush();
}

fn config(pairs: &[(&str, &str)]) -> ExperimentConfig {
    let m: BTreeMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    ExperimentConfig::from_map(&m).unwrap()
}

fn rate(cfg: &ExperimentConfig) -> RateReport {
    match run_experiment(cfg).unwrap() {
        ExperimentOutput::Rate(r) => r,
        other => panic!("expected a rate report, got {}", other.summary()),
    }
}

fn pow2(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn c01_hull_deficit_exponents() {
    // d = 1: the deficit is 1 − range/2 with mean exactly 2/(n+1)
    let r1 = hull_deficit_experiment(1, &pow2(6, 12), 400, 1).unwrap();
    let mut oracle_ok = true;
    for n in pow2(6, 12) {
        let risks: Vec<f64> = r1.rows.iter().filter(|r| r.n == n).map(|r| r.risk).collect();
        let k = risks.len() as f64;
        let m = risks.iter().sum::<f64>() / k;
        let se = (risks.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt();
        oracle_ok &= (m - 2.0 / (n as f64 + 1.0)).abs() <= 4.0 * se;
    }
    let r2 = hull_deficit_experiment(2, &pow2(7, 13), 200, 2).unwrap();
    let r3 = hull_deficit_experiment(3, &pow2(7, 13), 200, 3).unwrap();
    let ok1 = (r1.slope + 1.0).abs() <= 0.05 && oracle_ok;
    let ok2 = (r2.slope + 2.0 / 3.0).abs() <= 0.08;
    let ok3 = (r3.slope + 0.5).abs() <= 0.08;
    let pass = ok1 && ok2 && ok3;
    verdict(
        1,
        "hull deficit",
        pass,
        &format!(
            "d=1 slope {:.4} (−1 ± 0.05, mean vs 2/(n+1) {}), d=2 slope {:.4} (−0.667 ± 0.08), d=3 slope {:.4} (−0.5 ± 0.08)",
            r1.slope,
            if oracle_ok { "ok" } else { "off" },
            r2.slope,
            r3.slope
        ),
    );
    assert!(pass);
}

#[test]
fn c02_convex_regression_rate() {
    let r1 = rate(&config(&[
        ("kind", "convreg-rate"),
        ("dim", "1"),
        ("nmin", "64"),
        ("nmax", "4096"),
        ("trials", "50"),
        ("seed", "21"),
    ]));
    let r2 = rate(&config(&[
        ("kind", "convreg-rate"),
        ("dim", "2"),
        ("nmin", "64"),
        ("nmax", "1024"),
        ("trials", "50"),
        ("seed", "22"),
        ("gamma", "2"),
    ]));
    // d = 4: feasibility and optimality of a single fit
    let ball = UniformBall::unit(4).unwrap();
    let x = ball.sample(200, 23).unwrap();
    let mut rng = stream(24, &[]);
    let y: Vec<f64> = x.iter().map(|p| p.iter().map(|v| v * v).sum::<f64>() + 0.3 * (rng.random::<f64>() - 0.5)).collect();
    let fit = convex_ls_fit(&x, &y, 2.0, 1e-6).unwrap();
    let bounded = fit.g.iter().all(|g| (-1e-6..=2.0 + 1e-6).contains(g));
    let kkt_ok = fit.converged && fit.kkt_residual <= 1e-6 && fit.max_violation <= 1e-6 && bounded;
    let ok1 = (r1.slope + 0.8).abs() <= 0.1;
    let ok2 = (r2.slope + 2.0 / 3.0).abs() <= 0.1;
    let pass = ok1 && ok2 && kkt_ok;
    verdict(
        2,
        "convex regression",
        pass,
        &format!(
            "d=1 slope {:.4} (−0.8 ± 0.1), d=2 slope {:.4} (−0.667 ± 0.1), d=4 n=200 kkt {:.2e} violation {:.2e} converged {}",
            r1.slope, r2.slope, fit.kkt_residual, fit.max_violation, fit.converged
        ),
    );
    assert!(pass);
}

#[test]
fn c03_log_concave_mle_rate() {
    let r = rate(&config(&[
        ("kind", "mle1d-rate"),
        ("nmin", "64"),
        ("nmax", "8192"),
        ("trials", "50"),
        ("seed", "31"),
    ]));
    let pass = (r.slope + 0.8).abs() <= 0.1;
    verdict(3, "log-concave MLE", pass, &format!("slope {:.4} ± {:.4} (−0.8 ± 0.1)", r.slope, r.stderr));
    assert!(pass);
}

#[test]
fn c04_lower_bound_exponents() {
    let grid = [100, 316, 1000, 3162, 10_000, 31_623, 100_000];
    let cap = minimax_lb_report(LbFamily::Cap, 2, &grid, &(1..=8).collect::<Vec<u64>>()).unwrap();
    let ce = cap.hellinger_exponent.unwrap();
    let bump = minimax_lb_report(LbFamily::Bump, 1, &[100, 1000, 10_000, 100_000, 1_000_000], &[1]).unwrap();
    let be = bump.tv_exponent.unwrap();
    let pass = (ce + 2.0 / 3.0).abs() <= 0.05 && (be + 0.4).abs() <= 0.05;
    verdict(
        4,
        "lower-bound exponents",
        pass,
        &format!("cap d=2 exponent {ce:.4} (−0.667 ± 0.05), bump d=1 TV exponent {be:.4} (−0.4 ± 0.05)"),
    );
    assert!(pass);
}

#[test]
fn c05_separation_laws() {
    let deltas = [0.2, 0.1, 0.05];
    let (mut h2, mut tv) = (Vec::new(), Vec::new());
    for &delta in &deltas {
        let fam = BumpFamily::from_centers(1, delta, vec![vec![0.5]], BumpOptions::default()).unwrap();
        let (t, h) = fam.one_bit(0);
        tv.push(t);
        h2.push(h);
    }
    let sh = slope(&deltas, &h2);
    let st = slope(&deltas, &tv);
    let ratio: Vec<f64> = deltas.iter().zip(tv.iter().zip(&h2)).map(|(d, (t, h))| d * d * t / h).collect();
    let (lo, hi) = ratio.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    let pass = (sh / 5.0 - 1.0).abs() <= 0.1 && (st / 3.0 - 1.0).abs() <= 0.1 && hi / lo <= 1.25;
    verdict(
        5,
        "separation laws",
        pass,
        &format!("h² exponent {sh:.4} (5 ± 10%), TV exponent {st:.4} (3 ± 10%), δ²·TV/h² spread {:.4} (≤ 1.25)", hi / lo),
    );
    assert!(pass);
}

#[test]
fn c06_log_concavity() {
    let mut worst: f64 = 0.0;
    for d in [1usize, 2] {
        let fam = BumpFamily::new(d, 0.1, None, 61, BumpOptions::default()).unwrap();
        let k = fam.len();
        for pattern in 0..3usize {
            let f = fam.density((0..k).map(|i| (i + pattern) % 3 == 0).collect()).unwrap();
            worst = worst.max(verify_log_concave(&f, 100, 200, 62 + pattern as u64).unwrap().max_violation);
        }
    }
    // three bumps on top of each other: the summed curvature beats the Gaussian
    let centers = vec![vec![0.30], vec![0.32], vec![0.34]];
    let refused = BumpFamily::from_centers(1, 0.1, centers.clone(), BumpOptions::default()).is_err();
    let loose = Arc::new(
        BumpFamily::from_centers(
            1,
            0.1,
            centers,
            BumpOptions {
                check_spacing: false,
                ..BumpOptions::default()
            },
        )
        .unwrap(),
    );
    let f = loose.density(vec![true; 3]).unwrap();
    let bad = max_second_difference(&f, &[0.35], &[0.39], 50);
    let pass = worst <= 1e-7 && refused && bad > 1e-7;
    verdict(
        6,
        "log-concavity",
        pass,
        &format!("valid families max second difference {worst:.2e} (≤ 1e-7), overlapping construction refused {refused}, flagged at {bad:.2e}"),
    );
    assert!(pass);
}

/// ∫ over B(c, δ) of (e^g − 1)γ in Cartesian coordinates.
fn bump_mass(c: &[f64], delta: f64) -> f64 {
    let g = |r: f64| if r < delta { 0.25 * (delta - r).powi(2) } else { 0.0 };
    let opts = QuadOptions::abs(1e-12);
    if c.len() == 1 {
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        return integrate_with_breaks(|x| g((x - c[0]).abs()).exp_m1() * phi(x), &[c[0] - delta, c[0], c[0] + delta], opts).value;
    }
    let (cx, cy) = (c[0], c[1]);
    integrate_2d(
        |x, y| {
            let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
            g(r).exp_m1() * (-0.5 * (x * x + y * y)).exp() / (2.0 * PI)
        },
        &[cy - delta, cy, cy + delta],
        |y| {
            let w = (delta * delta - (y - cy).powi(2)).max(0.0).sqrt();
            vec![cx - w, cx, cx + w]
        },
        opts,
    )
    .value
}

#[test]
fn c07_normalization() {
    let mut lines = Vec::new();
    let mut pass = true;
    for d in [1usize, 2] {
        for delta in [0.1, 0.05] {
            let fam = BumpFamily::new(d, delta, None, 71, BumpOptions::default()).unwrap();
            let c = fam.normalizer();
            let oracle = 1.0 + fam.centers().iter().map(|x| bump_mass(x, delta)).sum::<f64>();
            let ok = c > 1.0 && c < 1.0 + delta * delta && (c - oracle).abs() <= 1e-6;
            pass &= ok;
            lines.push(format!("d={d} δ={delta} K={} C={c:.8} oracle {:.1e} off", fam.len(), (c - oracle).abs()));
        }
    }
    verdict(7, "normalization", pass, &lines.join("; "));
    assert!(pass);
}

#[test]
fn c08_chaining_and_fixed_point() {
    let n = 1e80;
    let mut worst: f64 = 0.0;
    for d in 4..=10usize {
        let m = EntropyModel::convex_sets(d, 1.0).unwrap();
        let e1 = fixed_point(&m, FixedPointKind::NewFp, n).unwrap();
        let e2 = fixed_point(&m, FixedPointKind::NewFp, 16.0 * n).unwrap();
        let exponent = ((e2 * e2) / (e1 * e1)).ln() / 16f64.ln();
        worst = worst.max((exponent + 2.0 / (d as f64 + 1.0)).abs());
    }
    let m = EntropyModel::convex_sets(4, 1.0).unwrap();
    let (_, b1) = chaining_bound_min(&m, n, 1.0).unwrap();
    let (_, b2) = chaining_bound_min(&m, 16.0 * n, 1.0).unwrap();
    let off = b2 / b1 / 16f64.powf(-0.4) - 1.0;
    let pass = worst <= 1e-6 && off.abs() <= 0.01;
    verdict(
        8,
        "chaining and fixed point",
        pass,
        &format!("fixed-point exponent error {worst:.2e} over d=4..10 (≤ 1e-6), chaining ratio off 16^(−2/5) by {:.3}%", 100.0 * off),
    );
    assert!(pass);
}

/// Length of [a, b] not covered by `others`, by sorting and merging.
fn exact_residual(a: f64, b: f64, others: &[(f64, f64)]) -> f64 {
    let mut clipped: Vec<(f64, f64)> = others.iter().map(|(l, r)| (l.max(a), r.min(b))).filter(|(l, r)| r > l).collect();
    clipped.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut covered = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (l, r) in clipped {
        cur = match cur {
            Some((cl, cr)) if l <= cr => Some((cl, cr.max(r))),
            Some((cl, cr)) => {
                covered += cr - cl;
                Some((l, r))
            }
            None => Some((l, r)),
        };
    }
    if let Some((cl, cr)) = cur {
        covered += cr - cl;
    }
    (b - a) - covered
}

#[test]
fn c09_greedy_disjointification() {
    // endpoints on a dyadic grid keep every length and sum exact
    let mut rng = stream(91, &[]);
    let mut failures = 0usize;
    let cases = 10_000;
    for _ in 0..cases {
        let n = rng.random_range(1..=12usize);
        let len = rng.random_range(1..=64u32) as f64 / 64.0;
        let ivs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let a = rng.random_range(0..=256u32) as f64 / 64.0;
                (a, a + len)
            })
            .collect();
        let out = greedy_disjointify(&IntervalFamily::new(ivs.clone()), len, None).unwrap();
        let union = exact_residual(-1.0, 10.0, &[]) - exact_residual(-1.0, 10.0, &ivs);
        let c = union / (n as f64 * len);
        let mut ok = out.kept.len() as f64 >= n as f64 * c / 2.0 && (out.c - c).abs() <= 1e-12;
        for &i in &out.kept {
            let others: Vec<(f64, f64)> = out.kept.iter().filter(|&&j| j != i).map(|&j| ivs[j]).collect();
            ok &= exact_residual(ivs[i].0, ivs[i].1, &others) >= 0.5 * len * c * (1.0 - 1e-12);
        }
        failures += usize::from(!ok);
    }
    let pass = failures == 0;
    verdict(9, "greedy disjointification", pass, &format!("{failures} failures in {cases} random interval families"));
    assert!(pass);
}

#[test]
fn c10_binomial_maximal_inequality() {
    let (mut checked, mut refused, mut violations) = (0, 0, 0);
    let mut worst: f64 = 0.0;
    for k in [2usize, 10, 1000] {
        for p in [0.01, 0.1, 0.5] {
            for n in [100u64, 10_000] {
                match binomial_max_bound_check(&vec![p; k], p, n, 10_000, 101) {
                    Ok(r) => {
                        checked += 1;
                        worst = worst.max(r.emp / r.bound);
                        violations += usize::from(!r.holds);
                    }
                    Err(shapelab::ShapeError::OutOfRegime(_)) => refused += 1,
                    Err(e) => panic!("k={k} p={p} n={n}: {e}"),
                }
            }
        }
    }
    let pass = violations == 0 && checked > 0;
    verdict(
        10,
        "binomial maximal inequality",
        pass,
        &format!("{checked} cells checked, {refused} refused as out of regime, {violations} violations, max emp/bound {worst:.3}"),
    );
    assert!(pass);
}

#[test]
fn c11_tournament() {
    let cands: Vec<Arc<dyn Density>> =
        (0..5).map(|k| Arc::new(Gaussian::new(vec![0.6 * k as f64], 1.0).unwrap()) as Arc<dyn Density>).collect();
    let net = TournamentNet::scheffe(cands.clone(), 0, 0).unwrap();
    let seeds = 100u64;
    let (mut correct, mut argmin_ok) = (0u64, true);
    for s in 0..seeds {
        let truth = (s % 5) as usize;
        let x = cands[truth].sample(10_000, 1100 + s).unwrap();
        let pick = tournament_estimate(&x, &net);
        let scores = net.scores(&x);
        argmin_ok &= scores.iter().all(|v| scores[pick] <= *v);
        correct += u64::from(pick == truth);
    }
    let freq = correct as f64 / seeds as f64;
    let pass = freq >= 0.95 && argmin_ok && net.separation() >= 0.2;
    verdict(
        11,
        "tournament",
        pass,
        &format!("correct in {correct}/{seeds} (≥ 0.95), argmin inequality exact {argmin_ok}, net separation {:.4}", net.separation()),
    );
    assert!(pass);
}

#[test]
fn c12_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    for kind in ExperimentKind::ALL {
        let base: Vec<(&str, &str)> = match kind {
            ExperimentKind::HullDeficit => vec![("dim", "2"), ("nmin", "16"), ("nmax", "64"), ("trials", "3")],
            ExperimentKind::ConvregRate => vec![("dim", "2"), ("nmin", "16"), ("nmax", "64"), ("trials", "2")],
            ExperimentKind::VerifyFamily => vec![("dim", "2"), ("ngrid", "300")],
            ExperimentKind::ChainingEval | ExperimentKind::FixedPoint => vec![("dim", "4")],
            _ => vec![("nmin", "32"), ("nmax", "128"), ("trials", "3")],
        };
        let mut outputs = Vec::new();
        for run in 0..2 {
            let stem = dir.path().join(format!("{}-{run}", kind.name()));
            let stem_str = stem.to_str().unwrap().to_string();
            let mut pairs = base.clone();
            pairs.extend([("kind", kind.name()), ("seed", "1234"), ("out", stem_str.as_str())]);
            let out = run_experiment(&config(&pairs)).unwrap();
            let read = |ext: &str| std::fs::read(stem.with_extension(ext)).ok();
            outputs.push((out.summary(), read("csv"), read("json")));
        }
        assert!(outputs[0].2.is_some(), "{} wrote no json", kind.name());
        if outputs[0] != outputs[1] {
            differing.push(kind.name());
        }
    }
    let pass = differing.is_empty();
    verdict(
        12,
        "determinism",
        pass,
        &format!("{} kinds rerun, differing: {:?}", ExperimentKind::ALL.len(), differing),
    );
    assert!(pass);
}
