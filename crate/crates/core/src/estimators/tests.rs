use super::*;
use crate::densities::{hellinger_sq, total_variation, Density, DistanceOptions, Gaussian, UniformInterval};
use crate::points::PointSet;
use crate::rng::stream;
use proptest::prelude::*;
use rand::RngExt;
use rand_distr::StandardNormal;
use std::sync::Arc;

fn line(xs: &[f64]) -> PointSet {
    PointSet::from_scalars(xs)
}

#[test]
fn convex_data_is_left_alone() {
    let fit = convex_ls_fit(&line(&[-1.0, 0.0, 1.0]), &[1.0, 0.0, 1.0], 2.0, 1e-6).unwrap();
    for (g, y) in fit.g.iter().zip([1.0, 0.0, 1.0]) {
        assert!((g - y).abs() < 1e-6, "{:?} {}", fit.g, fit.kkt_residual);
    }
    assert!(fit.objective < 1e-10);
    assert!(fit.converged);
}

#[test]
fn concave_bump_is_flattened() {
    let fit = convex_ls_fit(&line(&[-1.0, 0.0, 1.0]), &[0.0, 1.0, 0.0], 2.0, 1e-6).unwrap();
    for g in &fit.g {
        assert!((g - 1.0 / 3.0).abs() < 1e-6, "{:?}", fit.g);
    }
    assert!((fit.objective - 2.0 / 3.0).abs() < 1e-6);
    assert!(fit.converged, "kkt {}", fit.kkt_residual);
}

/// Projection onto {convex on sorted xs, 0 ≤ g ≤ Γ} by Dykstra's algorithm
/// over the individual half-spaces.
fn dykstra_convex_1d(xs: &[f64], y: &[f64], gamma: f64) -> Vec<f64> {
    let n = y.len();
    // constraint k: a_kᵀg ≤ 0 with a = slope(k,k+1) − slope(k+1,k+2) as coefficients
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for k in 0..n.saturating_sub(2) {
        let (h1, h2) = (xs[k + 1] - xs[k], xs[k + 2] - xs[k + 1]);
        rows.push(vec![(k, -1.0 / h1), (k + 1, 1.0 / h1 + 1.0 / h2), (k + 2, -1.0 / h2)]);
    }
    let mut g = y.to_vec();
    let mut incr = vec![vec![0.0; n]; rows.len() + 1];
    for _ in 0..200_000 {
        let before = g.clone();
        for (r, row) in rows.iter().enumerate() {
            let mut z: Vec<f64> = g.iter().zip(&incr[r]).map(|(a, b)| a + b).collect();
            let dotv: f64 = row.iter().map(|&(i, c)| c * z[i]).sum();
            let nn: f64 = row.iter().map(|&(_, c)| c * c).sum();
            let proj = z.clone();
            if dotv > 0.0 {
                for &(i, c) in row {
                    z[i] -= dotv / nn * c;
                }
            }
            for i in 0..n {
                incr[r][i] = proj[i] - z[i];
            }
            g = z;
        }
        let b = rows.len();
        let z: Vec<f64> = g.iter().zip(&incr[b]).map(|(a, c)| a + c).collect();
        let p: Vec<f64> = z.iter().map(|v| v.clamp(0.0, gamma)).collect();
        for i in 0..n {
            incr[b][i] = z[i] - p[i];
        }
        g = p;
        if before.iter().zip(&g).all(|(a, b)| (a - b).abs() < 1e-13) {
            break;
        }
    }
    g
}

#[test]
fn one_dimensional_fit_matches_dykstra_projection() {
    let mut rng = stream(17, &[]);
    let mut xs: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
    xs.sort_by(f64::total_cmp);
    let y: Vec<f64> = xs.iter().map(|x| x * x + 0.3 * rng.sample::<f64, _>(StandardNormal)).collect();
    let fit = convex_ls_fit(&line(&xs), &y, 1.0, 1e-6).unwrap();
    let oracle = dykstra_convex_1d(&xs, &y, 1.0);
    for (a, b) in fit.g.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }
}

fn random_design(n: usize, d: usize, seed: u64) -> (PointSet, Vec<f64>) {
    let mut rng = stream(seed, &[]);
    let mut pts = PointSet::with_capacity(d, n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f: f64 = p.iter().map(|v| v * v).sum::<f64>() / d as f64;
        y.push(f + 0.5 * rng.sample::<f64, _>(StandardNormal));
        pts.push(&p);
    }
    (pts, y)
}

#[test]
fn two_dimensional_fit_is_feasible_and_optimal() {
    let (x, y) = random_design(150, 2, 3);
    let fit = convex_ls_fit(&x, &y, 1.0, 1e-6).unwrap();
    assert!(fit.converged, "kkt {} viol {}", fit.kkt_residual, fit.max_violation);
    assert!(fit.kkt_residual <= 1e-6);
    for i in 0..x.len() {
        assert!(fit.g[i] >= 0.0 && fit.g[i] <= 1.0);
        for j in 0..x.len() {
            let xi = fit.xi.point(i);
            let rhs = fit.g[i] + xi[0] * (x.point(j)[0] - x.point(i)[0]) + xi[1] * (x.point(j)[1] - x.point(i)[1]);
            assert!(fit.g[j] >= rhs - 1e-7);
        }
        assert!((convex_predict(&fit, x.point(i)) - fit.g[i]).abs() < 1e-7);
    }
    // constants are feasible
    let c = (y.iter().sum::<f64>() / y.len() as f64).clamp(0.0, 1.0);
    let best_const: f64 = y.iter().map(|v| (v - c) * (v - c)).sum();
    assert!(fit.objective <= best_const + 1e-9);
    // fewer constraints than all pairs were needed
    assert!(fit.active_pairs < x.len() * (x.len() - 1));
}

#[test]
fn prediction_is_convex_before_clamping_and_bounded() {
    let (x, y) = random_design(60, 1, 8);
    let fit = convex_ls_fit(&x, &y, 1.0, 1e-6).unwrap();
    let grid: Vec<f64> = (0..=400).map(|k| -1.5 + 3.0 * k as f64 / 400.0).collect();
    let vals: Vec<f64> = grid.iter().map(|&t| convex_predict(&fit, &[t])).collect();
    assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
    // clamping at Γ keeps midpoint convexity on the region below Γ
    for k in 1..grid.len() - 1 {
        if vals[k - 1] < 1.0 && vals[k + 1] < 1.0 && vals[k] > 0.0 {
            assert!(vals[k] <= 0.5 * (vals[k - 1] + vals[k + 1]) + 1e-9);
        }
    }
}

#[test]
fn fit_round_trips_through_json() {
    let fit = convex_ls_fit(&line(&[-1.0, 0.0, 1.0]), &[0.0, 1.0, 0.0], 2.0, 1e-6).unwrap();
    let back = ConvexFit::from_json(&fit.to_json().unwrap()).unwrap();
    assert_eq!(fit, back);
    assert!(fit.to_json().unwrap().contains("residuals"));
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(convex_ls_fit(&line(&[]), &[], 1.0, 1e-6).is_err());
    assert!(convex_ls_fit(&line(&[0.0]), &[1.0], 0.0, 1e-6).is_err());
    assert!(convex_ls_fit(&line(&[0.0, 1.0]), &[1.0], 1.0, 1e-6).is_err());
    let single = convex_ls_fit(&line(&[0.0]), &[5.0], 2.0, 1e-6).unwrap();
    assert!((single.g[0] - 2.0).abs() < 1e-7);
}

#[test]
fn deterministic_given_inputs() {
    let (x, y) = random_design(80, 2, 4);
    let a = convex_ls_fit(&x, &y, 1.0, 1e-6).unwrap();
    let b = convex_ls_fit(&x, &y, 1.0, 1e-6).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn objective_does_not_increase_with_gamma(seed in 0u64..1000, g1 in 0.2f64..1.5, extra in 0.0f64..2.0) {
        let (x, y) = random_design(20, 2, seed);
        let a = convex_ls_fit(&x, &y, g1, 1e-6).unwrap();
        let b = convex_ls_fit(&x, &y, g1 + extra, 1e-6).unwrap();
        prop_assert!(b.objective <= a.objective + 1e-6);
    }

    #[test]
    fn squared_difference_identity(seed in 0u64..1000) {
        let (x, y) = random_design(15, 1, seed);
        let f = convex_ls_fit(&x, &y, 1.0, 1e-6).unwrap();
        let g = convex_ls_fit(&x, &y, 0.5, 1e-6).unwrap();
        for t in [-1.0, -0.3, 0.2, 0.9] {
            let (a, b) = (convex_predict(&f, &[t]), convex_predict(&g, &[t]));
            let lhs = (a - b) * (a - b);
            let rhs = 2.0 * a * a + 2.0 * b * b - (a + b) * (a + b);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn mle_is_shift_equivariant(seed in 0u64..1000, shift in -5.0f64..5.0) {
        let mut rng = stream(seed, &[]);
        let xs: Vec<f64> = (0..30).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let moved: Vec<f64> = xs.iter().map(|v| v + shift).collect();
        let a = logconcave_mle_1d(&xs).unwrap();
        let b = logconcave_mle_1d(&moved).unwrap();
        for t in [-1.0, -0.2, 0.0, 0.5, 1.1] {
            let (la, lb) = (a.log_eval(&[t]), b.log_eval(&[t + shift]));
            if la.is_finite() {
                prop_assert!((la - lb).abs() < 1e-6, "{} vs {}", la, lb);
            }
        }
    }
}

#[test]
fn two_point_mle_is_uniform() {
    let m = logconcave_mle_1d(&[0.0, 1.0]).unwrap();
    assert!(m.log_eval(&[0.0]).abs() < 1e-9);
    assert!(m.log_eval(&[1.0]).abs() < 1e-9);
    assert!(m.log_eval(&[0.4]).abs() < 1e-9);
    assert_eq!(m.log_eval(&[1.2]), f64::NEG_INFINITY);
}

#[test]
fn mle_is_normalized_concave_and_mean_matching() {
    for seed in 0..10 {
        let mut rng = stream(seed, &[]);
        let xs: Vec<f64> = (0..400).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let m = logconcave_mle_1d(&xs).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-8, "{}", m.total_mass());
        assert!(m.max_concavity_violation() <= 1e-9, "{}", m.max_concavity_violation());
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((m.mean() - mean).abs() < 1e-6, "{} vs {mean}", m.mean());
        let (a, b) = m.support();
        assert_eq!(a, xs.iter().cloned().fold(f64::INFINITY, f64::min));
        assert_eq!(b, xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }
}

/// Log-likelihood of a piecewise-linear log-density on the sorted distinct
/// points after normalization.
fn normalized_loglik(xs: &[f64], w: &[f64], phi: &[f64]) -> f64 {
    let mut mass = 0.0;
    for j in 0..xs.len() - 1 {
        let (a, b) = (phi[j], phi[j + 1]);
        let h = xs[j + 1] - xs[j];
        mass += if (b - a).abs() < 1e-12 { h * a.exp() } else { h * (b.exp() - a.exp()) / (b - a) };
    }
    phi.iter().zip(w).map(|(p, q)| p * q).sum::<f64>() - mass.ln()
}

#[test]
fn concave_perturbations_do_not_improve_the_likelihood() {
    let mut rng = stream(99, &[]);
    let mut xs: Vec<f64> = (0..60).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    xs.sort_by(f64::total_cmp);
    let m = logconcave_mle_1d(&xs).unwrap();
    let w = vec![1.0 / xs.len() as f64; xs.len()];
    let phi = m.log_density().to_vec();
    let best = normalized_loglik(&xs, &w, &phi);
    assert!((best - m.log_likelihood()).abs() < 1e-8);
    for trial in 0..500 {
        let k = rng.random_range(0..xs.len());
        let tilt: f64 = rng.random_range(-1.0..1.0);
        let size = if trial % 2 == 0 { 1e-3 } else { 1e-1 };
        let mut cand = phi.clone();
        for (j, c) in cand.iter_mut().enumerate() {
            *c += size * (tilt * xs[j] - (xs[j] - xs[k]).max(0.0));
        }
        // keep only concave candidates
        let concave = (1..xs.len() - 1).all(|j| {
            let s1 = (cand[j] - cand[j - 1]) / (xs[j] - xs[j - 1]);
            let s2 = (cand[j + 1] - cand[j]) / (xs[j + 1] - xs[j]);
            s2 <= s1 + 1e-12
        });
        if concave {
            assert!(normalized_loglik(&xs, &w, &cand) <= best + 1e-9);
        }
    }
}

#[test]
fn uniform_sample_mle_is_close_in_hellinger() {
    let truth = UniformInterval::new(0.0, 1.0).unwrap();
    for seed in 0..20 {
        let xs = truth.sample(500, seed).unwrap();
        let m = logconcave_mle_1d(xs.scalars()).unwrap();
        let h2 = hellinger_sq(&m, &truth, DistanceOptions::quadrature(1)).unwrap().value;
        assert!(h2 <= 0.05, "seed {seed}: {h2}");
    }
}

#[test]
fn mle_samples_follow_its_cdf() {
    let xs = Gaussian::standard(1).unwrap().sample(200, 5).unwrap();
    let m = logconcave_mle_1d(xs.scalars()).unwrap();
    let draws = m.sample(20_000, 6).unwrap();
    let mut s = draws.scalars().to_vec();
    s.sort_by(f64::total_cmp);
    let mut ks: f64 = 0.0;
    for (i, v) in s.iter().enumerate() {
        let f = m.cdf(*v).unwrap();
        ks = ks.max((f - i as f64 / s.len() as f64).abs());
    }
    assert!(ks < 0.015, "{ks}");
}

#[test]
fn equal_samples_are_degenerate() {
    assert!(matches!(logconcave_mle_1d(&[2.0, 2.0, 2.0]), Err(crate::ShapeError::DegenerateSample(_))));
    assert!(logconcave_mle_1d(&[2.0]).is_err());
}

fn arc<D: Density + 'static>(d: D) -> Arc<dyn Density> {
    Arc::new(d)
}

#[test]
fn single_candidate_wins() {
    let net = TournamentNet::scheffe(vec![arc(Gaussian::standard(1).unwrap())], 0, 0).unwrap();
    let s = Gaussian::standard(1).unwrap().sample(50, 1).unwrap();
    assert_eq!(tournament_estimate(&s, &net), 0);
}

#[test]
fn shifted_uniforms_with_half_interval_witness() {
    let net = TournamentNet::with_intervals(
        vec![arc(UniformInterval::new(0.0, 1.0).unwrap()), arc(UniformInterval::new(0.5, 1.5).unwrap())],
        vec![vec![(0.0, 0.5)]],
    )
    .unwrap();
    let truth = UniformInterval::new(0.0, 1.0).unwrap();
    let wins = (0..200).filter(|&s| tournament_estimate(&truth.sample(200, s).unwrap(), &net) == 0).count();
    assert!(wins as f64 / 200.0 >= 0.99, "{wins}");
}

#[test]
fn scheffe_gaps_equal_total_variation() {
    let cands: Vec<Arc<dyn Density>> = vec![
        arc(Gaussian::new(vec![0.0], 1.0).unwrap()),
        arc(Gaussian::new(vec![0.7], 1.3).unwrap()),
        arc(UniformInterval::new(-1.0, 2.0).unwrap()),
    ];
    let net = TournamentNet::scheffe(cands.clone(), 0, 0).unwrap();
    let mut a = 0;
    for i in 0..3 {
        for j in i + 1..3 {
            let tv = total_variation(&*cands[i], &*cands[j], DistanceOptions::quadrature(1)).unwrap().value;
            let gap = net.probability(a, i) - net.probability(a, j);
            assert!((gap - tv).abs() < 1e-6, "({i},{j}): {gap} vs {tv}");
            a += 1;
        }
    }
}

#[test]
fn selected_candidate_minimizes_the_score() {
    let cands: Vec<Arc<dyn Density>> = (0..4).map(|k| arc(Gaussian::new(vec![0.6 * k as f64], 1.0).unwrap())).collect();
    let net = TournamentNet::scheffe(cands, 0, 0).unwrap();
    for seed in 0..20 {
        let s = Gaussian::new(vec![0.9], 1.0).unwrap().sample(300, seed).unwrap();
        let k = tournament_estimate(&s, &net);
        let scores = net.scores(&s);
        assert!(scores.iter().all(|v| scores[k] <= *v));
        assert!(scores[..k].iter().all(|v| *v > scores[k]));
    }
}

#[test]
fn two_dimensional_scheffe_uses_monte_carlo() {
    let cands: Vec<Arc<dyn Density>> = vec![arc(Gaussian::standard(2).unwrap()), arc(Gaussian::new(vec![2.0, 0.0], 1.0).unwrap())];
    let net = TournamentNet::scheffe(cands, 100_000, 3).unwrap();
    // TV of unit Gaussians at distance 2 is 2Φ(1) − 1
    assert!((net.separation() - 0.682_689_492).abs() < 0.01, "{}", net.separation());
    let s = Gaussian::new(vec![2.0, 0.0], 1.0).unwrap().sample(1000, 4).unwrap();
    assert_eq!(tournament_estimate(&s, &net), 1);
}

#[test]
fn isotropic_gaussian_standardizes_near_identity() {
    let g = Gaussian::standard(3).unwrap();
    let s = g.sample(30_000, 12).unwrap();
    let out = standardize(&s).unwrap();
    let pts = &out.points;
    assert_eq!(pts.len(), 10_000);
    let mean = pts.mean();
    assert!(mean.iter().map(|v| v * v).sum::<f64>().sqrt() <= 0.05);
    let mut cov = nalgebra::DMatrix::<f64>::zeros(3, 3);
    for p in pts.iter() {
        let v = nalgebra::DVector::from_iterator(3, p.iter().zip(&mean).map(|(a, b)| a - b));
        cov += &v * v.transpose();
    }
    cov /= (pts.len() - 1) as f64;
    let diff = cov - nalgebra::DMatrix::<f64>::identity(3, 3);
    let op = diff.singular_values().max();
    assert!(op <= 0.05, "{op}");
    assert!(out.covariance_range.end <= out.mean_range.start);
    assert!(out.mean_range.end <= out.output_range.start);
}

#[test]
fn affine_map_inverts() {
    let mut rng = stream(2, &[]);
    let mut s = PointSet::new(2);
    for _ in 0..300 {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        s.push(&[3.0 * a + 1.0, a - 0.5 * b]);
    }
    let out = standardize(&s).unwrap();
    for p in s.iter() {
        let back = out.map.invert(&out.map.apply(p));
        assert!(back.iter().zip(p).all(|(a, b)| (a - b).abs() < 1e-10));
    }
}

#[test]
fn singular_covariance_reports_rank() {
    let mut s = PointSet::new(3);
    for k in 0..30 {
        let t = k as f64;
        s.push(&[t, t * t, (t * 0.37).sin()]);
    }
    assert!(standardize(&s).is_ok());
    let mut flat = PointSet::new(3);
    for k in 0..30 {
        let t = k as f64;
        flat.push(&[t, 2.0 * t, 1.0]);
    }
    match standardize(&flat) {
        Err(crate::ShapeError::RankDeficient { rank, dim }) => assert_eq!((rank, dim), (1, 3)),
        other => panic!("{other:?}"),
    }
}
