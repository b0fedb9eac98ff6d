use std::process::Command;

fn shapelab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_shapelab")).args(args).env("SHAPELAB_THREADS", "1").output().unwrap()
}

#[test]
fn fixed_point_passes() {
    let out = shapelab(&["fixed-point", "--dim", "4", "--fp", "newfp"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["slope"].as_f64().unwrap() + 0.4).abs() < 1e-3);
}

#[test]
fn failing_slope_exits_one() {
    let out = shapelab(&["fixed-point", "--dim", "4", "--tolerance", "0", "--nmin", "1e4", "--nmax", "1e8", "--grid", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(shapelab(&["hull-deficit", "--bogus"]).status.code(), Some(2));
    assert_eq!(shapelab(&["hull-deficit", "--ngrid", "10,5,20"]).status.code(), Some(2));
    assert_eq!(shapelab(&["hull-deficit", "--set", "novalue"]).status.code(), Some(2));
}

#[test]
fn config_file_with_override_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "dim = 1\nnmin = 16\nnmax = 256\ntrials = 50\nseed = 3\n").unwrap();
    let mut files = Vec::new();
    for run in 0..2 {
        let stem = dir.path().join(format!("hull{run}"));
        let out = shapelab(&["hull-deficit", "--config", cfg.to_str().unwrap(), "--trials", "20", "--out", stem.to_str().unwrap()]);
        assert!(out.status.code().is_some_and(|c| c <= 1), "{}", String::from_utf8_lossy(&out.stderr));
        let csv = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 5 * 20);
        files.push((csv, std::fs::read_to_string(stem.with_extension("json")).unwrap()));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn fit_convex_and_mle_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("xy.csv");
    let rows: String = (0..40).map(|i| {
        let x = -1.0 + i as f64 / 20.0;
        format!("{x},{}\n", x * x)
    }).collect();
    std::fs::write(&data, format!("x,y\n{rows}")).unwrap();
    let fit = dir.path().join("fit.json");
    let out = shapelab(&["fit-convex", "--input", data.to_str().unwrap(), "--out", fit.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&fit).unwrap()).unwrap();
    assert_eq!(v["g"].as_array().unwrap().len(), 40);

    let sample = dir.path().join("s.txt");
    std::fs::write(&sample, "0.1\n0.5\n0.3\n0.9\n0.2\n").unwrap();
    let out = shapelab(&["mle1d", "--input", sample.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.get("phi").is_some());
}
