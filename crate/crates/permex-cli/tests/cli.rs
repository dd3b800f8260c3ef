//! End-to-end checks of the command-line surface: output shapes,
//! determinism, exit codes, and the fit/certify round trip.

use std::path::Path;
use std::process::{Command, Output};

fn permex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn bound_is_deterministic_and_well_formed() {
    let a = permex(&["bound", "--h", "1", "--omega0", "2", "--eps", "1e-3"]);
    assert!(a.status.success(), "stderr: {}", String::from_utf8_lossy(&a.stderr));
    let b = permex(&["bound", "--h", "1", "--omega0", "2", "--eps", "1e-3"]);
    assert_eq!(a.stdout, b.stdout, "rerun must be byte-identical");

    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["meta"]["tool"], format!("permex {}", env!("CARGO_PKG_VERSION")));
    let d = v["result"]["bound"]["d"].as_f64().unwrap();
    assert!(d > 0.0 && d < 1.0);
    assert!(v["result"]["bound"]["eta"].as_f64().unwrap() > 0.0);
}

#[test]
fn bound_symmetric_carries_sandwich() {
    let out = permex(&["bound", "--h", "1", "--omega0", "2", "--eps", "1e-2", "--symmetric"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let d0 = v["result"]["symmetric"]["d0"].as_f64().unwrap();
    let ds = v["result"]["symmetric"]["d_sym"].as_f64().unwrap();
    assert!(ds >= 0.5 * d0 - 1e-12 && ds <= d0 + 1e-12);
}

#[test]
fn usage_errors_exit_2_and_range_errors_exit_3() {
    let out = permex(&["bound", "--h", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = permex(&["bound", "--h", "1", "--omega0", "0.5", "--eps", "1e-3"]);
    assert_eq!(out.status.code(), Some(3));
    let out = permex(&["bound", "--h", "1", "--omega0", "2", "--eps", "1e-9"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn eig_esv_matches_map_modulus() {
    let dir = tempfile::tempdir().unwrap();
    let eig_path = dir.path().join("eig.csv");
    let out = permex(&["eig", "--h", "1", "--out", eig_path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&eig_path).unwrap();
    assert!(text.starts_with("# tool: permex"));
    // pull alpha from the note line
    let alpha: f64 = text
        .lines()
        .find(|l| l.starts_with("# decay_rate"))
        .and_then(|l| l.split("alpha=").nth(1))
        .and_then(|l| l.split_whitespace().next())
        .and_then(|s| s.parse().ok())
        .expect("decay note present");

    let out = permex(&["map", "--h", "1", "--panel", "128"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rho = v["result"]["rho"].as_f64().unwrap();
    assert!(
        (rho.ln() - alpha).abs() <= 0.02 * alpha,
        "ln rho {} vs alpha {alpha}",
        rho.ln()
    );
}

#[test]
fn gamma_map_produces_ordered_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gm.csv");
    let out = permex(&[
        "gamma-map",
        "--h",
        "0.5,1",
        "--omega0",
        "1.5..3",
        "--steps",
        "3",
        "--nodes",
        "128",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("omega0"))
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        // gamma grows with h at fixed omega0
        assert!(row[1] < row[2], "row {row:?}");
    }
    // gamma decreases in omega0 for each h
    for col in 1..=2 {
        for w in rows.windows(2) {
            assert!(w[0][col] >= w[1][col]);
        }
    }
}

#[test]
fn fit_certify_round_trip_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    // synthesize a clean two-node data set directly in CSV form
    let truth = permex_core::StieltjesRational::new(0.1, 0.8, vec![0.7, 3.5], vec![1.2, 0.6])
        .unwrap();
    let rule = permex_core::fit::default_band_rule();
    let mut csv = String::from("omega,re_f,im_f\n");
    for &x in &rule.nodes {
        let v = truth.eval(num_complex::Complex64::from(x)).unwrap();
        csv.push_str(&format!("{x:.17e},{:.17e},{:.17e}\n", v.re, v.im));
    }
    let data_path = dir.path().join("band.csv");
    std::fs::write(&data_path, csv).unwrap();

    let fit_path = dir.path().join("fit.json");
    let out = permex(&[
        "fit",
        "--input",
        data_path.to_str().unwrap(),
        "--h",
        "0.8",
        "--out",
        fit_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&fit_path).unwrap()).unwrap();
    assert_eq!(v["result"]["certificate"]["ok"], true);
    let fitted = v["result"]["fit"]["model"].clone();

    // certifying the fitted model succeeds
    let model_path = dir.path().join("model.json");
    std::fs::write(&model_path, serde_json::to_string(&fitted).unwrap()).unwrap();
    let out = permex(&[
        "certify",
        "--model",
        model_path.to_str().unwrap(),
        "--input",
        data_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    // a tampered model fails with exit code 4
    let mut bad = serde_json::from_value::<serde_json::Value>(fitted).unwrap();
    bad["masses"][0] = serde_json::json!(2.4);
    std::fs::write(&model_path, serde_json::to_string(&bad).unwrap()).unwrap();
    let out = permex(&[
        "certify",
        "--model",
        model_path.to_str().unwrap(),
        "--input",
        data_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn demo_illposed_emits_close_then_separated_pair() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.csv");
    let out = permex(&[
        "demo-illposed",
        "--h",
        "0.5",
        "--omega0",
        "2",
        "--eps",
        "1e-2",
        "--nodes",
        "128",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("omega"))
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    // near the band start the two curves agree, at the end they separate
    let gap = |r: &Vec<f64>| ((r[1] - r[3]).powi(2) + (r[2] - r[4]).powi(2)).sqrt();
    let early = &rows[rows.len() / 8];
    let late = rows.last().unwrap();
    assert!(gap(late) > 20.0 * gap(early), "early {} late {}", gap(early), gap(late));
}

#[test]
fn sweep_csv_has_monotone_bound() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = permex(&[
        "sweep",
        "--h",
        "1",
        "--omega0",
        "2",
        "--eps-min",
        "1e-3",
        "--eps-max",
        "1e-1",
        "--per-decade",
        "4",
        "--nodes",
        "128",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let d: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("eps"))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(d.len() >= 8);
    assert!(d.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn operator_disk_cache_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let run = |cache: &Path| {
        Command::new(env!("CARGO_BIN_EXE_permex"))
            .env("PERMEX_CACHE_DIR", cache)
            .args(["bound", "--h", "0.9", "--omega0", "2", "--eps", "1e-3", "--nodes", "96"])
            .output()
            .expect("binary runs")
    };
    let first = run(dir.path());
    assert!(first.status.success());
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert!(!files.is_empty(), "cache file written");
    let second = run(dir.path());
    assert_eq!(first.stdout, second.stdout, "cached run must match");
}
