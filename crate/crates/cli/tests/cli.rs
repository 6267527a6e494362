use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stripe-quench"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stripe-quench-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn solve_json(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("solve.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn solve_hamiltonian_case() {
    let out = scratch("ham");
    let o = run(&[
        "solve",
        "--cx",
        "0",
        "--ky",
        "1",
        "--kappa",
        "0.3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v = solve_json(&out);
    assert!((v["k_x"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    for f in ["solve.json", "profile.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "solve");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
    assert_eq!(csv_rows(&out.join("profile.csv"))[0], ["zeta", "psi"]);
}

#[test]
fn excluded_corner_is_usage_error() {
    let o = run(&[
        "solve",
        "--cx",
        "0",
        "--ky",
        "0",
        "--out",
        scratch("corner").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["solve", "--cx", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["asymptotics", "--regime", "sideways"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_large_speed_and_reseed() {
    let out = scratch("large");
    let o = run(&[
        "solve",
        "--cx",
        "1000",
        "--ky",
        "1",
        "--kappa",
        "0.3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let k = solve_json(&out)["k_x"].as_f64().unwrap();
    assert!((k - 0.95394).abs() < 1e-3, "{k}");

    let again = scratch("reseed");
    let seed = out.join("solve.json");
    let o = run(&[
        "solve",
        "--cx",
        "1000",
        "--ky",
        "1",
        "--kappa",
        "0.3",
        "--seed-file",
        seed.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = solve_json(&again);
    assert_eq!(v["k_x"].as_f64().unwrap(), k);
    assert!(v["newton_iters"].as_u64().unwrap() <= 1);
}

#[test]
fn output_is_deterministic() {
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    for d in [&a, &b] {
        let o = run(&[
            "solve",
            "--cx",
            "0.5",
            "--ky",
            "0.7",
            "--kappa",
            "0.4",
            "--out",
            d.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["profile.csv", "solve.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn continue_writes_branch() {
    let out = scratch("branch");
    let o = run(&[
        "continue",
        "--param",
        "cx",
        "--from",
        "0",
        "--to",
        "0.3",
        "--ky",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = csv_rows(&out.join("branch.csv"));
    assert_eq!(
        rows[0],
        ["c_x", "k_x", "residual_inf", "n_modes", "newton_iters"]
    );
    let ks: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((ks[0] - 1.0).abs() < 1e-10);
    assert!(ks.windows(2).all(|w| w[1] < w[0]));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn surface_corners() {
    let out = scratch("surface");
    let o = run(&[
        "surface",
        "--grid",
        "5x5",
        "--kappa",
        "0.3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = csv_rows(&out.join("surface.csv"));
    assert_eq!(
        rows[0],
        ["c_x", "k_y", "cx_compact", "ky_compact", "k_x", "flag"]
    );
    for r in &rows[1..] {
        let (cx, ky, kx): (f64, f64, f64) = (
            r[0].parse().unwrap(),
            r[1].parse().unwrap(),
            r[4].parse().unwrap(),
        );
        if cx == 0.0 && ky == 0.0 {
            assert_eq!(r[5], "excluded");
        } else if cx == 0.0 {
            assert!((kx - 1.0).abs() < 1e-10, "{r:?}");
        } else if cx.is_infinite() && ky.is_finite() {
            assert!((kx - 0.91f64.sqrt()).abs() < 1e-10, "{r:?}");
        } else if ky.is_infinite() {
            assert!((kx - 1.0).abs() < 1e-10, "{r:?}");
        }
        if kx.is_finite() {
            assert!((0.7..=1.3).contains(&kx));
        }
    }
}

#[test]
fn asymptotics_report() {
    let o = run(&[
        "asymptotics",
        "--regime",
        "cx_large",
        "--ky",
        "1",
        "--kappa",
        "0.3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    assert!((v["kx0"].as_f64().unwrap() - 0.91f64.sqrt()).abs() < 1e-12);
    assert!((v["kx2"].as_f64().unwrap() - 0.0087009).abs() < 1e-6);
}

#[test]
fn local_model_table() {
    let out = scratch("local");
    let o = run(&[
        "local",
        "--kx",
        "0.8:1",
        "--samples",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = csv_rows(&out.join("local.csv"));
    assert_eq!(rows[0], ["k_x", "c", "classification"]);
    assert_eq!(rows.len(), 4);
    let c_top: f64 = rows[3][1].parse().unwrap();
    assert!(c_top.abs() < 1e-8);
    assert_eq!(rows[1][2], "hyperbolic-heteroclinic");
}

#[test]
fn heteroclinic_small_grid() {
    let out = scratch("het");
    let o = run(&[
        "heteroclinic",
        "--ktilde",
        "6:10",
        "--half-width",
        "400",
        "--grid-log2",
        "14",
        "--out",
        out.to_str().unwrap(),
    ]);
    // the range does not reach the transition, so detection fails with exit 2
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = csv_rows(&out.join("glide.csv"));
    assert_eq!(
        rows[0],
        ["k_tilde", "k_x", "max_slope", "tail_left", "tail_right"]
    );
    let ks: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(ks.windows(2).all(|w| w[1] > w[0]), "{ks:?}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("transition.json")).unwrap())
            .unwrap();
    assert!(report["transition"].is_null());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn thread_cap_must_parse() {
    let o = bin()
        .args(["local", "--samples", "2"])
        .env("STRIPE_QUENCH_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_quick_passes() {
    let out = scratch("validate");
    let o = run(&["validate", "--quick", "--out", out.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(!text.contains("FAIL"));
    assert!(out.join("validate.json").exists());
}
