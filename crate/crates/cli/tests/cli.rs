use std::path::Path;
use std::process::{Command, Output};

use atom_laser::gaussian::LaserParams;
use atom_laser::jumps::total_variation;
use atom_laser::pr_region::cc_ensemble;
use serde_json::Value;

fn atomlaser(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atomlaser"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn region_csv_and_coherent_boundary() {
    let out = stdout(&atomlaser(&["region", "--n-gamma", "5"]));
    assert!(out.starts_with("gamma,beta_lo,beta_hi\n"));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[4], vec!["1", "0", "0"]);
}

#[test]
fn region_large_chi_leans_negative() {
    let out = stdout(&atomlaser(&["region", "--chi", "1000", "--n-gamma", "50"]));
    for r in csv_rows(&out) {
        let hi: f64 = r[2].parse().unwrap();
        let lo: f64 = r[1].parse().unwrap();
        assert!(lo + hi < 0.0);
    }
}

#[test]
fn region_nu_widens() {
    let a = csv_rows(&stdout(&atomlaser(&["region", "--chi", "16", "--nu", "0"])));
    let b = csv_rows(&stdout(&atomlaser(&["region", "--chi", "16", "--nu", "10"])));
    assert_eq!(a.len(), b.len());
    for (r0, r1) in a.iter().zip(&b) {
        let (lo0, hi0): (f64, f64) = (r0[1].parse().unwrap(), r0[2].parse().unwrap());
        let (lo1, hi1): (f64, f64) = (r1[1].parse().unwrap(), r1[2].parse().unwrap());
        assert!(lo1 <= lo0 && hi1 >= hi0);
    }
}

#[test]
fn region_json_echoes_config() {
    let out = stdout(&atomlaser(&["region", "--n-gamma", "2", "--format", "json"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["command"], "region");
    assert_eq!(v["config"]["n_gamma"], 2);
    assert_eq!(v["data"].as_array().unwrap().len(), 2);
}

#[test]
fn cc_sweep_matches_library() {
    let out = stdout(&atomlaser(&["cc-sweep", "--from", "1", "--to", "100", "--n", "3"]));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 3);
    for r in rows {
        let x: f64 = r[0].parse().unwrap();
        let t = cc_ensemble(&LaserParams::linearized(x, 0.0).unwrap());
        assert_eq!(r[1].parse::<f64>().unwrap(), t.alpha);
        assert_eq!(r[2].parse::<f64>().unwrap(), t.beta);
        assert_eq!(r[3].parse::<f64>().unwrap(), t.gamma);
    }
}

#[test]
fn qsd_sweep_nu_axis_has_zero_beta() {
    let out = stdout(&atomlaser(&["qsd-sweep", "--axis", "nu", "--n", "5"]));
    for r in csv_rows(&out) {
        assert_eq!(r[2], "0");
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "chi = 4.0\nn_gamma = 3\nseed = 5\n");
    let out = stdout(&atomlaser(&["region", "--config", &cfg, "--format", "json"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["config"]["chi"], 4.0);
    assert_eq!(v["config"]["seed"], 5);
    let out = stdout(&atomlaser(&[
        "region", "--config", &cfg, "--chi", "1", "--seed", "9", "--format", "json",
    ]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["config"]["chi"], 1.0);
    assert_eq!(v["config"]["n_gamma"], 3);
    assert_eq!(v["config"]["seed"], 9);
}

#[test]
fn simulate_is_byte_identical_for_same_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sim.toml",
        "chi = 4.0\nunraveling = \"realize\"\nbeta = -1.0\ngamma = 0.5\nn_steps = 2000\nsave_every = 50\n",
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        stdout(&atomlaser(&["simulate", "--config", &cfg, "--seed", "11", "-o", p.to_str().unwrap()]));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text.starts_with("t,m10,m01,m20,m11,m02\n"));
    assert_eq!(text.lines().count(), 1 + 41);
    let other = stdout(&atomlaser(&["simulate", "--config", &cfg, "--seed", "12"]));
    assert_ne!(other, text);
}

#[test]
fn simulate_batch_output_is_ordered_and_deterministic() {
    let args = ["simulate", "--n-traj", "8", "--n-steps", "500", "--seed", "3"];
    let a = stdout(&atomlaser(&args));
    let b = stdout(&atomlaser(&args));
    assert_eq!(a, b);
    let rows = csv_rows(&a);
    assert_eq!(rows.len(), 8);
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r[0], k.to_string());
    }
}

#[test]
fn jumps_histogram_close_to_poisson() {
    let out = stdout(&atomlaser(&["jumps", "--mu", "20", "--t-max", "10000", "--seed", "4"]));
    assert!(out.starts_with("n,prob_empirical,prob_poisson\n"));
    let rows = csv_rows(&out);
    let p: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let q: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(total_variation(&p, &q) < 0.02);
}

#[test]
fn experiment_proposed_column() {
    let out = stdout(&atomlaser(&["experiment"]));
    let rows = csv_rows(&out);
    let get = |name: &str| -> f64 {
        rows.iter().find(|r| r[0] == name).unwrap()[1].parse().unwrap()
    };
    assert!((get("omega_min/kappa") / 22.0 - 1.0).abs() < 0.1);
    assert!((get("IT") / 2.9e5 - 1.0).abs() < 0.1);
    let text = stdout(&atomlaser(&["experiment", "--format", "text"]));
    assert!(text.contains("Proposed"));
}

#[test]
fn experiment_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "exp.toml",
        r#"
margin = 10.0
[[experiment]]
label = "A"
species = "rubidium87"
trap_hz = [20.0, 80.0, 80.0]
kappa = 5.0
mu = 1e5

[[experiment]]
label = "B"
mass_kg = 3.8175e-26
scattering_length_m = 2.75e-9
trap_hz = [25.0, 25.0, 25.0]
kappa = 7.0
mu = 1e6
"#,
    );
    let out = stdout(&atomlaser(&["experiment", "--config", &cfg, "--format", "json"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    let data = v["data"].as_array().unwrap();
    assert_eq!(data.len(), 2);
    assert_eq!(data[0]["report"]["label"], "A");
    let default = stdout(&atomlaser(&["experiment", "--format", "json"]));
    let d: Value = serde_json::from_str(&default).unwrap();
    assert_eq!(data[1]["report"]["chi"], d["data"][0]["report"]["chi"]);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["region", "--gamma-max", "2"],
        vec!["region", "--bogus"],
        vec!["region", "--format", "text"],
        vec!["simulate", "--unraveling", "realize", "--beta", "0.5", "--gamma", "1"],
        vec!["cc-sweep", "--from", "0"],
    ] {
        let o = atomlaser(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "chi = 1.0\nunknown_key = 3\n");
    assert_eq!(atomlaser(&["region", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_3_with_json() {
    let o = atomlaser(&["simulate", "--chi", "5", "--dt", "10", "--n-steps", "1000"]);
    assert_eq!(o.status.code(), Some(3));
    let v: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(v["kind"], "unstable");
}
