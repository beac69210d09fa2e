mod common;

use std::path::{Path, PathBuf};

use common::*;
use hobm_lwr::cli::{self, EXIT_CONFIG, EXIT_DIMENSION, EXIT_INFEASIBLE, EXIT_OK};
use hobm_lwr::{csv_out, doe, presets};
use tempfile::TempDir;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(std::iter::once("hobm").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &TempDir, body: &str) -> PathBuf {
    let p = dir.path().join("project.toml");
    std::fs::write(&p, body).unwrap();
    p
}

fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = table(path);
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn summary_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|rest| rest.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("no `{key}` in {text}"))
}

#[test]
fn fk_prints_the_oracle_pose() {
    let q_deg = [10.0, -30.0, 45.0, 120.0, -60.0, 15.0];
    let arg = q_deg.map(|v: f64| v.to_string()).join(",");
    let (code, out, _) = call(&["fk", "--q", &arg]);
    assert_eq!(code, EXIT_OK);
    let q: Vec<f64> = q_deg.iter().map(|v| v.to_radians()).collect();
    let oracle = translation(fk_frames(&presets::lwr(), &q).last().unwrap());
    let pos: Vec<f64> = out.lines().next().unwrap().split_whitespace().skip(1).map(|s| s.parse().unwrap()).collect();
    for k in 0..3 {
        assert!((pos[k] - oracle[k]).abs() < 1e-8);
    }
}

#[test]
fn fk_writes_frames() {
    let dir = TempDir::new().unwrap();
    let frames = dir.path().join("frames.csv");
    let (code, ..) = call(&["fk", "--preset", "hobm", "--q", "0,90,0.4", "--frames", frames.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(table(&frames).1.len(), 3);
}

#[test]
fn fk_input_errors() {
    assert_eq!(call(&["fk", "--q", "1,2,abc,4,5,6"]).0, EXIT_DIMENSION);
    assert_eq!(call(&["fk", "--q", "1,2,3"]).0, EXIT_DIMENSION);
    assert_eq!(call(&["fk", "--preset", "puma", "--q", "0"]).0, EXIT_CONFIG);
    assert_eq!(call(&["fk"]).0, EXIT_CONFIG);
}

#[test]
fn torques_scenario() {
    let dir = TempDir::new().unwrap();
    let coupled = dir.path().join("coupled.csv");
    let (code, out, _) = call(&["torques", "--dt", "0.005", "--out", coupled.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(summary_value(&out, "max_peak_ratio") > 1.0);
    assert_eq!(table(&coupled).1.len(), 401);

    let alone = dir.path().join("alone.csv");
    assert_eq!(call(&["torques", "--dt", "0.005", "--no-hobm", "--out", alone.to_str().unwrap()]).0, EXIT_OK);
    for j in 1..=6 {
        assert_eq!(column(&alone, &format!("tau_lm_{j}_Nm")), column(&alone, &format!("tau_total_{j}_Nm")));
        assert_eq!(column(&alone, &format!("tau_lm_{j}_Nm")), column(&coupled, &format!("tau_lm_{j}_Nm")));
    }
}

#[test]
fn torques_errors() {
    assert_eq!(call(&["torques", "--dt", "0"]).0, EXIT_CONFIG);
    assert_eq!(call(&["torques", "--dt", "-1"]).0, EXIT_CONFIG);
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[coupling]\nbase_offset_m = [2.0, 1.0, 0.0]\n");
    let (code, _, err) = call(&["--config", cfg.to_str().unwrap(), "torques", "--dt", "0.01"]);
    assert_eq!(code, EXIT_INFEASIBLE);
    assert!(err.contains("hobm"), "{err}");
    let bad = write_config(&dir, "[trajectory]\nramp_time_s = 1.5\n");
    assert_eq!(call(&["--config", bad.to_str().unwrap(), "torques"]).0, EXIT_CONFIG);
    let unknown = write_config(&dir, "[coupling]\npayload = 3\n");
    assert_eq!(call(&["--config", unknown.to_str().unwrap(), "torques"]).0, EXIT_CONFIG);
    assert_eq!(call(&["--config", "/nonexistent/cfg.toml", "torques"]).0, EXIT_CONFIG);
}

#[test]
fn ringdown_frictionless_energy_is_flat() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("r.csv");
    let (code, ..) = call(&["ringdown", "--viscous", "0", "--coulomb", "0", "--out", csv.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let e = column(&csv, "energy_J");
    assert!(e[0] > 0.0);
    assert!(e.iter().all(|v| (v - e[0]).abs() <= 1e-3 * e[0]));
}

#[test]
fn ringdown_more_damping_settles_no_later() {
    let (c1, _, err1) = call(&["ringdown", "--viscous", "10"]);
    let (c2, _, err2) = call(&["ringdown", "--viscous", "20"]);
    assert_eq!((c1, c2), (EXIT_OK, EXIT_OK));
    assert!(summary_value(&err2, "settling_time_s") <= summary_value(&err1, "settling_time_s"));
    assert_eq!(call(&["ringdown", "--viscous", "1,2,3"]).0, EXIT_CONFIG);
    assert_eq!(call(&["ringdown", "--coulomb", "-1"]).0, EXIT_CONFIG);
}

#[test]
fn ringdown_from_rest_has_no_force() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[ringdown]\ninitial = \"state\"\nduration_s = 1.0\n");
    let csv = dir.path().join("r.csv");
    let (code, out, _) = call(&["--config", cfg.to_str().unwrap(), "ringdown", "--out", csv.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    for c in ["fx_N", "fy_N", "fz_N"] {
        assert!(column(&csv, c).iter().all(|v| *v == 0.0));
    }
    assert_eq!(summary_value(&out, "peak_force_N"), 0.0);
}

const SHORT_DOE: &str = "[doe]\nduration_s = 2.0\nn_center = 2\ngrid_points = 5\n";

#[test]
fn doe_run_fit_limit() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, SHORT_DOE);
    let cfg = cfg.to_str().unwrap();
    let design = dir.path().join("design.csv");
    let (code, out, _) = call(&["--config", cfg, "doe", "run", "--out", design.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(summary_value(&out, "points"), 16.0);
    assert_eq!(table(&design).1.len(), 16);
    assert!(column(&design, doe::RESPONSE_NAME).iter().all(|v| v.is_finite() && *v > 0.0));

    let model = dir.path().join("model.csv");
    let (code, out, _) = call(&["--config", cfg, "doe", "fit", "--design", design.to_str().unwrap(), "--out", model.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(summary_value(&out, "r_squared") > 0.9);

    let limit = |force: &str, name: &str| {
        let p = dir.path().join(name);
        let (code, out, _) = call(&["--config", cfg, "doe", "limit", "--model", model.to_str().unwrap(), "--force", force, "--out", p.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(summary_value(&out, "cells"), 25.0);
        p
    };
    let loose = table(&limit("120", "l120.csv")).1;
    let tight = table(&limit("15", "l15.csv")).1;
    assert_eq!(loose.len(), 25);
    for (a, b) in loose.iter().zip(&tight) {
        let value = |r: &Vec<String>| if r[2].is_empty() { f64::NEG_INFINITY } else { r[2].parse::<f64>().unwrap() };
        assert!(!r_is_nan(&a[2]) && !r_is_nan(&b[2]));
        assert!(value(b) <= value(a));
    }
}

fn r_is_nan(s: &str) -> bool {
    s.eq_ignore_ascii_case("nan")
}

#[test]
fn doe_run_face_centered_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, SHORT_DOE);
    let (code, _, err) = call(&["--config", cfg.to_str().unwrap(), "doe", "run", "--face-centered", "--n-center", "1"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(summary_value(&err, "points"), 15.0);
    assert_eq!(summary_value(&err, "axial_distance"), 1.0);
}

#[test]
fn doe_fit_recovers_a_synthetic_surface() {
    let dir = TempDir::new().unwrap();
    let factors = vec![
        doe::FactorSpec::new("a", 0.0, 2.0).unwrap(),
        doe::FactorSpec::new("b", 10.0, 20.0).unwrap(),
        doe::FactorSpec::new("c", -1.0, 1.0).unwrap(),
    ];
    let d = doe::ccd_generate(&factors, doe::AxialKind::Rotatable, 3).unwrap();
    let y: Vec<f64> = d.points.iter().map(|x| 1.0 + x[0] - 2.0 * x[1] * x[2] + 0.5 * x[2] * x[2]).collect();
    let path = dir.path().join("synthetic.csv");
    csv_out::write_design(std::fs::File::create(&path).unwrap(), &d, Some(&y), "y").unwrap();
    let (code, _, err) = call(&["doe", "fit", "--design", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!((summary_value(&err, "r_squared") - 1.0).abs() < 1e-10);

    std::fs::write(&path, "run,kind,coded_a,a,y\n0,center,0,1,3\n").unwrap();
    assert_ne!(call(&["doe", "fit", "--design", path.to_str().unwrap()]).0, EXIT_OK);
    let (code, ..) = call(&["doe", "limit", "--model", "/nonexistent/model.csv"]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn output_dir_collects_default_names_and_runs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(&dir, &format!("[output]\ndir = {:?}\n[trajectory]\ndt_s = 0.01\n", out_dir.to_str().unwrap()));
    let cfg = cfg.to_str().unwrap();
    assert_eq!(call(&["--config", cfg, "torques"]).0, EXIT_OK);
    let first = std::fs::read(out_dir.join("torques.csv")).unwrap();
    assert_eq!(call(&["--config", cfg, "torques"]).0, EXIT_OK);
    assert_eq!(first, std::fs::read(out_dir.join("torques.csv")).unwrap());

    assert_eq!(call(&["--config", cfg, "ringdown"]).0, EXIT_OK);
    let a = std::fs::read(out_dir.join("ringdown.csv")).unwrap();
    assert_eq!(call(&["--config", cfg, "ringdown"]).0, EXIT_OK);
    assert_eq!(a, std::fs::read(out_dir.join("ringdown.csv")).unwrap());
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            hobm_lwr::config::ProjectConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n > 0);
}
