use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn tripod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tripod")).args(args).output().expect("binary runs")
}

fn run(cmd: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = data(config);
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    tripod(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Data rows of a CSV with the `#` provenance lines removed.
fn rows(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let body = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, body)
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

/// Compares against the committed file; `UPDATE_GOLDEN=1` rewrites it.
fn check_golden(actual: &str, name: &str) {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(actual == expected, "{name} differs from the golden file; rerun with UPDATE_GOLDEN=1 after review");
}

#[test]
fn spectra_matches_golden() {
    let dir = TempDir::new().unwrap();
    let o = run("spectra", "spectra_small.json", dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    check_golden(&read(dir.path(), "spectra.csv"), "spectra_small.csv");
}

#[test]
fn magnetometer_sweep_matches_golden() {
    let dir = TempDir::new().unwrap();
    let o = run("magnetometer", "magnetometer_small.json", dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    check_golden(&read(dir.path(), "magnetometer_sweep.csv"), "magnetometer_sweep_small.csv");
    let b_min = json(dir.path(), "magnetometer.json")["data"]["b_min"].as_f64().unwrap();
    assert!((4e-13..1e-12).contains(&b_min), "{b_min}");
}

#[test]
fn spectra_transparency_points() {
    let dir = TempDir::new().unwrap();
    assert!(run("spectra", "spectra_small.json", dir.path(), &[]).status.success());
    let (header, body) = rows(&read(dir.path(), "spectra.csv"));
    assert_eq!(header, ["delta_over_gamma", "abs1_a0", "disp1_a0", "abs2_a0", "disp2_a0"]);
    assert_eq!(body.len(), 41);
    let val = |r: &[String], i: usize| r[i].parse::<f64>().unwrap();
    // grid step 0.025Γ puts δ = ±0.1Γ on rows 16 and 24
    assert!((val(&body[24], 0) - 0.1).abs() < 1e-12);
    assert!(val(&body[24], 1).abs() < 1e-9);
    assert!(val(&body[16], 3).abs() < 1e-9);
    assert!(val(&body[20], 1) > 0.01);
}

#[test]
fn zero_field_components_are_byte_equal() {
    let dir = TempDir::new().unwrap();
    assert!(run("spectra", "spectra_zero_field.json", dir.path(), &[]).status.success());
    let (_, body) = rows(&read(dir.path(), "spectra.csv"));
    assert_eq!(body.len(), 101);
    for r in &body {
        assert_eq!(r[1], r[3]);
        assert_eq!(r[2], r[4]);
    }
}

#[test]
fn outputs_carry_provenance() {
    let dir = TempDir::new().unwrap();
    assert!(run("spectra", "spectra_small.json", dir.path(), &["--seed", "42"]).status.success());
    let csv = read(dir.path(), "spectra.csv");
    assert!(csv.lines().any(|l| l == "# seed: 42"));
    assert!(csv.lines().any(|l| l == "# command: spectra"));
    let resolved = csv.lines().find_map(|l| l.strip_prefix("# resolved: ")).unwrap();
    let v: serde_json::Value = serde_json::from_str(resolved).unwrap();
    assert_eq!(v["medium"]["gamma"].as_f64(), Some(1e7));
    assert!(!csv.contains('\r'));
    let params = json(dir.path(), "params.json");
    assert_eq!(params["provenance"]["seed"], 42);
    assert!(params["data"]["resolved"]["derived"]["v_g"].as_f64().unwrap() > 0.0);
}

#[test]
fn json_format_writes_tables_as_json() {
    let dir = TempDir::new().unwrap();
    assert!(run("spectra", "spectra_small.json", dir.path(), &["--format", "json"]).status.success());
    assert!(!dir.path().join("spectra.csv").exists());
    let v = json(dir.path(), "spectra.json");
    assert_eq!(v["columns"][0], "delta_over_gamma");
    assert_eq!(v["rows"].as_array().unwrap().len(), 41);
    assert_eq!(v["provenance"]["command"], "spectra");
}

#[test]
fn identical_runs_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert!(run("quantum", "quantum_small.json", a.path(), &["--threads", "1"]).status.success());
    assert!(run("quantum", "quantum_small.json", b.path(), &["--threads", "3"]).status.success());
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 5);
    for name in names {
        let (x, y) = (fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
        assert!(x == y, "{name:?} differs between runs");
    }
}

#[test]
fn vacuum_delay_is_light_transit() {
    let dir = TempDir::new().unwrap();
    let o = run("mb", "mb_vacuum_tiny.json", dir.path(), &["--strict"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = &json(dir.path(), "mb_report.json")["data"];
    let transit = 0.005 / 2.997_924_58e10;
    assert!((r["delay_s"]["measured"].as_f64().unwrap() - transit).abs() < 1e-9 * transit);
    assert!(r["l2_envelope"]["measured"].as_f64().unwrap() < 1e-12);
    assert_eq!(r["all_green"], true);
    let (header, body) = rows(&read(dir.path(), "mb_boundary.csv"));
    assert_eq!(body.len(), 400);
    let (i, o) = (
        header.iter().position(|h| h == "e1_in_re_rad_per_s").unwrap(),
        header.iter().position(|h| h == "e1_out_re_rad_per_s").unwrap(),
    );
    assert!(body.iter().all(|r| r[i] == r[o]));
}

#[test]
fn weak_adiabatic_report_is_green() {
    let dir = TempDir::new().unwrap();
    let o = run("mb", "mb_weak_small.json", dir.path(), &["--strict"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = &json(dir.path(), "mb_report.json")["data"];
    assert_eq!(r["all_green"], true, "{r}");
}

#[test]
fn strong_probe_is_flagged_but_completes() {
    let dir = TempDir::new().unwrap();
    let o = run("mb", "mb_strong_tiny.json", dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("weak_probe"));
    assert!(dir.path().join("mb_boundary.csv").exists());
    let r = &json(dir.path(), "mb_report.json")["data"];
    let weak = r["regime"]["checks"].as_array().unwrap().iter().find(|c| c["name"] == "weak_probe").unwrap();
    assert_eq!(weak["pass"], false);

    let strict = TempDir::new().unwrap();
    let o = run("mb", "mb_strong_tiny.json", strict.path(), &["--strict"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(strict.path().join("mb_report.json").exists());
}

#[test]
fn quantum_outputs() {
    let dir = TempDir::new().unwrap();
    let o = run("quantum", "quantum_small.json", dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = &json(dir.path(), "quantum_summary.json")["data"];
    assert!(s["revival_error"].as_f64().unwrap() < 1e-10);
    let (d, e) = (s["dephasing_at_pi"].as_f64().unwrap(), s["dephasing_expected"].as_f64().unwrap());
    assert!((d - e).abs() < 1e-10);
    // M = 101 is coarse enough for the two kernels to part
    assert!(s["kernel_max_rel_diff"].as_f64().unwrap() > 1e-3);
    let (header, _) = rows(&read(dir.path(), "quantum_kernel.csv"));
    assert_eq!(header, ["x_over_length", "sinc_kernel", "dirichlet_kernel"]);

    let (header, body) = rows(&read(dir.path(), "quantum_revival.csv"));
    let abs = header.iter().position(|h| h == "abs_ratio").unwrap();
    assert_eq!(body.len(), 9);
    assert!((body[8][abs].parse::<f64>().unwrap() - 1.0).abs() < 1e-10);

    let (header, body) = rows(&read(dir.path(), "quantum_fidelity.csv"));
    let (sep, fid) = (
        header.iter().position(|h| h == "separation_per_dq").unwrap(),
        header.iter().position(|h| h == "input_fidelity").unwrap(),
    );
    assert_eq!(body.len(), 4);
    let far: Vec<f64> =
        body.iter().filter(|r| r[sep].parse::<f64>().unwrap() == 20.0).map(|r| r[fid].parse().unwrap()).collect();
    let near: Vec<f64> =
        body.iter().filter(|r| r[sep].parse::<f64>().unwrap() == 0.0).map(|r| r[fid].parse().unwrap()).collect();
    assert!(far.iter().zip(&near).all(|(f, n)| f > n));

    let state = json(dir.path(), "quantum_state.json");
    assert_eq!(state["data"]["m"], 101);
    let xi = state["data"]["data"].as_array().unwrap();
    assert_eq!(xi.len(), 2 * 101 * 101);
    let norm: f64 = xi.iter().map(|v| v.as_f64().unwrap().powi(2)).sum();
    assert!((norm - 1.0).abs() < 1e-10);
}

fn with_config(body: &str) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("run.json");
    fs::write(&path, body).unwrap();
    (dir, path)
}

fn edited(name: &str, edit: impl FnOnce(&mut serde_json::Value)) -> String {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(data(name)).unwrap()).unwrap();
    edit(&mut v);
    v.to_string()
}

fn run_path(cmd: &str, cfg: &Path, out: &Path) -> Output {
    tripod(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

#[test]
fn config_errors_exit_2_with_field_path() {
    let cases: Vec<(&str, String, &str)> = vec![
        ("spectra", edited("spectra_small.json", |v| v["medium"]["gamma_hz"] = 1.0.into()), "gamma_hz"),
        ("spectra", edited("spectra_small.json", |v| v["medium"]["length_cm"] = (-1.0).into()), "medium.length_cm"),
        ("spectra", edited("spectra_small.json", |v| v["drive"]["geometry"] = "sideways".into()), "drive.geometry"),
        ("quantum", edited("quantum_small.json", |v| v["quantum"]["mode_count"] = 100.into()), "quantum.mode_count"),
        ("mb", edited("spectra_small.json", |_| {}), "mb"),
        (
            "magnetometer",
            edited("magnetometer_small.json", |v| v["magnetometer"]["sweep"]["axis"] = "colour".into()),
            "colour",
        ),
    ];
    for (cmd, body, needle) in cases {
        let (dir, path) = with_config(&body);
        let o = run_path(cmd, &path, &dir.path().join("out"));
        assert_eq!(o.status.code(), Some(2), "{cmd} {needle}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{needle} missing from: {}", stderr(&o));
    }
    let o = tripod(&["spectra", "--config", "/nonexistent/run.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_3() {
    // dt·Γ = 1 violates the integrator's step limit
    let body = edited("mb_vacuum_tiny.json", |v| v["mb"]["dt_s"] = 1e-7.into());
    let (dir, path) = with_config(&body);
    let o = run_path("mb", &path, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("dt"));

    let body = edited("mb_vacuum_tiny.json", |v| v["mb"]["max_samples"] = 100.into());
    let (dir, path) = with_config(&body);
    let o = run_path("mb", &path, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("cap"));
}

#[test]
fn magnetometer_regime_gate() {
    // a stronger field leaves the small-absorption regime
    let body = edited("magnetometer_small.json", |v| v["drive"]["b_field_gauss"] = 0.1.into());
    let (dir, path) = with_config(&body);
    let cfg = path.to_str().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    assert_eq!(tripod(&["magnetometer", "--config", cfg, "--out", out]).status.code(), Some(0));
    let o = tripod(&["magnetometer", "--config", cfg, "--out", out, "--strict"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("small_absorption_detuning"));
}
