use std::path::{Path, PathBuf};

use approx::assert_relative_eq;
use tripod_core::bloch::{analysis, propagate};
use tripod_core::config::RunFile;
use tripod_core::magnetometer::{evaluate, sensitivity_sweep};
use tripod_core::response::{detuning_grid, spectra};
use tripod_core::units::C_CM_PER_S;
use tripod_core::xpm::{cphase_metrics, evolve_pair, TimeConvention};
use tripod_core::{ModeGrid, SinglePhotonState, SpaceTimeField, TwoPhotonAmplitudes, XpmMedium};

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn every_shipped_config_resolves() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let file = RunFile::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let r = file.resolve().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        if file.mb.is_some() {
            file.mb_setup(&r).unwrap();
        }
        if file.magnetometer.is_some() {
            file.magnetometer_config(&r).unwrap();
        }
        count += 1;
    }
    assert!(count >= 5);
}

#[test]
fn config_to_spectra() {
    let file = RunFile::load(shipped("spectra.json")).unwrap();
    let r = file.resolve().unwrap();
    let s = file.spectra.as_ref().unwrap();
    let g = r.medium.gamma;
    let grid = detuning_grid(s.delta_min_per_gamma * g, s.delta_max_per_gamma * g, s.points);
    let out = spectra(&r.medium, &r.drive, &grid).unwrap();
    assert_eq!(out.len(), 2001);
    // δ = ±0.1Γ sit on grid points 1100 and 900
    assert_relative_eq!(out.detunings[1100] / g, 0.1, max_relative = 1e-12);
    assert!(out.chi1[1100].im.abs() < 1e-9);
    assert!(out.chi2[900].im.abs() < 1e-9);
}

#[test]
fn config_to_magnetometer() {
    let file = RunFile::load(shipped("magnetometer.json")).unwrap();
    let r = file.resolve().unwrap();
    let cfg = file.magnetometer_config(&r).unwrap();
    let result = evaluate(&cfg).unwrap();
    assert!((4e-13..1e-12).contains(&result.b_min));
    let sweep = file.magnetometer.as_ref().unwrap().sweep.as_ref().unwrap();
    let values = sweep.values().unwrap();
    let t = sensitivity_sweep(&cfg, sweep.axis().unwrap(), &values).unwrap();
    assert_eq!(t.rows.len(), 21);
    assert_relative_eq!(t.column("axis_value").unwrap()[0], 1e6, max_relative = 1e-12);
}

fn small_mb(vacuum: bool) -> String {
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(shipped("mb_weak_adiabatic.json")).unwrap()).unwrap();
    let mb = &mut v["mb"];
    mb["probe"]["duration_s"] = 2e-5.into();
    mb["t0_s"] = (-3.65e-5).into();
    mb["nz"] = 20.into();
    mb["nt"] = 8000.into();
    mb["dt_s"] = (7.4e-5 / 8000.0).into();
    mb["vacuum"] = vacuum.into();
    v.to_string()
}

#[test]
fn small_mb_run_follows_linear_response() {
    let file = RunFile::from_json_str(&small_mb(false)).unwrap();
    let r = file.resolve().unwrap();
    let setup = file.mb_setup(&r).unwrap();
    let f = propagate(setup.pulses, &setup.medium, &setup.grid).unwrap();
    let (i1, i2) = f.input();
    let (o1, o2) = f.output();
    let l = setup.medium.length;
    let lin1 = analysis::linear_output(i1, f.dt, &setup.medium, 1, l).unwrap();
    let lin2 = analysis::linear_output(i2, f.dt, &setup.medium, 2, l).unwrap();
    assert!(analysis::relative_l2(o1, &lin1) < 2e-3);
    assert!(analysis::relative_l2(o2, &lin2) < 2e-3);
    let delay = analysis::peak_time(o1, f.t0, f.dt) - analysis::peak_time(i1, f.t0, f.dt);
    assert_relative_eq!(delay, l / r.derived.v_g, max_relative = 0.05);
}

#[test]
fn vacuum_run_and_binary_round_trip() {
    let file = RunFile::from_json_str(&small_mb(true)).unwrap();
    let r = file.resolve().unwrap();
    let setup = file.mb_setup(&r).unwrap();
    let f = propagate(setup.pulses, &setup.medium, &setup.grid).unwrap();
    assert_eq!(f.input(), f.output());
    assert_relative_eq!(
        f.lab_time(f.nz - 1, 0) - f.lab_time(0, 0),
        setup.medium.length / C_CM_PER_S,
        max_relative = 1e-12
    );

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.bin");
    f.write_binary(std::fs::File::create(&path).unwrap()).unwrap();
    let back = SpaceTimeField::read_binary(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!((back.nz, back.nt, back.dz, back.dt, back.t0), (f.nz, f.nt, f.dz, f.dt, f.t0));
    // samples are stored as complex64 (two f32)
    assert!(analysis::relative_l2(&back.e1, &f.e1) < 1e-7);
    assert!(analysis::relative_l2(&back.e2, &f.e2) < 1e-7);
    let mut again = Vec::new();
    back.write_binary(&mut again).unwrap();
    assert_eq!(again, std::fs::read(&path).unwrap());
}

#[test]
fn quantum_pipeline_from_config() {
    let file = RunFile::load(shipped("quantum_cphase.json")).unwrap();
    let r = file.resolve().unwrap();
    let q = file.quantum.as_ref().unwrap();
    let grid = ModeGrid::new(q.mode_count, r.medium.length).unwrap();
    let medium = XpmMedium::from_params(&r.derived, &r.drive);
    let theta = q.theta_rad.unwrap();
    let dq = grid.dq();
    let a = SinglePhotonState::gaussian(&grid, 0.3, q.sigma_q_per_dq * dq).unwrap();
    let b = SinglePhotonState::gaussian(&grid, 0.3 + 40.0 / dq, q.sigma_q_per_dq * dq).unwrap();
    let far = cphase_metrics(&a, &b, &grid, theta, &medium);
    assert!(far.input_fidelity > 0.99);
    let pair = TwoPhotonAmplitudes::product(&a, &a);
    let out = evolve_pair(&pair, &grid, theta, 3.0 * grid.length / medium.v_g, medium.v_g, TimeConvention::Exact);
    assert_relative_eq!(out.norm_sqr(), 1.0, max_relative = 1e-12);
}
