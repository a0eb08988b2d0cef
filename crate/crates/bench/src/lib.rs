//! Fixtures shared by the benchmarks.

use tripod_core::units::{derive, Absorption, DriveZeemanConfig, Geometry, MediumParams};
use tripod_core::{DerivedParams, MbMedium, C64};

pub const GAMMA: f64 = 1e7;

pub fn medium() -> MediumParams {
    MediumParams {
        gamma: GAMMA,
        gamma_c: 0.0,
        density: 1e12,
        length: 0.005,
        area: 0.01,
        omega_p: 3e15,
        omega_d: 3e15,
        omega_31: 3e15,
        omega_34: 3e15,
        g_f: 0.5,
        g_f_prime: 0.0,
    }
}

pub fn drive(p: &MediumParams) -> DriveZeemanConfig {
    DriveZeemanConfig::from_zeeman_shift(p, C64::new(0.5 * GAMMA, 0.0), 0.05 * GAMMA, Geometry::Perpendicular)
        .expect("valid drive")
}

pub fn derived(p: &MediumParams, z: &DriveZeemanConfig) -> DerivedParams {
    derive(p, Absorption::from_a0(1e4), z).expect("valid medium")
}

pub fn mb_medium() -> MbMedium {
    let p = medium();
    let z = drive(&p);
    MbMedium::from_params(&p, &derived(&p, &z), &z)
}
