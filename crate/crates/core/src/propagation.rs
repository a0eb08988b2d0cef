//! Analytic weak-field, adiabatic propagation of the two circular probe
//! components: absorption, phase modulation and cross-coupling
//! coefficients, the cw solution and the resulting polarization rotation.
//!
//! Amplitudes are in Rabi units gE (rad/s); intensities enter as |gE|².

use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::output::Table;
use crate::units::{DerivedParams, DriveZeemanConfig, MediumParams};

/// Which two-photon absorption term to use in κ₁,₂.
///
/// `Exact` is the second-order expansion of the steady-state response,
/// κ = s[γ_c + Γ(Δ±Δ_d)²/(2|Ω_d|²)]. `AsPrinted` keeps the widely quoted
/// form without the factor ½ on the Γ term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaConvention {
    #[default]
    Exact,
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagationCoeffs {
    /// Amplitude absorption coefficients (cm⁻¹).
    pub kappa1: f64,
    pub kappa2: f64,
    /// Phase modulation coefficients (s/cm).
    pub s1: f64,
    pub s2: f64,
    /// Cross-coupling per unit dimensionless intensity, Ng⁴2Δ/[2c|Ω|⁴(2Δ ∓ iγ_c)].
    pub eta1: C64,
    pub eta2: C64,
    /// Group velocities (1/c + s₁,₂)⁻¹ (cm/s).
    pub v_g1: f64,
    pub v_g2: f64,
    /// Common group velocity at Δ = Δ_d = 0 (cm/s).
    pub v_g: f64,
    /// Zero-field delay per length Ng²/(2c|Ω|²) (s/cm).
    pub s0: f64,
    pub g_coupling: f64,
    pub delta: f64,
    pub delta_d: f64,
    pub gamma: f64,
    pub gamma_c: f64,
    pub omega_sq: f64,
    pub convention: KappaConvention,
}

impl PropagationCoeffs {
    /// η per unit |gE|² rather than per unit dimensionless intensity.
    pub fn eta_rabi(&self) -> (C64, C64) {
        let g2 = self.g_coupling * self.g_coupling;
        (self.eta1 / g2, self.eta2 / g2)
    }

    /// Mean absorption used when the two components are treated alike.
    pub fn kappa_mean(&self) -> f64 {
        0.5 * (self.kappa1 + self.kappa2)
    }
}

/// Largest |δ|/Γ treated as a resonant probe carrier.
const CARRIER_TOL: f64 = 1e-9;

pub fn coefficients(
    p: &MediumParams,
    d: &DerivedParams,
    z: &DriveZeemanConfig,
    convention: KappaConvention,
) -> Result<PropagationCoeffs> {
    let omega_sq = z.omega_sq();
    if !(omega_sq > 0.0) {
        return Err(invalid("omega_rabi", "EIT is undefined without a drive field"));
    }
    if p.probe_detuning().abs() > CARRIER_TOL * p.gamma {
        return Err(invalid("omega_p", "the analytic coefficients assume ω_p = ω₃₁⁰"));
    }
    let (delta, dd) = (z.delta, z.delta_d);
    let s0 = d.a0 * p.gamma / (4.0 * omega_sq);
    let gamma_term = match convention {
        KappaConvention::Exact => p.gamma / (2.0 * omega_sq),
        KappaConvention::AsPrinted => p.gamma / omega_sq,
    };
    let kappa1 = s0 * (p.gamma_c + gamma_term * (delta + dd).powi(2));
    let kappa2 = s0 * (p.gamma_c + gamma_term * (delta - dd).powi(2));
    let s1 = s0 * (1.0 + delta * (delta + dd) / omega_sq);
    let s2 = s0 * (1.0 + delta * (delta - dd) / omega_sq);
    let g2 = d.g_coupling * d.g_coupling;
    let (eta1, eta2) = if delta == 0.0 {
        (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    } else {
        let base = s0 * g2 / omega_sq * 2.0 * delta;
        (base / C64::new(2.0 * delta, -p.gamma_c), base / C64::new(2.0 * delta, p.gamma_c))
    };
    let c = crate::units::C_CM_PER_S;
    Ok(PropagationCoeffs {
        kappa1,
        kappa2,
        s1,
        s2,
        eta1,
        eta2,
        v_g1: 1.0 / (1.0 / c + s1),
        v_g2: 1.0 / (1.0 / c + s2),
        v_g: d.v_g,
        s0,
        g_coupling: d.g_coupling,
        delta,
        delta_d: dd,
        gamma: p.gamma,
        gamma_c: p.gamma_c,
        omega_sq,
        convention,
    })
}

/// (1 − e^{−2κz})/(2κ), which tends to z as κ → 0.
pub fn saturation_length(kappa: f64, z: f64) -> f64 {
    let x = 2.0 * kappa * z;
    if x.abs() < 1e-300 {
        z
    } else {
        -(-x).exp_m1() / (2.0 * kappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CwResult {
    pub e1: C64,
    pub e2: C64,
    pub phi1: f64,
    pub phi2: f64,
    /// Φ = (φ₂ − φ₁)/2.
    pub rotation: f64,
    /// √(1−ε²) = |a₁ − a₂|/(a₁ + a₂) from the output circular amplitudes.
    pub ellipticity_deviation: f64,
}

/// cw output at depth `z` for entrance amplitudes `e1_0`, `e2_0` (rad/s).
///
/// φ₁ = −s₁(Δ+Δ_d)z + (Δ+Δ_d) Re η̃₁ |gE₂(0)|² ℓ(κ₂, z) and
/// φ₂ = s₂(Δ−Δ_d)z − (Δ−Δ_d) Re η̃₂ |gE₁(0)|² ℓ(κ₁, z), where η̃ is η per
/// unit |gE|² and ℓ is [`saturation_length`]. Im η̃ adds to the attenuation.
pub fn cw_solution(c: &PropagationCoeffs, z: f64, e1_0: C64, e2_0: C64) -> CwResult {
    let (n1, n2) = c.eta_rabi();
    let (sp, sm) = (c.delta + c.delta_d, c.delta - c.delta_d);
    let l1 = saturation_length(c.kappa1, z);
    let l2 = saturation_length(c.kappa2, z);
    let i1 = e1_0.norm_sqr();
    let i2 = e2_0.norm_sqr();

    let phi1 = -c.s1 * sp * z + sp * n1.re * i2 * l2;
    let phi2 = c.s2 * sm * z - sm * n2.re * i1 * l1;
    let a1 = (-c.kappa1 * z - sp * n1.im * i2 * l2).exp();
    let a2 = (-c.kappa2 * z + sm * n2.im * i1 * l1).exp();

    let e1 = e1_0 * a1 * C64::from_polar(1.0, phi1);
    let e2 = e2_0 * a2 * C64::from_polar(1.0, phi2);
    let (m1, m2) = (e1.norm(), e2.norm());
    let ellipticity_deviation = if m1 + m2 > 0.0 { (m1 - m2).abs() / (m1 + m2) } else { 0.0 };
    CwResult { e1, e2, phi1, phi2, rotation: 0.5 * (phi2 - phi1), ellipticity_deviation }
}

/// Small-absorption closed form of the rotation,
/// Φ = Δz/v_g + Δ(Δ²+Δ_d²)z/(v_g|Ω|²) + Δ g²I z/(v_g|Ω|²), with `intensity` = |gE(0)|².
///
/// The sign of the last term follows the closed form; [`cw_solution`]
/// derives its Kerr contribution from φ₁,₂ instead, which gives the
/// opposite sign.
pub fn rotation_small_absorption(c: &PropagationCoeffs, z: f64, intensity: f64) -> f64 {
    let d = c.delta;
    d * z / c.v_g * (1.0 + (d * d + c.delta_d * c.delta_d) / c.omega_sq + intensity / c.omega_sq)
}

/// Linear-in-field part of the rotation, Δz/v_g.
pub fn rotation_linear(c: &PropagationCoeffs, z: f64) -> f64 {
    c.delta * z / c.v_g
}

/// Ellipticity estimate 2ΓΔΔ_d z/(v_g|Ω|²).
pub fn ellipticity_estimate(c: &PropagationCoeffs, z: f64) -> f64 {
    2.0 * c.gamma * c.delta * c.delta_d * z / (c.v_g * c.omega_sq)
}

/// Rotation, mean κL and ellipticity against magnetic field.
///
/// `intensity` is the common entrance |gE(0)|² of the two components.
pub fn rotation_sweep(
    p: &MediumParams,
    d: &DerivedParams,
    drive: &DriveZeemanConfig,
    b_fields: &[f64],
    intensity: f64,
    convention: KappaConvention,
) -> Result<Table> {
    let mut t = Table::new([
        "b_field_gauss",
        "delta_rad_per_s",
        "rotation_rad",
        "rotation_small_absorption_rad",
        "kappa_l",
        "ellipticity_deviation",
    ]);
    let e0 = C64::new(intensity.sqrt(), 0.0);
    for &b in b_fields {
        let z = drive.with_b_field(p, b);
        let c = coefficients(p, d, &z, convention)?;
        let r = cw_solution(&c, p.length, e0, e0);
        t.push(vec![
            b,
            z.delta,
            r.rotation,
            rotation_small_absorption(&c, p.length, intensity),
            c.kappa_mean() * p.length,
            r.ellipticity_deviation,
        ]);
    }
    Ok(t)
}

pub fn write_sweep_csv<W: Write>(t: &Table, w: W) -> std::io::Result<()> {
    t.write_csv(w)
}
