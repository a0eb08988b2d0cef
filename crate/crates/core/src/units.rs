//! Unit system, static medium parameters and the quantities derived from them.
//!
//! Everything at this boundary is CGS: rates in rad/s, lengths in cm,
//! densities in cm⁻³, dipole moments in esu·cm, magnetic fields in gauss.
//! The numerical kernels downstream work in units of the excited-state
//! decay rate Γ.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Speed of light (cm/s).
pub const C_CM_PER_S: f64 = 2.997_924_58e10;
/// Reduced Planck constant (erg·s).
pub const HBAR: f64 = 1.0546e-27;
/// Bohr magneton (erg/G).
pub const MU_B: f64 = 9.274e-21;

/// Threshold used for "much greater than" in the regime checks.
pub const MUCH_GREATER: f64 = 10.0;
/// Ratio a0·c·Γ / (4|Ω_d|²) above which the slow-light approximation is flagged valid.
pub const SLOW_LIGHT_RATIO: f64 = 100.0;
/// Largest probe/drive Rabi ratio still considered a weak probe.
pub const WEAK_PROBE_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    /// Excited-state decay rate Γ (rad/s).
    pub gamma: f64,
    /// Ground-state spin relaxation rate γ_c (rad/s).
    pub gamma_c: f64,
    /// Atomic number density ρ (cm⁻³).
    pub density: f64,
    /// Medium length L (cm).
    pub length: f64,
    /// Probe beam cross-section A (cm²).
    pub area: f64,
    pub omega_p: f64,
    pub omega_d: f64,
    /// Unshifted probe resonance ω₃₁⁰ = ω₃₂⁰.
    pub omega_31: f64,
    /// Unshifted drive resonance ω₃₄⁰.
    pub omega_34: f64,
    pub g_f: f64,
    pub g_f_prime: f64,
}

impl MediumParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("gamma", self.gamma),
            ("gamma_c", self.gamma_c),
            ("density", self.density),
            ("length", self.length),
            ("area", self.area),
            ("omega_p", self.omega_p),
            ("omega_d", self.omega_d),
            ("omega_31", self.omega_31),
            ("omega_34", self.omega_34),
            ("g_f", self.g_f),
            ("g_f_prime", self.g_f_prime),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        for (name, v) in [
            ("gamma", self.gamma),
            ("density", self.density),
            ("length", self.length),
            ("area", self.area),
            ("omega_p", self.omega_p),
        ] {
            if v <= 0.0 {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        if self.gamma_c < 0.0 {
            return Err(invalid("gamma_c", "must be >= 0"));
        }
        if self.gamma_c >= self.gamma {
            return Err(invalid("gamma_c", "ground-state relaxation must be slower than Γ"));
        }
        Ok(())
    }

    /// Probe detuning δ = ω_p − ω₃₁⁰ from the unshifted resonance.
    pub fn probe_detuning(&self) -> f64 {
        self.omega_p - self.omega_31
    }

    pub fn n_atoms(&self) -> f64 {
        self.density * self.area * self.length
    }

    pub fn k_probe(&self) -> f64 {
        self.omega_p / C_CM_PER_S
    }
}

/// Source of the probe-transition strength: the dipole moment ℘₁₃, the
/// resonant absorption coefficient a0, or both (checked for consistency).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Absorption {
    /// ℘₁₃ in esu·cm.
    pub dipole_moment: Option<f64>,
    /// a0 in cm⁻¹.
    pub a0: Option<f64>,
}

impl Absorption {
    pub fn from_dipole(d: f64) -> Self {
        Self { dipole_moment: Some(d), a0: None }
    }

    pub fn from_a0(a0: f64) -> Self {
        Self { dipole_moment: None, a0: Some(a0) }
    }
}

/// Relative tolerance between a supplied a0 and the one implied by ℘₁₃.
pub const A0_CONSISTENCY_TOL: f64 = 0.01;

/// Linear resonant absorption coefficient a0 = 4π℘²ω_p ρ / (ħ c Γ) (Gaussian units).
pub fn a0_from_dipole(p: &MediumParams, dipole: f64) -> f64 {
    4.0 * std::f64::consts::PI * dipole * dipole * p.omega_p * p.density / (HBAR * C_CM_PER_S * p.gamma)
}

pub fn dipole_from_a0(p: &MediumParams, a0: f64) -> f64 {
    (a0 * HBAR * C_CM_PER_S * p.gamma / (4.0 * std::f64::consts::PI * p.omega_p * p.density)).sqrt()
}

/// Polarization geometry, which fixes the Zeeman shift of the driven level |4⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Copropagating circularly polarized drive coupling to M_F′ = +1.
    CollinearPlus,
    /// Copropagating circularly polarized drive coupling to M_F′ = −1.
    CollinearMinus,
    /// π-polarized transverse drive, M_F′ = 0.
    Perpendicular,
}

impl Geometry {
    pub fn m_f_prime(self) -> f64 {
        match self {
            Geometry::CollinearPlus => 1.0,
            Geometry::CollinearMinus => -1.0,
            Geometry::Perpendicular => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveZeemanConfig {
    /// Drive Rabi frequency Ω_d (rad/s, complex).
    pub omega_rabi: C64,
    /// Magnetic field B (G).
    pub b_field: f64,
    /// Ground-state Zeeman shift Δ (rad/s).
    pub delta: f64,
    /// Zeeman shift Δ′ of level |4⟩ (rad/s).
    pub delta_prime: f64,
    /// Drive detuning Δ_d = ω_d − ω₃₄⁰ + Δ′ (rad/s).
    pub delta_d: f64,
    pub geometry: Geometry,
}

/// Ground-state Zeeman shift ħΔ = μ_B g_F B for M_F = +1.
pub fn zeeman_shift(g_f: f64, b_field: f64) -> f64 {
    MU_B * g_f * b_field / HBAR
}

impl DriveZeemanConfig {
    pub fn new(p: &MediumParams, omega_rabi: C64, b_field: f64, geometry: Geometry) -> Self {
        let delta = zeeman_shift(p.g_f, b_field);
        let delta_prime = geometry.m_f_prime() * zeeman_shift(p.g_f_prime, b_field);
        let delta_d = (p.omega_d - p.omega_34) + delta_prime;
        Self { omega_rabi, b_field, delta, delta_prime, delta_d, geometry }
    }

    /// Builds the drive from a Zeeman shift instead of a field; B is backed out through g_F.
    pub fn from_zeeman_shift(p: &MediumParams, omega_rabi: C64, delta: f64, geometry: Geometry) -> Result<Self> {
        if p.g_f == 0.0 {
            if delta != 0.0 {
                return Err(invalid("g_f", "must be nonzero to realise a Zeeman shift"));
            }
            return Ok(Self::new(p, omega_rabi, 0.0, geometry));
        }
        let b = delta * HBAR / (MU_B * p.g_f);
        let mut cfg = Self::new(p, omega_rabi, b, geometry);
        // keep the requested shift bit-exact rather than round-tripping through B
        cfg.delta = delta;
        Ok(cfg)
    }

    /// Same drive with a different magnetic field.
    pub fn with_b_field(&self, p: &MediumParams, b_field: f64) -> Self {
        Self::new(p, self.omega_rabi, b_field, self.geometry)
    }

    pub fn omega_sq(&self) -> f64 {
        self.omega_rabi.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Linear resonant absorption coefficient a0 (cm⁻¹).
    pub a0: f64,
    /// Dipole moment ℘₁₃ (esu·cm).
    pub dipole_moment: f64,
    /// Single-atom coupling g (rad/s per unit dimensionless field).
    pub g_coupling: f64,
    pub n_atoms: f64,
    /// Group velocity (1/c + s)⁻¹ at Δ = Δ_d = 0 (cm/s).
    pub v_g: f64,
    /// Slow-light approximation 4|Ω_d|²/(a0 Γ) (cm/s).
    pub v_g_approx: f64,
    /// EIT bandwidth δω (rad/s).
    pub eit_bandwidth: f64,
    /// Quantization bandwidth δq = δω/c (cm⁻¹).
    pub dq: f64,
    /// a0 c Γ / (4|Ω_d|²); the slow-light approximation needs this ≫ 1.
    pub slow_light_ratio: f64,
    pub slow_light: bool,
}

/// Evaluates the derived medium quantities.
///
/// N g² = a0 c Γ / 2 is used to fix g, so both definitions of the
/// coupling hold simultaneously.
pub fn derive(p: &MediumParams, absorption: Absorption, drive: &DriveZeemanConfig) -> Result<DerivedParams> {
    p.validate()?;
    let (a0, dipole) = match (absorption.dipole_moment, absorption.a0) {
        (None, None) => return Err(invalid("absorption", "either dipole_moment or a0 is required")),
        (Some(d), None) => {
            if !(d > 0.0 && d.is_finite()) {
                return Err(invalid("dipole_moment", "must be > 0"));
            }
            (a0_from_dipole(p, d), d)
        }
        (None, Some(a0)) => {
            if !(a0 > 0.0 && a0.is_finite()) {
                return Err(invalid("a0", "must be > 0"));
            }
            (a0, dipole_from_a0(p, a0))
        }
        (Some(d), Some(a0)) => {
            let implied = a0_from_dipole(p, d);
            if ((implied - a0) / a0).abs() > A0_CONSISTENCY_TOL {
                return Err(invalid(
                    "a0",
                    format!("inconsistent with dipole_moment: given {a0:e}, implied {implied:e}"),
                ));
            }
            (a0, d)
        }
    };
    let omega_sq = drive.omega_sq();
    if !(omega_sq > 0.0) {
        return Err(invalid("omega_rabi", "drive Rabi frequency must be nonzero"));
    }
    let n_atoms = p.n_atoms();
    let g_coupling = (a0 * C_CM_PER_S * p.gamma / (2.0 * n_atoms)).sqrt();
    let s0 = a0 * p.gamma / (4.0 * omega_sq);
    let v_g = 1.0 / (1.0 / C_CM_PER_S + s0);
    let v_g_approx = 1.0 / s0;
    let eit_bandwidth = omega_sq / p.gamma * p.k_probe() / (3.0 * std::f64::consts::PI * p.density * p.length).sqrt();
    let slow_light_ratio = C_CM_PER_S * s0;
    Ok(DerivedParams {
        a0,
        dipole_moment: dipole,
        g_coupling,
        n_atoms,
        v_g,
        v_g_approx,
        eit_bandwidth,
        dq: eit_bandwidth / C_CM_PER_S,
        slow_light_ratio,
        slow_light: slow_light_ratio > SLOW_LIGHT_RATIO,
    })
}

/// Outcome of one regime inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeCheck {
    pub name: &'static str,
    /// The quantity compared against `threshold`.
    pub value: f64,
    pub threshold: f64,
    /// True when the inequality reads `value <= threshold`.
    pub upper_bound: bool,
    pub pass: bool,
}

impl RegimeCheck {
    fn at_least(name: &'static str, value: f64, threshold: f64) -> Self {
        Self { name, value, threshold, upper_bound: false, pass: value >= threshold }
    }

    fn at_most(name: &'static str, value: f64, threshold: f64) -> Self {
        Self { name, value, threshold, upper_bound: true, pass: value <= threshold }
    }

    /// Factor by which the inequality is satisfied (>= 1 passes).
    pub fn margin(&self) -> f64 {
        if self.upper_bound {
            if self.value == 0.0 {
                f64::INFINITY
            } else {
                self.threshold / self.value
            }
        } else {
            self.value / self.threshold
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub checks: Vec<RegimeCheck>,
}

impl RegimeReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&RegimeCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RegimeCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Checks the weak-probe, EIT, adiabatic, slow-light and small-absorption inequalities.
pub fn validate_regime(
    p: &MediumParams,
    d: &DerivedParams,
    z: &DriveZeemanConfig,
    probe_rabi_max: f64,
    pulse_duration: f64,
) -> RegimeReport {
    let omega = z.omega_rabi.norm();
    let omega_sq = z.omega_sq();
    let mut checks = Vec::with_capacity(6);

    checks.push(RegimeCheck::at_most("weak_probe", ratio(probe_rabi_max.abs(), omega), WEAK_PROBE_RATIO));
    checks.push(RegimeCheck::at_least("eit", ratio(omega_sq, p.gamma_c * p.gamma), MUCH_GREATER));

    // The transient term of the ground coherence dies out either adiabatically
    // (T_p|Δ| ≫ 1) or through spin relaxation (T_p γ_c ≫ 1).
    let adiabatic =
        if z.delta == 0.0 { f64::INFINITY } else { (pulse_duration * z.delta.abs()).max(pulse_duration * p.gamma_c) };
    checks.push(RegimeCheck::at_least("adiabaticity", adiabatic, MUCH_GREATER));
    checks.push(RegimeCheck::at_least("slow_light", d.slow_light_ratio, SLOW_LIGHT_RATIO));
    checks.push(RegimeCheck::at_least("small_absorption_length", ratio(d.v_g, p.gamma_c * p.length), MUCH_GREATER));
    checks.push(RegimeCheck::at_most(
        "small_absorption_detuning",
        ratio((z.delta * z.delta + z.delta_d * z.delta_d) * p.gamma, p.gamma_c * omega_sq),
        1.0,
    ));
    RegimeReport { checks }
}
