//! Balanced-polarimeter magnetometer built on the polarization rotation:
//! photocount signal, atomic and shot noise, and the smallest detectable
//! field both from the linearized closed form and from the full signal.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::output::Table;
use crate::propagation::{coefficients, cw_solution, KappaConvention, PropagationCoeffs};
use crate::response::normalized_coherence;
use crate::units::{
    derive, validate_regime, Absorption, DerivedParams, DriveZeemanConfig, MediumParams, RegimeReport, HBAR, MU_B,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetometerConfig {
    pub medium: MediumParams,
    pub absorption: Absorption,
    pub drive: DriveZeemanConfig,
    /// Probe input power P_in (erg/s).
    pub power: f64,
    /// Measurement time t_m (s).
    pub t_m: f64,
    /// Detector quantum efficiency, applied to the photon count.
    pub quantum_efficiency: f64,
    pub kappa_convention: KappaConvention,
}

impl MagnetometerConfig {
    pub fn validate(&self) -> Result<()> {
        self.medium.validate()?;
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(invalid("power", "must be > 0"));
        }
        if !(self.t_m > 0.0 && self.t_m.is_finite()) {
            return Err(invalid("t_m", "must be > 0"));
        }
        if !(self.quantum_efficiency > 0.0 && self.quantum_efficiency <= 1.0) {
            return Err(invalid("quantum_efficiency", "must be in (0, 1]"));
        }
        if self.medium.g_f == 0.0 {
            return Err(invalid("g_f", "a field-insensitive ground state cannot sense B"));
        }
        Ok(())
    }

    fn with_b_field(&self, b: f64) -> Self {
        Self { drive: self.drive.with_b_field(&self.medium, b), ..*self }
    }

    /// Photons entering the medium during t_m.
    pub fn photons(&self) -> f64 {
        self.power * self.t_m / (HBAR * self.medium.omega_p)
    }

    /// Detected photon number n_in.
    pub fn n_in(&self) -> f64 {
        self.quantum_efficiency * self.photons()
    }

    /// |gE(0)|² of each circular component: a0 Γ P/(4 ρ A ħω_p).
    pub fn probe_rabi_sq(&self, a0: f64) -> f64 {
        let p = &self.medium;
        a0 * p.gamma * self.power / (4.0 * p.density * p.area * HBAR * p.omega_p)
    }
}

/// How the atomic noise was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomicNoiseModel {
    /// |Δ| < γ_c: the closed low-field expression.
    LowField,
    /// Excited population from the steady-state linear response.
    SteadyState,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MagnetometerResult {
    pub b_field: f64,
    pub n_in: f64,
    pub probe_rabi_sq: f64,
    /// Φ(L) from the cw solution.
    pub rotation: f64,
    pub rotation_linear: f64,
    /// Cubic-in-field part, reported only.
    pub rotation_cubic: f64,
    pub kappa_l: f64,
    pub signal: f64,
    pub noise_atomic: f64,
    pub noise_shot: f64,
    pub atomic_noise_model: AtomicNoiseModel,
    pub b_min: f64,
    /// Field where |S| equals the total noise, if it was bracketed.
    pub b_root: Option<f64>,
    /// EIT-limited bandwidth δω (rad/s).
    pub bandwidth: f64,
    pub regime: RegimeReport,
}

/// S = 2 n e^{−2κL} sin Φ cos Φ.
pub fn signal(n_in: f64, kappa_l: f64, rotation: f64) -> f64 {
    2.0 * n_in * (-2.0 * kappa_l).exp() * rotation.sin() * rotation.cos()
}

/// √((1 + e^{−2κL}) n/2).
pub fn shot_noise(n_in: f64, kappa_l: f64) -> f64 {
    ((1.0 + (-2.0 * kappa_l).exp()) * n_in / 2.0).sqrt()
}

/// a0Γ²γ_c²A n/(32π|Ω|⁴L).
pub fn atomic_noise_low_field(p: &MediumParams, a0: f64, omega_sq: f64, n_in: f64) -> f64 {
    a0 * p.gamma.powi(2) * p.gamma_c.powi(2) * p.area * n_in
        / (32.0 * std::f64::consts::PI * omega_sq * omega_sq * p.length)
}

/// Atomic noise from the steady-state excited population,
/// a0 A n (|χ₁|² + |χ₂|²)/(16πL) with χ the Γ-normalized response.
///
/// Normalized so that it reproduces [`atomic_noise_low_field`] at Δ = Δ_d = 0.
pub fn atomic_noise_steady_state(p: &MediumParams, a0: f64, z: &DriveZeemanConfig, n_in: f64) -> Result<f64> {
    let d = p.probe_detuning();
    let c1 = normalized_coherence(d - z.delta, z.delta_d, z.omega_rabi, p.gamma, p.gamma_c)?;
    let c2 = normalized_coherence(d + z.delta, z.delta_d, z.omega_rabi, p.gamma, p.gamma_c)?;
    Ok(a0 * p.area * n_in * (c1.norm_sqr() + c2.norm_sqr()) / (16.0 * std::f64::consts::PI * p.length))
}

/// Linearized B_min = 2ħ|Ω|²/(|g_F| μ_B a0 L Γ √n).
pub fn b_min_closed(p: &MediumParams, a0: f64, omega_sq: f64, n_in: f64) -> f64 {
    2.0 * HBAR * omega_sq / (p.g_f.abs() * MU_B * a0 * p.length * p.gamma * n_in.sqrt())
}

struct Point {
    derived: DerivedParams,
    coeffs: PropagationCoeffs,
    rotation: f64,
    kappa_l: f64,
    signal: f64,
    noise_atomic: f64,
    noise_shot: f64,
    model: AtomicNoiseModel,
}

fn evaluate_point(cfg: &MagnetometerConfig) -> Result<Point> {
    let p = &cfg.medium;
    let derived = derive(p, cfg.absorption, &cfg.drive)?;
    let coeffs = coefficients(p, &derived, &cfg.drive, cfg.kappa_convention)?;
    let e0 = C64::new(cfg.probe_rabi_sq(derived.a0).sqrt(), 0.0);
    let cw = cw_solution(&coeffs, p.length, e0, e0);
    let kappa_l = coeffs.kappa_mean() * p.length;
    let n = cfg.n_in();
    let (noise_atomic, model) = if cfg.drive.delta.abs() < p.gamma_c {
        (atomic_noise_low_field(p, derived.a0, cfg.drive.omega_sq(), n), AtomicNoiseModel::LowField)
    } else {
        (atomic_noise_steady_state(p, derived.a0, &cfg.drive, n)?, AtomicNoiseModel::SteadyState)
    };
    Ok(Point {
        derived,
        coeffs,
        rotation: cw.rotation,
        kappa_l,
        signal: signal(n, kappa_l, cw.rotation),
        noise_atomic,
        noise_shot: shot_noise(n, kappa_l),
        model,
    })
}

/// Smallest B > 0 with |S(B)| ≥ N_at(B) + N_shot(B), by doubling from
/// `b_start` and then bisecting the bracket.
pub fn b_min_root(cfg: &MagnetometerConfig, b_start: f64) -> Result<f64> {
    let excess = |b: f64| -> Result<f64> {
        let pt = evaluate_point(&cfg.with_b_field(b))?;
        Ok(pt.signal.abs() - pt.noise_atomic - pt.noise_shot)
    };
    let mut lo = b_start;
    let mut guard = 0;
    while excess(lo)? >= 0.0 {
        lo /= 16.0;
        guard += 1;
        if guard > 40 {
            return Err(Error::NoRoot("signal exceeds noise at every field tried".into()));
        }
    }
    let mut hi = lo;
    let mut prev = excess(hi)?;
    loop {
        hi *= 2.0;
        let e = excess(hi)?;
        if e >= 0.0 {
            break;
        }
        // past the rotation or absorption turnover the signal only falls
        if e < prev && hi > 1e6 * b_start {
            return Err(Error::NoRoot(format!("signal never reaches the noise floor up to B = {hi:e} G")));
        }
        prev = e;
        lo = hi;
        if !hi.is_finite() {
            return Err(Error::NoRoot("field bracket overflowed".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) <= 1e-12 * hi {
            break;
        }
    }
    Ok(hi)
}

/// Full evaluation at the configured field.
pub fn evaluate(cfg: &MagnetometerConfig) -> Result<MagnetometerResult> {
    cfg.validate()?;
    let p = &cfg.medium;
    let pt = evaluate_point(cfg)?;
    let n = cfg.n_in();
    let omega_sq = cfg.drive.omega_sq();
    let b_min = b_min_closed(p, pt.derived.a0, omega_sq, n);
    let b_root = b_min_root(cfg, b_min).ok();
    let c = &pt.coeffs;
    let rotation_linear = cfg.drive.delta * p.length * c.s0;
    let rotation_cubic =
        cfg.drive.delta * (cfg.drive.delta.powi(2) + cfg.drive.delta_d.powi(2)) * p.length * c.s0 / omega_sq;
    let rabi_sq = cfg.probe_rabi_sq(pt.derived.a0);
    let regime = validate_regime(p, &pt.derived, &cfg.drive, rabi_sq.sqrt(), cfg.t_m);
    Ok(MagnetometerResult {
        b_field: cfg.drive.b_field,
        n_in: n,
        probe_rabi_sq: rabi_sq,
        rotation: pt.rotation,
        rotation_linear,
        rotation_cubic,
        kappa_l: pt.kappa_l,
        signal: pt.signal,
        noise_atomic: pt.noise_atomic,
        noise_shot: pt.noise_shot,
        atomic_noise_model: pt.model,
        b_min,
        b_root,
        bandwidth: pt.derived.eit_bandwidth,
        regime,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    OmegaRabi,
    Density,
    Length,
    Power,
    TM,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 5] =
        [SweepAxis::OmegaRabi, SweepAxis::Density, SweepAxis::Length, SweepAxis::Power, SweepAxis::TM];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::OmegaRabi => "omega_rabi",
            SweepAxis::Density => "density",
            SweepAxis::Length => "length",
            SweepAxis::Power => "power",
            SweepAxis::TM => "t_m",
        }
    }

    /// Returns `cfg` with the axis parameter set to `value`.
    pub fn apply(self, cfg: &MagnetometerConfig, value: f64) -> MagnetometerConfig {
        let mut out = *cfg;
        match self {
            SweepAxis::OmegaRabi => {
                let phase = cfg.drive.omega_rabi.arg();
                out.drive.omega_rabi = C64::from_polar(value, phase);
            }
            SweepAxis::Density => {
                // a0 ∝ ρ when it is given directly; ℘ fixes it otherwise
                if let Some(a0) = cfg.absorption.a0 {
                    out.absorption.a0 = Some(a0 * value / cfg.medium.density);
                }
                out.medium.density = value;
            }
            SweepAxis::Length => out.medium.length = value,
            SweepAxis::Power => out.power = value,
            SweepAxis::TM => out.t_m = value,
        }
        out
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| Error::UnknownAxis(s.to_string()))
    }
}

/// Header of the sweep table; regime margins follow the fixed columns.
pub fn sweep_header() -> Vec<String> {
    let mut h: Vec<String> =
        ["axis_value", "b_min_gauss", "b_root_gauss", "n_in", "n_at", "n_shot", "kappa_l", "phi_rad"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    for name in REGIME_NAMES {
        h.push(format!("margin_{name}"));
    }
    h
}

const REGIME_NAMES: [&str; 6] =
    ["weak_probe", "eit", "adiabaticity", "slow_light", "small_absorption_length", "small_absorption_detuning"];

/// B_min and regime margins along one parameter axis; rows keep the order of `values`.
pub fn sensitivity_sweep(cfg: &MagnetometerConfig, axis: SweepAxis, values: &[f64]) -> Result<Table> {
    let rows: Vec<Vec<f64>> = values
        .par_iter()
        .map(|&v| {
            let r = evaluate(&axis.apply(cfg, v))?;
            let mut row = vec![
                v,
                r.b_min,
                r.b_root.unwrap_or(f64::NAN),
                r.n_in,
                r.noise_atomic,
                r.noise_shot,
                r.kappa_l,
                r.rotation,
            ];
            for name in REGIME_NAMES {
                row.push(r.regime.get(name).map_or(f64::NAN, |c| c.margin()));
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(sweep_header());
    for row in rows {
        t.push(row);
    }
    Ok(t)
}
