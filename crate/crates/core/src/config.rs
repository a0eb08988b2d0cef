//! JSON run files. Every key carries its unit; unknown keys are rejected and
//! errors report the JSON path of the offending field.

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bloch::{Branching, GridSpec, MbMedium, PulseShape, PulseSpec, DEFAULT_SAMPLE_CAP};
use crate::error::{Error, Result};
use crate::magnetometer::{MagnetometerConfig, SweepAxis};
use crate::propagation::KappaConvention;
use crate::units::{derive, Absorption, DerivedParams, DriveZeemanConfig, Geometry, MediumParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    /// Recorded in every output header; drives any sampled sweep.
    #[serde(default)]
    pub seed: u64,
    pub medium: MediumFile,
    pub drive: DriveFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectra: Option<SpectraFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mb: Option<MbFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnetometer: Option<MagnetometerFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantum: Option<QuantumFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumFile {
    pub gamma_rad_per_s: f64,
    pub gamma_c_rad_per_s: f64,
    pub density_per_cm3: f64,
    pub length_cm: f64,
    pub area_cm2: f64,
    pub omega_p_rad_per_s: f64,
    pub omega_d_rad_per_s: f64,
    pub omega_31_rad_per_s: f64,
    pub omega_34_rad_per_s: f64,
    pub g_f: f64,
    #[serde(default)]
    pub g_f_prime: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dipole_moment_esu_cm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0_per_cm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveFile {
    pub omega_rabi_rad_per_s: f64,
    #[serde(default)]
    pub omega_rabi_phase_rad: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_field_gauss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeeman_shift_rad_per_s: Option<f64>,
    pub geometry: Geometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraFile {
    pub delta_min_per_gamma: f64,
    pub delta_max_per_gamma: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseFile {
    pub shape: PulseShape,
    pub peak_rabi_rad_per_s: f64,
    #[serde(default)]
    pub peak_phase_rad: f64,
    pub duration_s: f64,
    pub center_s: f64,
}

impl PulseFile {
    pub fn spec(&self) -> PulseSpec {
        PulseSpec {
            shape: self.shape,
            peak: C64::from_polar(self.peak_rabi_rad_per_s, self.peak_phase_rad),
            duration: self.duration_s,
            center: self.center_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MbFile {
    /// Pulse of each circular component (linear input polarization).
    pub probe: PulseFile,
    /// Overrides the E₂ pulse when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_e2: Option<PulseFile>,
    pub nz: usize,
    pub nt: usize,
    pub dt_s: f64,
    #[serde(default)]
    pub t0_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default = "default_sample_cap")]
    pub max_samples: usize,
    #[serde(default = "default_ground")]
    pub ground_populations: [f64; 3],
    #[serde(default)]
    pub branching: Branching,
    /// Also write the full space-time field in binary form.
    #[serde(default)]
    pub write_field: bool,
    /// Remove the atoms (a0 = 0) while keeping the grid and pulses.
    #[serde(default)]
    pub vacuum: bool,
}

fn default_sample_cap() -> usize {
    DEFAULT_SAMPLE_CAP
}

fn default_ground() -> [f64; 3] {
    [0.5, 0.5, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagnetometerFile {
    pub power_erg_per_s: f64,
    pub t_m_s: f64,
    #[serde(default = "one")]
    pub quantum_efficiency: f64,
    #[serde(default)]
    pub kappa_convention: KappaConvention,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepFile>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Sweep values: either an explicit list or `points` samples from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub axis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl SweepFile {
    pub fn axis(&self) -> Result<SweepAxis> {
        self.axis.parse().map_err(|e: Error| cfg_err("magnetometer.sweep.axis", e.to_string()))
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        const P: &str = "magnetometer.sweep";
        if let Some(v) = &self.values {
            if self.start.is_some() || self.stop.is_some() || self.points.is_some() {
                return Err(cfg_err(P, "give either `values` or `start`/`stop`/`points`"));
            }
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                return Err(cfg_err(&format!("{P}.values"), "must be a nonempty list of finite numbers"));
            }
            return Ok(v.clone());
        }
        let (Some(a), Some(b), Some(n)) = (self.start, self.stop, self.points) else {
            return Err(cfg_err(P, "needs `values` or all of `start`, `stop`, `points`"));
        };
        if n < 2 {
            return Err(cfg_err(&format!("{P}.points"), "must be >= 2"));
        }
        let frac = |k: usize| k as f64 / (n - 1) as f64;
        match self.spacing {
            Spacing::Linear => Ok((0..n).map(|k| a + (b - a) * frac(k)).collect()),
            Spacing::Log => {
                if !(a > 0.0 && b > 0.0) {
                    return Err(cfg_err(&format!("{P}.start"), "log spacing needs positive bounds"));
                }
                Ok((0..n).map(|k| a * (b / a).powf(frac(k))).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumFile {
    #[serde(default = "default_modes")]
    pub mode_count: usize,
    /// Conditional phase θ; derived from the medium and drive when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_rad: Option<f64>,
    /// Photon spectral width σ_q in units of δq.
    #[serde(default = "default_sigma")]
    pub sigma_q_per_dq: f64,
    /// Extra σ_q values for the bandwidth axis of the fidelity map.
    #[serde(default)]
    pub sigma_q_sweep_per_dq: Vec<f64>,
    /// Photon centre separations in units of 1/δq.
    #[serde(default = "default_separations")]
    pub separations_per_dq: Vec<f64>,
    /// Points of the θ ∈ [0, 2π] coherent-state revival curve.
    #[serde(default = "default_theta_points")]
    pub theta_points: usize,
    /// Partner-field intensity |α₂|² in units of Lδq/(2π).
    #[serde(default = "one")]
    pub coherent_intensity_per_mode: f64,
    /// Also write the output ξ^{qq′} of the overlapping pair as JSON.
    #[serde(default)]
    pub dump_state: bool,
}

fn default_modes() -> usize {
    401
}
fn default_sigma() -> f64 {
    0.08
}
fn default_separations() -> Vec<f64> {
    vec![0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0]
}
fn default_theta_points() -> usize {
    65
}

fn cfg_err(path: &str, reason: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), reason: reason.into() }
}

/// Maps a core validation error on `section` onto the unit-suffixed key.
fn remap(section: &str, keys: &[(&str, &str)], e: Error) -> Error {
    match e {
        Error::Validation { field, reason } => {
            let key = keys.iter().find(|(f, _)| *f == field).map(|(_, k)| *k).unwrap_or(field.as_str());
            cfg_err(&format!("{section}.{key}"), reason)
        }
        other => other,
    }
}

const MEDIUM_KEYS: &[(&str, &str)] = &[
    ("gamma", "gamma_rad_per_s"),
    ("gamma_c", "gamma_c_rad_per_s"),
    ("density", "density_per_cm3"),
    ("length", "length_cm"),
    ("area", "area_cm2"),
    ("omega_p", "omega_p_rad_per_s"),
    ("omega_d", "omega_d_rad_per_s"),
    ("omega_31", "omega_31_rad_per_s"),
    ("omega_34", "omega_34_rad_per_s"),
    ("dipole_moment", "dipole_moment_esu_cm"),
    ("a0", "a0_per_cm"),
];

impl RunFile {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(s);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            cfg_err(if path.is_empty() { "." } else { &path }, e.into_inner().to_string())
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| cfg_err(&path.as_ref().display().to_string(), e.to_string()))?;
        Self::from_json_str(&text)
    }

    pub fn medium_params(&self) -> Result<MediumParams> {
        let m = &self.medium;
        let p = MediumParams {
            gamma: m.gamma_rad_per_s,
            gamma_c: m.gamma_c_rad_per_s,
            density: m.density_per_cm3,
            length: m.length_cm,
            area: m.area_cm2,
            omega_p: m.omega_p_rad_per_s,
            omega_d: m.omega_d_rad_per_s,
            omega_31: m.omega_31_rad_per_s,
            omega_34: m.omega_34_rad_per_s,
            g_f: m.g_f,
            g_f_prime: m.g_f_prime,
        };
        p.validate().map_err(|e| remap("medium", MEDIUM_KEYS, e))?;
        Ok(p)
    }

    pub fn absorption(&self) -> Result<Absorption> {
        let m = &self.medium;
        if m.dipole_moment_esu_cm.is_none() && m.a0_per_cm.is_none() {
            return Err(cfg_err("medium", "give `dipole_moment_esu_cm`, `a0_per_cm`, or both"));
        }
        Ok(Absorption { dipole_moment: m.dipole_moment_esu_cm, a0: m.a0_per_cm })
    }

    pub fn drive(&self, p: &MediumParams) -> Result<DriveZeemanConfig> {
        let d = &self.drive;
        if !(d.omega_rabi_rad_per_s >= 0.0 && d.omega_rabi_rad_per_s.is_finite()) {
            return Err(cfg_err("drive.omega_rabi_rad_per_s", "must be finite and >= 0"));
        }
        let omega = C64::from_polar(d.omega_rabi_rad_per_s, d.omega_rabi_phase_rad);
        match (d.b_field_gauss, d.zeeman_shift_rad_per_s) {
            (Some(b), None) if b.is_finite() => Ok(DriveZeemanConfig::new(p, omega, b, d.geometry)),
            (None, Some(s)) if s.is_finite() => DriveZeemanConfig::from_zeeman_shift(p, omega, s, d.geometry)
                .map_err(|e| remap("medium", &[("g_f", "g_f")], e)),
            (Some(_), Some(_)) => Err(cfg_err("drive", "give `b_field_gauss` or `zeeman_shift_rad_per_s`, not both")),
            (None, None) => Err(cfg_err("drive", "needs `b_field_gauss` or `zeeman_shift_rad_per_s`")),
            _ => Err(cfg_err("drive", "field and shift must be finite")),
        }
    }

    /// Medium, drive and derived quantities in one validated bundle.
    pub fn resolve(&self) -> Result<Resolved> {
        let medium = self.medium_params()?;
        let absorption = self.absorption()?;
        let drive = self.drive(&medium)?;
        let derived = derive(&medium, absorption, &drive).map_err(|e| remap("medium", MEDIUM_KEYS, e))?;
        Ok(Resolved { medium, absorption, drive, derived })
    }

    pub fn section<'a, T>(&self, name: &str, s: &'a Option<T>) -> Result<&'a T> {
        s.as_ref().ok_or_else(|| cfg_err(name, "section is required for this command"))
    }

    pub fn mb_setup(&self, r: &Resolved) -> Result<MbSetup> {
        let f = self.section("mb", &self.mb)?;
        let mut medium = MbMedium::from_params(&r.medium, &r.derived, &r.drive);
        medium.ground_populations = f.ground_populations;
        medium.branching = f.branching;
        if f.vacuum {
            medium.a0 = 0.0;
        }
        medium.validate().map_err(|e| remap("mb", &[], e))?;
        let e1 = f.probe.spec();
        let e2 = f.probe_e2.as_ref().map(PulseFile::spec).unwrap_or(e1);
        e1.validate().map_err(|e| remap("mb.probe", &[], e))?;
        e2.validate().map_err(|e| remap("mb.probe_e2", &[], e))?;
        let mut grid = GridSpec::new(f.nz, f.nt, f.dt_s, f.t0_s);
        if let Some(k) = f.record_every {
            grid.record_every = k;
        }
        grid.max_samples = f.max_samples;
        Ok(MbSetup { medium, pulses: [e1, e2], grid })
    }

    pub fn magnetometer_config(&self, r: &Resolved) -> Result<MagnetometerConfig> {
        let f = self.section("magnetometer", &self.magnetometer)?;
        let cfg = MagnetometerConfig {
            medium: r.medium,
            absorption: r.absorption,
            drive: r.drive,
            power: f.power_erg_per_s,
            t_m: f.t_m_s,
            quantum_efficiency: f.quantum_efficiency,
            kappa_convention: f.kappa_convention,
        };
        cfg.validate()
            .map_err(|e| remap("magnetometer", &[("power", "power_erg_per_s"), ("t_m", "t_m_s"), ("g_f", "g_f")], e))?;
        Ok(cfg)
    }
}

/// Validated physical parameters shared by every command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resolved {
    pub medium: MediumParams,
    pub absorption: Absorption,
    pub drive: DriveZeemanConfig,
    pub derived: DerivedParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MbSetup {
    pub medium: MbMedium,
    pub pulses: [PulseSpec; 2],
    pub grid: GridSpec,
}
