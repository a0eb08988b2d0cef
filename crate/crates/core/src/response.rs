//! Steady-state linear response of the two circular probe components.
//!
//! With σ₁₁ = σ₂₂ = ½ and a weak probe, each probe component only couples
//! to the pair {σ_j3, σ_j4}, whose steady state is solved in closed form.

use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::output::fmt_sig;
use crate::units::{DriveZeemanConfig, MediumParams};

/// Denominator magnitude (in Γ units) below which the closed form is singular.
pub const SINGULAR_DENOMINATOR: f64 = 1e-30;

/// Coherence per unit probe Rabi frequency, σ_j3/(gE_j), in s/rad.
///
/// `delta_j` is the probe detuning seen by transition j (δ ∓ Δ) and
/// `delta_d` the drive detuning.
pub fn steady_state_coherence(delta_j: f64, delta_d: f64, omega_rabi: C64, gamma: f64, gamma_c: f64) -> Result<C64> {
    Ok(normalized_coherence(delta_j, delta_d, omega_rabi, gamma, gamma_c)? / gamma)
}

/// Γ·σ_j3/(gE_j): the response in units where a bare resonant two-level
/// atom gives exactly `i`.
pub fn normalized_coherence(delta_j: f64, delta_d: f64, omega_rabi: C64, gamma: f64, gamma_c: f64) -> Result<C64> {
    let i = C64::i();
    let dj = delta_j / gamma;
    let raman = C64::new(-gamma_c / gamma, (delta_j - delta_d) / gamma);
    let den = C64::new(-0.5, dj) * raman + omega_rabi.norm_sqr() / (gamma * gamma);
    if den.norm() < SINGULAR_DENOMINATOR {
        return Err(Error::Singularity { magnitude: den.norm() });
    }
    Ok(-0.5 * i * raman / den)
}

/// Absorption (imaginary part) and dispersion (real part) of each circular
/// component, normalized to the linear resonant absorption coefficient a0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexResponse {
    /// Probe detunings δ = ω_p − ω₃₁⁰ (rad/s).
    pub detunings: Vec<f64>,
    pub chi1: Vec<C64>,
    pub chi2: Vec<C64>,
}

impl ComplexResponse {
    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    /// CSV with columns delta_over_gamma, abs1, disp1, abs2, disp2.
    pub fn write_csv<W: Write>(&self, gamma: f64, mut w: W) -> std::io::Result<()> {
        writeln!(w, "delta_over_gamma,abs1_a0,disp1_a0,abs2_a0,disp2_a0")?;
        for ((d, c1), c2) in self.detunings.iter().zip(&self.chi1).zip(&self.chi2) {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_sig(d / gamma),
                fmt_sig(c1.im),
                fmt_sig(c1.re),
                fmt_sig(c2.im),
                fmt_sig(c2.re)
            )?;
        }
        Ok(())
    }
}

/// Uniform detuning grid of `n` points over [lo, hi].
pub fn detuning_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Default grid: 2001 points over [−2Γ, 2Γ].
pub fn default_grid(gamma: f64) -> Vec<f64> {
    detuning_grid(-2.0 * gamma, 2.0 * gamma, 2001)
}

pub fn spectra(p: &MediumParams, z: &DriveZeemanConfig, delta_grid: &[f64]) -> Result<ComplexResponse> {
    let monotone = delta_grid.windows(2).all(|w| w[1] > w[0]) || delta_grid.windows(2).all(|w| w[1] < w[0]);
    if !monotone {
        return Err(crate::error::invalid("delta_grid", "must be strictly monotone"));
    }
    let pairs: Vec<(C64, C64)> = delta_grid
        .par_iter()
        .map(|&d| {
            let c1 = normalized_coherence(d - z.delta, z.delta_d, z.omega_rabi, p.gamma, p.gamma_c)?;
            let c2 = normalized_coherence(d + z.delta, z.delta_d, z.omega_rabi, p.gamma, p.gamma_c)?;
            Ok((c1, c2))
        })
        .collect::<Result<_>>()?;
    let (chi1, chi2) = pairs.into_iter().unzip();
    Ok(ComplexResponse { detunings: delta_grid.to_vec(), chi1, chi2 })
}
