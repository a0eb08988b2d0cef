//! Multimode quantum cross-phase modulation in the absorption-free limit.
//!
//! Fields are expanded over M modes q_m = (m − (M−1)/2)·2π/L, m = 0..M,
//! so the quantization bandwidth is δq = 2πM/L and Lδq/(2π) = M. Envelopes
//! f(z) = Σ_q ξ^q e^{iqz} are therefore L-periodic and normalized to
//! ∫₀^L |f|² dz = L when Σ|ξ^q|² = 1.
//!
//! Two evolutions of a photon pair are provided. [`two_photon_wavefunction`]
//! evaluates the closed-form equal-time wavefunction (analytic sinc kernel,
//! not norm-preserving); [`evolve_pair`] applies the exact unitary of the
//! contact interaction in mode space, where each block of fixed total
//! momentum K acquires the phase θc_K/M on its uniform superposition.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::units::{DerivedParams, DriveZeemanConfig, C_CM_PER_S};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// sin(x)/x with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeGrid {
    /// Mode count M (odd).
    pub m: usize,
    /// Medium and quantization length L (cm).
    pub length: f64,
}

impl ModeGrid {
    pub fn new(m: usize, length: f64) -> Result<Self> {
        if m == 0 || m.is_multiple_of(2) {
            return Err(invalid("mode_count", format!("must be odd and positive, got {m}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(invalid("length", "must be > 0"));
        }
        Ok(Self { m, length })
    }

    /// Largest odd grid whose bandwidth 2πM/L does not exceed `dq`.
    pub fn from_bandwidth(length: f64, dq: f64) -> Result<Self> {
        let fit = (length * dq / (2.0 * PI)).floor() as usize;
        let m = if fit.is_multiple_of(2) { fit.saturating_sub(1) } else { fit };
        if m == 0 {
            return Err(invalid("bandwidth", format!("Lδq/2π = {} admits no mode", length * dq / (2.0 * PI))));
        }
        Self::new(m, length)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Quantization bandwidth δq.
    pub fn dq(&self) -> f64 {
        self.m as f64 * self.spacing()
    }

    fn half(&self) -> i64 {
        (self.m as i64 - 1) / 2
    }

    /// Signed mode number of index `k` (−(M−1)/2 ..= (M−1)/2).
    pub fn mode_number(&self, k: usize) -> i64 {
        k as i64 - self.half()
    }

    pub fn q(&self, k: usize) -> f64 {
        self.mode_number(k) as f64 * self.spacing()
    }

    pub fn q_max(&self) -> f64 {
        self.half() as f64 * self.spacing()
    }

    /// e^{iqx} for mode `k`, with the phase reduced modulo 2π through x/L.
    fn wave(&self, k: usize, x: f64) -> C64 {
        let cycles = (self.mode_number(k) as f64 * (x / self.length)).rem_euclid(1.0);
        C64::from_polar(1.0, 2.0 * PI * cycles)
    }

    /// Σ_q e^{iqx}: the finite-M (Dirichlet) kernel.
    pub fn mode_sum(&self, x: f64) -> f64 {
        let h = self.spacing() * x / 2.0;
        let s = h.sin();
        if s.abs() < 1e-12 {
            // M odd: every mode is in phase at multiples of L
            return self.m as f64;
        }
        (self.m as f64 * h).sin() / s
    }
}

/// Equal-time commutator kernel (Lδq/2π)·sinc(δq(z−z′)/2).
pub fn sinc_commutator(z: f64, z_prime: f64, grid: &ModeGrid) -> f64 {
    let dq = grid.dq();
    grid.length * dq / (2.0 * PI) * sinc(dq * (z - z_prime) / 2.0)
}

/// Cross-phase angles at depth z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XpmAngles {
    pub theta1: f64,
    pub theta2: f64,
    /// Common value ηΔ_d L²δq/(2π) for Δ ≪ Δ_d.
    pub theta: f64,
}

impl XpmAngles {
    pub fn uniform(theta: f64) -> Self {
        Self { theta1: theta, theta2: theta, theta }
    }

    /// θ₁,₂ = η(Δ_d ± Δ)Lδq z/(2π) with η = g²/(v_g|Ω_d|²).
    pub fn from_params(eta: f64, delta: f64, delta_d: f64, grid: &ModeGrid, z: f64) -> Self {
        let k = eta * grid.length * grid.dq() / (2.0 * PI);
        Self { theta1: k * (delta_d + delta) * z, theta2: k * (delta_d - delta) * z, theta: k * delta_d * grid.length }
    }
}

/// XPM coefficient η = g²/(v_g|Ω_d|²) (s/cm).
pub fn xpm_coefficient(d: &DerivedParams, z: &DriveZeemanConfig) -> f64 {
    XpmMedium::from_params(d, z).eta()
}

/// (δqL/2π)² > v_g|Ω_d|²/(c g²): θ can exceed π.
pub fn pi_condition(grid: &ModeGrid, v_g: f64, omega_sq: f64, g: f64) -> bool {
    let lhs = (grid.dq() * grid.length / (2.0 * PI)).powi(2);
    lhs > v_g * omega_sq / (C_CM_PER_S * g * g)
}

/// Coherent-state mode amplitudes α_j^q of the two probe components.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentAmplitudes {
    pub alpha1: Vec<C64>,
    pub alpha2: Vec<C64>,
}

/// α(t) = Σ_q α^q e^{−iqct}.
pub fn coherent_envelope(alpha: &[C64], grid: &ModeGrid, t: f64) -> C64 {
    let x = -C_CM_PER_S * t;
    alpha.iter().enumerate().map(|(k, a)| a * grid.wave(k, x)).sum()
}

/// ⟨E₁⟩, ⟨E₂⟩ at (z, t), τ = t − z/v_g:
/// ⟨E₁⟩ = α₁(τ) exp{(e^{iθ₁}−1) 2π|α₂(τ)|²/(Lδq)} and the mirror for E₂.
pub fn coherent_evolve(
    inp: &CoherentAmplitudes,
    grid: &ModeGrid,
    angles: &XpmAngles,
    z: f64,
    t: f64,
    v_g: f64,
) -> (C64, C64) {
    let tau = t - z / v_g;
    let a1 = coherent_envelope(&inp.alpha1, grid, tau);
    let a2 = coherent_envelope(&inp.alpha2, grid, tau);
    (coherent_factor(a1, a2.norm_sqr(), angles.theta1, grid), coherent_factor(a2, a1.norm_sqr(), angles.theta2, grid))
}

/// α·exp{(e^{iθ}−1)·2π n/(Lδq)} for partner intensity `n`.
pub fn coherent_factor(alpha: C64, partner_intensity: f64, theta: f64, grid: &ModeGrid) -> C64 {
    let scale = 2.0 * PI * partner_intensity / (grid.length * grid.dq());
    let e = C64::new(theta.cos() - 1.0, theta.sin()) * scale;
    alpha * e.exp()
}

/// Single-photon wavepacket Σ_q ξ^q a_q†|0⟩.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinglePhotonState {
    #[serde(serialize_with = "serialize_complex")]
    pub xi: Vec<C64>,
}

impl SinglePhotonState {
    pub fn from_amplitudes(mut xi: Vec<C64>) -> Result<Self> {
        let n: f64 = xi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(invalid("xi", "amplitudes must be finite and not all zero"));
        }
        xi.iter_mut().for_each(|c| *c /= n);
        Ok(Self { xi })
    }

    /// Gaussian wavepacket centred at `center` with spectral intensity
    /// standard deviation `sigma_q`; |f|² then has spatial std 1/(2σ_q).
    pub fn gaussian(grid: &ModeGrid, center: f64, sigma_q: f64) -> Result<Self> {
        if !(sigma_q > 0.0) {
            return Err(invalid("sigma_q", "must be > 0"));
        }
        let xi = (0..grid.m)
            .map(|k| {
                let q = grid.q(k);
                grid.wave(k, -center) * (-(q * q) / (4.0 * sigma_q * sigma_q)).exp()
            })
            .collect();
        Self::from_amplitudes(xi)
    }

    /// Flat spectrum over the whole band: the most compact band-limited photon.
    pub fn flat(grid: &ModeGrid, center: f64) -> Self {
        let xi = (0..grid.m).map(|k| grid.wave(k, -center)).collect();
        Self::from_amplitudes(xi).expect("nonzero by construction")
    }

    pub fn norm_sqr(&self) -> f64 {
        self.xi.iter().map(|c| c.norm_sqr()).sum()
    }

    /// f(z) = Σ_q ξ^q e^{iqz}.
    pub fn envelope(&self, grid: &ModeGrid, z: f64) -> C64 {
        self.xi.iter().enumerate().map(|(k, c)| c * grid.wave(k, z)).sum()
    }
}

/// Fraction of a Gaussian spectrum |ξ(q)|² ∝ exp(−q²/(2σ_q²)) lying beyond
/// the band edge δq/2, summed on the mode lattice extended past the band.
pub fn gaussian_out_of_band(grid: &ModeGrid, sigma_q: f64) -> f64 {
    let s = grid.spacing();
    let w = |n: i64| (-((n as f64 * s).powi(2)) / (2.0 * sigma_q * sigma_q)).exp();
    let h = grid.half();
    let inside: f64 = (-h..=h).map(w).sum();
    let mut outside = 0.0;
    let mut n = h + 1;
    loop {
        let t = 2.0 * w(n);
        outside += t;
        if t < 1e-300 || t < 1e-20 * outside {
            break;
        }
        n += 1;
    }
    outside / (inside + outside)
}

/// Shift between the free-space coordinate of a photon that has crossed
/// the medium and the lab frame: X = L(c/v_g − 1) − ct.
fn exit_shift(length: f64, v_g: f64, t: f64) -> f64 {
    length * (C_CM_PER_S / v_g - 1.0) - C_CM_PER_S * t
}

/// ⟨I_j(z, t)⟩: |f(z − ct)|² before the medium, |f(zc/v_g − ct)|² inside,
/// |f(z + L(c/v_g − 1) − ct)|² after it.
pub fn single_photon_intensity(state: &SinglePhotonState, grid: &ModeGrid, z: f64, t: f64, v_g: f64) -> f64 {
    let c = C_CM_PER_S;
    let arg = if z < 0.0 {
        z - c * t
    } else if z < grid.length {
        z * c / v_g - c * t
    } else {
        z + exit_shift(grid.length, v_g, t)
    };
    state.envelope(grid, arg).norm_sqr()
}

/// Equal-time two-photon wavefunction after both photons left the medium,
/// f_i(u)f_j(u′) + f_i(u)f_j(u)·sinc(δq(z′−z)/2)(e^{iθ}−1) with
/// u = z + L(c/v_g−1) − ct. The division-free form is used throughout.
#[allow(clippy::too_many_arguments)]
pub fn two_photon_wavefunction(
    fi: &SinglePhotonState,
    fj: &SinglePhotonState,
    grid: &ModeGrid,
    theta: f64,
    z: f64,
    z_prime: f64,
    t: f64,
    v_g: f64,
) -> C64 {
    let x = exit_shift(grid.length, v_g, t);
    let (u, up) = (z + x, z_prime + x);
    let fi_u = fi.envelope(grid, u);
    let kernel = sinc(grid.dq() * (z_prime - z) / 2.0);
    fi_u * fj.envelope(grid, up) + fi_u * fj.envelope(grid, u) * kernel * C64::new(theta.cos() - 1.0, theta.sin())
}

/// General-time form Ψ(z,t; z′,t′) with τ = t − L/v_g − (z−L)/c and the
/// kernel sinc(δω(τ−τ′)/2), δω = cδq.
#[allow(clippy::too_many_arguments)]
pub fn two_photon_wavefunction_general(
    fi: &SinglePhotonState,
    fj: &SinglePhotonState,
    grid: &ModeGrid,
    theta_i: f64,
    z: f64,
    t: f64,
    z_prime: f64,
    t_prime: f64,
    v_g: f64,
) -> C64 {
    let c = C_CM_PER_S;
    let l = grid.length;
    let tau = t - l / v_g - (z - l) / c;
    let tau_p = t_prime - l / v_g - (z_prime - l) / c;
    let fi_u = fi.envelope(grid, -c * tau);
    let kernel = sinc(c * grid.dq() * (tau - tau_p) / 2.0);
    fi_u * fj.envelope(grid, -c * tau_p)
        + fi_u * fj.envelope(grid, -c * tau) * kernel * C64::new(theta_i.cos() - 1.0, theta_i.sin())
}

/// Two-photon amplitudes ξ^{qq′}, row-major with the first photon's mode as row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoPhotonAmplitudes {
    pub m: usize,
    #[serde(serialize_with = "serialize_complex")]
    pub data: Vec<C64>,
}

impl TwoPhotonAmplitudes {
    pub fn product(a: &SinglePhotonState, b: &SinglePhotonState) -> Self {
        let m = a.xi.len();
        let data = a.xi.iter().flat_map(|x| b.xi.iter().map(move |y| x * y)).collect();
        Self { m, data }
    }

    pub fn get(&self, k: usize, kp: usize) -> C64 {
        self.data[k * self.m + kp]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> C64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    /// Largest elementwise difference.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

fn serialize_complex<S: serde::Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(2 * v.len()))?;
    for c in v {
        seq.serialize_element(&c.re)?;
        seq.serialize_element(&c.im)?;
    }
    seq.end()
}

/// Sample count per side needed for four points per shortest mode wavelength.
pub fn min_samples(grid: &ModeGrid) -> usize {
    2 * (grid.m - 1).max(1)
}

/// ξ^{qq′} = (1/L²)∬ Ψ(z,z′) e^{−iqz}e^{−iq′z′} on z_i = iL/n, given Ψ
/// row-major over (z_i, z′_j).
pub fn state_amplitudes(psi: &[C64], n: usize, grid: &ModeGrid) -> Result<TwoPhotonAmplitudes> {
    if psi.len() != n * n {
        return Err(Error::Grid(format!("expected {n}×{n} samples, got {}", psi.len())));
    }
    if n < min_samples(grid) {
        return Err(Error::Grid(format!(
            "{n} samples per side is below 4 per shortest mode wavelength (need {})",
            min_samples(grid)
        )));
    }
    let m = grid.m;
    let h = grid.half();
    // w[k][i] = e^{−iq_k z_i}, with the phase reduced exactly as an integer fraction of n
    let w: Vec<C64> = (0..m)
        .flat_map(|k| {
            let num = k as i64 - h;
            (0..n).map(move |i| {
                let r = (num * i as i64).rem_euclid(n as i64) as f64 / n as f64;
                C64::from_polar(1.0, -2.0 * PI * r)
            })
        })
        .collect();
    // t[i][b] = Σ_j Ψ[i][j] w[b][j]
    let t: Vec<C64> = psi
        .par_chunks(n)
        .flat_map_iter(|row| {
            let w = &w;
            (0..m).map(move |b| row.iter().zip(&w[b * n..(b + 1) * n]).map(|(p, x)| p * x).sum::<C64>())
        })
        .collect();
    let scale = 1.0 / (n * n) as f64;
    let data: Vec<C64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|a| {
            let (w, t) = (&w, &t);
            (0..m).map(move |b| {
                let mut acc = ZERO;
                for i in 0..n {
                    acc += w[a * n + i] * t[i * m + b];
                }
                acc * scale
            })
        })
        .collect();
    Ok(TwoPhotonAmplitudes { m, data })
}

/// Samples Ψ(z, z′) row-major on the n×n grid z_i = iL/n.
pub fn sample_on_grid(grid: &ModeGrid, n: usize, psi: impl Fn(f64, f64) -> C64 + Sync) -> Vec<C64> {
    let dz = grid.length / n as f64;
    (0..n * n).into_par_iter().map(|idx| psi((idx / n) as f64 * dz, (idx % n) as f64 * dz)).collect()
}

/// Equal-time wavefunction of the closed form on the n×n grid; envelopes
/// are evaluated once per coordinate.
pub fn sample_closed_form(
    fi: &SinglePhotonState,
    fj: &SinglePhotonState,
    grid: &ModeGrid,
    theta: f64,
    t: f64,
    v_g: f64,
    n: usize,
) -> Vec<C64> {
    let x = exit_shift(grid.length, v_g, t);
    let dz = grid.length / n as f64;
    let fi_u: Vec<C64> = (0..n).map(|i| fi.envelope(grid, i as f64 * dz + x)).collect();
    let fj_u: Vec<C64> = (0..n).map(|i| fj.envelope(grid, i as f64 * dz + x)).collect();
    let phase = C64::new(theta.cos() - 1.0, theta.sin());
    let dq = grid.dq();
    (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let kernel = sinc(dq * (j as f64 - i as f64) * dz / 2.0);
            fi_u[i] * fj_u[j] + fi_u[i] * fj_u[i] * kernel * phase
        })
        .collect()
}

/// Whether translation phases e^{i(q+q′)X} are kept or dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeConvention {
    Exact,
    /// Output read at t ≃ L/v_g with the translation phases set to 1.
    DropTranslation,
}

/// Exact unitary evolution of a photon pair through the medium, read out at time `t`.
pub fn evolve_pair(
    input: &TwoPhotonAmplitudes,
    grid: &ModeGrid,
    theta: f64,
    t: f64,
    v_g: f64,
    convention: TimeConvention,
) -> TwoPhotonAmplitudes {
    let m = input.m;
    let mut data = input.data.clone();
    for k_sum in 0..(2 * m - 1) {
        let lo = k_sum.saturating_sub(m - 1);
        let hi = k_sum.min(m - 1);
        let count = hi - lo + 1;
        let s: C64 = (lo..=hi).map(|a| data[a * m + (k_sum - a)]).sum();
        let phi = theta * count as f64 / m as f64;
        let f = C64::new(phi.cos() - 1.0, phi.sin()) * s / count as f64;
        for a in lo..=hi {
            data[a * m + (k_sum - a)] += f;
        }
    }
    if convention == TimeConvention::Exact {
        let x = exit_shift(grid.length, v_g, t);
        let h = grid.half();
        for (idx, c) in data.iter_mut().enumerate() {
            let total = (idx / m) as i64 + (idx % m) as i64 - 2 * h;
            let cycles = (total as f64 * (x / grid.length)).rem_euclid(1.0);
            *c *= C64::from_polar(1.0, 2.0 * PI * cycles);
        }
    }
    TwoPhotonAmplitudes { m, data }
}

/// Slow-light quantities the gate metrics need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XpmMedium {
    /// Group velocity v_g (cm/s).
    pub v_g: f64,
    /// |Ω_d|² (rad²/s²).
    pub omega_sq: f64,
    /// Single-photon coupling g (rad/s).
    pub g_coupling: f64,
}

impl XpmMedium {
    pub fn from_params(d: &DerivedParams, z: &DriveZeemanConfig) -> Self {
        Self { v_g: d.v_g, omega_sq: z.omega_sq(), g_coupling: d.g_coupling }
    }

    /// η = g²/(v_g|Ω_d|²).
    pub fn eta(&self) -> f64 {
        self.g_coupling * self.g_coupling / (self.v_g * self.omega_sq)
    }
}

/// Gate metrics for a photon pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CphaseMetrics {
    pub theta: f64,
    /// |⟨ψ_in|e^{−iθ}|ψ_out⟩|; insensitive to the conditional phase itself.
    pub fidelity: f64,
    /// |⟨ψ_in|ψ_out⟩|: fidelity to the unmodified input.
    pub input_fidelity: f64,
    /// Process fidelity of diag(1, 1, 1, ⟨ψ_in|ψ_out⟩) against diag(1, 1, 1, e^{iθ}).
    pub process_fidelity: f64,
    #[serde(serialize_with = "serialize_one")]
    pub overlap: C64,
    pub norm_out: f64,
    pub pi_condition: bool,
}

fn serialize_one<S: serde::Serializer>(c: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    serialize_complex(std::slice::from_ref(c), s)
}

impl CphaseMetrics {
    fn from_overlap(theta: f64, overlap: C64, norm_out: f64, pi_condition: bool) -> Self {
        let rot = C64::from_polar(1.0, -theta);
        Self {
            theta,
            fidelity: (rot * overlap).norm(),
            input_fidelity: overlap.norm(),
            process_fidelity: (3.0 + rot * overlap).norm_sqr() / 16.0,
            overlap,
            norm_out,
            pi_condition,
        }
    }
}

/// Runs the exact evolution and reads the pair out at t = L/v_g, where
/// the translation phases e^{i(q+q′)X} with X = −L are exactly 1 on the grid.
pub fn cphase_metrics(
    a: &SinglePhotonState,
    b: &SinglePhotonState,
    grid: &ModeGrid,
    theta: f64,
    medium: &XpmMedium,
) -> CphaseMetrics {
    let input = TwoPhotonAmplitudes::product(a, b);
    let out = evolve_pair(&input, grid, theta, grid.length / medium.v_g, medium.v_g, TimeConvention::DropTranslation);
    let pi = pi_condition(grid, medium.v_g, medium.omega_sq, medium.g_coupling);
    CphaseMetrics::from_overlap(theta, input.inner(&out), out.norm_sqr(), pi)
}

/// The same metrics with ψ_out taken from the closed-form wavefunction,
/// projected onto the modes by quadrature on `n` points per side.
pub fn cphase_metrics_closed_form(
    a: &SinglePhotonState,
    b: &SinglePhotonState,
    grid: &ModeGrid,
    theta: f64,
    medium: &XpmMedium,
    n: usize,
) -> Result<CphaseMetrics> {
    let input = TwoPhotonAmplitudes::product(a, b);
    let t = grid.length / medium.v_g;
    let psi = sample_closed_form(a, b, grid, theta, t, medium.v_g, n);
    let out = state_amplitudes(&psi, n, grid)?;
    let pi = pi_condition(grid, medium.v_g, medium.omega_sq, medium.g_coupling);
    Ok(CphaseMetrics::from_overlap(theta, input.inner(&out), out.norm_sqr(), pi))
}

/// (2π/δq)∫|F_a|²|F_b|² dz with F = f/√L: the weight of the pair inside
/// the interaction range. Bounded by 2/3 for band-limited photons.
pub fn contact_weight(a: &SinglePhotonState, b: &SinglePhotonState, grid: &ModeGrid, samples: usize) -> f64 {
    let dz = grid.length / samples as f64;
    let sum: f64 = (0..samples)
        .map(|i| {
            let z = i as f64 * dz;
            a.envelope(grid, z).norm_sqr() * b.envelope(grid, z).norm_sqr()
        })
        .sum();
    2.0 * PI / grid.dq() * sum * dz / (grid.length * grid.length)
}
