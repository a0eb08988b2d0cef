//! Brute-force semiclassical Maxwell–Bloch integrator for the tripod medium.
//!
//! The atomic state is the full 4×4 matrix of expectation values
//! σ_μν = ⟨|μ⟩⟨ν|⟩ (levels |1⟩,|2⟩,|3⟩,|4⟩ stored at indices 0..4) and
//! the probe envelopes are advanced in the retarded time t′ = t − z/c,
//! which is the characteristic coordinate of the free-space advection
//! operator. Fields are carried internally in units of Γ; every public
//! quantity is CGS.
//!
//! Atoms are stepped with classical RK4 in t′ (field values at half steps
//! come from cubic interpolation of the sampled envelope); the envelope
//! profile is stepped with RK4 in z, each stage integrating the atoms over
//! the whole time window. Both directions are fourth order.

use std::io::{Read, Write};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::output::fmt_sig;
use crate::units::{DerivedParams, DriveZeemanConfig, MediumParams, C_CM_PER_S};

/// Largest accepted dt·Γ.
pub const MAX_DT_GAMMA: f64 = 0.1;
/// Default cap on stored complex field samples.
pub const DEFAULT_SAMPLE_CAP: usize = 200_000_000;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-9;

type Mat4 = [[C64; 4]; 4];
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Branching of the |3⟩ decay into |1⟩, |2⟩, |4⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branching {
    pub to1: f64,
    pub to2: f64,
    pub to4: f64,
}

impl Default for Branching {
    fn default() -> Self {
        Self { to1: 1.0 / 3.0, to2: 1.0 / 3.0, to4: 1.0 / 3.0 }
    }
}

impl Branching {
    pub fn validate(&self) -> Result<()> {
        if [self.to1, self.to2, self.to4].iter().any(|b| !(*b >= 0.0)) {
            return Err(invalid("branching", "ratios must be >= 0"));
        }
        if (self.to1 + self.to2 + self.to4 - 1.0).abs() > 1e-12 {
            return Err(invalid("branching", "ratios must sum to 1"));
        }
        Ok(())
    }
}

/// Everything the integrator needs about the medium and the drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MbMedium {
    pub gamma: f64,
    pub gamma_c: f64,
    /// Linear resonant absorption coefficient (cm⁻¹); zero means vacuum.
    pub a0: f64,
    pub length: f64,
    pub omega_rabi: C64,
    /// Ground Zeeman shift Δ.
    pub delta: f64,
    pub delta_d: f64,
    /// Probe carrier detuning δ = ω_p − ω₃₁⁰.
    pub probe_detuning: f64,
    pub branching: Branching,
    /// Populations of |1⟩, |2⟩, |4⟩ the ground manifold relaxes to at rate γ_c.
    pub ground_populations: [f64; 3],
}

impl MbMedium {
    pub fn from_params(p: &MediumParams, d: &DerivedParams, z: &DriveZeemanConfig) -> Self {
        Self {
            gamma: p.gamma,
            gamma_c: p.gamma_c,
            a0: d.a0,
            length: p.length,
            omega_rabi: z.omega_rabi,
            delta: z.delta,
            delta_d: z.delta_d,
            probe_detuning: p.probe_detuning(),
            branching: Branching::default(),
            ground_populations: [0.5, 0.5, 0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(invalid("gamma", "must be > 0"));
        }
        if !(self.gamma_c >= 0.0) {
            return Err(invalid("gamma_c", "must be >= 0"));
        }
        if !(self.a0 >= 0.0) {
            return Err(invalid("a0", "must be >= 0"));
        }
        if !(self.length > 0.0) {
            return Err(invalid("length", "must be > 0"));
        }
        self.branching.validate()?;
        let g = self.ground_populations;
        if g.iter().any(|x| !(*x >= 0.0)) || (g.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(invalid("ground_populations", "must be >= 0 and sum to 1"));
        }
        Ok(())
    }

    fn rates(&self) -> Rates {
        let g = self.gamma;
        Rates {
            delta1: (self.probe_detuning - self.delta) / g,
            delta2: (self.probe_detuning + self.delta) / g,
            delta_d: self.delta_d / g,
            omega: self.omega_rabi / g,
            gamma_c: self.gamma_c / g,
            branching: self.branching,
            target: self.ground_populations,
        }
    }
}

/// Rates in units of Γ.
#[derive(Debug, Clone, Copy)]
struct Rates {
    delta1: f64,
    delta2: f64,
    delta_d: f64,
    omega: C64,
    gamma_c: f64,
    branching: Branching,
    target: [f64; 3],
}

/// Expectation values σ_μν at one point of the medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomicState {
    s: Mat4,
}

impl AtomicState {
    /// Incoherent ground-state mixture with the given populations of |1⟩, |2⟩, |4⟩.
    pub fn ground(populations: [f64; 3]) -> Self {
        let mut s = [[ZERO; 4]; 4];
        s[0][0] = C64::new(populations[0], 0.0);
        s[1][1] = C64::new(populations[1], 0.0);
        s[3][3] = C64::new(populations[2], 0.0);
        Self { s }
    }

    /// σ_μν with 1-based level labels.
    pub fn sigma(&self, mu: usize, nu: usize) -> C64 {
        self.s[mu - 1][nu - 1]
    }

    pub fn population(&self, mu: usize) -> f64 {
        self.s[mu - 1][mu - 1].re
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|k| self.s[k][k].re).sum()
    }

    /// Largest excess of |σ_μν|² over σ_μμ σ_νν.
    pub fn positivity_excess(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for mu in 0..4 {
            for nu in mu + 1..4 {
                let bound = self.s[mu][mu].re * self.s[nu][nu].re;
                worst = worst.max(self.s[mu][nu].norm_sqr() - bound);
            }
        }
        worst
    }

    fn is_finite(&self) -> bool {
        self.s.iter().flatten().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    fn check(&self, z_index: usize, t_index: usize) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::Invariant { z_index, t_index, what: format!("trace = {tr}") });
        }
        let excess = self.positivity_excess();
        if excess > POSITIVITY_TOL {
            return Err(Error::Invariant { z_index, t_index, what: format!("positivity excess {excess:e}") });
        }
        Ok(())
    }
}

/// Time derivative of σ for probe Rabi frequencies `a` = gE₁/Γ and `b` = gE₂/Γ.
///
/// The coherent part is dσ_μν/dt = i Σ_k (H_kμ σ_kν − σ_μk H_νk). Only the
/// upper triangle is evaluated; the rest follows from hermiticity.
#[inline]
fn rhs(s: &Mat4, a: C64, b: C64, r: &Rates) -> Mat4 {
    let mut h = [[ZERO; 4]; 4];
    h[0][0] = C64::new(r.delta1, 0.0);
    h[1][1] = C64::new(r.delta2, 0.0);
    h[3][3] = C64::new(r.delta_d, 0.0);
    h[2][0] = -a;
    h[0][2] = -a.conj();
    h[2][1] = -b;
    h[1][2] = -b.conj();
    h[2][3] = -r.omega;
    h[3][2] = -r.omega.conj();

    let mut ds = [[ZERO; 4]; 4];
    for mu in 0..4 {
        for nu in mu..4 {
            let mut acc = ZERO;
            for k in 0..4 {
                acc += h[k][mu] * s[k][nu] - s[mu][k] * h[nu][k];
            }
            ds[mu][nu] = C64::new(-acc.im, acc.re);
        }
    }

    // relaxation
    let gc = r.gamma_c;
    for mu in 0..4 {
        for nu in mu + 1..4 {
            let rate = if mu == 2 || nu == 2 { 0.5 } else { gc };
            ds[mu][nu] -= s[mu][nu] * rate;
        }
    }
    let p3 = s[2][2].re;
    let ground = s[0][0].re + s[1][1].re + s[3][3].re;
    let br = r.branching;
    ds[2][2].re -= p3;
    ds[0][0].re += br.to1 * p3 + gc * (r.target[0] * ground - s[0][0].re);
    ds[1][1].re += br.to2 * p3 + gc * (r.target[1] * ground - s[1][1].re);
    ds[3][3].re += br.to4 * p3 + gc * (r.target[2] * ground - s[3][3].re);

    #[allow(clippy::needless_range_loop)]
    for mu in 0..4 {
        ds[mu][mu].im = 0.0;
        for nu in 0..mu {
            ds[mu][nu] = ds[nu][mu].conj();
        }
    }
    ds
}

#[inline]
fn axpy(s: &Mat4, k: &Mat4, h: f64) -> Mat4 {
    let mut out = *s;
    for mu in 0..4 {
        for nu in 0..4 {
            out[mu][nu] += k[mu][nu] * h;
        }
    }
    out
}

/// One RK4 step of length `h` (Γ units) with fields sampled at t, t+h/2, t+h.
#[inline]
fn rk4_step(s: &Mat4, fields: [(C64, C64); 3], h: f64, r: &Rates) -> Mat4 {
    let k1 = rhs(s, fields[0].0, fields[0].1, r);
    let k2 = rhs(&axpy(s, &k1, 0.5 * h), fields[1].0, fields[1].1, r);
    let k3 = rhs(&axpy(s, &k2, 0.5 * h), fields[1].0, fields[1].1, r);
    let k4 = rhs(&axpy(s, &k3, h), fields[2].0, fields[2].1, r);
    let mut out = *s;
    for mu in 0..4 {
        for nu in 0..4 {
            out[mu][nu] += (k1[mu][nu] + (k2[mu][nu] + k3[mu][nu]) * 2.0 + k4[mu][nu]) * (h / 6.0);
        }
    }
    out
}

fn check_dt(dt: f64, gamma: f64) -> Result<()> {
    let dtg = dt * gamma;
    if !(dtg > 0.0 && dtg < MAX_DT_GAMMA) {
        return Err(Error::Grid(format!("time step must satisfy 0 < dt·Γ < {MAX_DT_GAMMA}, got {dtg}")));
    }
    Ok(())
}

/// Advances one atom by `dt` seconds with constant local probe Rabi
/// frequencies `e1`, `e2` (rad/s). Noise operators are dropped.
pub fn evolve_atom(state: &AtomicState, e1: C64, e2: C64, medium: &MbMedium, dt: f64) -> Result<AtomicState> {
    check_dt(dt, medium.gamma)?;
    let r = medium.rates();
    let (a, b) = (e1 / medium.gamma, e2 / medium.gamma);
    let s = rk4_step(&state.s, [(a, b); 3], dt * medium.gamma, &r);
    let out = AtomicState { s };
    if !out.is_finite() {
        return Err(Error::StepSize { time: dt, dt_gamma: dt * medium.gamma });
    }
    Ok(out)
}

/// Integrates one atom for `duration` seconds under constant fields.
pub fn relax(state: &AtomicState, e1: C64, e2: C64, medium: &MbMedium, dt: f64, duration: f64) -> Result<AtomicState> {
    check_dt(dt, medium.gamma)?;
    let steps = (duration / dt).ceil() as usize;
    let r = medium.rates();
    let (a, b) = (e1 / medium.gamma, e2 / medium.gamma);
    let h = dt * medium.gamma;
    let mut s = state.s;
    for k in 0..steps {
        s = rk4_step(&s, [(a, b); 3], h, &r);
        if k % 1024 == 0 && !(AtomicState { s }).is_finite() {
            return Err(Error::StepSize { time: k as f64 * dt, dt_gamma: h });
        }
    }
    let out = AtomicState { s };
    if !out.is_finite() {
        return Err(Error::StepSize { time: duration, dt_gamma: h });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    Gaussian,
    Sech,
    /// Flat top with tanh edges of width T_p/20.
    FlatTop,
}

/// Input probe envelope at z = 0. `duration` is the intensity FWHM for
/// Gaussian and sech pulses and the plateau length for flat-top pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub shape: PulseShape,
    /// Peak Rabi frequency gE (rad/s); the phase sets the carrier phase.
    pub peak: C64,
    pub duration: f64,
    pub center: f64,
}

impl PulseSpec {
    pub fn off() -> Self {
        Self { shape: PulseShape::Gaussian, peak: ZERO, duration: 1.0, center: 0.0 }
    }

    pub fn gaussian(peak: f64, duration: f64, center: f64) -> Self {
        Self { shape: PulseShape::Gaussian, peak: C64::new(peak, 0.0), duration, center }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(invalid("pulse.duration", "must be > 0"));
        }
        if !(self.peak.norm() >= 0.0) {
            return Err(invalid("pulse.peak", "must be finite"));
        }
        Ok(())
    }

    pub fn envelope(&self, t: f64) -> C64 {
        let x = t - self.center;
        let amp = match self.shape {
            PulseShape::Gaussian => (-2.0 * std::f64::consts::LN_2 * (x / self.duration).powi(2)).exp(),
            PulseShape::Sech => {
                // sech² intensity FWHM = 2 w acosh(√2)
                let w = self.duration / (2.0 * std::f64::consts::SQRT_2.acosh());
                1.0 / (x / w).cosh()
            }
            PulseShape::FlatTop => {
                let rise = self.duration / 20.0;
                let half = 0.5 * self.duration;
                0.5 * (((x + half) / rise).tanh() - ((x - half) / rise).tanh())
            }
        };
        self.peak * amp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Number of z steps across the medium.
    pub nz: usize,
    /// Number of retarded-time samples.
    pub nt: usize,
    /// Retarded-time step (s).
    pub dt: f64,
    /// First retarded time (s).
    pub t0: f64,
    /// Store every n-th z slice; must divide `nz`.
    pub record_every: usize,
    pub max_samples: usize,
}

impl GridSpec {
    pub fn new(nz: usize, nt: usize, dt: f64, t0: f64) -> Self {
        Self { nz, nt, dt, t0, record_every: nz.max(1), max_samples: DEFAULT_SAMPLE_CAP }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nt).map(|k| self.t0 + k as f64 * self.dt).collect()
    }

    fn validate(&self, gamma: f64) -> Result<()> {
        if self.nz == 0 || self.nt < 2 {
            return Err(Error::Grid(format!("need nz >= 1 and nt >= 2, got {}×{}", self.nz, self.nt)));
        }
        if self.record_every == 0 || !self.nz.is_multiple_of(self.record_every) {
            return Err(Error::Grid(format!("record_every = {} must divide nz = {}", self.record_every, self.nz)));
        }
        check_dt(self.dt, gamma)?;
        let rows = self.nz / self.record_every + 1;
        let required = 2 * rows * self.nt;
        if required > self.max_samples {
            return Err(Error::MemoryCap { required, cap: self.max_samples });
        }
        Ok(())
    }
}

/// Sampled probe envelopes E₁, E₂ (Rabi units, rad/s) on the recorded
/// (z, t′) grid, stored row-major with one row per recorded z slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub nz: usize,
    pub nt: usize,
    /// Spacing between recorded z slices (cm).
    pub dz: f64,
    /// Retarded-time step (s).
    pub dt: f64,
    pub t0: f64,
    pub e1: Vec<C64>,
    pub e2: Vec<C64>,
}

impl SpaceTimeField {
    pub fn row1(&self, iz: usize) -> &[C64] {
        &self.e1[iz * self.nt..(iz + 1) * self.nt]
    }

    pub fn row2(&self, iz: usize) -> &[C64] {
        &self.e2[iz * self.nt..(iz + 1) * self.nt]
    }

    pub fn input(&self) -> (&[C64], &[C64]) {
        (self.row1(0), self.row2(0))
    }

    pub fn output(&self) -> (&[C64], &[C64]) {
        (self.row1(self.nz - 1), self.row2(self.nz - 1))
    }

    pub fn z(&self, iz: usize) -> f64 {
        iz as f64 * self.dz
    }

    pub fn retarded_time(&self, it: usize) -> f64 {
        self.t0 + it as f64 * self.dt
    }

    /// Laboratory time of sample (iz, it): t = t′ + z/c.
    pub fn lab_time(&self, iz: usize, it: usize) -> f64 {
        self.retarded_time(it) + self.z(iz) / C_CM_PER_S
    }

    /// Little-endian dump: magic `TRIPODMB`, u32 version (1), u32 zero,
    /// u64 nz, u64 nt, f64 dz (cm), f64 dt (s), f64 t0 (s), then E₁ and E₂
    /// each as nz·nt row-major (f32 re, f32 im) pairs.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        w.write_all(&(self.nz as u64).to_le_bytes())?;
        w.write_all(&(self.nt as u64).to_le_bytes())?;
        for x in [self.dz, self.dt, self.t0] {
            w.write_all(&x.to_le_bytes())?;
        }
        for c in self.e1.iter().chain(&self.e2) {
            w.write_all(&(c.re as f32).to_le_bytes())?;
            w.write_all(&(c.im as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Grid("not a field dump (bad magic)".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != 1 {
            return Err(Error::Grid("unsupported field dump version".into()));
        }
        r.read_exact(&mut b4)?;
        let mut next_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let nz = next_u64(&mut r)? as usize;
        let nt = next_u64(&mut r)? as usize;
        let dz = f64::from_bits(next_u64(&mut r)?);
        let dt = f64::from_bits(next_u64(&mut r)?);
        let t0 = f64::from_bits(next_u64(&mut r)?);
        let n = nz.checked_mul(nt).ok_or_else(|| Error::Grid("header dimensions overflow".into()))?;
        let read_plane = |r: &mut R| -> Result<Vec<C64>> {
            let mut buf = vec![0u8; n * 8];
            r.read_exact(&mut buf)?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| {
                    let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                    let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                    C64::new(re as f64, im as f64)
                })
                .collect())
        };
        let e1 = read_plane(&mut r)?;
        let e2 = read_plane(&mut r)?;
        Ok(Self { nz, nt, dz, dt, t0, e1, e2 })
    }

    /// Input and output envelopes against retarded time.
    pub fn write_boundary_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "t_retarded_s,e1_in_re_rad_per_s,e1_in_im_rad_per_s,e2_in_re_rad_per_s,e2_in_im_rad_per_s,\
             e1_out_re_rad_per_s,e1_out_im_rad_per_s,e2_out_re_rad_per_s,e2_out_im_rad_per_s"
        )?;
        let (i1, i2) = self.input();
        let (o1, o2) = self.output();
        for k in 0..self.nt {
            let cells =
                [self.retarded_time(k), i1[k].re, i1[k].im, i2[k].re, i2[k].im, o1[k].re, o1[k].im, o2[k].re, o2[k].im];
            let s: Vec<String> = cells.iter().map(|&x| fmt_sig(x)).collect();
            writeln!(w, "{}", s.join(","))?;
        }
        Ok(())
    }
}

const BINARY_MAGIC: &[u8; 8] = b"TRIPODMB";

/// Field value midway between samples k and k+1 by four-point Lagrange interpolation.
#[inline]
fn midpoint(e: &[C64], k: usize) -> C64 {
    let n = e.len();
    if n < 4 {
        return (e[k] + e[k + 1]) * 0.5;
    }
    if k == 0 {
        (e[0] * 5.0 + e[1] * 15.0 - e[2] * 5.0 + e[3]) / 16.0
    } else if k + 2 >= n {
        (e[n - 4] - e[n - 3] * 5.0 + e[n - 2] * 15.0 + e[n - 1] * 5.0) / 16.0
    } else {
        (-e[k - 1] + (e[k] + e[k + 1]) * 9.0 - e[k + 2]) / 16.0
    }
}

/// Integrates a column of atoms through the whole time window under the
/// given envelopes (Γ units) and returns σ₁₃(t′), σ₂₃(t′).
fn atom_response(
    e1: &[C64],
    e2: &[C64],
    r: &Rates,
    h: f64,
    init: &AtomicState,
    z_index: usize,
) -> Result<(Vec<C64>, Vec<C64>)> {
    let n = e1.len();
    let mut p1 = Vec::with_capacity(n);
    let mut p2 = Vec::with_capacity(n);
    let mut s = init.s;
    p1.push(s[0][2]);
    p2.push(s[1][2]);
    for k in 0..n - 1 {
        let fields = [(e1[k], e2[k]), (midpoint(e1, k), midpoint(e2, k)), (e1[k + 1], e2[k + 1])];
        s = rk4_step(&s, fields, h, r);
        let st = AtomicState { s };
        if !st.is_finite() {
            return Err(Error::StepSize { time: (k + 1) as f64 * h, dt_gamma: h });
        }
        st.check(z_index, k + 1)?;
        p1.push(s[0][2]);
        p2.push(s[1][2]);
    }
    Ok((p1, p2))
}

/// Propagates the two probe pulses through the medium.
///
/// The returned record holds every `record_every`-th z slice, always
/// including the entrance (row 0) and exit (last row).
pub fn propagate(pulses: [PulseSpec; 2], medium: &MbMedium, grid: &GridSpec) -> Result<SpaceTimeField> {
    medium.validate()?;
    pulses[0].validate()?;
    pulses[1].validate()?;
    grid.validate(medium.gamma)?;

    let g = medium.gamma;
    let times = grid.times();
    let mut e1: Vec<C64> = times.iter().map(|&t| pulses[0].envelope(t) / g).collect();
    let mut e2: Vec<C64> = times.iter().map(|&t| pulses[1].envelope(t) / g).collect();

    let rows = grid.nz / grid.record_every + 1;
    let mut rec1 = Vec::with_capacity(rows * grid.nt);
    let mut rec2 = Vec::with_capacity(rows * grid.nt);
    rec1.extend(e1.iter().map(|c| c * g));
    rec2.extend(e2.iter().map(|c| c * g));

    let dz = medium.length / grid.nz as f64;
    let r = medium.rates();
    let h = grid.dt * g;
    let init = AtomicState::ground(medium.ground_populations);
    // ∂z Ẽ_j = i (a0/2) σ_j3
    let coupling = C64::new(0.0, 0.5 * medium.a0);

    let source = |f1: &[C64], f2: &[C64], iz: usize| -> Result<(Vec<C64>, Vec<C64>)> {
        let (mut p1, mut p2) = atom_response(f1, f2, &r, h, &init, iz)?;
        p1.iter_mut().for_each(|c| *c *= coupling);
        p2.iter_mut().for_each(|c| *c *= coupling);
        Ok((p1, p2))
    };
    let shifted =
        |base: &[C64], k: &[C64], step: f64| -> Vec<C64> { base.iter().zip(k).map(|(b, k)| b + k * step).collect() };

    for iz in 0..grid.nz {
        if medium.a0 > 0.0 {
            let (k1a, k1b) = source(&e1, &e2, iz)?;
            let (k2a, k2b) = source(&shifted(&e1, &k1a, 0.5 * dz), &shifted(&e2, &k1b, 0.5 * dz), iz)?;
            let (k3a, k3b) = source(&shifted(&e1, &k2a, 0.5 * dz), &shifted(&e2, &k2b, 0.5 * dz), iz)?;
            let (k4a, k4b) = source(&shifted(&e1, &k3a, dz), &shifted(&e2, &k3b, dz), iz)?;
            for k in 0..grid.nt {
                e1[k] += (k1a[k] + (k2a[k] + k3a[k]) * 2.0 + k4a[k]) * (dz / 6.0);
                e2[k] += (k1b[k] + (k2b[k] + k3b[k]) * 2.0 + k4b[k]) * (dz / 6.0);
            }
        }
        if (iz + 1) % grid.record_every == 0 {
            rec1.extend(e1.iter().map(|c| c * g));
            rec2.extend(e2.iter().map(|c| c * g));
        }
    }

    Ok(SpaceTimeField {
        nz: rows,
        nt: grid.nt,
        dz: dz * grid.record_every as f64,
        dt: grid.dt,
        t0: grid.t0,
        e1: rec1,
        e2: rec2,
    })
}

/// Envelope diagnostics used when comparing solver output with analytic curves.
pub mod analysis {
    use num_complex::Complex64 as C64;

    /// Peak time of |E|² by parabolic refinement around the largest sample.
    pub fn peak_time(e: &[C64], t0: f64, dt: f64) -> f64 {
        let (k, _) = e.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, c)| {
            if c.norm_sqr() > acc.1 {
                (i, c.norm_sqr())
            } else {
                acc
            }
        });
        if k == 0 || k + 1 >= e.len() {
            return t0 + k as f64 * dt;
        }
        let (ym, y0, yp) = (e[k - 1].norm_sqr(), e[k].norm_sqr(), e[k + 1].norm_sqr());
        let den = ym - 2.0 * y0 + yp;
        let off = if den != 0.0 { 0.5 * (ym - yp) / den } else { 0.0 };
        t0 + (k as f64 + off) * dt
    }

    pub fn peak_index(e: &[C64]) -> usize {
        e.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, c)| if c.norm_sqr() > acc.1 { (i, c.norm_sqr()) } else { acc })
            .0
    }

    /// ‖a − b‖₂ / ‖b‖₂.
    pub fn relative_l2(a: &[C64], b: &[C64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    /// Σ|E|² dt.
    pub fn fluence(e: &[C64], dt: f64) -> f64 {
        e.iter().map(|c| c.norm_sqr()).sum::<f64>() * dt
    }

    /// Output envelope of probe component `component` (1 or 2) after a
    /// depth `z`, from the steady-state linear response applied to each
    /// spectral component. A component e^{−iνt} sees detuning δ_j + ν, so
    /// Ẽ(z, ν) = Ẽ(0, ν)·exp[i(a0 z/2)·Γσ_j3/(gE_j)(δ_j + ν)]. The input
    /// is zero-padded to at least twice its length to suppress wrap-around.
    pub fn linear_output(
        input: &[C64],
        dt: f64,
        medium: &super::MbMedium,
        component: usize,
        z: f64,
    ) -> crate::Result<Vec<C64>> {
        use rustfft::FftPlanner;
        let sign = match component {
            1 => -1.0,
            2 => 1.0,
            _ => return Err(crate::error::invalid("component", "must be 1 or 2")),
        };
        let delta_j = medium.probe_detuning + sign * medium.delta;
        let n = (2 * input.len()).next_power_of_two();
        let mut buf = vec![C64::new(0.0, 0.0); n];
        buf[..input.len()].copy_from_slice(input);
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut buf);
        let step = 2.0 * std::f64::consts::PI / (n as f64 * dt);
        for (k, c) in buf.iter_mut().enumerate() {
            let omega = if k < n / 2 { k as f64 } else { k as f64 - n as f64 } * step;
            let chi = crate::response::normalized_coherence(
                delta_j - omega,
                medium.delta_d,
                medium.omega_rabi,
                medium.gamma,
                medium.gamma_c,
            )?;
            *c *= (C64::i() * chi * (0.5 * medium.a0 * z)).exp();
        }
        planner.plan_fft_inverse(n).process(&mut buf);
        buf.truncate(input.len());
        buf.iter_mut().for_each(|c| *c /= n as f64);
        Ok(buf)
    }

    /// Wraps a phase into (−π, π].
    pub fn wrap_phase(x: f64) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut y = x.rem_euclid(two_pi);
        if y > std::f64::consts::PI {
            y -= two_pi;
        }
        y
    }
}
