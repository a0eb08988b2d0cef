//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::thread;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tripod_core::bloch::{analysis, propagate, relax, AtomicState, GridSpec, MbMedium, PulseSpec};
use tripod_core::magnetometer::{evaluate, MagnetometerConfig};
use tripod_core::propagation::{coefficients, cw_solution};
use tripod_core::response::{detuning_grid, spectra, steady_state_coherence};
use tripod_core::units::{derive, Absorption, DriveZeemanConfig, Geometry, MediumParams, C_CM_PER_S};
use tripod_core::xpm::{
    coherent_evolve, contact_weight, cphase_metrics, cphase_metrics_closed_form, evolve_pair, gaussian_out_of_band,
    min_samples, state_amplitudes, CoherentAmplitudes, ModeGrid, SinglePhotonState, TimeConvention,
    TwoPhotonAmplitudes, XpmAngles, XpmMedium,
};
use tripod_core::{KappaConvention, C64};

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, pass, detail }
}

const G: f64 = 1e7;

fn medium(gamma_c: f64, length: f64, omega_d_offset: f64) -> MediumParams {
    MediumParams {
        gamma: G,
        gamma_c,
        density: 1e12,
        length,
        area: 1e-2,
        omega_p: 3e15,
        omega_d: 3e15 + omega_d_offset,
        omega_31: 3e15,
        omega_34: 3e15,
        g_f: 0.5,
        g_f_prime: 0.0,
    }
}

fn drive(p: &MediumParams, omega: f64, delta: f64) -> DriveZeemanConfig {
    DriveZeemanConfig::from_zeeman_shift(p, C64::new(omega, 0.0), delta, Geometry::Perpendicular).unwrap()
}

fn criterion_1() -> Vec<Outcome> {
    let start = Instant::now();
    let p = medium(0.0, 1.0, 0.0);
    let z = drive(&p, 0.6 * G, 0.1 * G);
    let grid = detuning_grid(-G, G, 2001);
    let r = spectra(&p, &z, &grid).unwrap();
    let argmin = |v: &[C64]| (0..v.len()).min_by(|&a, &b| v[a].im.abs().total_cmp(&v[b].im.abs())).unwrap();
    let (k1, k2) = (argmin(&r.chi1), argmin(&r.chi2));
    let step = grid[1] - grid[0];
    let at_zero = spectra(&p, &z, &[-0.1 * G, 0.1 * G]).unwrap();
    let zeros_ok = (grid[k1] - 0.1 * G).abs() <= step
        && (grid[k2] + 0.1 * G).abs() <= step
        && at_zero.chi1[1].im.abs() < 1e-9
        && at_zero.chi2[0].im.abs() < 1e-9
        && r.chi1[k1].im.abs() < 1e-9
        && r.chi2[k2].im.abs() < 1e-9;

    let shifted: Vec<f64> = grid.iter().map(|d| d + 0.2 * G).collect();
    let rs = spectra(&p, &z, &shifted).unwrap();
    let shift_err = r.chi2.iter().zip(&rs.chi1).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);

    let bare_p = medium(0.0, 1.0, 5.0 * G);
    let bare = spectra(&bare_p, &drive(&bare_p, 0.0, 0.0), &[0.0]).unwrap().chi1[0];
    let elapsed = start.elapsed().as_secs_f64();
    let bare_ok = (bare - C64::new(0.0, 1.0)).norm() < 5e-4;
    vec![outcome(
        "1",
        zeros_ok && shift_err < 1e-12 && bare_ok && elapsed < 1.0,
        format!(
            "absorption zeros at δ = {:+.4}Γ / {:+.4}Γ with |Im chi| = {:.1e} / {:.1e}; shift identity {:.1e}; bare resonance {:.3} a0; {:.3} s",
            grid[k1] / G,
            grid[k2] / G,
            at_zero.chi1[1].im.abs(),
            at_zero.chi2[0].im.abs(),
            shift_err,
            bare.im,
            elapsed
        ),
    )]
}

fn criterion_2() -> Vec<Outcome> {
    let start = Instant::now();
    let p = MediumParams {
        gamma: 1e7,
        gamma_c: 10.0,
        density: 1e13,
        length: 10.0,
        area: 10.0,
        omega_p: 3e15,
        omega_d: 3e15,
        omega_31: 3e15,
        omega_34: 3e15,
        g_f: 0.5,
        g_f_prime: 0.0,
    };
    let cfg = MagnetometerConfig {
        medium: p,
        absorption: Absorption::from_a0(1e4),
        drive: DriveZeemanConfig::new(&p, C64::new(1e7, 0.0), 1e-12, Geometry::Perpendicular),
        power: 1e4,
        t_m: 1.0,
        quantum_efficiency: 1.0,
        kappa_convention: KappaConvention::Exact,
    };
    let r = evaluate(&cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = (4e-13..=1e-12).contains(&r.b_min) && elapsed < 1.0;
    vec![outcome(
        "2",
        pass,
        format!(
            "B_min = {:.3e} G (root of S = N: {}); {:.3} s",
            r.b_min,
            r.b_root.map_or("none".into(), |b| format!("{b:.3e} G")),
            elapsed
        ),
    )]
}

fn criterion_3() -> Vec<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let omega = rng.random_range(0.7..1.5) * G;
        let gamma_c = rng.random_range(0.01..0.04) * G;
        let m = MbMedium {
            gamma: G,
            gamma_c,
            a0: 1.0,
            length: 1.0,
            omega_rabi: C64::from_polar(omega, rng.random_range(0.0..2.0 * PI)),
            delta: rng.random_range(-0.1..0.1) * G,
            delta_d: rng.random_range(-0.1..0.1) * G,
            probe_detuning: rng.random_range(-0.3..0.3) * G,
            branching: Default::default(),
            ground_populations: [0.5, 0.5, 0.0],
        };
        let e1 = C64::from_polar(1e-5 * G, rng.random_range(0.0..2.0 * PI));
        let e2 = C64::from_polar(1e-5 * G, rng.random_range(0.0..2.0 * PI));
        let s = relax(&AtomicState::ground(m.ground_populations), e1, e2, &m, 0.05 / G, 3000.0 / G).unwrap();
        for (j, e, dj) in [(1, e1, m.probe_detuning - m.delta), (2, e2, m.probe_detuning + m.delta)] {
            let closed = steady_state_coherence(dj, m.delta_d, m.omega_rabi, G, gamma_c).unwrap() * e;
            worst = worst.max((s.sigma(j, 3) - closed).norm() / closed.norm());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    vec![outcome(
        "3",
        worst < 1e-6 && elapsed < 60.0,
        format!("50 random draws: worst relative |σ_j3 − closed form| = {worst:.2e}; {elapsed:.1} s"),
    )]
}

/// Weak adiabatic Gaussian through an a0L = 50 medium (Ω_d = 0.5Γ, γ_c = 0, T_pΓ = 1000).
struct PulseRun {
    medium: MbMedium,
    params: (MediumParams, DriveZeemanConfig),
    dt: f64,
    t0: f64,
    input: (Vec<C64>, Vec<C64>),
    output: (Vec<C64>, Vec<C64>),
    seconds: f64,
}

const A0: f64 = 1e4;
const LENGTH: f64 = 0.005;
const WINDOW: f64 = 3700.0 / G;
const T0: f64 = -1825.0 / G;

fn pulse_run(delta: f64, nz: usize, nt: usize) -> PulseRun {
    let p = medium(0.0, LENGTH, 0.0);
    let z = drive(&p, 0.5 * G, delta);
    let d = derive(&p, Absorption::from_a0(A0), &z).unwrap();
    let m = MbMedium::from_params(&p, &d, &z);
    let dt = WINDOW / nt as f64;
    let pulse = PulseSpec::gaussian(0.01 * 0.5 * G, 1000.0 / G, 0.0);
    let start = Instant::now();
    let f = propagate([pulse, pulse], &m, &GridSpec::new(nz, nt, dt, T0)).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let (i1, i2) = f.input();
    let (o1, o2) = f.output();
    PulseRun {
        medium: m,
        params: (p, z),
        dt,
        t0: T0,
        input: (i1.to_vec(), i2.to_vec()),
        output: (o1.to_vec(), o2.to_vec()),
        seconds,
    }
}

fn l2_vs_linear(r: &PulseRun) -> f64 {
    let a1 = analysis::linear_output(&r.input.0, r.dt, &r.medium, 1, LENGTH).unwrap();
    let a2 = analysis::linear_output(&r.input.1, r.dt, &r.medium, 2, LENGTH).unwrap();
    analysis::relative_l2(&r.output.0, &a1).max(analysis::relative_l2(&r.output.1, &a2))
}

fn criterion_4(resonant: &PulseRun, shifted: &PulseRun) -> Vec<Outcome> {
    let (p, z) = resonant.params;
    let d = derive(&p, Absorption::from_a0(A0), &z).unwrap();
    let delay = analysis::peak_time(&resonant.output.0, resonant.t0, resonant.dt)
        - analysis::peak_time(&resonant.input.0, resonant.t0, resonant.dt)
        + LENGTH / C_CM_PER_S;
    let expected = LENGTH / d.v_g;
    let delay_err = (delay - expected).abs() / expected;
    let l2 = l2_vs_linear(resonant).max(l2_vs_linear(shifted));

    let (p, z) = shifted.params;
    let d = derive(&p, Absorption::from_a0(A0), &z).unwrap();
    let c = coefficients(&p, &d, &z, KappaConvention::Exact).unwrap();
    let cw = cw_solution(&c, LENGTH, C64::new(1e-3, 0.0), C64::new(1e-3, 0.0));
    let analytic = 2.0 * cw.rotation;
    let k = analysis::peak_index(&shifted.output.0);
    let measured = (shifted.output.1[k] / shifted.output.0[k]).arg();
    let phase_err = analysis::wrap_phase(measured - analytic).abs() / analytic.abs();
    let seconds = resonant.seconds.max(shifted.seconds);
    vec![outcome(
        "4",
        delay_err < 0.05 && l2 < 0.02 && phase_err < 0.03 && seconds < 600.0,
        format!(
            "delay {:.3}/Γ vs L/v_g = {:.3}/Γ ({:.2}%); L2 vs linear response {:.2e}; 2Φ(L) at Δ = 0.05Γ: {:.4} rad vs {:.4} rad mod 2π ({:.2}%); grid 200×40000, {:.0} s",
            delay * G,
            expected * G,
            100.0 * delay_err,
            l2,
            analysis::wrap_phase(measured),
            analysis::wrap_phase(analytic),
            100.0 * phase_err,
            seconds
        ),
    )]
}

fn criterion_5(levels: &[PulseRun]) -> Vec<Outcome> {
    // ‖u_h − u_{h/2}‖ and ‖u_{h/2} − u_{h/4}‖ on the coarse time samples
    let sub = |r: &PulseRun, stride: usize| -> Vec<C64> {
        r.output.0.iter().step_by(stride).chain(r.output.1.iter().step_by(stride)).copied().collect()
    };
    let (u1, u2, u4) = (sub(&levels[0], 1), sub(&levels[1], 2), sub(&levels[2], 4));
    let e1 = analysis::relative_l2(&u1, &u2);
    let e2 = analysis::relative_l2(&u2, &u4);
    let ratio = e1 / e2;
    vec![outcome(
        "5",
        ratio >= 8.0,
        format!("envelope change under halving (dz, dt): {e1:.2e} then {e2:.2e}; ratio {ratio:.1}"),
    )]
}

/// Ψ(z_i, z′_j) = Σ ξ^{qq′} e^{iqz_i} e^{iq′z′_j} on z_i = iL/n, summed directly.
fn synthesize(xi: &TwoPhotonAmplitudes, grid: &ModeGrid, n: usize) -> Vec<C64> {
    let m = xi.m;
    let wave = |k: usize, i: usize| {
        let num = grid.mode_number(k) * i as i64;
        C64::from_polar(1.0, 2.0 * PI * num.rem_euclid(n as i64) as f64 / n as f64)
    };
    let mut partial = vec![C64::new(0.0, 0.0); m * n];
    for a in 0..m {
        for j in 0..n {
            partial[a * n + j] = (0..m).map(|b| xi.get(a, b) * wave(b, j)).sum();
        }
    }
    let mut psi = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for a in 0..m {
            let w = wave(a, i);
            for j in 0..n {
                psi[i * n + j] += w * partial[a * n + j];
            }
        }
    }
    psi
}

fn criterion_6() -> Vec<Outcome> {
    let start = Instant::now();
    let grid = ModeGrid::new(401, 1.0).unwrap();
    let dq = grid.dq();
    let med = XpmMedium { v_g: C_CM_PER_S / 100.0, omega_sq: G * G, g_coupling: 1e6 };
    let sigma_q = dq / 10.0;
    let oob = gaussian_out_of_band(&grid, sigma_q);
    let centre = 0.5 * grid.length;
    let a = SinglePhotonState::gaussian(&grid, centre, sigma_q).unwrap();
    let b = SinglePhotonState::gaussian(&grid, centre + 3.0 / dq, sigma_q).unwrap();
    let mut out = Vec::new();

    // (a) norm through the exact evolution, and through an independent quadrature round trip
    let input = TwoPhotonAmplitudes::product(&a, &b);
    let mut norm_err: f64 = 0.0;
    for theta in [0.5, PI, 2.0 * PI - 0.1] {
        let evolved = evolve_pair(&input, &grid, theta, 1.7 * grid.length / med.v_g, med.v_g, TimeConvention::Exact);
        norm_err = norm_err.max((evolved.norm_sqr() - 1.0).abs());
    }
    let evolved = evolve_pair(&input, &grid, PI, 1.7 * grid.length / med.v_g, med.v_g, TimeConvention::Exact);
    let n = min_samples(&grid);
    let back = state_amplitudes(&synthesize(&evolved, &grid, n), n, &grid).unwrap();
    let round_trip = back.max_diff(&evolved);
    norm_err = norm_err.max((back.norm_sqr() - 1.0).abs());
    out.push(outcome(
        "6a",
        norm_err < 1e-10 && round_trip < 1e-10,
        format!("max |Σ|ξ|² − 1| = {norm_err:.1e} at M = 401; quadrature round trip {round_trip:.1e}"),
    ));

    // (b) revival and maximal dephasing of a coherent state, read out at the
    // packet peak (α(τ) = f(−cτ)) with partner intensity |α₂|² = Lδq/(4π)
    let peak = a.envelope(&grid, centre).norm();
    let scale = (grid.length * dq / (4.0 * PI)).sqrt() / peak;
    let alpha1: Vec<C64> = a.xi.iter().map(|c| c * 1.5 * scale).collect();
    let alpha2: Vec<C64> = a.xi.iter().map(|c| c * scale).collect();
    let coh = CoherentAmplitudes { alpha1, alpha2 };
    let z = grid.length;
    let t = z / med.v_g - centre / C_CM_PER_S;
    let (free, _) = coherent_evolve(&coh, &grid, &XpmAngles::uniform(0.0), z, t, med.v_g);
    let (rev, _) = coherent_evolve(&coh, &grid, &XpmAngles::uniform(2.0 * PI), z, t, med.v_g);
    let (deph, _) = coherent_evolve(&coh, &grid, &XpmAngles::uniform(PI), z, t, med.v_g);
    let (_, a2) = coherent_evolve(&coh, &grid, &XpmAngles::uniform(0.0), z, t, med.v_g);
    let expected = (-4.0 * PI * a2.norm_sqr() / (grid.length * dq)).exp();
    let revival_err = (rev - free).norm() / free.norm();
    let deph_err = (deph.norm() / free.norm() - expected).abs();
    out.push(outcome(
        "6b",
        revival_err < 1e-10 && deph_err < 1e-10,
        format!(
            "revival error at θ = 2π {revival_err:.1e}; dephasing factor {:.6} vs {expected:.6} ({deph_err:.1e})",
            deph.norm() / free.norm()
        ),
    ));

    // (c) quantum minus classical cross-Kerr field is O(θ²)
    let n_partner = a2.norm_sqr() / (grid.length * dq / (2.0 * PI));
    let err = |theta: f64| {
        let (q, _) = coherent_evolve(&coh, &grid, &XpmAngles::uniform(theta), z, t, med.v_g);
        let classical = free * C64::from_polar(1.0, theta * n_partner);
        (q - classical).norm()
    };
    let thetas = [1e-1, 1e-2, 1e-3];
    let c: Vec<f64> = thetas.iter().map(|&th| err(th) / (th * th)).collect();
    let order = (err(1e-2) / err(1e-3)).log10();
    let rich = [(100.0 * c[1] - c[0]) / 99.0, (100.0 * c[2] - c[1]) / 99.0];
    let leading = free.norm() * n_partner / 2.0;
    let rich_err = (rich[1] - leading).abs() / leading;
    out.push(outcome(
        "6c",
        (order - 2.0).abs() < 0.01 && rich_err < 1e-3 && (rich[0] - rich[1]).abs() < 1e-3 * leading,
        format!(
            "error/θ² = {:.6e}, {:.6e}, {:.6e}; observed order {order:.4}; extrapolated {:.6e} vs |α₁|n/2 = {leading:.6e}",
            c[0], c[1], c[2], rich[1]
        ),
    ));

    // (d) gate at θ = π for overlapping photons, and separated photons left unchanged
    let overlap = cphase_metrics(&a, &a, &grid, PI, &med);
    let closed = cphase_metrics_closed_form(&a, &a, &grid, PI, &med, n).unwrap();
    let far = SinglePhotonState::gaussian(&grid, centre + 40.0 / dq, sigma_q).unwrap();
    let separated = cphase_metrics(&a, &far, &grid, PI, &med);
    // best case allowed by the band limit: flat spectrum, contact weight 2/3
    let flat = SinglePhotonState::flat(&grid, centre);
    let best = cphase_metrics(&flat, &flat, &grid, PI, &med);
    let x = contact_weight(&a, &a, &grid, 4 * grid.m);
    let elapsed = start.elapsed().as_secs_f64();
    out.push(outcome(
        "6d-overlap",
        overlap.fidelity >= 0.99 && overlap.process_fidelity >= 0.99 && elapsed < 60.0,
        format!(
            "σ_q = δq/10 (out-of-band {oob:.1e}): |⟨ψ_in|e^(−iθ)|ψ_out⟩| = {:.4}, process fidelity {:.4}; closed-form wavefunction {:.4} / {:.4}; contact weight {x:.3}; band-limited optimum {:.4} / {:.4}",
            overlap.fidelity, overlap.process_fidelity, closed.fidelity, closed.process_fidelity, best.fidelity, best.process_fidelity
        ),
    ));
    out.push(outcome(
        "6d-separated",
        separated.input_fidelity >= 0.99 && oob < 1e-6 && elapsed < 60.0,
        format!(
            "separation 40/δq: fidelity to input {:.8}; criterion 6 total {elapsed:.1} s",
            separated.input_fidelity
        ),
    ));
    out
}

/// Optional first argument selects criteria by prefix, e.g. `-- 6`.
fn selected(id: &str) -> bool {
    match std::env::args().skip(1).find(|a| !a.starts_with('-')) {
        Some(f) => id.starts_with(&f) || f.starts_with(id),
        None => true,
    }
}

fn main() {
    let total = Instant::now();
    let results: Vec<Outcome> = thread::scope(|s| {
        let pulses = selected("4") || selected("5");
        let resonant = pulses.then(|| s.spawn(|| pulse_run(0.0, 200, 40_000)));
        let shifted = pulses.then(|| s.spawn(|| pulse_run(0.05 * G, 200, 40_000)));
        let levels: Vec<_> = [(10, 37_500), (20, 75_000), (40, 150_000)]
            .into_iter()
            .filter(|_| selected("5"))
            .map(|(nz, nt)| s.spawn(move || pulse_run(0.05 * G, nz, nt)))
            .collect();
        let mut all = Vec::new();
        type Criterion = fn() -> Vec<Outcome>;
        let cheap: [(&str, Criterion); 4] =
            [("1", criterion_1), ("2", criterion_2), ("3", criterion_3), ("6", criterion_6)];
        for (id, f) in cheap {
            if selected(id) {
                all.extend(f());
            }
        }
        if let (Some(r), Some(sh)) = (resonant, shifted) {
            let (r, sh) = (r.join().unwrap(), sh.join().unwrap());
            if selected("4") {
                all.extend(criterion_4(&r, &sh));
            }
        }
        if !levels.is_empty() {
            let levels: Vec<PulseRun> = levels.into_iter().map(|h| h.join().unwrap()).collect();
            all.extend(criterion_5(&levels));
        }
        all
    });
    let mut failed = 0;
    for r in &results {
        println!("{} criterion {:<12} {}", if r.pass { "PASS" } else { "FAIL" }, r.id, r.detail);
        failed += usize::from(!r.pass);
    }
    println!(
        "{} of {} criteria passed in {:.0} s",
        results.len() - failed,
        results.len(),
        total.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
