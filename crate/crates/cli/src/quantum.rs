//! Coherent-state revivals, sinc kernel check and two-photon fidelity maps.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use tripod_core::output::{fmt_sig, Table};
use tripod_core::units::C_CM_PER_S;
use tripod_core::xpm::{
    coherent_evolve, contact_weight, cphase_metrics, evolve_pair, gaussian_out_of_band, pi_condition, sinc,
    TimeConvention,
};
use tripod_core::{
    CoherentAmplitudes, CphaseMetrics, ModeGrid, SinglePhotonState, TwoPhotonAmplitudes, XpmAngles, XpmMedium, C64,
};

use crate::sink::Sink;
use crate::{Ctx, Failure, Outcome};

/// Relative sinc/Dirichlet difference above which both kernels are written.
pub const KERNEL_REPORT_TOL: f64 = 1e-3;
const KERNEL_POINTS: usize = 201;

#[derive(Debug, Serialize)]
struct Summary {
    theta_rad: f64,
    theta_from_medium_rad: f64,
    pi_condition: bool,
    mode_count: usize,
    dq_grid_per_cm: f64,
    dq_medium_per_cm: f64,
    v_g_cm_per_s: f64,
    eta_s_per_cm: f64,
    /// |⟨E₁⟩(2π)/⟨E₁⟩(0) − 1| at the packet peak.
    revival_error: f64,
    dephasing_at_pi: f64,
    dephasing_expected: f64,
    kernel_max_rel_diff: f64,
    overlap: CphaseMetrics,
    contact_weight: f64,
    out_of_band: f64,
}

pub fn run(ctx: &Ctx, sink: &mut Sink) -> Result<Outcome, Failure> {
    let q = ctx.file.section("quantum", &ctx.file.quantum)?;
    let r = &ctx.resolved;
    let grid = ModeGrid::new(q.mode_count, r.medium.length).map_err(|e| Failure::in_section("quantum", e))?;
    let dq = grid.dq();
    let medium = XpmMedium::from_params(&r.derived, &r.drive);
    let theta_medium = XpmAngles::from_params(medium.eta(), r.drive.delta, r.drive.delta_d, &grid, grid.length).theta;
    let theta = q.theta_rad.unwrap_or(theta_medium);
    if !theta.is_finite() {
        return Err(Failure::config("quantum.theta_rad", "must be finite"));
    }
    if !(q.sigma_q_per_dq > 0.0) || q.sigma_q_sweep_per_dq.iter().any(|s| !(*s > 0.0)) {
        return Err(Failure::config("quantum.sigma_q_per_dq", "spectral widths must be > 0"));
    }
    if q.theta_points < 2 {
        return Err(Failure::config("quantum.theta_points", "need at least 2 points"));
    }
    if !(q.coherent_intensity_per_mode >= 0.0) {
        return Err(Failure::config("quantum.coherent_intensity_per_mode", "must be >= 0"));
    }
    let sigma_q = q.sigma_q_per_dq * dq;
    let centre = 0.5 * grid.length;
    let photon = SinglePhotonState::gaussian(&grid, centre, sigma_q).map_err(|e| Failure::in_section("quantum", e))?;

    // coherent states with the photon's shape, read out at the packet peak
    let peak = photon.envelope(&grid, centre).norm();
    let scale = (q.coherent_intensity_per_mode * grid.length * dq / (2.0 * PI)).sqrt() / peak;
    let alpha: Vec<C64> = photon.xi.iter().map(|c| c * scale).collect();
    let coh = CoherentAmplitudes { alpha1: alpha.clone(), alpha2: alpha };
    let t_peak = grid.length / medium.v_g - centre / C_CM_PER_S;
    let field = |th: f64| coherent_evolve(&coh, &grid, &XpmAngles::uniform(th), grid.length, t_peak, medium.v_g);
    let (free, partner) = field(0.0);
    let n = 2.0 * PI * partner.norm_sqr() / (grid.length * dq);
    let mut revival = Table::new(["theta_rad", "abs_ratio", "arg_ratio_rad", "abs_expected", "arg_expected_rad"]);
    for k in 0..q.theta_points {
        let th = 2.0 * PI * k as f64 / (q.theta_points - 1) as f64;
        let ratio = field(th).0 / free;
        revival.push(vec![th, ratio.norm(), ratio.arg(), (n * (th.cos() - 1.0)).exp(), n * th.sin()]);
    }
    sink.table("quantum_revival", &revival)?;
    let revival_error = (field(2.0 * PI).0 / free - 1.0).norm();
    let dephasing_at_pi = (field(PI).0 / free).norm();

    // analytic sinc against the finite-M Dirichlet kernel, both normalized to 1 at x = 0
    let m = grid.m as f64;
    let mut kernel_diff: f64 = 0.0;
    let kernel_rows: Vec<[f64; 3]> = (0..KERNEL_POINTS)
        .map(|i| {
            let x = 0.5 * grid.length * i as f64 / (KERNEL_POINTS - 1) as f64;
            let s = sinc(dq * x / 2.0);
            let d = grid.mode_sum(x) / m;
            kernel_diff = kernel_diff.max((s - d).abs());
            [x / grid.length, s, d]
        })
        .collect();
    let mut kernel = if kernel_diff > KERNEL_REPORT_TOL {
        Table::new(["x_over_length", "sinc_kernel", "dirichlet_kernel"])
    } else {
        Table::new(["x_over_length", "sinc_kernel"])
    };
    let width = kernel.header.len();
    for row in kernel_rows {
        kernel.push(row[..width].to_vec());
    }
    sink.table("quantum_kernel", &kernel)?;

    // fidelity map over (bandwidth, separation, θ)
    let mut sigmas = vec![q.sigma_q_per_dq];
    sigmas.extend(q.sigma_q_sweep_per_dq.iter().copied().filter(|s| *s != q.sigma_q_per_dq));
    let mut thetas = vec![theta];
    if theta != PI {
        thetas.push(PI);
    }
    let mut jobs = Vec::new();
    for &s in &sigmas {
        for &d in &q.separations_per_dq {
            for &t in &thetas {
                jobs.push((s, d, t));
            }
        }
    }
    let rows: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(s, sep, th)| {
            let half = 0.5 * sep / dq;
            let a = SinglePhotonState::gaussian(&grid, centre - half, s * dq)?;
            let b = SinglePhotonState::gaussian(&grid, centre + half, s * dq)?;
            let c = cphase_metrics(&a, &b, &grid, th, &medium);
            Ok(vec![
                s,
                sep,
                th,
                c.overlap.re,
                c.overlap.im,
                c.input_fidelity,
                c.process_fidelity,
                c.norm_out,
                gaussian_out_of_band(&grid, s * dq),
            ])
        })
        .collect::<tripod_core::Result<_>>()
        .map_err(|e| Failure::in_section("quantum", e))?;
    let mut map = Table::new([
        "sigma_q_per_dq",
        "separation_per_dq",
        "theta_rad",
        "overlap_re",
        "overlap_im",
        "input_fidelity",
        "process_fidelity",
        "norm_out",
        "out_of_band",
    ]);
    for row in rows {
        map.push(row);
    }
    sink.table("quantum_fidelity", &map)?;

    let overlap = cphase_metrics(&photon, &photon, &grid, theta, &medium);
    if q.dump_state {
        let input = TwoPhotonAmplitudes::product(&photon, &photon);
        let out =
            evolve_pair(&input, &grid, theta, grid.length / medium.v_g, medium.v_g, TimeConvention::DropTranslation);
        sink.report("quantum_state", &out)?;
    }
    let pi_ok = pi_condition(&grid, medium.v_g, medium.omega_sq, medium.g_coupling);
    let summary = Summary {
        theta_rad: theta,
        theta_from_medium_rad: theta_medium,
        pi_condition: pi_ok,
        mode_count: grid.m,
        dq_grid_per_cm: dq,
        dq_medium_per_cm: r.derived.dq,
        v_g_cm_per_s: medium.v_g,
        eta_s_per_cm: medium.eta(),
        revival_error,
        dephasing_at_pi,
        dephasing_expected: (-2.0 * n).exp(),
        kernel_max_rel_diff: kernel_diff,
        overlap,
        contact_weight: contact_weight(&photon, &photon, &grid, 4 * grid.m),
        out_of_band: gaussian_out_of_band(&grid, sigma_q),
    };
    sink.report("quantum_summary", &summary)?;

    let mut lines = vec![
        format!(
            "θ = {} rad; revival error at 2π {}; dephasing at π {} (expected {})",
            fmt_sig(theta),
            fmt_sig(revival_error),
            fmt_sig(dephasing_at_pi),
            fmt_sig(summary.dephasing_expected)
        ),
        format!(
            "overlapping pair: fidelity to input {}, process fidelity {}, contact weight {}",
            fmt_sig(overlap.input_fidelity),
            fmt_sig(overlap.process_fidelity),
            fmt_sig(summary.contact_weight)
        ),
    ];
    if kernel_diff > KERNEL_REPORT_TOL {
        lines.push(format!(
            "sinc and Dirichlet kernels differ by up to {} at M = {}; both written",
            fmt_sig(kernel_diff),
            grid.m
        ));
    }
    let regime_failures = if pi_ok {
        Vec::new()
    } else {
        vec!["pi_condition: (δqL/2π)² does not exceed v_g|Ω_d|²/(c g²), θ = π is out of reach".to_string()]
    };
    Ok(Outcome { summary: lines, regime_failures })
}
