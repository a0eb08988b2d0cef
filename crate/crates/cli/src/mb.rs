//! Maxwell–Bloch run plus the comparison against linear response.

use serde::Serialize;
use tripod_core::bloch::{analysis, propagate};
use tripod_core::output::{fmt_sig, Table};
use tripod_core::propagation::{coefficients, cw_solution, KappaConvention};
use tripod_core::units::{validate_regime, C_CM_PER_S};
use tripod_core::{RegimeReport, C64};

use crate::sink::Sink;
use crate::{Ctx, Failure, Outcome};

/// Report thresholds: relative delay, relative L2 envelope error and
/// relative differential phase error.
pub const DELAY_TOL: f64 = 0.05;
pub const L2_TOL: f64 = 0.02;
pub const PHASE_TOL: f64 = 0.03;
/// Phase error accepted outright when the predicted phase is ~0 (rad).
pub const PHASE_FLOOR: f64 = 1e-3;

/// Checks gating the comparison: the linear, adiabatic response it
/// relies on. The remaining regime margins are reported only.
const GATED: [&str; 2] = ["weak_probe", "adiabaticity"];

#[derive(Debug, Serialize)]
struct Check {
    measured: f64,
    predicted: f64,
    error: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct Report {
    vacuum: bool,
    grid: [usize; 2],
    length_cm: f64,
    /// Lab-frame delay of the E1 intensity peak (s).
    delay_s: Check,
    /// max_j ‖E_j(L) − E_j^lin(L)‖₂ / ‖E_j^lin(L)‖₂.
    l2_envelope: Check,
    /// arg(E2/E1) at the output peak, less its input value (rad), against 2Φ(L).
    differential_phase_rad: Option<Check>,
    fluence_ratio: [f64; 2],
    all_green: bool,
    regime: RegimeReport,
    gated_checks: Vec<&'static str>,
}

fn relative(measured: f64, predicted: f64, tolerance: f64) -> Check {
    let error = ((measured - predicted) / predicted).abs();
    Check { measured, predicted, error, tolerance, pass: error < tolerance }
}

pub fn run(ctx: &Ctx, sink: &mut Sink) -> Result<Outcome, Failure> {
    let setup = ctx.file.mb_setup(&ctx.resolved)?;
    let file = ctx.file.section("mb", &ctx.file.mb)?;
    let m = &setup.medium;
    if ctx.verbose > 0 {
        eprintln!("propagating on {} × {} grid", setup.grid.nz, setup.grid.nt);
    }
    let field = propagate(setup.pulses, m, &setup.grid)?;
    let (dt, t0, length) = (field.dt, field.t0, m.length);
    let (i1, i2) = field.input();
    let (o1, o2) = field.output();

    let coeffs =
        coefficients(&ctx.resolved.medium, &ctx.resolved.derived, &ctx.resolved.drive, KappaConvention::Exact).ok();
    let v_g = if file.vacuum { C_CM_PER_S } else { coeffs.map_or(ctx.resolved.derived.v_g, |c| c.v_g1) };
    let delay = analysis::peak_time(o1, t0, dt) - analysis::peak_time(i1, t0, dt) + length / C_CM_PER_S;
    let delay_s = relative(delay, length / v_g, DELAY_TOL);

    let lin1 = analysis::linear_output(i1, dt, m, 1, length)?;
    let lin2 = analysis::linear_output(i2, dt, m, 2, length)?;
    let l2 = analysis::relative_l2(o1, &lin1).max(analysis::relative_l2(o2, &lin2));
    let l2_envelope = Check { measured: l2, predicted: 0.0, error: l2, tolerance: L2_TOL, pass: l2 < L2_TOL };

    let predicted_phase = if file.vacuum {
        Some(0.0)
    } else {
        coeffs.map(|c| {
            let small = C64::new(1e-3, 0.0);
            2.0 * cw_solution(&c, length, small, small).rotation
        })
    };
    let ratio_arg = |a: &[C64], b: &[C64], k: usize| (b[k] / a[k]).arg();
    let measured_phase =
        analysis::wrap_phase(ratio_arg(o1, o2, analysis::peak_index(o1)) - ratio_arg(i1, i2, analysis::peak_index(i1)));
    let differential_phase_rad = predicted_phase.map(|p| {
        let err = analysis::wrap_phase(measured_phase - p).abs();
        let tol = (PHASE_TOL * p.abs()).max(PHASE_FLOOR);
        Check {
            // measured phase taken on the branch nearest the prediction
            measured: p + analysis::wrap_phase(measured_phase - p),
            predicted: p,
            error: if p == 0.0 { err } else { err / p.abs() },
            tolerance: if p == 0.0 { PHASE_FLOOR } else { tol / p.abs() },
            pass: err <= tol,
        }
    });

    let peak = setup.pulses.iter().map(|p| p.peak.norm()).fold(0.0, f64::max);
    let duration = setup.pulses.iter().map(|p| p.duration).fold(f64::INFINITY, f64::min);
    let regime = validate_regime(&ctx.resolved.medium, &ctx.resolved.derived, &ctx.resolved.drive, peak, duration);
    let fluence_ratio =
        [analysis::fluence(o1, dt) / analysis::fluence(i1, dt), analysis::fluence(o2, dt) / analysis::fluence(i2, dt)];
    let all_green = delay_s.pass && l2_envelope.pass && differential_phase_rad.as_ref().is_none_or(|c| c.pass);
    let regime_failures: Vec<String> = regime
        .failures()
        .filter(|c| GATED.contains(&c.name))
        .map(|c| format!("{} (value {}, threshold {})", c.name, fmt_sig(c.value), fmt_sig(c.threshold)))
        .collect();

    let mut summary = vec![
        format!(
            "delay {} s vs L/v_g {} s ({})",
            fmt_sig(delay_s.measured),
            fmt_sig(delay_s.predicted),
            verdict(delay_s.pass)
        ),
        format!("L2 envelope error vs linear response {} ({})", fmt_sig(l2), verdict(l2_envelope.pass)),
    ];
    match &differential_phase_rad {
        Some(c) => summary.push(format!(
            "differential phase {} rad vs 2Φ(L) {} rad ({})",
            fmt_sig(c.measured),
            fmt_sig(c.predicted),
            verdict(c.pass)
        )),
        None => summary.push("differential phase: no analytic prediction off the carrier resonance".to_string()),
    }
    if !regime_failures.is_empty() {
        summary.push("analytic regime violated: comparison is indicative only".to_string());
    }

    let report = Report {
        vacuum: file.vacuum,
        grid: [setup.grid.nz, setup.grid.nt],
        length_cm: length,
        delay_s,
        l2_envelope,
        differential_phase_rad,
        fluence_ratio,
        all_green,
        regime,
        gated_checks: GATED.to_vec(),
    };
    sink.report("mb_report", &report)?;
    sink.table("mb_boundary", &boundary_table(&field, &lin1, &lin2))?;
    if file.write_field {
        sink.bytes("mb_field.bin", |w| field.write_binary(w))?;
    }
    Ok(Outcome { summary, regime_failures })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "ok"
    } else {
        "FAIL"
    }
}

fn boundary_table(field: &tripod_core::SpaceTimeField, lin1: &[C64], lin2: &[C64]) -> Table {
    let mut t = Table::new([
        "t_retarded_s",
        "e1_in_re_rad_per_s",
        "e1_in_im_rad_per_s",
        "e2_in_re_rad_per_s",
        "e2_in_im_rad_per_s",
        "e1_out_re_rad_per_s",
        "e1_out_im_rad_per_s",
        "e2_out_re_rad_per_s",
        "e2_out_im_rad_per_s",
        "e1_lin_re_rad_per_s",
        "e1_lin_im_rad_per_s",
        "e2_lin_re_rad_per_s",
        "e2_lin_im_rad_per_s",
    ]);
    let (i1, i2) = field.input();
    let (o1, o2) = field.output();
    for k in 0..field.nt {
        t.push(vec![
            field.retarded_time(k),
            i1[k].re,
            i1[k].im,
            i2[k].re,
            i2[k].im,
            o1[k].re,
            o1[k].im,
            o2[k].re,
            o2[k].im,
            lin1[k].re,
            lin1[k].im,
            lin2[k].re,
            lin2[k].im,
        ]);
    }
    t
}
