//! The closed-form commands: spectra and magnetometer.

use tripod_core::magnetometer::{evaluate, sensitivity_sweep};
use tripod_core::output::{fmt_sig, Table};
use tripod_core::response::{default_grid, detuning_grid, spectra as response_spectra};

use crate::sink::Sink;
use crate::{Ctx, Failure, Outcome};

pub fn spectra(ctx: &Ctx, sink: &mut Sink) -> Result<Outcome, Failure> {
    let gamma = ctx.resolved.medium.gamma;
    let grid = match &ctx.file.spectra {
        Some(s) => {
            if s.points < 2 {
                return Err(Failure::config("spectra.points", "need at least 2 points"));
            }
            if !(s.delta_min_per_gamma.is_finite()
                && s.delta_max_per_gamma.is_finite()
                && s.delta_min_per_gamma < s.delta_max_per_gamma)
            {
                return Err(Failure::config("spectra", "need finite delta_min_per_gamma < delta_max_per_gamma"));
            }
            detuning_grid(s.delta_min_per_gamma * gamma, s.delta_max_per_gamma * gamma, s.points)
        }
        None => default_grid(gamma),
    };
    let r = response_spectra(&ctx.resolved.medium, &ctx.resolved.drive, &grid)?;
    let mut t = Table::new(["delta_over_gamma", "abs1_a0", "disp1_a0", "abs2_a0", "disp2_a0"]);
    for ((d, c1), c2) in r.detunings.iter().zip(&r.chi1).zip(&r.chi2) {
        t.push(vec![d / gamma, c1.im, c1.re, c2.im, c2.re]);
    }
    sink.table("spectra", &t)?;
    let delta = ctx.resolved.drive.delta / gamma;
    Ok(Outcome {
        summary: vec![format!(
            "spectra: {} points over [{}, {}] Γ; transparency expected at δ = {}Γ (E1) and {}Γ (E2)",
            r.len(),
            fmt_sig(grid[0] / gamma),
            fmt_sig(grid[grid.len() - 1] / gamma),
            fmt_sig(delta),
            fmt_sig(-delta)
        )],
        regime_failures: Vec::new(),
    })
}

pub fn magnetometer(ctx: &Ctx, sink: &mut Sink) -> Result<Outcome, Failure> {
    let cfg = ctx.file.magnetometer_config(&ctx.resolved)?;
    let result = evaluate(&cfg)?;
    sink.report("magnetometer", &result)?;
    let mut summary = vec![format!(
        "magnetometer: B_min = {} G (closed form), root {}, n_in = {}",
        fmt_sig(result.b_min),
        result.b_root.map_or_else(|| "not bracketed".to_string(), |b| format!("{} G", fmt_sig(b))),
        fmt_sig(result.n_in)
    )];
    if let Some(sweep) = ctx.file.magnetometer.as_ref().and_then(|m| m.sweep.as_ref()) {
        let axis = sweep.axis()?;
        let values = sweep.values()?;
        let table = sensitivity_sweep(&cfg, axis, &values)?;
        sink.table("magnetometer_sweep", &table)?;
        summary.push(format!("sweep over {}: {} points", axis.name(), values.len()));
    }
    let regime_failures = result
        .regime
        .failures()
        .map(|c| format!("{} (value {}, threshold {})", c.name, fmt_sig(c.value), fmt_sig(c.threshold)))
        .collect();
    Ok(Outcome { summary, regime_failures })
}
