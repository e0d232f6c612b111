use serde_json::json;

use qflow_core::flow::{
    initial_state, kernel_drift_residual, log_slope, read_snapshot, run as run_flow, write_csv, write_snapshot,
    FlowConfig, FlowContext, RunStatus, Scheme, Snapshot,
};
use qflow_core::frame::WEBSTER_CURVATURE;
use qflow_core::operators::{paneitz_eigenvalue, project_kernel, BackgroundGeometry};
use qflow_core::sphere::SpectralField;

use super::{display, spectral_space, CliError, Invocation, Verdict};
use crate::config::{flow_preset, parse_field};

const KEYS: &[&str] = &[
    "n",
    "order",
    "preset",
    "q0",
    "lambda0",
    "scheme",
    "dt",
    "t_end",
    "record_dt",
    "converge_tol",
    "stop_on_convergence",
    "r_tol",
    "volume_tol",
    "energy_tol",
    "slope_from",
    "slope_to",
];

/// Highest mode degree in any preset; presets are truncated to `n`.
const PRESET_DEGREE: usize = 6;

pub fn run(inv: &Invocation) -> Result<Verdict, CliError> {
    let sec = inv.section("flow");
    sec.check_keys(KEYS)?;
    let n: usize = sec.get("n", 6)?;
    let order: usize = sec.get("order", 4 * n + 8)?;
    let preset: String = sec.get("preset", "sphere-zeroQ".to_string())?;
    let (q0_default, lambda0_default) = flow_preset(&preset)?;
    let field = |key: &str, preset_spec: &str| match sec.raw(key) {
        Some(spec) => parse_field(spec, n),
        None => Ok(parse_field(preset_spec, n.max(PRESET_DEGREE))?.with_degree(n)),
    };
    let q0 = field("q0", q0_default)?;
    let lambda0 = field("lambda0", lambda0_default)?;
    let d = FlowConfig::default();
    let scheme: Scheme = sec.get("scheme", d.scheme)?;
    let cfg = FlowConfig {
        scheme,
        dt: sec.get("dt", d.dt)?,
        t_end: sec.get("t_end", d.t_end)?,
        record_dt: sec.get("record_dt", d.record_dt)?,
        converge_tol: sec.get("converge_tol", d.converge_tol)?,
        stop_on_convergence: sec.get("stop_on_convergence", d.stop_on_convergence)?,
        r_tol: sec.get("r_tol", d.r_tol)?,
        volume_tol: sec.get("volume_tol", d.volume_tol)?,
        energy_tol: sec.get("energy_tol", d.energy_tol)?,
        normalize: inv.resume.is_none(),
    };
    cfg.validate()?;
    let slope_from: f64 = sec.get("slope_from", 0.3)?;
    let slope_to: f64 = sec.get("slope_to", 1.0)?;

    let space = spectral_space(n, order)?;
    let ctx = FlowContext::new(&space, BackgroundGeometry::sphere(q0.clone()))?;
    let (t0, start_lambda) = match &inv.resume {
        None => (0.0, lambda0),
        Some(path) => {
            let snap = read_snapshot(path).map_err(|e| CliError::Usage(format!("snapshot {}: {e}", display(path))))?;
            if snap.n > n {
                return Err(CliError::Usage(format!("snapshot {} has N = {} above N = {n}", display(path), snap.n)));
            }
            (snap.t, snap.field()?)
        }
    };
    if t0 > cfg.t_end {
        return Err(CliError::Usage(format!("snapshot time {t0} is past t_end = {}", cfg.t_end)));
    }
    inv.log_event("flow", "start");
    let start = initial_state(&ctx, &start_lambda, t0, &cfg)?;
    let outcome = run_flow(&ctx, start.clone(), &cfg)?;
    inv.log_event("flow", "finish");

    let last = outcome.records.last().expect("at least the initial record");
    let fin = &outcome.final_state;
    let slope = log_slope(&outcome.records, slope_from, slope_to.min(fin.t), |r| r.q_linf);
    let equilibrium_residual = ctx.equilibrium_residual(&fin.lambda);
    let drift = ctx.bg.has_kernel_drift();
    let samples: Vec<(f64, &SpectralField)> = outcome.records.iter().map(|r| r.t).zip(&outcome.lambdas).collect();
    let kernel_residual = kernel_drift_residual(&ctx, t0, &start.lambda, &samples, cfg.r_tol)?;
    let (q_ker, _) = project_kernel(&ctx.bg.q0);

    // Distance of pq >= 1 coefficients from -q/(2 mu).
    let mut eq_error: f64 = 0.0;
    for (k, m) in fin.lambda.modes().iter().enumerate() {
        let mu = paneitz_eigenvalue(m.p, m.q);
        if mu > 0.0 {
            let target = -ctx.bg.q0.coeffs()[k] / (2.0 * mu);
            eq_error = eq_error.max((fin.lambda.coeffs()[k] - target).abs());
        }
    }
    let status = match outcome.status {
        RunStatus::Converged => "converged",
        RunStatus::ReachedEnd => "reached-end",
    };
    let summary = json!({
        "status": status,
        "scheme": format!("{:?}", cfg.scheme),
        "N": n,
        "order": order,
        "t_start": t0,
        "t_final": fin.t,
        "records": outcome.records.len(),
        "energy_initial": outcome.records[0].energy,
        "energy_final": last.energy,
        "volume_relative_drift": (last.volume - space.grid.total_weight()) / space.grid.total_weight(),
        "equilibrium_residual": equilibrium_residual,
        "equilibrium_coefficient_error": eq_error,
        "q_linf_log_slope": slope,
        "slope_window": [slope_from, slope_to.min(fin.t)],
        "kernel_drift": drift,
        "kernel_drift_rate": q_ker.norm(),
        "kernel_law_residual": kernel_residual,
        "rejected_steps": outcome.rejected_steps,
    });

    println!("status {status} at t = {}", fin.t);
    println!("equilibrium residual |Q0perp + 2 P lambda_perp| = {equilibrium_residual:.3e}");
    match slope {
        Some(s) => println!("log-slope of |Q|_inf over [{slope_from}, {}] = {s:.6}", slope_to.min(fin.t)),
        None => println!("log-slope of |Q|_inf: not enough records in [{slope_from}, {slope_to}]"),
    }
    if drift {
        println!(
            "kernel drift: lambda_ker moves at rate |(Q0)_ker| = {:.6e}; linear-law residual {kernel_residual:.3e}",
            q_ker.norm()
        );
    } else {
        println!("pq >= 1 coefficients vs -q/(2 mu): max error {eq_error:.3e}");
    }

    let mut csv = Vec::new();
    write_csv(&mut csv, &outcome.records)?;
    inv.write_output("flow.csv", &String::from_utf8(csv).expect("csv is utf-8"))?;
    inv.write_output("summary.json", &(serde_json::to_string_pretty(&summary).expect("json") + "\n"))?;
    if let Some(path) = inv.out_path("snapshot.json") {
        write_snapshot(&path, &Snapshot::new(fin.t, &fin.lambda, space.grid.total_weight(), WEBSTER_CURVATURE))?;
    }
    Ok(Verdict::Pass)
}
