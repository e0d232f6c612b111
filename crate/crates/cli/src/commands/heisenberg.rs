use qflow_core::diagnostics::{render_jsonl, IdentityReport};
use qflow_core::heisenberg::{
    check_cohn_lu, check_homogeneity, check_lp_growth, check_translation_jacobian, cohn_lu_constant,
    default_corpus, default_sample_points, empirical_delta, exp_envelope, parse_corpus, BallGrid,
};
use qflow_core::Exec;

use super::{CliError, Invocation, Verdict};

const KEYS: &[&str] = &["corpus", "seed", "samples", "base", "ball_resolution", "lp", "scales"];

pub fn run(inv: &Invocation) -> Result<Verdict, CliError> {
    let sec = inv.section("heisenberg");
    sec.check_keys(KEYS)?;
    let corpus = match sec.raw("corpus") {
        None => default_corpus(),
        Some(s) => parse_corpus(s)?,
    };
    if corpus.is_empty() {
        return Err(CliError::Usage("Heisenberg corpus is empty".into()));
    }
    let seed = inv.seed(&sec, 1)?;
    let samples: usize = sec.get("samples", 10_000)?;
    let base: usize = sec.get("base", 16)?;
    let resolution: usize = sec.get("ball_resolution", 24)?;
    let ps = sec.list_f64("lp", &[4.0, 8.0, 16.0, 32.0, 64.0])?;
    let scales = sec.list_f64("scales", &[0.5, 1.0, 2.0, 3.0])?;
    if samples == 0 || ps.is_empty() || scales.is_empty() {
        return Err(CliError::Usage("samples, lp and scales must be nonempty".into()));
    }
    if let Some(f) = corpus.iter().find(|f| f.support_radius() > 1.0) {
        return Err(CliError::Usage(format!("{} is not supported in the unit ball", f.label())));
    }

    inv.log_event("heisenberg", "start");
    let mut reports = vec![
        check_homogeneity(seed, samples),
        check_translation_jacobian(seed, samples.min(1000)),
        empirical_delta(seed, samples),
    ];
    let l = cohn_lu_constant();
    reports.push(
        IdentityReport::new("cohn_lu_constant", l, l, 0.0, 0.0)
            .with_detail("2 pi Gamma(1/2) Gamma(3/4) / (Gamma(1) Gamma(5/4))"),
    );
    for f in &corpus {
        for v in default_sample_points(f) {
            reports.push(check_cohn_lu(f, &v, base, Exec::default())?.to_identity_report());
        }
    }
    let grid = BallGrid::new(resolution)?;
    let mut k_emp: f64 = 0.0;
    for f in &corpus {
        match check_lp_growth(f, &ps, &grid) {
            Ok(r) => {
                k_emp = k_emp.max(r.sup);
                reports.push(r.to_identity_report());
            }
            Err(e) => log::warn!("skipping Lp growth for {}: {e}", f.label()),
        }
    }
    reports.push(IdentityReport::new("lp_growth_family", k_emp, k_emp, 0.0, 0.0).with_detail(format!("empirical K {k_emp:.6e}")));
    let env = exp_envelope(&corpus, &scales, &grid)?;
    reports.push(
        IdentityReport::new("exp_envelope", env.worst_excess, 0.0, env.worst_excess.max(0.0), 1e-12).with_detail(format!(
            "kappa {:e} logC {:e} over {} samples",
            env.kappa, env.log_c, env.samples
        )),
    );
    inv.log_event("heisenberg", "finish");

    let stream = render_jsonl(&reports);
    print!("{stream}");
    inv.write_output("heisenberg.jsonl", &stream)?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    if !failed.is_empty() {
        eprintln!("failed: {}", failed.join(", "));
    }
    Ok(Verdict::from_pass(failed.is_empty()))
}
