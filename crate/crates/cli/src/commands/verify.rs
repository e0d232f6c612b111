use qflow_core::diagnostics::{render_jsonl, run_verify_suite, summary_table, VerifyConfig};

use super::{spectral_space, CliError, Invocation, Verdict};

const KEYS: &[&str] = &["n", "order", "seed", "fields", "perp_fields", "smoothness", "w0", "interpolation_eps"];

pub fn run(inv: &Invocation) -> Result<Verdict, CliError> {
    let sec = inv.section("verify");
    sec.check_keys(KEYS)?;
    let d = VerifyConfig::default();
    let n: usize = sec.get("n", d.n)?;
    let cfg = VerifyConfig {
        n,
        order: sec.get("order", 2 * n)?,
        seed: inv.seed(&sec, d.seed)?,
        fields: sec.get("fields", d.fields)?,
        perp_fields: sec.get("perp_fields", d.perp_fields)?,
        smoothness: sec.get("smoothness", d.smoothness)?,
        w0_override: sec.get_opt("w0")?,
        interpolation_eps: sec.get("interpolation_eps", d.interpolation_eps)?,
    };
    if cfg.fields < 5 || cfg.perp_fields == 0 {
        return Err(CliError::Usage("verify needs fields >= 5 and perp_fields >= 1".into()));
    }
    let space = spectral_space(cfg.n, cfg.order)?;
    inv.log_event("verify", "start");
    let reports = run_verify_suite(&cfg, &space)?;
    inv.log_event("verify", "finish");
    let stream = render_jsonl(&reports);
    print!("{stream}");
    eprint!("{}", summary_table(&reports));
    inv.write_output("verify.jsonl", &stream)?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    if !failed.is_empty() {
        eprintln!("failed: {}", failed.join(", "));
    }
    Ok(Verdict::from_pass(failed.is_empty()))
}
