use qflow_core::diagnostics::{moser_check, moser_fields, render_jsonl, MoserSampler};
use serde_json::json;

use super::{spectral_space, CliError, Invocation, Verdict};

const KEYS: &[&str] = &["n", "order", "seed", "train", "held_out", "max_amplitude"];

pub fn run(inv: &Invocation) -> Result<Verdict, CliError> {
    let sec = inv.section("moser");
    sec.check_keys(KEYS)?;
    let n: usize = sec.get("n", 6)?;
    let order: usize = sec.get("order", 4 * n + 8)?;
    let seed = inv.seed(&sec, 1)?;
    let train: usize = sec.get("train", 200)?;
    let held_out: usize = sec.get("held_out", 200)?;
    let max_amplitude: f64 = sec.get("max_amplitude", 2.0)?;
    if train == 0 || held_out == 0 {
        return Err(CliError::Usage("Moser corpus is empty (train and held_out must be positive)".into()));
    }
    if !(max_amplitude > 0.0) {
        return Err(CliError::Usage("max_amplitude must be positive".into()));
    }
    let space = spectral_space(n, order)?;
    let sampler = MoserSampler::new(&space);
    let training = moser_fields(seed, train, n, max_amplitude);
    let test = moser_fields(seed.wrapping_add(0x9e37_79b9), held_out, n, max_amplitude);
    inv.log_event("moser", "start");
    let (env, report) = moser_check(&sampler, &training, &test)?;
    inv.log_event("moser", "finish");
    let report = report.with_context(Some(seed), n, order);
    let envelope = json!({ "kappa": env.kappa, "nu": env.nu, "log_c": env.log_c, "train": train, "held_out": held_out });
    println!("{envelope}");
    print!("{}", render_jsonl(std::slice::from_ref(&report)));
    inv.write_output("moser.json", &(serde_json::to_string_pretty(&envelope).expect("json") + "\n"))?;
    inv.write_output("moser.jsonl", &render_jsonl(std::slice::from_ref(&report)))?;
    Ok(Verdict::from_pass(report.pass))
}
