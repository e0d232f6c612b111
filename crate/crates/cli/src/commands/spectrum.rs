use std::path::PathBuf;

use serde_json::json;

use qflow_core::eigen::{deflate_spectrum, read_matrix_file, IterationControl, SpectralProblem};
use qflow_core::operators::{closed_form_spectrum, kernel_basis, operator_matrix, OperatorKind};

use super::{CliError, Invocation, Verdict};

const KEYS: &[&str] =
    &["operator", "n", "k", "seed", "tol", "max_iter", "matrix", "kernel_tol", "compare_tol", "residual_tol"];

pub fn run(inv: &Invocation) -> Result<Verdict, CliError> {
    let sec = inv.section("spectrum");
    sec.check_keys(KEYS)?;
    let operator: String = sec.get("operator", "paneitz".to_string())?;
    let n: usize = sec.get("n", 4)?;
    let seed = inv.seed(&sec, 1)?;
    let d = IterationControl::default();
    let control = IterationControl { tol: sec.get("tol", d.tol)?, max_iter: sec.get("max_iter", d.max_iter)? };
    let compare_tol: f64 = sec.get("compare_tol", 1e-9)?;
    let residual_tol: f64 = sec.get("residual_tol", 1e-6)?;

    let (problem, closed, n_out) = if operator == "matrix-file" {
        let path: PathBuf = sec
            .get_opt("matrix")?
            .ok_or_else(|| CliError::Usage("operator = matrix-file needs a 'matrix' path".into()))?;
        let a = read_matrix_file(&path)?;
        let kernel_tol: f64 = sec.get("kernel_tol", 1e-10)?;
        (SpectralProblem::detect_kernel(a, kernel_tol, path.display().to_string())?, None, None)
    } else {
        let kind: OperatorKind = operator.parse()?;
        if matches!(kind, OperatorKind::SubLaplacian | OperatorKind::T0) {
            return Err(CliError::Usage(format!(
                "operator '{operator}' is not positive semidefinite; use paneitz, neg-kohn, neg-sublaplacian, comparison or matrix-file"
            )));
        }
        let problem = SpectralProblem::new(operator_matrix(kind, n), kernel_basis(kind, n), operator.clone())?;
        (problem, Some(closed_form_spectrum(kind, n)), Some(n))
    };
    let k: usize = sec.get("k", problem.complement_dim())?;
    if k == 0 {
        return Err(CliError::Usage("k must be positive".into()));
    }
    inv.log_event("spectrum", "start");
    let mut result = deflate_spectrum(&problem, k, seed, control)?;
    inv.log_event("spectrum", "finish");
    result.n = n_out;

    let mut pass = true;
    let worst_residual = result
        .eigenvalues
        .iter()
        .zip(&result.residuals)
        .map(|(mu, r)| r / mu.abs().max(1.0))
        .fold(0.0, f64::max);
    if worst_residual > residual_tol {
        pass = false;
    }
    let comparison = closed.map(|c| {
        let expected: Vec<f64> = c.iter().take(k).copied().collect();
        let deviation = result
            .eigenvalues
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if deviation > compare_tol {
            pass = false;
        }
        json!({ "expected": expected, "max_deviation": deviation, "tolerance": compare_tol })
    });
    let doc = json!({
        "operator": operator,
        "kernel_dim": problem.kernel().len(),
        "dim": problem.dim(),
        "spectrum": result,
        "worst_relative_residual": worst_residual,
        "closed_form": comparison,
        "smallest_nonzero": result.eigenvalues.first(),
        "pass": pass,
    });
    let text = serde_json::to_string_pretty(&doc).expect("json") + "\n";
    print!("{text}");
    inv.write_output("spectrum.json", &text)?;
    Ok(Verdict::from_pass(pass))
}
