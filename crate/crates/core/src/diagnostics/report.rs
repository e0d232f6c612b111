use serde::{Deserialize, Serialize};

/// Outcome of one identity or inequality check. `pass` is exactly
/// `|residual| <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: Option<u64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub order: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub detail: String,
}

impl IdentityReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
            pass: residual.abs() <= tolerance,
            seed: None,
            n: 0,
            order: 0,
            lhs,
            rhs,
            detail: String::new(),
        }
    }

    /// Inequality `lhs <= rhs`; the residual is the violation `max(lhs - rhs, 0)`
    /// and `margin` keeps the signed gap in `detail`.
    pub fn inequality(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let mut r = Self::new(name, lhs, rhs, (lhs - rhs).max(0.0), tolerance);
        r.detail = format!("margin {:e}", rhs - lhs);
        r
    }

    pub fn with_context(mut self, seed: Option<u64>, n: usize, order: usize) -> Self {
        self.seed = seed;
        self.n = n;
        self.order = order;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        let d = detail.into();
        self.detail = if self.detail.is_empty() { d } else { format!("{}; {d}", self.detail) };
        self
    }
}

/// One JSON object per line.
pub fn render_jsonl(reports: &[IdentityReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&serde_json::to_string(r).expect("reports serialise"));
        out.push('\n');
    }
    out
}

pub fn summary_table(reports: &[IdentityReport]) -> String {
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut out = format!("{:<width$}  {:>12}  {:>10}  {}\n", "name", "residual", "tolerance", "result");
    for r in reports {
        out.push_str(&format!(
            "{:<width$}  {:>12.3e}  {:>10.1e}  {}\n",
            r.name,
            r.residual,
            r.tolerance,
            if r.pass { "pass" } else { "FAIL" }
        ));
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    out.push_str(&format!("{} checks, {} failed\n", reports.len(), failed));
    out
}
