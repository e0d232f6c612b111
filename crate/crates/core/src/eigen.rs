//! Green operator on the kernel complement and spectrum extraction by
//! norm-maximising power iteration with deflation.

use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{QflowError, Result};

/// Symmetric positive-semidefinite operator with an explicit kernel.
#[derive(Debug, Clone)]
pub struct SpectralProblem {
    a: DMatrix<f64>,
    kernel: Vec<DVector<f64>>,
    complement: DMatrix<f64>,
    restricted: Cholesky<f64, Dyn>,
    pub label: String,
}

fn orthonormalize_against(v: &mut DVector<f64>, basis: &[DVector<f64>]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(v);
            v.axpy(-c, b, 1.0);
        }
    }
    let n = v.norm();
    if n > 0.0 {
        *v /= n;
    }
    n
}

impl SpectralProblem {
    pub fn new(a: DMatrix<f64>, kernel: Vec<DVector<f64>>, label: impl Into<String>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(QflowError::Invalid(format!("operator is {}x{}", n, a.ncols())));
        }
        let scale = a.amax().max(1.0);
        let asym = (&a - a.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(QflowError::Invalid(format!("operator not symmetric (defect {asym:e})")));
        }
        let mut ker: Vec<DVector<f64>> = Vec::with_capacity(kernel.len());
        for mut v in kernel {
            if v.len() != n {
                return Err(QflowError::Invalid("kernel vector dimension mismatch".into()));
            }
            if orthonormalize_against(&mut v, &ker) < 1e-10 {
                return Err(QflowError::Invalid("kernel vectors are linearly dependent".into()));
            }
            let defect = (&a * &v).amax();
            if defect > 1e-12 * scale {
                return Err(QflowError::Invalid(format!("kernel vector not annihilated (defect {defect:e})")));
            }
            ker.push(v);
        }
        // Complement basis: coordinate axes orthonormalised against the
        // kernel and each other.
        let mut comp: Vec<DVector<f64>> = Vec::with_capacity(n - ker.len());
        for i in 0..n {
            if comp.len() + ker.len() == n {
                break;
            }
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            let mut all = ker.clone();
            all.extend(comp.iter().cloned());
            if orthonormalize_against(&mut e, &all) > 1e-8 {
                comp.push(e);
            }
        }
        let q = if comp.is_empty() { DMatrix::zeros(n, 0) } else { DMatrix::from_columns(&comp) };
        let b = q.transpose() * &a * &q;
        let b = (&b + b.transpose()) * 0.5;
        let restricted = Cholesky::new(b).ok_or_else(|| {
            QflowError::Singular("restricted operator is not positive definite on the kernel complement".into())
        })?;
        Ok(Self { a, kernel: ker, complement: q, restricted, label: label.into() })
    }

    /// Treats eigenvectors with `|mu| <= tol * max|A|` as the kernel.
    pub fn detect_kernel(a: DMatrix<f64>, tol: f64, label: impl Into<String>) -> Result<Self> {
        let scale = a.amax().max(1.0);
        let eig = a.clone().symmetric_eigen();
        let kernel = (0..a.nrows())
            .filter(|&i| eig.eigenvalues[i].abs() <= tol * scale)
            .map(|i| eig.eigenvectors.column(i).into_owned())
            .collect();
        Self::new(a, kernel, label)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn kernel(&self) -> &[DVector<f64>] {
        &self.kernel
    }

    pub fn complement_dim(&self) -> usize {
        self.complement.ncols()
    }

    /// Orthogonal projection `H` onto the kernel.
    pub fn project_kernel(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for k in &self.kernel {
            out.axpy(k.dot(v), k, 1.0);
        }
        out
    }

    /// `G v`: the solution `w` orthogonal to the kernel of `A w = v - H v`.
    pub fn green_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let w = v - self.project_kernel(v);
        let y = self.complement.transpose() * w;
        &self.complement * self.restricted.solve(&y)
    }
}

#[derive(Debug, Clone)]
pub struct GreenIterate {
    /// Largest eigenvalue of `G` on the search space.
    pub eta: f64,
    pub vector: DVector<f64>,
    pub iterations: usize,
    /// `|G phi - eta phi|`
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationControl {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IterationControl {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 20_000 }
    }
}

/// Power iteration on `G` restricted to the complement of the kernel and of
/// `found`. Returns the maximiser of `|G phi|` over unit `phi`; `1/eta` is the
/// smallest eigenvalue of `A` on that space.
pub fn top_green_iterate(
    problem: &SpectralProblem,
    found: &[DVector<f64>],
    seed: u64,
    control: IterationControl,
) -> Result<GreenIterate> {
    let mut locked = problem.kernel.clone();
    locked.extend(found.iter().cloned());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phi = DVector::zeros(problem.dim());
    for _ in 0..8 {
        phi = DVector::from_fn(problem.dim(), |_, _| StandardNormal.sample(&mut rng));
        if orthonormalize_against(&mut phi, &locked) > 1e-8 {
            break;
        }
    }
    if (phi.norm() - 1.0).abs() > 1e-12 {
        return Err(QflowError::Invalid("no search direction left off the kernel and found eigenvectors".into()));
    }
    let mut residual = f64::INFINITY;
    for it in 1..=control.max_iter {
        let mut psi = problem.green_apply(&phi);
        for _ in 0..2 {
            for b in &locked {
                let c = b.dot(&psi);
                psi.axpy(-c, b, 1.0);
            }
        }
        let eta = phi.dot(&psi);
        residual = (&psi - eta * &phi).norm();
        if residual <= control.tol * eta.abs() {
            return Ok(GreenIterate { eta, vector: phi, iterations: it, residual });
        }
        let n = psi.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(QflowError::Singular("Green iterate collapsed".into()));
        }
        phi = psi / n;
    }
    Err(QflowError::NoConvergence { iterations: control.max_iter, residual })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    /// `|A phi - mu phi|` per pair.
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
    pub k: usize,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip)]
    pub vectors: Vec<DVector<f64>>,
}

/// First `k` nonzero eigenvalues in nondecreasing order, each found by
/// maximising `|G phi|` orthogonally to the kernel and earlier eigenvectors.
pub fn deflate_spectrum(problem: &SpectralProblem, k: usize, seed: u64, control: IterationControl) -> Result<SpectrumResult> {
    if k > problem.complement_dim() {
        return Err(QflowError::Invalid(format!(
            "requested {k} eigenvalues but the kernel complement has dimension {}",
            problem.complement_dim()
        )));
    }
    let mut vectors: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut iterations = Vec::with_capacity(k);
    for j in 0..k {
        let it = top_green_iterate(problem, &vectors, seed.wrapping_add(j as u64), control)?;
        let phi = it.vector;
        let aphi = problem.matrix() * &phi;
        let mu = phi.dot(&aphi);
        residuals.push((&aphi - mu * &phi).norm());
        eigenvalues.push(mu);
        iterations.push(it.iterations);
        vectors.push(phi);
    }
    Ok(SpectrumResult { eigenvalues, residuals, iterations, k, n: None, vectors })
}

/// Projection residual `|G beta - sum_{i<n} <G beta, phi_i> phi_i - H(G beta)|`
/// and the bound `|beta| / mu_n` for the first `n` found eigenpairs, with
/// `mu_n` the next eigenvalue.
pub fn completeness_check(problem: &SpectralProblem, result: &SpectrumResult, n: usize, beta: &DVector<f64>) -> Result<(f64, f64)> {
    if n >= result.eigenvalues.len() {
        return Err(QflowError::Invalid("completeness check needs one eigenvalue beyond the expansion".into()));
    }
    let v = problem.green_apply(beta);
    let mut r = &v - problem.project_kernel(&v);
    for phi in &result.vectors[..n] {
        let c = phi.dot(&v);
        r.axpy(-c, phi, 1.0);
    }
    Ok((r.norm(), beta.norm() / result.eigenvalues[n]))
}

/// Whitespace-separated square matrix, one row per line; `#` starts a comment.
pub fn read_matrix_file(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|e| QflowError::Invalid(format!("line {}: {e}", ln + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(QflowError::Invalid(format!("{} is not a square matrix", path.display())));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Compares two ascending lists entrywise; returns the worst difference.
pub fn multiset_distance(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Some(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}
