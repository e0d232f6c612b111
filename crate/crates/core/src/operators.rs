//! Spectral realisations of the sphere's CR operators.
//!
//! The real basis diagonalises the sub-Laplacian and the Paneitz operator;
//! the characteristic derivative rotates each Plus/Minus pair. Operators act
//! as per-mode rules, with dense matrices exported for the eigensolver.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::frame::{JetTable, WEBSTER_CURVATURE};
use crate::sphere::{mode_table, synthesize, Part, SpectralField, SpectralSpace, CONTACT_VOLUME};
use crate::{QflowError, Result};

/// `-(2pq + p + q)`
pub fn sublaplacian_eigenvalue(p: usize, q: usize) -> f64 {
    -((2 * p * q + p + q) as f64)
}

/// `4pq(p+1)(q+1)`
pub fn paneitz_eigenvalue(p: usize, q: usize) -> f64 {
    (4 * p * q * (p + 1) * (q + 1)) as f64
}

/// Eigenvalue of `2P - Delta^2`: `p^2(4q-1) + q^2(4p-1) + 6pq + 4p^2q^2`.
pub fn comparison_eigenvalue(p: usize, q: usize) -> f64 {
    let (p, q) = (p as f64, q as f64);
    p * p * (4.0 * q - 1.0) + q * q * (4.0 * p - 1.0) + 6.0 * p * q + 4.0 * p * p * q * q
}

/// Eigenvalue of `-Box` on the complex space `H_{p,q}`: `2p(q+1)`.
pub fn neg_kohn_eigenvalue(p: usize, q: usize) -> f64 {
    (2 * p * (q + 1)) as f64
}

pub fn apply_delta0(field: &SpectralField) -> SpectralField {
    field.map_modes(|m, c| sublaplacian_eigenvalue(m.p, m.q) * c)
}

pub fn apply_paneitz(field: &SpectralField) -> SpectralField {
    field.map_modes(|m, c| paneitz_eigenvalue(m.p, m.q) * c)
}

/// `T` on a pair with `k = p - q`: `c_plus' = k c_minus`, `c_minus' = -k c_plus`.
pub fn apply_t0(field: &SpectralField) -> SpectralField {
    let mut out = SpectralField::zeros(field.degree());
    for (m, c) in field.iter() {
        if let Some(partner) = m.partner() {
            let k = (m.p - m.q) as f64;
            let target = match m.part {
                Part::Plus => -k * c,
                Part::Minus => k * c,
            };
            out.set(&partner, out.get(&partner) + target);
        }
    }
    out
}

pub fn apply_t0_squared(field: &SpectralField) -> SpectralField {
    field.map_modes(|m, c| -(((m.p - m.q) * (m.p - m.q)) as f64) * c)
}

/// `2P - Delta^2`
pub fn apply_comparison(field: &SpectralField) -> SpectralField {
    field.map_modes(|m, c| comparison_eigenvalue(m.p, m.q) * c)
}

/// Complex-valued function `re + i im` on the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub re: SpectralField,
    pub im: SpectralField,
}

impl ComplexField {
    pub fn real(re: SpectralField) -> Self {
        let im = SpectralField::zeros(re.degree());
        Self { re, im }
    }

    pub fn norm(&self) -> f64 {
        (self.re.norm_sq() + self.im.norm_sq()).sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { re: self.re.sub(&other.re), im: self.im.sub(&other.im) }
    }
}

/// `Box = Delta + iT`, or `conj(Box) = Delta - iT` when `conjugated`.
pub fn apply_kohn(f: &ComplexField, conjugated: bool) -> ComplexField {
    let s = if conjugated { -1.0 } else { 1.0 };
    let tu = apply_t0(&f.re);
    let tv = apply_t0(&f.im);
    let mut re = apply_delta0(&f.re);
    re.axpy(-s, &tv);
    let mut im = apply_delta0(&f.im);
    im.axpy(s, &tu);
    ComplexField { re, im }
}

/// Split into the `pq = 0` part (kernel of the Paneitz operator) and the rest.
pub fn project_kernel(field: &SpectralField) -> (SpectralField, SpectralField) {
    let ker = field.map_modes(|m, c| if m.in_paneitz_kernel() { c } else { 0.0 });
    let perp = field.map_modes(|m, c| if m.in_paneitz_kernel() { 0.0 } else { c });
    (ker, perp)
}

/// Background pseudohermitian data on the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundGeometry {
    pub q0: SpectralField,
    pub w0: f64,
    pub v0: f64,
    pub torsion_free: bool,
}

impl BackgroundGeometry {
    pub fn sphere(q0: SpectralField) -> Self {
        Self { q0, w0: WEBSTER_CURVATURE, v0: CONTACT_VOLUME, torsion_free: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.torsion_free {
            return Err(QflowError::Invalid("operators require a torsion-free background".into()));
        }
        Ok(())
    }

    /// True when `Q0` has a component in the Paneitz kernel, which makes the
    /// kernel part of the flow drift.
    pub fn has_kernel_drift(&self) -> bool {
        project_kernel(&self.q0).0.max_abs() > 0.0
    }
}

/// Pointwise `Q = e^{-4 lambda}(Q0 + 2 P lambda)` at the grid nodes.
pub fn q_curvature(lambda: &SpectralField, bg: &BackgroundGeometry, space: &SpectralSpace) -> Result<Vec<f64>> {
    bg.validate()?;
    let lam = synthesize(lambda, space)?;
    let mut src = apply_paneitz(lambda).scale(2.0);
    src = src.add(&bg.q0);
    let s = synthesize(&src, space)?;
    lam.iter()
        .zip(&s)
        .map(|(l, s)| {
            let v = (-4.0 * l).exp() * s;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(QflowError::Overflow(format!("e^(-4 lambda) at lambda = {l}")))
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    SubLaplacian,
    NegSubLaplacian,
    T0,
    Paneitz,
    /// `-Box` realified on `(re, im)` coefficient pairs; twice the mode count.
    NegKohn,
    /// `2P - Delta^2`
    Comparison,
}

impl std::str::FromStr for OperatorKind {
    type Err = QflowError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sublaplacian" => Self::SubLaplacian,
            "neg-sublaplacian" => Self::NegSubLaplacian,
            "t0" => Self::T0,
            "paneitz" => Self::Paneitz,
            "neg-kohn" => Self::NegKohn,
            "comparison" => Self::Comparison,
            other => return Err(QflowError::Invalid(format!("unknown operator '{other}'"))),
        })
    }
}

fn rule_matrix(n: usize, rule: impl Fn(&SpectralField) -> SpectralField) -> DMatrix<f64> {
    let len = mode_table(n).len();
    let mut a = DMatrix::zeros(len, len);
    for j in 0..len {
        let mut e = SpectralField::zeros(n);
        e.coeffs_mut()[j] = 1.0;
        for (i, v) in rule(&e).coeffs().iter().enumerate() {
            a[(i, j)] = *v;
        }
    }
    a
}

/// Dense matrix of an operator on the real basis of degree `n`, built by
/// applying the spectral rule to each basis vector.
pub fn operator_matrix(kind: OperatorKind, n: usize) -> DMatrix<f64> {
    match kind {
        OperatorKind::SubLaplacian => rule_matrix(n, apply_delta0),
        OperatorKind::NegSubLaplacian => rule_matrix(n, |f| apply_delta0(f).scale(-1.0)),
        OperatorKind::T0 => rule_matrix(n, apply_t0),
        OperatorKind::Paneitz => rule_matrix(n, apply_paneitz),
        OperatorKind::Comparison => rule_matrix(n, apply_comparison),
        OperatorKind::NegKohn => {
            let d = operator_matrix(OperatorKind::SubLaplacian, n);
            let t = operator_matrix(OperatorKind::T0, n);
            realify_neg_kohn(&d, &t)
        }
    }
}

/// `-Box(u + iv) = (-Delta u + T v) + i(-Delta v - T u)`.
fn realify_neg_kohn(delta: &DMatrix<f64>, t: &DMatrix<f64>) -> DMatrix<f64> {
    let len = delta.nrows();
    let mut a = DMatrix::zeros(2 * len, 2 * len);
    a.view_mut((0, 0), (len, len)).copy_from(&(-delta));
    a.view_mut((0, len), (len, len)).copy_from(t);
    a.view_mut((len, 0), (len, len)).copy_from(&(-t));
    a.view_mut((len, len), (len, len)).copy_from(&(-delta));
    a
}

/// The same matrices assembled from pointwise frame jets by quadrature,
/// `A_ij = int b_i (A b_j)`, independent of the eigenvalue rules.
pub fn operator_matrix_from_jets(kind: OperatorKind, table: &JetTable, weights: &[f64]) -> DMatrix<f64> {
    let (nodes, len) = (table.n_nodes(), table.n_modes());
    let sample = |f: &dyn Fn(&crate::frame::JetValues) -> f64| {
        DMatrix::from_fn(nodes, len, |k, i| weights[k].sqrt() * f(table.mode_jet(k, i)))
    };
    let value = sample(&|j| j.value);
    let lap = sample(&|j| j.sublaplacian());
    let tder = sample(&|j| j.d0.re);
    let gram = |x: &DMatrix<f64>, y: &DMatrix<f64>| x.transpose() * y;
    match kind {
        OperatorKind::SubLaplacian => gram(&value, &lap),
        OperatorKind::NegSubLaplacian => -gram(&value, &lap),
        OperatorKind::T0 => gram(&value, &tder),
        OperatorKind::Paneitz => gram(&lap, &lap) - gram(&tder, &tder),
        OperatorKind::Comparison => gram(&lap, &lap) - 2.0 * gram(&tder, &tder),
        OperatorKind::NegKohn => realify_neg_kohn(&gram(&value, &lap), &gram(&value, &tder)),
    }
}

/// Orthonormal basis of the operator's kernel, in the same coordinates as
/// [`operator_matrix`].
pub fn kernel_basis(kind: OperatorKind, n: usize) -> Vec<DVector<f64>> {
    let modes = mode_table(n);
    let len = modes.len();
    let unit = |i: usize, dim: usize| {
        let mut v = DVector::zeros(dim);
        v[i] = 1.0;
        v
    };
    match kind {
        OperatorKind::SubLaplacian | OperatorKind::NegSubLaplacian => vec![unit(0, len)],
        OperatorKind::T0 => (0..len).filter(|&i| modes[i].p == modes[i].q).map(|i| unit(i, len)).collect(),
        OperatorKind::Paneitz => (0..len).filter(|&i| modes[i].in_paneitz_kernel()).map(|i| unit(i, len)).collect(),
        OperatorKind::Comparison => vec![unit(0, len)],
        OperatorKind::NegKohn => {
            // Kernel of -Box is H_{0,k}: conjugates of holomorphic modes.
            // With g = (Plus + i Minus)/sqrt2, conj(g) and i conj(g) give
            // (u, v) = (Plus, -Minus)/sqrt2 and (Minus, Plus)/sqrt2.
            let mut out = vec![unit(0, 2 * len), unit(len, 2 * len)];
            let h = std::f64::consts::FRAC_1_SQRT_2;
            for (i, m) in modes.iter().enumerate() {
                if m.q == 0 && m.p > 0 && m.part == Part::Plus {
                    let j = i + 1;
                    let mut a = DVector::zeros(2 * len);
                    a[i] = h;
                    a[len + j] = -h;
                    let mut b = DVector::zeros(2 * len);
                    b[j] = h;
                    b[len + i] = h;
                    out.push(a);
                    out.push(b);
                }
            }
            out
        }
    }
}

/// Nonzero eigenvalues with multiplicity, sorted, enumerated directly from
/// the bidegree formulas (not from the matrices).
pub fn closed_form_spectrum(kind: OperatorKind, n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for deg in 0..=n {
        for p in 0..=deg {
            let q = deg - p;
            let dim = deg + 1;
            let (value, copies) = match kind {
                OperatorKind::SubLaplacian => (sublaplacian_eigenvalue(p, q), dim),
                OperatorKind::NegSubLaplacian => (-sublaplacian_eigenvalue(p, q), dim),
                OperatorKind::Paneitz => (paneitz_eigenvalue(p, q), dim),
                OperatorKind::Comparison => (comparison_eigenvalue(p, q), dim),
                OperatorKind::NegKohn => (neg_kohn_eigenvalue(p, q), 2 * dim),
                // T is skew; its spectrum is imaginary.
                OperatorKind::T0 => (0.0, 0),
            };
            if value != 0.0 {
                out.extend(std::iter::repeat_n(value, copies));
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Spectral gap `min_{pq >= 1} 4pq(p+1)(q+1)` over the represented modes.
pub fn essential_positivity_gap(n: usize) -> Option<f64> {
    mode_table(n)
        .iter()
        .filter(|m| !m.in_paneitz_kernel())
        .map(|m| paneitz_eigenvalue(m.p, m.q))
        .min_by(f64::total_cmp)
}
