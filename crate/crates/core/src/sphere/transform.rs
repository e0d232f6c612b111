//! Dense synthesis and analysis between coefficients and node values.

use log::warn;

use super::basis::{build_basis, Basis};
use super::field::SpectralField;
use super::grid::{build_grid, QuadratureGrid};
use super::poly::PowerTable;
use crate::{Exec, QflowError, Result};

/// A basis, a grid, and the table of basis values at the grid nodes.
#[derive(Debug, Clone)]
pub struct SpectralSpace {
    pub basis: Basis,
    pub grid: QuadratureGrid,
    /// Row-major `nodes x modes`.
    table: Vec<f64>,
    /// Largest imaginary part met while evaluating the real modes.
    pub max_imag: f64,
    pub exec: Exec,
}

impl SpectralSpace {
    pub fn new(degree: usize, order: usize) -> Self {
        Self::with_exec(degree, order, Exec::default())
    }

    pub fn with_exec(degree: usize, order: usize, exec: Exec) -> Self {
        Self::from_parts(build_basis(degree), build_grid(order), exec)
    }

    pub fn from_parts(basis: Basis, grid: QuadratureGrid, exec: Exec) -> Self {
        let n_modes = basis.len();
        let max_exp = basis.degree.max(1);
        let rows: Vec<(Vec<f64>, f64)> = exec.map_slice(&grid.nodes, |node| {
            let pw = PowerTable::new(node.z, max_exp);
            let mut imag: f64 = 0.0;
            let row = basis
                .real
                .iter()
                .map(|p| {
                    let v = p.eval_with(&pw);
                    imag = imag.max(v.im.abs());
                    v.re
                })
                .collect();
            (row, imag)
        });
        let mut table = Vec::with_capacity(grid.len() * n_modes);
        let mut max_imag: f64 = 0.0;
        for (row, im) in rows {
            table.extend(row);
            max_imag = max_imag.max(im);
        }
        Self { basis, grid, table, max_imag, exec }
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn n_modes(&self) -> usize {
        self.basis.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.grid.len()
    }

    /// Value of mode `k` at node `i`.
    #[inline]
    pub fn value(&self, node: usize, mode: usize) -> f64 {
        self.table[node * self.n_modes() + mode]
    }

    pub fn row(&self, node: usize) -> &[f64] {
        let n = self.n_modes();
        &self.table[node * n..(node + 1) * n]
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.grid.integrate_values(values)
    }
}

/// Point values `sum_k c_k b_k(x_i)` at every node.
pub fn synthesize(field: &SpectralField, space: &SpectralSpace) -> Result<Vec<f64>> {
    synthesize_with(field, space, space.exec)
}

pub fn synthesize_with(field: &SpectralField, space: &SpectralSpace, exec: Exec) -> Result<Vec<f64>> {
    if field.degree() > space.degree() {
        return Err(QflowError::DegreeMismatch { field: field.degree(), basis: space.degree() });
    }
    let c = field.coeffs();
    Ok(exec.map(space.n_nodes(), |i| {
        space.row(i)[..c.len()].iter().zip(c).map(|(b, c)| b * c).sum()
    }))
}

/// Discrete adjoint of [`synthesize`]: `c_k = sum_i w_i v_i b_k(x_i)`.
pub fn analyze(values: &[f64], space: &SpectralSpace, degree: usize) -> Result<SpectralField> {
    analyze_with(values, space, degree, space.exec)
}

pub fn analyze_with(values: &[f64], space: &SpectralSpace, degree: usize, exec: Exec) -> Result<SpectralField> {
    if degree > space.degree() {
        return Err(QflowError::DegreeMismatch { field: degree, basis: space.degree() });
    }
    if values.len() != space.n_nodes() {
        return Err(QflowError::Invalid(format!("{} values for {} nodes", values.len(), space.n_nodes())));
    }
    if 2 * degree > space.grid.order {
        warn!("analysis at degree {degree} exceeds grid exactness {} (aliasing risk)", space.grid.order);
    }
    let out = SpectralField::zeros(degree);
    let n = out.len();
    let w = &space.grid.weights;
    // Parallel over modes keeps every coefficient a sequential node sum.
    let coeffs = exec.map(n, |k| (0..space.n_nodes()).map(|i| w[i] * values[i] * space.value(i, k)).sum());
    Ok(SpectralField::from_coeffs(degree, coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{ModeIndex, Part, CONTACT_VOLUME};
    use rand::{Rng, SeedableRng};

    #[test]
    fn gram_matrix_is_identity() {
        let s = SpectralSpace::new(5, 10);
        let n = s.n_modes();
        for a in 0..n {
            for b in 0..n {
                let g: f64 = (0..s.n_nodes()).map(|i| s.grid.weights[i] * s.value(i, a) * s.value(i, b)).sum();
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((g - e).abs() < 1e-12, "{a} {b} {g}");
            }
        }
        assert!(s.max_imag < 1e-13);
    }

    #[test]
    fn constant_mode_values() {
        let s = SpectralSpace::new(2, 4);
        let f = SpectralField::single(2, ModeIndex::new(0, 0, 0, Part::Plus).unwrap(), 1.0);
        for v in synthesize(&f, &s).unwrap() {
            assert!((v - 1.0 / CONTACT_VOLUME.sqrt()).abs() < 1e-14);
        }
        let ones = vec![1.0; s.n_nodes()];
        let a = analyze(&ones, &s, 2).unwrap();
        assert!((a.coeffs()[0] - CONTACT_VOLUME.sqrt()).abs() < 1e-12);
        assert!(a.coeffs()[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn round_trip_and_parseval() {
        let s = SpectralSpace::new(6, 12);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let f = SpectralField::from_coeffs(6, (0..s.n_modes()).map(|_| rng.random_range(-1.0..1.0)).collect());
        let v = synthesize(&f, &s).unwrap();
        let back = analyze(&v, &s, 6).unwrap();
        assert!(back.sub(&f).max_abs() < 1e-12);
        let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
        assert!((s.integrate(&sq) - f.norm_sq()).abs() < 1e-11 * f.norm_sq());
    }

    #[test]
    fn zero_field_synthesizes_to_zero() {
        let s = SpectralSpace::new(3, 6);
        assert!(synthesize(&SpectralField::zeros(3), &s).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_excess_degree() {
        let s = SpectralSpace::new(2, 4);
        assert!(synthesize(&SpectralField::zeros(3), &s).is_err());
    }

    #[test]
    fn exec_policies_bitwise_equal() {
        let a = SpectralSpace::with_exec(4, 8, Exec::Sequential);
        let b = SpectralSpace::with_exec(4, 8, Exec::Parallel);
        let f = SpectralField::from_coeffs(4, (0..a.n_modes()).map(|k| (k as f64).cos()).collect());
        let va = synthesize_with(&f, &a, Exec::Sequential).unwrap();
        let vb = synthesize_with(&f, &b, Exec::Parallel).unwrap();
        assert_eq!(va, vb);
    }
}
