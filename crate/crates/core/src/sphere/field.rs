use serde::{Deserialize, Serialize};

use super::basis::{mode_count, mode_position, mode_table, ModeIndex};
use super::CONTACT_VOLUME;

/// Real coefficient vector over the orthonormal real basis, truncated at
/// total degree `degree`. Coefficients are stored densely in
/// [`mode_table`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    degree: usize,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(degree: usize) -> Self {
        Self { degree, coeffs: vec![0.0; mode_count(degree)] }
    }

    /// Panics if the length does not match the mode count of `degree`.
    pub fn from_coeffs(degree: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), mode_count(degree), "coefficient count for degree {degree}");
        Self { degree, coeffs }
    }

    pub fn from_modes<I>(degree: usize, modes: I) -> Self
    where
        I: IntoIterator<Item = (ModeIndex, f64)>,
    {
        let mut f = Self::zeros(degree);
        for (m, c) in modes {
            f.set(&m, c);
        }
        f
    }

    pub fn single(degree: usize, mode: ModeIndex, c: f64) -> Self {
        Self::from_modes(degree, [(mode, c)])
    }

    /// The constant function with pointwise value `value`.
    pub fn constant(degree: usize, value: f64) -> Self {
        let mut f = Self::zeros(degree);
        f.coeffs[0] = value * CONTACT_VOLUME.sqrt();
        f
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn modes(&self) -> Vec<ModeIndex> {
        mode_table(self.degree)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModeIndex, f64)> + '_ {
        mode_table(self.degree).into_iter().zip(self.coeffs.iter().copied())
    }

    pub fn get(&self, mode: &ModeIndex) -> f64 {
        if mode.degree() > self.degree {
            return 0.0;
        }
        self.coeffs[mode_position(mode)]
    }

    /// Panics when the mode lies above the truncation degree.
    pub fn set(&mut self, mode: &ModeIndex, c: f64) {
        assert!(mode.degree() <= self.degree, "mode {mode} above degree {}", self.degree);
        let i = mode_position(mode);
        self.coeffs[i] = c;
    }

    /// Pointwise value of the constant part.
    pub fn mean_value(&self) -> f64 {
        self.coeffs[0] / CONTACT_VOLUME.sqrt()
    }

    /// Re-truncates (dropping or zero-padding modes).
    pub fn with_degree(&self, degree: usize) -> Self {
        let mut out = Self::zeros(degree);
        let n = out.coeffs.len().min(self.coeffs.len());
        out.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        out
    }

    pub fn map_modes<F>(&self, f: F) -> Self
    where
        F: Fn(&ModeIndex, f64) -> f64,
    {
        let coeffs = mode_table(self.degree).iter().zip(&self.coeffs).map(|(m, c)| f(m, *c)).collect();
        Self { degree: self.degree, coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a - b)
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        let d = self.degree.max(x.degree);
        if d > self.degree {
            *self = self.with_degree(d);
        }
        for (s, v) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *s += a * v;
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { degree: self.degree, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// `L^2(dmu0)` inner product (the basis is orthonormal).
    pub fn dot(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn combine<F: Fn(f64, f64) -> f64>(&self, other: &Self, f: F) -> Self {
        let d = self.degree.max(other.degree);
        let a = self.with_degree(d);
        let b = other.with_degree(d);
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| f(*x, *y)).collect();
        Self { degree: d, coeffs }
    }
}
