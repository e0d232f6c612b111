//! Polynomials in `(z0, z1, conj z0, conj z1)` with complex coefficients.
//!
//! Exponents are stored as `[a, b, c, d]` for `z0^a z1^b zbar0^c zbar1^d`.
//! Restricted to the unit sphere these represent every function the spectral
//! code touches; all derivatives are taken exactly on this representation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::CONTACT_VOLUME;

pub type Exponent = [u8; 4];

/// Ambient coordinate slots.
pub const Z0: usize = 0;
pub const Z1: usize = 1;
pub const ZB0: usize = 2;
pub const ZB1: usize = 3;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    #[serde(with = "term_list")]
    terms: BTreeMap<Exponent, Complex64>,
}

/// JSON maps need string keys, so terms are stored as a list of pairs.
mod term_list {
    use super::{Complex64, Exponent};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(m: &BTreeMap<Exponent, Complex64>, s: S) -> Result<S::Ok, S::Error> {
        m.iter().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Exponent, Complex64>, D::Error> {
        Ok(Vec::<(Exponent, Complex64)>::deserialize(d)?.into_iter().collect())
    }
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial([0; 4], c)
    }

    pub fn monomial(e: Exponent, c: Complex64) -> Self {
        let mut p = Self::zero();
        p.add_term(e, c);
        p
    }

    /// `|z|^2 = z0 zbar0 + z1 zbar1`.
    pub fn norm_sq() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let mut p = Self::monomial([1, 0, 1, 0], one);
        p.add_term([0, 1, 0, 1], one);
        p
    }

    pub fn add_term(&mut self, e: Exponent, c: Complex64) {
        let entry = self.terms.entry(e).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &Exponent) -> Complex64 {
        self.terms.get(e).copied().unwrap_or_default()
    }

    pub fn total_degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().map(|&k| k as usize).sum()).max().unwrap_or(0)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            out.add_term(*e, c * s);
        }
        out
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (e, c) in &other.terms {
            self.add_term(*e, *c);
        }
    }

    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        for (e, c) in &other.terms {
            self.add_term(*e, c * s);
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = [e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3]];
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    /// Complex conjugate as a function: swaps holomorphic and
    /// antiholomorphic exponents and conjugates coefficients.
    pub fn conj(&self) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            out.add_term([e[2], e[3], e[0], e[1]], c.conj());
        }
        out
    }

    /// Exact partial derivative in ambient slot `k`.
    pub fn deriv(&self, k: usize) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if e[k] > 0 {
                let mut f = *e;
                f[k] -= 1;
                out.add_term(f, c * e[k] as f64);
            }
        }
        out
    }

    /// Ambient Euclidean Laplacian up to the factor 4:
    /// `sum_j d^2/dz_j dzbar_j`.
    pub fn ambient_laplacian(&self) -> Self {
        self.deriv(Z0).deriv(ZB0).add(&self.deriv(Z1).deriv(ZB1))
    }

    /// Coefficients of the linear vector field `X = sum_j X^j(z) d_j`
    /// applied to the polynomial.
    pub fn apply_field(&self, field: LinearField) -> Self {
        let comps = field.component_polys();
        let mut out = Self::zero();
        for (j, comp) in comps.iter().enumerate() {
            if comp.is_empty() {
                continue;
            }
            out.add_assign(&comp.mul(&self.deriv(j)));
        }
        out
    }

    pub fn eval(&self, z: [Complex64; 2]) -> Complex64 {
        let pw = PowerTable::new(z, self.max_exponent());
        self.eval_with(&pw)
    }

    pub fn eval_with(&self, pw: &PowerTable) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| c * pw.get(0, e[0]) * pw.get(1, e[1]) * pw.get(2, e[2]) * pw.get(3, e[3]))
            .sum()
    }

    pub fn max_exponent(&self) -> usize {
        self.terms.keys().flat_map(|e| e.iter().copied()).max().unwrap_or(0) as usize
    }

    /// Exact integral against the contact volume form over the unit sphere.
    pub fn integrate(&self) -> Complex64 {
        self.terms
            .iter()
            .filter(|(e, _)| e[0] == e[2] && e[1] == e[3])
            .map(|(e, c)| c * monomial_moment(e[0] as usize, e[1] as usize))
            .sum()
    }

    /// `<f, g> = int f conj(g) dmu0`, exact.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                // conj(g) term has exponent [e2[2], e2[3], e2[0], e2[1]]
                let a = e1[0] + e2[2];
                let b = e1[1] + e2[3];
                let c = e1[2] + e2[0];
                let d = e1[3] + e2[1];
                if a == c && b == d {
                    acc += c1 * c2.conj() * monomial_moment(a as usize, b as usize);
                }
            }
        }
        acc
    }

    /// Largest imaginary-part mismatch `|c_e - conj(c_{swap e})|`; zero for
    /// real-valued polynomials.
    pub fn reality_defect(&self) -> f64 {
        let c = self.conj();
        self.sub(&c).terms.values().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// `int |z0|^{2a} |z1|^{2b} dmu0 = V0 a! b! / (a+b+1)!`.
pub fn monomial_moment(a: usize, b: usize) -> f64 {
    // a! b! / (a+b+1)! = 1 / ((a+b+1) * C(a+b, a))
    let n = a + b;
    let mut binom = 1.0;
    for k in 0..a {
        binom *= (n - k) as f64 / (k + 1) as f64;
    }
    CONTACT_VOLUME / ((n + 1) as f64 * binom)
}

/// Powers of the four ambient coordinates at a point.
#[derive(Debug, Clone)]
pub struct PowerTable {
    pw: [Vec<Complex64>; 4],
}

impl PowerTable {
    pub fn new(z: [Complex64; 2], max: usize) -> Self {
        let base = [z[0], z[1], z[0].conj(), z[1].conj()];
        let pw = base.map(|b| {
            let mut v = Vec::with_capacity(max + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            for _ in 0..=max {
                v.push(acc);
                acc *= b;
            }
            v
        });
        Self { pw }
    }

    #[inline]
    pub fn get(&self, slot: usize, k: u8) -> Complex64 {
        self.pw[slot][k as usize]
    }

    pub fn max(&self) -> usize {
        self.pw[0].len() - 1
    }
}

/// The three linear vector fields that make up the CR frame of the sphere,
/// written in ambient complex coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearField {
    /// `Z1 = zbar1 d/dz0 - zbar0 d/dz1`
    Z,
    /// `Z1bar = z1 d/dzbar0 - z0 d/dzbar1`
    Zbar,
    /// `T = i (z0 d/dz0 + z1 d/dz1 - zbar0 d/dzbar0 - zbar1 d/dzbar1)`
    T,
}

impl LinearField {
    /// `M` with `X^j(x) = sum_k M[j][k] x_k` in slot order `(z0, z1, zbar0, zbar1)`.
    pub fn matrix(self) -> [[Complex64; 4]; 4] {
        let o = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let mut m = [[o; 4]; 4];
        match self {
            LinearField::Z => {
                m[Z0][ZB1] = one;
                m[Z1][ZB0] = -one;
            }
            LinearField::Zbar => {
                m[ZB0][Z1] = one;
                m[ZB1][Z0] = -one;
            }
            LinearField::T => {
                m[Z0][Z0] = i;
                m[Z1][Z1] = i;
                m[ZB0][ZB0] = -i;
                m[ZB1][ZB1] = -i;
            }
        }
        m
    }

    /// Components at a point.
    pub fn components(self, x: [Complex64; 4]) -> [Complex64; 4] {
        let m = self.matrix();
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for j in 0..4 {
            for k in 0..4 {
                out[j] += m[j][k] * x[k];
            }
        }
        out
    }

    fn component_polys(self) -> [Poly; 4] {
        let m = self.matrix();
        std::array::from_fn(|j| {
            let mut p = Poly::zero();
            for (k, c) in m[j].iter().enumerate() {
                if c.norm() != 0.0 {
                    let mut e = [0u8; 4];
                    e[k] = 1;
                    p.add_term(e, *c);
                }
            }
            p
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn moments() {
        assert!((monomial_moment(0, 0) - 4.0 * PI * PI).abs() < 1e-12);
        // |z0|^2 integrates to half the volume by symmetry
        assert!((monomial_moment(1, 0) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((monomial_moment(2, 1) - CONTACT_VOLUME * 2.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn conj_involution_and_reality() {
        let mut p = Poly::monomial([2, 0, 0, 1], Complex64::new(1.0, 2.0));
        p.add_term([1, 1, 1, 0], c(3.0));
        assert_eq!(p.conj().conj(), p);
        let real = p.add(&p.conj());
        assert!(real.reality_defect() < 1e-15);
        assert!(p.reality_defect() > 0.0);
    }

    #[test]
    fn fields_on_linear_functions() {
        let z0 = Poly::monomial([1, 0, 0, 0], c(1.0));
        let zb0 = Poly::monomial([0, 0, 1, 0], c(1.0));
        assert_eq!(z0.apply_field(LinearField::Z), Poly::monomial([0, 0, 0, 1], c(1.0)));
        assert!(zb0.apply_field(LinearField::Z).is_empty());
        assert_eq!(zb0.apply_field(LinearField::Zbar), Poly::monomial([0, 1, 0, 0], c(1.0)));
        assert_eq!(z0.apply_field(LinearField::T), z0.scale(Complex64::new(0.0, 1.0)));
    }

    #[test]
    fn eval_matches_manual() {
        let z = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let p = Poly::monomial([1, 1, 0, 1], c(2.0));
        let expect = 2.0 * z[0] * z[1] * z[1].conj();
        assert!((p.eval(z) - expect).norm() < 1e-15);
    }

    #[test]
    fn inner_product_orthogonality_of_bidegrees() {
        let a = Poly::monomial([1, 0, 0, 0], c(1.0));
        let b = Poly::monomial([0, 0, 1, 0], c(1.0));
        assert_eq!(a.inner(&b), Complex64::new(0.0, 0.0));
        assert!((a.inner(&a).re - CONTACT_VOLUME / 2.0).abs() < 1e-12);
    }
}
