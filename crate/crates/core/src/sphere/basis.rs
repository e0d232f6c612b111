//! Orthonormal real basis of bigraded spherical harmonics up to degree `N`.
//!
//! For each bidegree `(p, q)` with `p >= q` the complex space `H_{p,q}` is
//! built from bihomogeneous monomials: each monomial `m` is made harmonic as
//! `m - |z|^2 g` where `g` of bidegree `(p-1, q-1)` solves a small linear
//! system, and the results are Gram–Schmidt orthonormalised against the
//! exact monomial moments of `dmu0`. `H_{q,p}` is the conjugate space.
//!
//! Real modes: for `p > q` the pair `Plus = (f + conj f)/sqrt 2`,
//! `Minus = (f - conj f)/(i sqrt 2)`; for `p == q` a real orthonormal basis
//! of the conjugation-closed space `H_{p,p}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

use super::poly::{Exponent, Poly};

const DEPENDENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Plus,
    Minus,
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Part::Plus => f.write_str("plus"),
            Part::Minus => f.write_str("minus"),
        }
    }
}

impl std::str::FromStr for Part {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "plus" | "+" => Ok(Part::Plus),
            "minus" | "-" => Ok(Part::Minus),
            other => Err(format!("unknown part {other:?}")),
        }
    }
}

/// Label of one real basis function. `p >= q` always; the conjugate
/// bidegree `(q, p)` is folded into the Plus/Minus pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub p: usize,
    pub q: usize,
    pub m: usize,
    pub part: Part,
}

impl ModeIndex {
    pub fn new(p: usize, q: usize, m: usize, part: Part) -> Option<Self> {
        let valid = p >= q && m <= p + q && !(p == q && part == Part::Minus);
        valid.then_some(Self { p, q, m, part })
    }

    pub fn degree(&self) -> usize {
        self.p + self.q
    }

    /// Modes with `pq = 0` span the kernel of the Paneitz operator.
    pub fn in_paneitz_kernel(&self) -> bool {
        self.p * self.q == 0
    }

    /// The other half of a Plus/Minus pair.
    pub fn partner(&self) -> Option<Self> {
        if self.p == self.q {
            return None;
        }
        let part = match self.part {
            Part::Plus => Part::Minus,
            Part::Minus => Part::Plus,
        };
        Some(Self { part, ..*self })
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.p, self.q, self.m, self.part)
    }
}

/// Canonical ordering of the real modes with `p + q <= n`: by total degree,
/// then `p` descending, then `m`, then Plus before Minus.
pub fn mode_table(n: usize) -> Vec<ModeIndex> {
    let mut out = Vec::with_capacity(mode_count(n));
    for deg in 0..=n {
        for p in (deg.div_ceil(2)..=deg).rev() {
            let q = deg - p;
            for m in 0..=deg {
                out.push(ModeIndex { p, q, m, part: Part::Plus });
                if p != q {
                    out.push(ModeIndex { p, q, m, part: Part::Minus });
                }
            }
        }
    }
    out
}

/// Number of real modes with `p + q <= n`, i.e. `sum_{d<=n} (d+1)^2`.
pub fn mode_count(n: usize) -> usize {
    (0..=n).map(|d| (d + 1) * (d + 1)).sum()
}

/// Position of a mode in [`mode_table`] order.
pub fn mode_position(mode: &ModeIndex) -> usize {
    let deg = mode.degree();
    let mut pos = if deg == 0 { 0 } else { mode_count(deg - 1) };
    for p in ((mode.p + 1)..=deg).rev() {
        let q = deg - p;
        pos += if p == q { deg + 1 } else { 2 * (deg + 1) };
    }
    if mode.p == mode.q {
        pos + mode.m
    } else {
        pos + 2 * mode.m + usize::from(mode.part == Part::Minus)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Basis {
    pub degree: usize,
    pub modes: Vec<ModeIndex>,
    /// Real-valued polynomials, one per mode, in [`mode_table`] order.
    pub real: Vec<Poly>,
    /// Orthonormal complex basis of `H_{p,q}` for `p >= q`.
    #[serde(with = "bidegree_list")]
    pub complex: BTreeMap<(usize, usize), Vec<Poly>>,
}

mod bidegree_list {
    use super::Poly;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    type Spaces = BTreeMap<(usize, usize), Vec<Poly>>;

    pub fn serialize<S: Serializer>(m: &Spaces, s: S) -> Result<S::Ok, S::Error> {
        m.iter().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Spaces, D::Error> {
        Ok(Vec::<((usize, usize), Vec<Poly>)>::deserialize(d)?.into_iter().collect())
    }
}

/// Builds the orthonormal basis up to total degree `n`.
pub fn build_basis(n: usize) -> Basis {
    let mut complex = BTreeMap::new();
    for deg in 0..=n {
        for p in deg.div_ceil(2)..=deg {
            let q = deg - p;
            complex.insert((p, q), harmonic_space(p, q));
        }
    }
    let modes = mode_table(n);
    let mut real = Vec::with_capacity(modes.len());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for deg in 0..=n {
        for p in (deg.div_ceil(2)..=deg).rev() {
            let q = deg - p;
            let space = &complex[&(p, q)];
            if p == q {
                real.extend(real_basis_of_selfconjugate(space));
            } else {
                for f in space {
                    let fb = f.conj();
                    real.push(f.add(&fb).scale_re(s));
                    // (f - fbar) / (i sqrt2) = -i (f - fbar) / sqrt2
                    real.push(f.sub(&fb).scale(Complex64::new(0.0, -s)));
                }
            }
        }
    }
    debug_assert_eq!(real.len(), modes.len());
    Basis { degree: n, modes, real, complex }
}

impl Basis {
    /// Complex basis function `f_{p,q,m}` for any ordering of `p, q`;
    /// for `p < q` it is the conjugate of `f_{q,p,m}`.
    pub fn complex_mode(&self, p: usize, q: usize, m: usize) -> Option<Poly> {
        if p >= q {
            self.complex.get(&(p, q)).and_then(|v| v.get(m)).cloned()
        } else {
            self.complex.get(&(q, p)).and_then(|v| v.get(m)).map(Poly::conj)
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn poly(&self, mode: &ModeIndex) -> &Poly {
        &self.real[mode_position(mode)]
    }
}

fn bihomogeneous_monomials(p: usize, q: usize) -> Vec<Exponent> {
    let mut out = Vec::new();
    for a in (0..=p).rev() {
        for c in (0..=q).rev() {
            out.push([a as u8, (p - a) as u8, c as u8, (q - c) as u8]);
        }
    }
    out
}

/// Solves `L(|z|^2 g) = L(m)` for `g` in bidegree `(p-1, q-1)` and returns
/// the harmonic part `m - |z|^2 g` of each monomial.
fn harmonic_projections(p: usize, q: usize) -> Vec<Poly> {
    let one = Complex64::new(1.0, 0.0);
    let monos = bihomogeneous_monomials(p, q);
    if p == 0 || q == 0 {
        return monos.into_iter().map(|e| Poly::monomial(e, one)).collect();
    }
    let lower = bihomogeneous_monomials(p - 1, q - 1);
    let index: BTreeMap<Exponent, usize> = lower.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    let r2 = Poly::norm_sq();
    let dim = lower.len();
    let mut system = DMatrix::<f64>::zeros(dim, dim);
    let lifted: Vec<Poly> = lower.iter().map(|e| r2.mul(&Poly::monomial(*e, one))).collect();
    for (col, lift) in lifted.iter().enumerate() {
        for (e, c) in lift.ambient_laplacian().terms() {
            system[(index[e], col)] = c.re;
        }
    }
    let lu = system.lu();
    monos
        .into_iter()
        .map(|e| {
            let m = Poly::monomial(e, one);
            let mut rhs = DVector::<f64>::zeros(dim);
            for (f, c) in m.ambient_laplacian().terms() {
                rhs[index[f]] = c.re;
            }
            let g = lu.solve(&rhs).expect("Fischer system is invertible");
            let mut h = m;
            for (k, lift) in lifted.iter().enumerate() {
                h.add_scaled(lift, -g[k]);
            }
            h
        })
        .collect()
}

fn harmonic_space(p: usize, q: usize) -> Vec<Poly> {
    let space = gram_schmidt(harmonic_projections(p, q), |a, b| a.inner(b));
    debug_assert_eq!(space.len(), p + q + 1, "dim H_({p},{q})");
    space
}

fn real_basis_of_selfconjugate(space: &[Poly]) -> Vec<Poly> {
    let mut spanning = Vec::with_capacity(2 * space.len());
    for f in space {
        let fb = f.conj();
        spanning.push(f.add(&fb).scale_re(0.5));
        spanning.push(f.sub(&fb).scale(Complex64::new(0.0, -0.5)));
    }
    gram_schmidt(spanning, |a, b| Complex64::new(a.inner(b).re, 0.0))
}

/// Modified Gram–Schmidt with one re-orthogonalisation pass; vectors whose
/// residual norm falls below the tolerance are dropped.
fn gram_schmidt<F>(vectors: Vec<Poly>, inner: F) -> Vec<Poly>
where
    F: Fn(&Poly, &Poly) -> Complex64,
{
    let mut basis: Vec<Poly> = Vec::new();
    for v in vectors {
        let start = inner(&v, &v).re.sqrt();
        let mut w = v;
        for _ in 0..2 {
            for b in &basis {
                let proj = inner(&w, b);
                w = w.sub(&b.scale(proj));
            }
        }
        let norm = inner(&w, &w).re.sqrt();
        if norm > DEPENDENCE_TOL * start.max(1e-300) {
            basis.push(w.scale_re(1.0 / norm));
        }
    }
    basis
}
