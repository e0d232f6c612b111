//! Heisenberg group toolkit: group law, dilations, homogeneous norm,
//! horizontal gradient, ball quadrature and the Cohn–Lu / Moser-type checks.

mod checks;
mod corpus;

pub use checks::{
    check_cohn_lu, check_lp_growth, cohn_lu_constant, default_sample_points, exp_envelope, BallGrid, CohnLuReport,
    CohnLuStatus, ExpEnvelope, LpGrowthReport,
};
pub use corpus::{default_corpus, parse_corpus, TestFunction};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::IdentityReport;

/// Element `(z, t)` of the Heisenberg group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeisPoint {
    pub z: Complex64,
    pub t: f64,
}

impl HeisPoint {
    pub const IDENTITY: Self = Self { z: Complex64::new(0.0, 0.0), t: 0.0 };

    pub fn new(x: f64, y: f64, t: f64) -> Self {
        Self { z: Complex64::new(x, y), t }
    }

    /// `(z, t)(z', t') = (z + z', t + t' + 2 Im(z conj(z')))`; the fields
    /// `X = d/dx + 2y d/dt`, `Y = d/dy - 2x d/dt` are left-invariant for it.
    pub fn mul(&self, other: &Self) -> Self {
        Self { z: self.z + other.z, t: self.t + other.t + 2.0 * (self.z * other.z.conj()).im }
    }

    pub fn inverse(&self) -> Self {
        Self { z: -self.z, t: -self.t }
    }

    /// `delta_r(z, t) = (r z, r^2 t)`
    pub fn dilate(&self, r: f64) -> Self {
        Self { z: self.z * r, t: r * r * self.t }
    }

    /// `(|z|^4 + t^2)^{1/4}`
    pub fn norm(&self) -> f64 {
        self.rho().powf(0.25)
    }

    /// `|z|^4 + t^2`
    pub fn rho(&self) -> f64 {
        let r2 = self.z.norm_sqr();
        r2 * r2 + self.t * self.t
    }

    /// Point at homogeneous radius `s` in polar coordinates
    /// `z = s sqrt(cos a) e^{i b}`, `t = s^2 sin a`, `a in [-pi/2, pi/2]`.
    pub fn polar(s: f64, alpha: f64, beta: f64) -> Self {
        let r = s * alpha.cos().max(0.0).sqrt();
        Self { z: Complex64::from_polar(r, beta), t: s * s * alpha.sin() }
    }
}

/// `(X f, Y f)` from Euclidean partials `(f_x, f_y, f_t)` at `u`.
pub fn horizontal(u: &HeisPoint, fx: f64, fy: f64, ft: f64) -> [f64; 2] {
    [fx + 2.0 * u.z.im * ft, fy - 2.0 * u.z.re * ft]
}

/// `(X rho, Y rho)` for `rho = |z|^4 + t^2`.
pub fn rho_gradient(u: &HeisPoint) -> [f64; 2] {
    let (x, y) = (u.z.re, u.z.im);
    let r2 = x * x + y * y;
    horizontal(u, 4.0 * x * r2, 4.0 * y * r2, 2.0 * u.t)
}

fn random_points(rng: &mut ChaCha8Rng, count: usize, spread: f64) -> Vec<HeisPoint> {
    (0..count)
        .map(|_| {
            HeisPoint::new(
                rng.random_range(-spread..spread),
                rng.random_range(-spread..spread),
                rng.random_range(-spread..spread),
            )
        })
        .collect()
}

/// Relative error of `|delta_r u| = r |u|` over random `u` and `r`.
pub fn check_homogeneity(seed: u64, samples: usize) -> IdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = random_points(&mut rng, samples, 2.0);
    let mut worst = 0.0f64;
    for u in &pts {
        let r: f64 = rng.random_range(0.01..10.0);
        let lhs = u.dilate(r).norm();
        let rhs = r * u.norm();
        worst = worst.max((lhs - rhs).abs() / rhs.max(f64::MIN_POSITIVE));
    }
    IdentityReport::new("heisenberg_homogeneity", worst, 0.0, worst, 1e-12)
        .with_context(Some(seed), 0, 0)
        .with_detail(format!("{samples} samples"))
}

/// Largest `|det D(L_a)(u) - 1|` over random `a`, `u`, by central differences.
pub fn check_translation_jacobian(seed: u64, samples: usize) -> IdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_points(&mut rng, samples, 2.0);
    let u = random_points(&mut rng, samples, 2.0);
    let h = 1e-4;
    let mut worst = 0.0f64;
    for (a, u) in a.iter().zip(&u) {
        let coords = |p: HeisPoint| [p.z.re, p.z.im, p.t];
        let base = coords(*u);
        let mut jac = [[0.0; 3]; 3];
        for k in 0..3 {
            let mut plus = base;
            let mut minus = base;
            plus[k] += h;
            minus[k] -= h;
            let fp = coords(a.mul(&HeisPoint::new(plus[0], plus[1], plus[2])));
            let fm = coords(a.mul(&HeisPoint::new(minus[0], minus[1], minus[2])));
            for r in 0..3 {
                jac[r][k] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
            - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
            + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
        worst = worst.max((det - 1.0).abs());
    }
    IdentityReport::new("heisenberg_translation_jacobian", worst + 1.0, 1.0, worst, 1e-9)
        .with_context(Some(seed), 0, 0)
        .with_detail(format!("{samples} translations"))
}

/// Largest sampled `|v^{-1} u|` for `u, v` in the unit ball; bounded by 2.
pub fn empirical_delta(seed: u64, samples: usize) -> IdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let in_ball = |rng: &mut ChaCha8Rng| loop {
        let p = random_points(rng, 1, 1.0)[0];
        if p.norm() < 1.0 {
            return p;
        }
    };
    let mut delta = 0.0f64;
    for _ in 0..samples {
        let u = in_ball(&mut rng);
        let v = in_ball(&mut rng);
        delta = delta.max(v.inverse().mul(&u).norm());
    }
    IdentityReport::inequality("heisenberg_delta", delta, 2.0, 0.0)
        .with_context(Some(seed), 0, 0)
        .with_detail(format!("{samples} pairs"))
}

#[cfg(test)]
mod tests;
