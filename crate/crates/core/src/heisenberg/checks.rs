//! Ball quadrature and the inequality checks.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::{HeisPoint, TestFunction};
use crate::diagnostics::IdentityReport;
use crate::quad::{bracket_convex, gauss_legendre, golden_section_min};
use crate::{Exec, QflowError, Result};

/// `2 pi Gamma(1/2) Gamma(3/4) / (Gamma(1) Gamma(5/4))`
pub fn cohn_lu_constant() -> f64 {
    2.0 * PI * gamma(0.5) * gamma(0.75) / (gamma(1.0) * gamma(1.25))
}

/// Product rule in Heisenberg polar coordinates `u = delta_s(omega)`:
/// Gauss–Legendre in `s` and in `theta` (with `alpha = (pi/2) sin theta`),
/// trapezoid in `beta`. `dV = s^3 ds dalpha dbeta`.
#[derive(Debug, Clone)]
struct PolarRule {
    s: (Vec<f64>, Vec<f64>),
    /// `(alpha, dalpha/dtheta * w_theta)`
    angle: Vec<(f64, f64)>,
    beta: Vec<f64>,
}

impl PolarRule {
    fn new(n_s: usize, n_theta: usize, n_beta: usize) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        let angle = x
            .iter()
            .zip(&w)
            .map(|(x, w)| {
                let theta = FRAC_PI_2 * x;
                (FRAC_PI_2 * theta.sin(), FRAC_PI_2 * theta.cos() * FRAC_PI_2 * w)
            })
            .collect();
        let beta = (0..n_beta).map(|k| 2.0 * PI * k as f64 / n_beta as f64).collect();
        Self { s: gauss_legendre(n_s), angle, beta }
    }

    fn beta_weight(&self) -> f64 {
        2.0 * PI / self.beta.len() as f64
    }

    /// `int_0^radius int int f(s, omega) ds dalpha dbeta`; parallel over `s`.
    fn integrate<F>(&self, radius: f64, exec: Exec, f: F) -> f64
    where
        F: Fn(f64, f64, f64) -> f64 + Sync + Send,
    {
        let half = 0.5 * radius;
        let wb = self.beta_weight();
        let shells = exec.map(self.s.0.len(), |i| {
            let s = half * (self.s.0[i] + 1.0);
            let mut acc = 0.0;
            for &(alpha, wa) in &self.angle {
                let mut ring = 0.0;
                for &beta in &self.beta {
                    ring += f(s, alpha, beta);
                }
                acc += wa * ring;
            }
            self.s.1[i] * acc
        });
        shells.iter().sum::<f64>() * half * wb
    }
}

/// Quadrature nodes and `dV` weights on the unit Heisenberg ball.
#[derive(Debug, Clone)]
pub struct BallGrid {
    pub resolution: usize,
    pub nodes: Vec<HeisPoint>,
    pub weights: Vec<f64>,
}

impl BallGrid {
    /// `resolution` Gauss points in `s` and `theta`, `2 resolution` in `beta`.
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(QflowError::Invalid("ball grid resolution must be at least 2".into()));
        }
        let rule = PolarRule::new(resolution, resolution, 2 * resolution);
        let wb = rule.beta_weight();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (x, ws) in rule.s.0.iter().zip(&rule.s.1) {
            let s = 0.5 * (x + 1.0);
            for &(alpha, wa) in &rule.angle {
                for &beta in &rule.beta {
                    nodes.push(HeisPoint::polar(s, alpha, beta));
                    weights.push(0.5 * ws * s.powi(3) * wa * wb);
                }
            }
        }
        Ok(Self { resolution, nodes, weights })
    }

    /// Lebesgue volume of the unit ball, `pi^2 / 2`.
    pub fn exact_volume() -> f64 {
        0.5 * PI * PI
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate<F: Fn(&HeisPoint) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(u, w)| w * f(u)).sum()
    }

    /// `(int_B |f|^p)^{1/p}`, computed relative to `max |f|`.
    pub fn lp_norm(&self, values: &[f64], p: f64) -> f64 {
        let m = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if m == 0.0 {
            return 0.0;
        }
        let sum: f64 = values.iter().zip(&self.weights).map(|(v, w)| w * (v.abs() / m).powf(p)).sum();
        m * sum.powf(1.0 / p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CohnLuStatus {
    Holds,
    /// Margin within the quadrature error; `shrinking` when the error fell
    /// under refinement.
    Inconclusive { shrinking: bool },
    Violated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohnLuReport {
    pub function: String,
    pub v: HeisPoint,
    pub phi_v: f64,
    /// `int |grad_b phi(u)| / |v^{-1} u|^3 dV(u)` at the finest level.
    pub integral: f64,
    pub bound: f64,
    pub margin: f64,
    pub error: f64,
    pub previous_error: f64,
    pub status: CohnLuStatus,
}

impl CohnLuReport {
    pub fn acceptable(&self) -> bool {
        matches!(self.status, CohnLuStatus::Holds | CohnLuStatus::Inconclusive { shrinking: true })
    }

    pub fn to_identity_report(&self) -> IdentityReport {
        let status = match self.status {
            CohnLuStatus::Holds => "holds".to_string(),
            CohnLuStatus::Inconclusive { shrinking } => {
                format!("inconclusive, error {}", if shrinking { "shrinking" } else { "not shrinking" })
            }
            CohnLuStatus::Violated => "violated".to_string(),
        };
        let mut r = IdentityReport::inequality("cohn_lu", self.phi_v.abs(), self.bound, self.error);
        r.pass = self.acceptable();
        r.with_detail(format!(
            "{status}; {} at v=({}, {}, {}); quadrature error {:e} (previous {:e})",
            self.function, self.v.z.re, self.v.z.im, self.v.t, self.error, self.previous_error
        ))
    }
}

/// Points at which the representation bound is tested for `phi`.
pub fn default_sample_points(phi: &TestFunction) -> Vec<HeisPoint> {
    let mut pts = vec![
        HeisPoint::IDENTITY,
        HeisPoint::new(0.3, 0.0, 0.0),
        HeisPoint::new(0.0, -0.2, 0.25),
        HeisPoint::new(0.15, 0.1, -0.3),
    ];
    if let TestFunction::TranslatedBump { center, .. } = phi {
        pts.push(*center);
    }
    pts
}

/// Upper bound on `|v^{-1} u|` over the support of `phi`.
fn support_reach(phi: &TestFunction, v: &HeisPoint) -> f64 {
    match phi {
        TestFunction::Zero => 0.0,
        TestFunction::TranslatedBump { center, radius, .. } => center.inverse().mul(v).norm() + radius,
        TestFunction::Dilated { inner, r } => support_reach(inner, &v.dilate(*r)) / r,
        _ => v.norm() + phi.support_radius(),
    }
}

/// Checks `|phi(v)| <= L^{-1} int |grad_b phi(u)| |v^{-1} u|^{-3} dV(u)`.
///
/// Polar coordinates centred at `v` (`u = v delta_s(omega)`) absorb the
/// kernel into the volume element. The integral is evaluated at resolutions
/// `base`, `2 base`, `4 base`; the last two differences are the error and
/// the previous error.
pub fn check_cohn_lu(phi: &TestFunction, v: &HeisPoint, base: usize, exec: Exec) -> Result<CohnLuReport> {
    if base < 4 {
        return Err(QflowError::Invalid("Cohn-Lu base resolution must be at least 4".into()));
    }
    let reach = support_reach(phi, v);
    let level = |n: usize| {
        let rule = PolarRule::new(n, n, n);
        rule.integrate(reach, exec, |s, alpha, beta| {
            phi.gradient_norm(&v.mul(&HeisPoint::polar(s, alpha, beta)))
        })
    };
    let i0 = level(base);
    let i1 = level(2 * base);
    let i2 = level(4 * base);
    let l = cohn_lu_constant();
    let floor = 64.0 * f64::EPSILON * i2.abs();
    let error = ((i2 - i1).abs() / l).max(floor / l);
    let previous_error = ((i1 - i0).abs() / l).max(floor / l);
    let phi_v = phi.value(v);
    let bound = i2 / l;
    let margin = bound - phi_v.abs();
    let status = if margin >= error {
        CohnLuStatus::Holds
    } else if margin < -error {
        CohnLuStatus::Violated
    } else {
        CohnLuStatus::Inconclusive { shrinking: error < previous_error || error <= floor / l }
    };
    Ok(CohnLuReport { function: phi.label(), v: *v, phi_v, integral: i2, bound, margin, error, previous_error, status })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpGrowthReport {
    pub function: String,
    pub grad4: f64,
    /// `(p, ||phi||_p / (||grad_b phi||_4 p^{3/4}))`
    pub ratios: Vec<(f64, f64)>,
    pub sup: f64,
}

impl LpGrowthReport {
    pub fn to_identity_report(&self) -> IdentityReport {
        let bad = self.ratios.iter().filter(|(_, r)| !r.is_finite()).count();
        let list = self.ratios.iter().map(|(p, r)| format!("p={p}: {r:.6e}")).collect::<Vec<_>>().join(", ");
        IdentityReport::new("lp_growth", self.sup, self.sup, bad as f64, 0.0)
            .with_detail(format!("{}; empirical K {:.6e}; {list}", self.function, self.sup))
    }
}

/// `||phi||_p / (||grad_b phi||_4 p^{3/4})` over `ps` on the unit ball.
pub fn check_lp_growth(phi: &TestFunction, ps: &[f64], grid: &BallGrid) -> Result<LpGrowthReport> {
    if ps.iter().any(|p| !(*p >= 1.0)) {
        return Err(QflowError::Invalid("Lp exponents must be at least 1".into()));
    }
    let values: Vec<f64> = grid.nodes.iter().map(|u| phi.value(u)).collect();
    let grads: Vec<f64> = grid.nodes.iter().map(|u| phi.gradient_norm(u)).collect();
    let grad4 = grid.lp_norm(&grads, 4.0);
    if grad4 == 0.0 {
        return Err(QflowError::Invalid(format!("{} has vanishing gradient on the ball", phi.label())));
    }
    let ratios: Vec<(f64, f64)> =
        ps.iter().map(|&p| (p, grid.lp_norm(&values, p) / (grad4 * p.powf(0.75)))).collect();
    let sup = ratios.iter().fold(f64::NEG_INFINITY, |a, (_, r)| a.max(*r));
    Ok(LpGrowthReport { function: phi.label(), grad4: grad4.powi(4), ratios, sup })
}

/// `int_B e^phi dV <= C exp(kappa ||grad_b phi||_4^4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpEnvelope {
    pub kappa: f64,
    pub log_c: f64,
    /// Largest `log int e^phi - log C - kappa G` over the fitting samples.
    pub worst_excess: f64,
    pub samples: usize,
}

/// Fits `(kappa, log C)` over `c phi` for every `phi` in the family and every
/// scale `c`, minimising `log C + kappa mean(G)` subject to domination.
pub fn exp_envelope(family: &[TestFunction], scales: &[f64], grid: &BallGrid) -> Result<ExpEnvelope> {
    let mut samples = Vec::new();
    for phi in family {
        let values: Vec<f64> = grid.nodes.iter().map(|u| phi.value(u)).collect();
        let grads: Vec<f64> = grid.nodes.iter().map(|u| phi.gradient_norm(u)).collect();
        let g4 = grid.lp_norm(&grads, 4.0).powi(4);
        for &c in scales {
            let m = values.iter().fold(f64::NEG_INFINITY, |a, v| a.max(c * v));
            let sum: f64 = values.iter().zip(&grid.weights).map(|(v, w)| w * (c * v - m).exp()).sum();
            samples.push((m + sum.ln(), c.powi(4) * g4));
        }
    }
    if samples.is_empty() {
        return Err(QflowError::Invalid("empty Heisenberg corpus".into()));
    }
    let mean_g = samples.iter().map(|s| s.1).sum::<f64>() / samples.len() as f64;
    let log_c = |kappa: f64| samples.iter().fold(f64::NEG_INFINITY, |a, (l, g)| a.max(l - kappa * g));
    let objective = |kappa: f64| log_c(kappa) + kappa * mean_g;
    let hi = bracket_convex(&objective);
    let kappa = golden_section_min(&objective, 0.0, hi, 120);
    let lc = log_c(kappa);
    let worst_excess = samples.iter().fold(f64::NEG_INFINITY, |a, (l, g)| a.max(l - lc - kappa * g));
    if !(kappa.is_finite() && lc.is_finite()) {
        return Err(QflowError::Divergence("exponential envelope fit is not finite".into()));
    }
    Ok(ExpEnvelope { kappa, log_c: lc, worst_excess, samples: samples.len() })
}
