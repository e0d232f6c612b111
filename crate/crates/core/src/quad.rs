//! One-dimensional quadrature: Gauss–Legendre rules and an adaptive
//! Gauss–Legendre integrator with an embedded bisection error estimate.

use crate::{QflowError, Result};
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, exact for polynomials of
/// degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    if n == 0 {
        return (nodes, weights);
    }
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed Gauss–Legendre rule on `[a, b]`.
pub fn integrate_fixed<F>(f: &mut F, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in rule.0.iter().zip(&rule.1) {
        acc += w * f(mid + half * x)?;
    }
    Ok(acc * half)
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Adaptive Gauss–Legendre integration. Each panel is compared against its
/// two halves; panels are bisected until the difference is below the share
/// of `tol` proportional to their length.
pub fn integrate_adaptive<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<AdaptiveResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    const ORDER: usize = 10;
    const MAX_DEPTH: usize = 40;
    let rule = gauss_legendre(ORDER);
    if a == b {
        return Ok(AdaptiveResult { value: 0.0, error_estimate: 0.0, evaluations: 0 });
    }
    let total_len = (b - a).abs();
    let mut evaluations = 0;
    let mut counted = |x: f64| {
        evaluations += 1;
        f(x)
    };
    let whole = integrate_fixed(&mut counted, a, b, &rule)?;
    let mut stack = vec![(a, b, whole, 0usize)];
    let mut value = 0.0;
    let mut error = 0.0;
    while let Some((lo, hi, coarse, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = integrate_fixed(&mut counted, lo, mid, &rule)?;
        let right = integrate_fixed(&mut counted, mid, hi, &rule)?;
        let fine = left + right;
        let diff = (fine - coarse).abs();
        let budget = tol * (hi - lo).abs() / total_len;
        if diff <= budget || depth >= MAX_DEPTH {
            if depth >= MAX_DEPTH && diff > budget {
                return Err(QflowError::NoConvergence { iterations: depth, residual: diff });
            }
            value += fine;
            error += diff;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok(AdaptiveResult { value, error_estimate: error, evaluations })
}

/// Minimiser of a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_section_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..iters {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Upper end of a bracket for a convex function on `[0, inf)`.
pub fn bracket_convex(f: &dyn Fn(f64) -> f64) -> f64 {
    let mut h = 1e-3;
    while h < 1e6 && f(2.0 * h) < f(h) {
        h *= 2.0;
    }
    4.0 * h
}
