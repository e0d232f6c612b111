//! Hopf-coordinate quadrature on the unit sphere.
//!
//! `z0 = cos(eta) e^{i xi1}`, `z1 = sin(eta) e^{i xi2}`, and
//! `dmu0 = sin(2 eta) deta dxi1 dxi2`. With `x = cos(2 eta)` the density is
//! `dx/2`, and a monomial `z^a zbar^c` with `a = c` becomes a polynomial of
//! degree `(a0 + a1)` in `x`; Gauss–Legendre in `x` and the trapezoid rule in
//! each `xi` then integrate every polynomial of total degree `<= order`
//! exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::quad::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub eta: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub z: [Complex64; 2],
}

impl Node {
    pub fn from_hopf(eta: f64, xi1: f64, xi2: f64) -> Self {
        let z0 = Complex64::from_polar(eta.cos(), xi1);
        let z1 = Complex64::from_polar(eta.sin(), xi2);
        Self { eta, xi1, xi2, z: [z0, z1] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub order: usize,
    pub n_eta: usize,
    pub n_xi: usize,
    pub nodes: Vec<Node>,
    pub weights: Vec<f64>,
}

/// Grid exact for polynomials of total degree `<= exactness_order`.
pub fn build_grid(exactness_order: usize) -> QuadratureGrid {
    // xi-frequencies up to `order` must not alias: n_xi > order.
    let n_xi = exactness_order + 1;
    // x-degree is at most order/2, GL with n points is exact to 2n-1.
    let n_eta = exactness_order / 4 + 2;
    let (xs, wx) = gauss_legendre(n_eta);
    let dxi = 2.0 * PI / n_xi as f64;
    let mut nodes = Vec::with_capacity(n_eta * n_xi * n_xi);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for (x, w) in xs.iter().zip(&wx) {
        let eta = 0.5 * x.acos();
        for i in 0..n_xi {
            for j in 0..n_xi {
                nodes.push(Node::from_hopf(eta, i as f64 * dxi, j as f64 * dxi));
                weights.push(0.5 * w * dxi * dxi);
            }
        }
    }
    QuadratureGrid { order: exactness_order, n_eta, n_xi, nodes, weights }
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `sum_i w_i f(x_i)` over precomputed node values.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}
