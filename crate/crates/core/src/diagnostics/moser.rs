//! Empirical Moser envelope on the sphere:
//! `log int e^phi dmu0 <= kappa |grad_b phi|_4^4 + nu |phi|_4^4 + log C`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::IdentityReport;
use super::sampling::random_field;
use crate::sphere::poly::{LinearField, PowerTable};
use crate::sphere::{SpectralField, SpectralSpace};
use crate::{QflowError, Result};
use crate::quad::{bracket_convex, golden_section_min};

/// Node values of `Z1 b_k` for every basis mode.
pub struct MoserSampler<'a> {
    space: &'a SpectralSpace,
    d1: Vec<Complex64>,
}

/// Moser functional pieces of one field, with the exponential integral
/// evaluated along the ray `s phi` for each requested `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoserSample {
    pub scales: Vec<f64>,
    /// `log int e^{s phi} dmu0` per scale.
    pub log_exp: Vec<f64>,
    /// `int |grad_b phi|^4 dmu0`
    pub grad4: f64,
    /// `int phi^4 dmu0`
    pub l4: f64,
}

impl MoserSample {
    /// `log int e^phi` at scale one, if it was sampled.
    pub fn at_unit_scale(&self) -> Option<f64> {
        self.scales.iter().position(|s| *s == 1.0).map(|i| self.log_exp[i])
    }
}

impl<'a> MoserSampler<'a> {
    pub fn new(space: &'a SpectralSpace) -> Self {
        let zpolys: Vec<_> = space.basis.real.iter().map(|p| p.apply_field(LinearField::Z)).collect();
        let deg = space.degree().max(1);
        let rows: Vec<Vec<Complex64>> = space.exec.map_slice(&space.grid.nodes, |node| {
            let pw = PowerTable::new(node.z, deg);
            zpolys.iter().map(|p| p.eval_with(&pw)).collect()
        });
        Self { space, d1: rows.into_iter().flatten().collect() }
    }

    pub fn evaluate(&self, phi: &SpectralField, scales: &[f64]) -> Result<MoserSample> {
        if phi.degree() > self.space.degree() {
            return Err(QflowError::DegreeMismatch { field: phi.degree(), basis: self.space.degree() });
        }
        let n_modes = self.space.n_modes();
        let c = phi.coeffs();
        let per_node = self.space.exec.map(self.space.n_nodes(), |i| {
            let row = self.space.row(i);
            let d1row = &self.d1[i * n_modes..(i + 1) * n_modes];
            let mut v = 0.0;
            let mut z = Complex64::new(0.0, 0.0);
            for k in 0..c.len() {
                v += c[k] * row[k];
                z += c[k] * d1row[k];
            }
            (v, 2.0 * z.norm_sqr())
        });
        let w = &self.space.grid.weights;
        let mut grad4 = 0.0;
        let mut l4 = 0.0;
        for (i, (v, g2)) in per_node.iter().enumerate() {
            grad4 += w[i] * g2 * g2;
            l4 += w[i] * v.powi(4);
        }
        let log_exp = scales
            .iter()
            .map(|s| {
                let top = per_node.iter().fold(f64::NEG_INFINITY, |a, (v, _)| a.max(s * v));
                if !top.is_finite() {
                    return Err(QflowError::Overflow("non-finite field values in Moser functional".into()));
                }
                let sum: f64 = per_node.iter().zip(w).map(|((v, _), w)| w * (s * v - top).exp()).sum();
                Ok(top + sum.ln())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MoserSample { scales: scales.to_vec(), log_exp, grad4, l4 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoserEnvelope {
    pub kappa: f64,
    pub nu: f64,
    pub log_c: f64,
}

impl MoserEnvelope {
    pub fn bound(&self, grad4: f64, l4: f64, scale: f64) -> f64 {
        scale.powi(4) * (self.kappa * grad4 + self.nu * l4) + self.log_c
    }

    /// Largest `log int e^{s phi} - bound` over samples and scales.
    pub fn worst_excess(&self, samples: &[MoserSample]) -> f64 {
        samples
            .iter()
            .flat_map(|m| m.scales.iter().zip(&m.log_exp).map(move |(s, l)| l - self.bound(m.grad4, m.l4, *s)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn violations(&self, samples: &[MoserSample], tol: f64) -> usize {
        samples
            .iter()
            .filter(|m| {
                m.scales.iter().zip(&m.log_exp).any(|(s, l)| {
                    let b = self.bound(m.grad4, m.l4, *s);
                    l - b > tol * b.abs().max(1.0)
                })
            })
            .count()
    }
}

/// Envelope minimising `log C + kappa mean(grad4) + nu mean(l4)` subject to
/// domination of every training sample at every sampled scale.
pub fn fit_envelope(samples: &[MoserSample]) -> Result<MoserEnvelope> {
    if samples.is_empty() {
        return Err(QflowError::Invalid("empty Moser training set".into()));
    }
    let n = samples.len() as f64;
    let mg = samples.iter().map(|m| m.grad4).sum::<f64>() / n;
    let ml = samples.iter().map(|m| m.l4).sum::<f64>() / n;
    let log_c = |kappa: f64, nu: f64| {
        MoserEnvelope { kappa, nu, log_c: 0.0 }.worst_excess(samples)
    };
    let objective = |kappa: f64, nu: f64| log_c(kappa, nu) + kappa * mg + nu * ml;
    let inner = |kappa: f64| {
        let g = |nu: f64| objective(kappa, nu);
        let hi = bracket_convex(&g);
        golden_section_min(&g, 0.0, hi, 120)
    };
    let outer = |kappa: f64| objective(kappa, inner(kappa));
    let k_hi = bracket_convex(&outer);
    let kappa = golden_section_min(&outer, 0.0, k_hi, 120);
    let nu = inner(kappa);
    let env = MoserEnvelope { kappa, nu, log_c: log_c(kappa, nu) };
    if !(env.kappa.is_finite() && env.nu.is_finite() && env.log_c.is_finite()) {
        return Err(QflowError::Divergence("Moser envelope fit did not produce finite constants".into()));
    }
    Ok(env)
}

/// Random smooth fields with L2 norm drawn uniformly from `[0, max_amplitude]`.
pub fn moser_fields(seed: u64, count: usize, n: usize, max_amplitude: f64) -> Vec<SpectralField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let psi = random_field(&mut rng, n, 1.0);
            let a: f64 = rng.random_range(0.0..max_amplitude);
            let norm = psi.norm();
            if norm > 0.0 {
                psi.scale(a / norm)
            } else {
                psi
            }
        })
        .collect()
}

/// Scales at which training samples are required to be dominated: `[0, 2]`
/// in steps of `1/32`.
pub fn training_scales() -> Vec<f64> {
    (0..=64).map(|i| i as f64 / 32.0).collect()
}

/// Scales placing `phi` along its dilation ray at L2 norms `[0, 2 reach]`.
fn ray_scales(phi: &SpectralField, reach: f64) -> Vec<f64> {
    let norm = phi.norm();
    if norm == 0.0 {
        return vec![0.0];
    }
    training_scales().into_iter().map(|s| s * reach / norm).collect()
}

/// Fits on `training`, each field dilated up to twice the largest training
/// norm, then counts held-out fields not dominated at unit scale.
pub fn moser_check(
    sampler: &MoserSampler,
    training: &[SpectralField],
    held_out: &[SpectralField],
) -> Result<(MoserEnvelope, IdentityReport)> {
    let reach = training.iter().map(SpectralField::norm).fold(0.0, f64::max);
    let train = training
        .iter()
        .map(|f| sampler.evaluate(f, &ray_scales(f, reach)))
        .collect::<Result<Vec<_>>>()?;
    let env = fit_envelope(&train)?;
    let test = held_out.iter().map(|f| sampler.evaluate(f, &[1.0])).collect::<Result<Vec<_>>>()?;
    let violations = env.violations(&test, 1e-12);
    let worst = env.worst_excess(&test);
    let report = IdentityReport::new("moser_envelope_held_out", worst + env.log_c, env.log_c, violations as f64, 0.0)
        .with_detail(format!(
            "kappa {:e} nu {:e} logC {:e}; {} training, {} held out, worst excess {:e}",
            env.kappa,
            env.nu,
            env.log_c,
            train.len(),
            test.len(),
            worst
        ));
    Ok((env, report))
}
