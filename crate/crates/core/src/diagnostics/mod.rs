//! Identity and inequality checks on the sphere.
//!
//! Integral identities are evaluated twice: spectrally from the coefficient
//! vector, and by grid quadrature of pointwise frame jets. Each check returns
//! an [`IdentityReport`].

mod moser;
mod report;
mod sampling;

pub use moser::{
    fit_envelope, moser_check, moser_fields, MoserEnvelope, MoserSample, MoserSampler, training_scales,
};
pub use report::{render_jsonl, summary_table, IdentityReport};
pub use sampling::{random_field, random_perp_field, sample_fields};

use crate::frame::{jet_integrals, measure_w0, JetIntegrals, JetTable};
use crate::operators::{
    apply_delta0, apply_paneitz, apply_t0, essential_positivity_gap, paneitz_eigenvalue, project_kernel,
    sublaplacian_eigenvalue, BackgroundGeometry,
};
use crate::sphere::{analyze, mode_table, synthesize, SpectralField, SpectralSpace};
use crate::Result;

/// `E(lambda) = int P lambda . lambda + int Q0 lambda`, both spectral.
pub fn energy(lambda: &SpectralField, q0: &SpectralField) -> f64 {
    let quad: f64 = lambda.iter().map(|(m, c)| paneitz_eigenvalue(m.p, m.q) * c * c).sum();
    quad + lambda.dot(q0)
}

/// `int P lambda . lambda`
pub fn paneitz_form(lambda: &SpectralField) -> f64 {
    lambda.iter().map(|(m, c)| paneitz_eigenvalue(m.p, m.q) * c * c).sum()
}

/// `sum (1 + |mu_Delta|)^{2k} c^2`, equivalent on the sphere to the squared
/// Folland–Stein `S^{2k,2}` norm.
pub fn sobolev_surrogate(lambda: &SpectralField, k: u32) -> f64 {
    lambda
        .iter()
        .map(|(m, c)| (1.0 + sublaplacian_eigenvalue(m.p, m.q).abs()).powi(2 * k as i32) * c * c)
        .sum()
}

/// Shared state for the quadrature-based checks.
pub struct DiagnosticsContext<'a> {
    pub space: &'a SpectralSpace,
    pub table: JetTable,
    /// Webster curvature used in the Bochner-type checks.
    pub w0: f64,
    /// Value measured from the frame, independent of any override.
    pub measured_w0: f64,
}

impl<'a> DiagnosticsContext<'a> {
    pub fn new(space: &'a SpectralSpace) -> Result<Self> {
        let table = JetTable::new(space)?;
        let measured_w0 = measure_w0(space, &table)?;
        Ok(Self { space, table, w0: measured_w0, measured_w0 })
    }

    pub fn with_w0(mut self, w0: f64) -> Self {
        self.w0 = w0;
        self
    }

    pub fn integrals(&self, lambda: &SpectralField) -> JetIntegrals {
        jet_integrals(lambda, &self.table, &self.space.grid.weights, self.space.exec)
    }

    fn ctx(&self, r: IdentityReport, seed: Option<u64>) -> IdentityReport {
        r.with_context(seed, self.space.degree(), self.space.grid.order)
    }

    /// `0 = int (Delta f)^2 - int |grad^2 f|^2 + 2 int f_0^2 - W int |grad f|^2`.
    pub fn check_bochner(&self, lambda: &SpectralField, tol: f64) -> IdentityReport {
        let j = self.integrals(lambda);
        let lhs = j.sublaplacian_sq - j.hess2 + 2.0 * j.t_sq;
        let rhs = self.w0 * j.grad2;
        self.ctx(IdentityReport::new("bochner_integral", lhs, rhs, lhs - rhs, tol), None)
    }

    /// `2 int P f . f = 3 int (Delta f)^2 - int |grad^2 f|^2 - W int |grad f|^2`.
    pub fn check_paneitz_bochner(&self, lambda: &SpectralField, tol: f64) -> IdentityReport {
        let j = self.integrals(lambda);
        let lhs = 2.0 * paneitz_form(lambda);
        let rhs = 3.0 * j.sublaplacian_sq - j.hess2 - self.w0 * j.grad2;
        self.ctx(IdentityReport::new("paneitz_bochner_identity", lhs, rhs, lhs - rhs, tol), None)
    }

    /// `int |grad^2 f|^2 / int (Delta f)^2` and whether `f` avoids the kernel.
    pub fn condition_star_ratio(&self, lambda: &SpectralField) -> (f64, bool) {
        let j = self.integrals(lambda);
        let perp = project_kernel(lambda).0.max_abs() == 0.0;
        (j.hess2 / j.sublaplacian_sq, perp)
    }

    /// Worst ratio over `fields`, which must have no kernel part.
    pub fn check_condition_star(&self, fields: &[SpectralField], seed: Option<u64>) -> IdentityReport {
        let mut worst: f64 = 0.0;
        let mut non_perp = 0;
        for f in fields {
            let (r, perp) = self.condition_star_ratio(f);
            if !perp {
                non_perp += 1;
            }
            worst = worst.max(r);
        }
        let mut rep = IdentityReport::inequality("condition_star_ratio", worst, 2.0, 1e-9)
            .with_detail(format!("{} fields", fields.len()));
        if non_perp > 0 {
            rep = rep.with_detail(format!("{non_perp} inputs have a kernel component (hypothesis violated)"));
            rep.pass = false;
        }
        self.ctx(rep, seed)
    }

    /// Pointwise sub-Laplacian of every basis mode against the eigenvalue
    /// rule, plus the commutation residual, over all nodes.
    pub fn check_eigenrelations(&self, tol: f64) -> Vec<IdentityReport> {
        let modes = mode_table(self.space.degree());
        let mut worst_delta: f64 = 0.0;
        let mut worst_comm: f64 = 0.0;
        for node in 0..self.table.n_nodes() {
            for (k, m) in modes.iter().enumerate() {
                let j = self.table.mode_jet(node, k);
                let rule = sublaplacian_eigenvalue(m.p, m.q) * j.value;
                worst_delta = worst_delta.max((j.sublaplacian() - rule).abs());
                worst_comm = worst_comm.max(j.commutation_residual());
            }
        }
        vec![
            self.ctx(IdentityReport::new("sublaplacian_eigenrelation", worst_delta, 0.0, worst_delta, tol), None),
            self.ctx(IdentityReport::new("commutation_relation", worst_comm, 0.0, worst_comm, tol), None),
        ]
    }
}

/// `int P f . f = int (Delta f)^2 - int (T f)^2`, all spectral.
pub fn w_free_identity(lambda: &SpectralField, tol: f64) -> IdentityReport {
    let lhs = paneitz_form(lambda);
    let rhs = apply_delta0(lambda).norm_sq() - apply_t0(lambda).norm_sq();
    let scale = lhs.abs().max(1.0);
    IdentityReport::new("w_free_identity", lhs, rhs, (lhs - rhs) / scale, tol)
}

/// Smallest Rayleigh quotient of the Paneitz operator over the fields, which
/// must have no kernel part; compared with the spectral gap.
pub fn check_essential_positivity(fields: &[SpectralField], n: usize) -> IdentityReport {
    let gap = essential_positivity_gap(n).unwrap_or(f64::INFINITY);
    let worst = fields
        .iter()
        .map(|f| {
            let perp = project_kernel(f).1;
            paneitz_form(&perp) / perp.norm_sq()
        })
        .fold(f64::INFINITY, f64::min);
    IdentityReport::inequality("essential_positivity", gap - 1e-10, worst, 0.0)
        .with_detail(format!("gap {gap}, min Rayleigh quotient {worst}"))
}

/// `int (Delta f)^2 <= 2 int P f . f` on the kernel complement.
pub fn check_inequality5(fields: &[SpectralField]) -> IdentityReport {
    let mut worst = f64::NEG_INFINITY;
    let (mut l, mut r) = (0.0, 0.0);
    for f in fields {
        let perp = project_kernel(f).1;
        let lhs = apply_delta0(&perp).norm_sq();
        let rhs = 2.0 * paneitz_form(&perp);
        let gap = (lhs - rhs) / rhs.max(1e-300);
        if gap > worst {
            worst = gap;
            l = lhs;
            r = rhs;
        }
    }
    IdentityReport::inequality("delta_squared_vs_paneitz", l, r, 1e-12 * r.abs().max(1.0))
}

/// `int (Delta f)^2 <= eps int (Delta^2 f)^2 + int f^2 / (4 eps)`.
pub fn check_interpolation(lambda: &SpectralField, eps: f64) -> IdentityReport {
    let d = apply_delta0(lambda);
    let lhs = d.norm_sq();
    let rhs = eps * apply_delta0(&d).norm_sq() + lambda.norm_sq() / (4.0 * eps);
    IdentityReport::inequality("interpolation_inequality", lhs, rhs, 1e-12 * rhs.abs().max(1.0))
        .with_detail(format!("eps {eps}"))
}

/// Central difference of the energy along `v` against
/// `int (2 P lambda + Q0) v`.
pub fn check_energy_gradient(lambda: &SpectralField, q0: &SpectralField, v: &SpectralField, tol: f64) -> IdentityReport {
    let h = 1e-4;
    let e = |s: f64| {
        let mut l = lambda.clone();
        l.axpy(s, v);
        energy(&l, q0)
    };
    let fd = (e(h) - e(-h)) / (2.0 * h);
    let exact = apply_paneitz(lambda).scale(2.0).add(q0).dot(v);
    let scale = exact.abs().max(1.0);
    IdentityReport::new("energy_gradient", fd, exact, (fd - exact) / scale, tol)
}

/// `int Q dmu` for `Q = e^{-4 lambda}(Q0 + 2 P lambda)`, `dmu = e^{4 lambda} dmu0`.
pub fn total_q(lambda: &SpectralField, bg: &BackgroundGeometry, space: &SpectralSpace) -> Result<f64> {
    let q = crate::operators::q_curvature(lambda, bg, space)?;
    let l = synthesize(lambda, space)?;
    let v: Vec<f64> = q.iter().zip(&l).map(|(q, l)| q * (4.0 * l).exp()).collect();
    Ok(space.integrate(&v))
}

/// Largest coefficient error of `analyze(synthesize(f))` and the Parseval
/// defect.
pub fn transform_round_trip(f: &SpectralField, space: &SpectralSpace) -> Result<(f64, f64)> {
    let v = synthesize(f, space)?;
    let back = analyze(&v, space, f.degree())?;
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    Ok((back.sub(f).max_abs(), (space.integrate(&sq) - f.norm_sq()).abs()))
}

/// Parameters of the full verification suite.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub n: usize,
    pub order: usize,
    pub seed: u64,
    /// Random fields for the Bochner-type identities.
    pub fields: usize,
    /// Random kernel-free fields for condition (*) and positivity.
    pub perp_fields: usize,
    pub smoothness: f64,
    /// Replaces the measured Webster curvature in the Bochner checks.
    pub w0_override: Option<f64>,
    pub interpolation_eps: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n: 6,
            order: 12,
            seed: 1,
            fields: 100,
            perp_fields: 1000,
            smoothness: 1.0,
            w0_override: None,
            interpolation_eps: 0.1,
        }
    }
}

/// Runs every identity and inequality check; deterministic for a given
/// configuration.
pub fn run_verify_suite(cfg: &VerifyConfig, space: &SpectralSpace) -> Result<Vec<IdentityReport>> {
    let mut dc = DiagnosticsContext::new(space)?;
    if let Some(w) = cfg.w0_override {
        dc = dc.with_w0(w);
    }
    let (n, order, seed) = (cfg.n, space.grid.order, Some(cfg.seed));
    let tag = |r: IdentityReport| r.with_context(seed, n, order);
    let mut out = Vec::new();

    let fields = sample_fields(cfg.seed, cfg.fields, n, cfg.smoothness, false);
    let perp = sample_fields(cfg.seed.wrapping_add(1), cfg.perp_fields, n, cfg.smoothness, true);

    let mut rt: f64 = 0.0;
    let mut parseval: f64 = 0.0;
    for f in fields.iter().take(10) {
        let (a, b) = transform_round_trip(f, space)?;
        rt = rt.max(a);
        parseval = parseval.max(b);
    }
    out.push(tag(IdentityReport::new("transform_round_trip", rt, 0.0, rt, 1e-12)));
    out.push(tag(IdentityReport::new("parseval", parseval, 0.0, parseval, 1e-11)));

    let w_rep = IdentityReport::new("webster_curvature", dc.measured_w0, 2.0, dc.measured_w0 - 2.0, 1e-8);
    out.push(tag(w_rep));
    out.extend(dc.check_eigenrelations(1e-10));

    // Keeps the report with the largest residual relative to its tolerance.
    let worst = |reps: Vec<IdentityReport>, name: &str| {
        let key = |r: &IdentityReport| r.residual.abs() / r.tolerance.max(f64::MIN_POSITIVE);
        let r = reps.into_iter().max_by(|a, b| key(a).total_cmp(&key(b))).expect("nonempty");
        IdentityReport { name: name.into(), ..r }
    };
    let single_modes: Vec<SpectralField> =
        mode_table(n).into_iter().map(|m| SpectralField::single(n, m, 1.0)).collect();
    out.push(tag(worst(single_modes.iter().map(|f| dc.check_bochner(f, 1e-8)).collect(), "bochner_single_modes")));
    out.push(tag(worst(fields.iter().map(|f| dc.check_bochner(f, 1e-7)).collect(), "bochner_random_fields")));
    out.push(tag(worst(
        single_modes.iter().map(|f| dc.check_paneitz_bochner(f, 1e-8)).collect(),
        "paneitz_bochner_single_modes",
    )));
    out.push(tag(worst(
        fields.iter().map(|f| dc.check_paneitz_bochner(f, 1e-7)).collect(),
        "paneitz_bochner_random_fields",
    )));
    out.push(tag(worst(fields.iter().map(|f| w_free_identity(f, 1e-12)).collect(), "w_free_identity")));
    out.push(dc.check_condition_star(&perp, seed));
    out.push(tag(check_essential_positivity(&perp, n)));
    out.push(tag(check_inequality5(&perp)));
    out.push(tag(worst(
        fields.iter().map(|f| check_interpolation(f, cfg.interpolation_eps)).collect(),
        "interpolation_inequality",
    )));
    let q0 = project_kernel(&fields[0]).1.add(&fields[1].map_modes(|m, c| if m.degree() > 0 { c } else { 0.0 }));
    out.push(tag(check_energy_gradient(&fields[2], &q0, &fields[3], 1e-8)));
    let mut q0_mean_free = q0.clone();
    q0_mean_free.coeffs_mut()[0] = 0.0;
    let tq = total_q(&fields[4].scale(0.05), &BackgroundGeometry::sphere(q0_mean_free), space)?;
    out.push(tag(IdentityReport::new("total_q_curvature", tq, 0.0, tq, 1e-10)));
    Ok(out)
}

#[cfg(test)]
mod tests;
