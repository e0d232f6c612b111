//! Normalised Q-curvature flow
//! `d lambda/dt = -(Q0 + 2 P lambda) + r`, `r = int (Q0 + 2P lambda) dmu / int dmu`,
//! with `dmu = e^{4 lambda} dmu0`.
//!
//! Two integrators are provided. [`step_split`] advances every mode with
//! `pq >= 1` in closed form, moves the remaining kernel modes linearly and
//! adds the time integral of `r` to the constant mode. [`step_generic`] is a
//! second-order exponential time-differencing scheme that treats the
//! Paneitz term exactly and `r` explicitly.

mod io;

pub use io::{read_snapshot, write_csv, write_snapshot, Snapshot, SnapshotMode, SNAPSHOT_VERSION};

use serde::{Deserialize, Serialize};

use crate::diagnostics::energy;
use crate::operators::{apply_paneitz, paneitz_eigenvalue, project_kernel, BackgroundGeometry};
use crate::quad::integrate_adaptive;
use crate::sphere::{synthesize, SpectralField, SpectralSpace};
use crate::{QflowError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    SplitExact,
    GenericStiff,
}

impl std::str::FromStr for Scheme {
    type Err = QflowError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split" | "split-exact" => Ok(Self::SplitExact),
            "generic" | "generic-stiff" | "etd2" => Ok(Self::GenericStiff),
            other => Err(QflowError::Invalid(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub scheme: Scheme,
    /// Step of the generic scheme.
    pub dt: f64,
    pub t_end: f64,
    /// Interval between records; also the step of the split scheme.
    pub record_dt: f64,
    /// Stop once `|Q0perp + 2 P lambda_perp|_2` falls below this.
    pub converge_tol: f64,
    pub stop_on_convergence: bool,
    /// Absolute tolerance per unit time of the `r` time integral.
    pub r_tol: f64,
    /// Relative volume drift allowed in one generic step before it is halved.
    pub volume_tol: f64,
    /// Relative slack for the energy-decrease guard.
    pub energy_tol: f64,
    /// Shift the initial datum by a constant to fix the volume.
    pub normalize: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::SplitExact,
            dt: 1e-3,
            t_end: 1.0,
            record_dt: 0.01,
            converge_tol: 1e-9,
            stop_on_convergence: true,
            r_tol: 1e-10,
            volume_tol: 1e-9,
            energy_tol: 1e-12,
            normalize: true,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.record_dt > 0.0) {
            return Err(QflowError::Invalid("dt and record_dt must be positive".into()));
        }
        if !(self.t_end >= 0.0) {
            return Err(QflowError::Invalid("t_end must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Evolving state with cached scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub t: f64,
    pub lambda: SpectralField,
    pub volume: f64,
    pub energy: f64,
    pub r: f64,
}

/// Precomputed data shared by the integrators.
pub struct FlowContext<'a> {
    pub space: &'a SpectralSpace,
    pub bg: BackgroundGeometry,
    q0_nodes: Vec<f64>,
}

impl<'a> FlowContext<'a> {
    pub fn new(space: &'a SpectralSpace, bg: BackgroundGeometry) -> Result<Self> {
        bg.validate()?;
        if bg.q0.degree() > space.degree() {
            return Err(QflowError::DegreeMismatch { field: bg.q0.degree(), basis: space.degree() });
        }
        if bg.q0.coeffs()[0] != 0.0 {
            return Err(QflowError::Invalid("Q0 must integrate to zero against dmu0".into()));
        }
        let q0 = bg.q0.with_degree(space.degree());
        let q0_nodes = synthesize(&q0, space)?;
        Ok(Self { space, bg: BackgroundGeometry { q0, ..bg }, q0_nodes })
    }

    pub fn degree(&self) -> usize {
        self.space.degree()
    }

    fn nodes(&self, field: &SpectralField) -> Result<Vec<f64>> {
        synthesize(field, self.space)
    }

    /// Node values of `Q0 + 2 P lambda`.
    fn source_nodes(&self, lambda: &SpectralField) -> Result<Vec<f64>> {
        let mut v = self.nodes(&apply_paneitz(lambda).scale(2.0))?;
        for (a, q) in v.iter_mut().zip(&self.q0_nodes) {
            *a += q;
        }
        Ok(v)
    }

    pub fn compute_r(&self, lambda: &SpectralField) -> Result<f64> {
        let lam = self.nodes(lambda)?;
        let src = self.source_nodes(lambda)?;
        weighted_mean(&lam, &src, &self.space.grid.weights)
    }

    pub fn volume(&self, lambda: &SpectralField) -> Result<f64> {
        volume_of(&self.nodes(lambda)?, &self.space.grid.weights)
    }

    pub fn state(&self, t: f64, lambda: SpectralField) -> Result<FlowState> {
        let lam = self.nodes(&lambda)?;
        let volume = volume_of(&lam, &self.space.grid.weights)?;
        let r = weighted_mean(&lam, &self.source_nodes(&lambda)?, &self.space.grid.weights)?;
        let energy = energy(&lambda, &self.bg.q0);
        Ok(FlowState { t, lambda, volume, energy, r })
    }

    /// Shifts `lambda` by the constant that makes `int e^{4 lambda} dmu0 = V0`.
    pub fn normalize(&self, lambda: &SpectralField) -> Result<SpectralField> {
        let vol = self.volume(lambda)?;
        let shift = 0.25 * (vol / self.space.grid.total_weight()).ln();
        Ok(lambda.sub(&SpectralField::constant(lambda.degree(), shift)))
    }

    /// `|Q0perp + 2 P lambda_perp|_2`, zero exactly at equilibrium.
    pub fn equilibrium_residual(&self, lambda: &SpectralField) -> f64 {
        let (_, q_perp) = project_kernel(&self.bg.q0);
        apply_paneitz(lambda).scale(2.0).add(&q_perp).norm()
    }

    /// Diagnostics at one state.
    pub fn record(&self, s: &FlowState) -> Result<FlowRecord> {
        let lam = self.nodes(&s.lambda)?;
        let src = self.source_nodes(&s.lambda)?;
        let w = &self.space.grid.weights;
        let mut q_l2 = 0.0;
        let mut q_linf: f64 = 0.0;
        let mut dissipation = 0.0;
        for i in 0..lam.len() {
            let e4 = (4.0 * lam[i]).exp();
            let q = src[i] / e4;
            if !q.is_finite() || !e4.is_finite() {
                return Err(QflowError::Overflow(format!("Q at t = {}", s.t)));
            }
            q_l2 += w[i] * e4 * q * q;
            q_linf = q_linf.max(q.abs());
            dissipation -= w[i] * e4 * q * q * e4;
        }
        let (ker, perp) = project_kernel(&s.lambda);
        Ok(FlowRecord {
            t: s.t,
            energy: s.energy,
            dissipation,
            r: s.r,
            volume: s.volume,
            q_l2: q_l2.sqrt(),
            q_linf,
            lambda_ker_norm: ker.norm(),
            lambda_perp_norm: perp.norm(),
        })
    }
}

fn volume_of(lam: &[f64], w: &[f64]) -> Result<f64> {
    let mut v = 0.0;
    for (l, w) in lam.iter().zip(w) {
        v += w * (4.0 * l).exp();
    }
    if v.is_finite() {
        Ok(v)
    } else {
        Err(QflowError::Overflow("e^(4 lambda) is not finite".into()))
    }
}

/// `sum w e^{4 lam} f / sum w e^{4 lam}`, shifted by `max(4 lam)` so the
/// ratio stays finite whenever `e^{4 lam}` itself is.
pub fn weighted_mean(lam: &[f64], f: &[f64], w: &[f64]) -> Result<f64> {
    let top = lam.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(4.0 * b));
    if !top.exp().is_finite() {
        return Err(QflowError::Overflow(format!("e^(4 lambda) overflows (4 lambda = {top})")));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..lam.len() {
        let e = (4.0 * lam[i] - top).exp();
        num += w[i] * e * f[i];
        den += w[i] * e;
    }
    let r = num / den;
    if r.is_finite() {
        Ok(r)
    } else {
        Err(QflowError::Overflow("r is not finite".into()))
    }
}

/// One row of the time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub t: f64,
    pub energy: f64,
    /// `-int e^{4 lambda} Q^2 dmu`
    pub dissipation: f64,
    pub r: f64,
    pub volume: f64,
    pub q_l2: f64,
    pub q_linf: f64,
    pub lambda_ker_norm: f64,
    pub lambda_perp_norm: f64,
}

/// Exact solution of the linear part from a fixed starting state: modes with
/// `pq >= 1` relax towards `-q/(2 mu)`, the other non-constant modes drift by
/// `-q t`. Node values are grouped by eigenvalue so `r(s)` costs one pass over
/// the grid per distinct eigenvalue.
pub struct SplitPropagator<'c, 'a> {
    ctx: &'c FlowContext<'a>,
    start: SpectralField,
    /// `(2 mu, node values of sum (c + q/2mu) b)` per distinct eigenvalue.
    groups: Vec<(f64, Vec<f64>)>,
    /// Node values of the time-independent part (without the constant).
    base: Vec<f64>,
    /// Node values of `-(Q0)_ker`.
    drift: Vec<f64>,
    /// Node values of `(Q0)_ker`.
    q_ker: Vec<f64>,
}

impl<'c, 'a> SplitPropagator<'c, 'a> {
    pub fn new(ctx: &'c FlowContext<'a>, lambda: &SpectralField) -> Result<Self> {
        let n = ctx.degree();
        let lambda = lambda.with_degree(n);
        let q0 = &ctx.bg.q0;
        let mut mus: Vec<f64> = lambda
            .modes()
            .iter()
            .map(|m| paneitz_eigenvalue(m.p, m.q))
            .filter(|mu| *mu > 0.0)
            .collect();
        mus.sort_by(f64::total_cmp);
        mus.dedup();
        let mut groups = Vec::with_capacity(mus.len());
        let mut base = SpectralField::zeros(n);
        for &mu in &mus {
            let mut g = SpectralField::zeros(n);
            for (k, m) in lambda.modes().iter().enumerate() {
                if paneitz_eigenvalue(m.p, m.q) == mu {
                    let shift = q0.coeffs()[k] / (2.0 * mu);
                    g.coeffs_mut()[k] = lambda.coeffs()[k] + shift;
                    base.coeffs_mut()[k] = -shift;
                }
            }
            groups.push((2.0 * mu, ctx.nodes(&g)?));
        }
        let (ker, _) = project_kernel(&lambda);
        let (q_ker, _) = project_kernel(q0);
        let mut ker_nc = ker.clone();
        ker_nc.coeffs_mut()[0] = 0.0;
        base = base.add(&ker_nc);
        Ok(Self {
            ctx,
            start: lambda,
            groups,
            base: ctx.nodes(&base)?,
            drift: ctx.nodes(&q_ker.scale(-1.0))?,
            q_ker: ctx.nodes(&q_ker)?,
        })
    }

    /// Coefficients after time `s`, with the constant mode left at its
    /// starting value.
    pub fn coefficients(&self, s: f64) -> SpectralField {
        let q0 = &self.ctx.bg.q0;
        let mut out = self.start.clone();
        for (k, m) in self.start.modes().iter().enumerate() {
            let c = self.start.coeffs()[k];
            let q = q0.coeffs()[k];
            let mu = paneitz_eigenvalue(m.p, m.q);
            out.coeffs_mut()[k] = if mu > 0.0 {
                let shift = q / (2.0 * mu);
                (-2.0 * mu * s).exp() * (c + shift) - shift
            } else if k == 0 {
                c
            } else {
                c - q * s
            };
        }
        out
    }

    /// `r` after time `s`; independent of the constant mode.
    pub fn r(&self, s: f64) -> Result<f64> {
        let w = &self.ctx.space.grid.weights;
        let decay: Vec<f64> = self.groups.iter().map(|(two_mu, _)| (-two_mu * s).exp()).collect();
        let n = w.len();
        let mut lam = Vec::with_capacity(n);
        let mut src = Vec::with_capacity(n);
        for i in 0..n {
            let mut l = self.base[i] + s * self.drift[i];
            let mut f = self.q_ker[i];
            for ((two_mu, a), e) in self.groups.iter().zip(&decay) {
                l += e * a[i];
                f += two_mu * e * a[i];
            }
            lam.push(l);
            src.push(f);
        }
        weighted_mean(&lam, &src, w)
    }
}

/// Advances by `h` exactly up to the adaptive time quadrature of `r`.
pub fn step_split(ctx: &FlowContext, state: &FlowState, h: f64, r_tol: f64) -> Result<FlowState> {
    let prop = SplitPropagator::new(ctx, &state.lambda)?;
    let int_r = integrate_adaptive(|s| prop.r(s), 0.0, h, r_tol * h.abs())?;
    let mut lambda = prop.coefficients(h);
    lambda.coeffs_mut()[0] += ctx.space.grid.total_weight().sqrt() * int_r.value;
    ctx.state(state.t + h, lambda)
}

/// `(e^z - 1)/z`
fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        z.exp_m1() / z
    }
}

/// `(e^z - 1 - z)/z^2`
fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// One ETDRK2 step with linear part `-2P` and nonlinear part `-Q0 + r`.
/// The step is halved until the per-step volume drift is within
/// `volume_tol`; the returned value is the step actually taken.
pub fn step_generic(ctx: &FlowContext, state: &FlowState, dt: f64, volume_tol: f64) -> Result<(FlowState, f64)> {
    let v0 = ctx.space.grid.total_weight();
    let sqrt_v0 = v0.sqrt();
    let modes = state.lambda.modes();
    let mut h = dt;
    for _ in 0..30 {
        let nonlinear = |r: f64| {
            let mut n = ctx.bg.q0.scale(-1.0);
            n.coeffs_mut()[0] += r * sqrt_v0;
            n
        };
        let n_u = nonlinear(state.r);
        let mut a = state.lambda.clone();
        for (k, m) in modes.iter().enumerate() {
            let l = -2.0 * paneitz_eigenvalue(m.p, m.q);
            a.coeffs_mut()[k] = (l * h).exp() * state.lambda.coeffs()[k] + h * phi1(l * h) * n_u.coeffs()[k];
        }
        let r_a = ctx.compute_r(&a)?;
        let n_a = nonlinear(r_a);
        let mut next = a;
        for (k, m) in modes.iter().enumerate() {
            let l = -2.0 * paneitz_eigenvalue(m.p, m.q);
            next.coeffs_mut()[k] += h * phi2(l * h) * (n_a.coeffs()[k] - n_u.coeffs()[k]);
        }
        let new_state = ctx.state(state.t + h, next)?;
        if ((new_state.volume - state.volume) / v0).abs() <= volume_tol {
            return Ok((new_state, h));
        }
        h *= 0.5;
    }
    Err(QflowError::Divergence(format!("volume drift not controllable at t = {}", state.t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Converged,
    ReachedEnd,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<FlowRecord>,
    /// `lambda` at each record time.
    pub lambdas: Vec<SpectralField>,
    pub final_state: FlowState,
    pub status: RunStatus,
    pub rejected_steps: usize,
}

/// Starting state at time `t0` (zero for a fresh run).
pub fn initial_state(ctx: &FlowContext, lambda0: &SpectralField, t0: f64, config: &FlowConfig) -> Result<FlowState> {
    let lambda = lambda0.with_degree(ctx.degree());
    let lambda = if config.normalize { ctx.normalize(&lambda)? } else { lambda };
    let s = ctx.state(t0, lambda)?;
    let v0 = ctx.space.grid.total_weight();
    if ((s.volume - v0) / v0).abs() > 1e-10 {
        return Err(QflowError::Invalid(format!("initial volume {} differs from V0 = {v0}", s.volume)));
    }
    Ok(s)
}

/// Integrates from `start` to `config.t_end`, recording every
/// `config.record_dt`.
pub fn run(ctx: &FlowContext, start: FlowState, config: &FlowConfig) -> Result<RunOutcome> {
    config.validate()?;
    let mut state = start;
    let mut records = vec![ctx.record(&state)?];
    let mut lambdas = vec![state.lambda.clone()];
    let mut rejected = 0;
    let done = |s: &FlowState| config.stop_on_convergence && ctx.equilibrium_residual(&s.lambda) < config.converge_tol;
    if done(&state) {
        return Ok(RunOutcome { records, lambdas, final_state: state, status: RunStatus::Converged, rejected_steps: 0 });
    }
    let eps = 1e-12 * config.record_dt;
    let mut k = 1u64;
    while state.t < config.t_end - eps {
        let target = (records[0].t + k as f64 * config.record_dt).min(config.t_end);
        k += 1;
        while state.t < target - eps {
            let h = match config.scheme {
                Scheme::SplitExact => target - state.t,
                Scheme::GenericStiff => config.dt.min(target - state.t),
            };
            let (next, taken) = match config.scheme {
                Scheme::SplitExact => (step_split(ctx, &state, h, config.r_tol)?, h),
                Scheme::GenericStiff => step_generic(ctx, &state, h, config.volume_tol)?,
            };
            if taken < h {
                rejected += 1;
            }
            let slack = config.energy_tol * state.energy.abs().max(1.0);
            if next.energy > state.energy + slack {
                return Err(QflowError::Divergence(format!(
                    "energy increased from {} to {} at t = {}",
                    state.energy, next.energy, next.t
                )));
            }
            state = next;
        }
        state.t = target;
        records.push(ctx.record(&state)?);
        lambdas.push(state.lambda.clone());
        if done(&state) {
            return Ok(RunOutcome { records, lambdas, final_state: state, status: RunStatus::Converged, rejected_steps: rejected });
        }
    }
    Ok(RunOutcome { records, lambdas, final_state: state, status: RunStatus::ReachedEnd, rejected_steps: rejected })
}

/// Largest `|lambda_ker(t) - lambda_ker(t0) + (Q0)_ker (t - t0) - int r|_2`
/// over a trajectory starting at `(t0, lambda0)`, with `r` taken along the
/// exact linear evolution from the start.
pub fn kernel_drift_residual(ctx: &FlowContext, t0: f64, lambda0: &SpectralField, samples: &[(f64, &SpectralField)], r_tol: f64) -> Result<f64> {
    let prop = SplitPropagator::new(ctx, lambda0)?;
    let (ker0, _) = project_kernel(&lambda0.with_degree(ctx.degree()));
    let (q_ker, _) = project_kernel(&ctx.bg.q0);
    let sqrt_v0 = ctx.space.grid.total_weight().sqrt();
    let mut int_r = 0.0;
    let mut last = 0.0;
    let mut worst: f64 = 0.0;
    for (t, lambda) in samples {
        let s = t - t0;
        if s < last {
            return Err(QflowError::Invalid("trajectory samples must be in increasing time".into()));
        }
        int_r += integrate_adaptive(|x| prop.r(x), last, s, r_tol * (s - last).max(f64::MIN_POSITIVE))?.value;
        last = s;
        let (ker, _) = project_kernel(&lambda.with_degree(ctx.degree()));
        let mut d = ker.sub(&ker0).add(&q_ker.scale(s));
        d.coeffs_mut()[0] -= sqrt_v0 * int_r;
        worst = worst.max(d.norm());
    }
    Ok(worst)
}

/// Fourth-order central difference of the energy along the exact linear
/// evolution; the constant mode does not enter the energy.
pub fn energy_rate_fd(ctx: &FlowContext, lambda: &SpectralField, h: f64) -> Result<f64> {
    let prop = SplitPropagator::new(ctx, lambda)?;
    let e = |s: f64| energy(&prop.coefficients(s), &ctx.bg.q0);
    Ok((8.0 * (e(h) - e(-h)) - (e(2.0 * h) - e(-2.0 * h))) / (12.0 * h))
}

/// Least-squares slope of `ln y` against `t` over records with `t` in `[a, b]`.
pub fn log_slope(records: &[FlowRecord], a: f64, b: f64, y: impl Fn(&FlowRecord) -> f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        records.iter().filter(|r| r.t >= a - 1e-12 && r.t <= b + 1e-12).map(|r| (r.t, y(r).ln())).collect();
    if pts.len() < 2 || pts.iter().any(|p| !p.1.is_finite()) {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    Some(sxy / sxx)
}
