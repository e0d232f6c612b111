//! Pointwise CR frame of the standard sphere and covariant jets.
//!
//! Every derivative is exact: ambient gradients and Hessians of the
//! polynomial representation are contracted with the frame vectors at the
//! point, and connection terms come from the structure equation for
//! `d theta^1` evaluated at the point. This is the oracle the spectral
//! operators are checked against.

use num_complex::Complex64;

use crate::sphere::poly::{LinearField, Poly, PowerTable};
use crate::sphere::{mode_position, ModeIndex, Part, SpectralField, SpectralSpace};
use crate::{Exec, QflowError, Result};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// Tanaka–Webster curvature of the standard sphere in the normalisation
/// `d theta0 = i theta^1 ^ theta^1bar`. [`measure_w0`] recovers it from the
/// integral Bochner identity.
pub const WEBSTER_CURVATURE: f64 = 2.0;

/// Frame, coframe and connection data at one point of the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSample {
    pub point: [C; 2],
    /// Characteristic field in real coordinates `(x0, y0, x1, y1)`.
    pub t_real: [f64; 4],
    /// Holomorphic components of `Z1` in `(d/dz0, d/dz1)`.
    pub z1: [C; 2],
    /// Components of `Z1`, `Z1bar`, `T` in slot order `(z0, z1, zbar0, zbar1)`.
    pub z: [C; 4],
    pub zbar: [C; 4],
    pub t: [C; 4],
    /// `omega_1^1` evaluated on `T`, `Z1`, `Z1bar`.
    pub omega_t: C,
    pub omega_z: C,
    pub omega_zbar: C,
    /// Pseudohermitian torsion `A^1_1bar` read off `d theta^1`.
    pub torsion: C,
}

fn slots(z: [C; 2]) -> [C; 4] {
    [z[0], z[1], z[0].conj(), z[1].conj()]
}

/// `theta0(V) = (i/2) sum_j (z_j V^{zbar_j} - zbar_j V^{z_j})`.
pub fn theta0(point: [C; 2], v: &[C; 4]) -> C {
    let x = slots(point);
    0.5 * I * (x[0] * v[2] + x[1] * v[3] - x[2] * v[0] - x[3] * v[1])
}

/// `d theta0(U, V) = i sum_j (U^{z_j} V^{zbar_j} - V^{z_j} U^{zbar_j})`.
pub fn dtheta0(u: &[C; 4], v: &[C; 4]) -> C {
    I * (u[0] * v[2] + u[1] * v[3] - v[0] * u[2] - v[1] * u[3])
}

/// `theta^1 = z1 dz0 - z0 dz1`.
pub fn theta1(point: [C; 2], v: &[C; 4]) -> C {
    point[1] * v[0] - point[0] * v[1]
}

/// `d theta^1 = 2 dz1 ^ dz0`.
pub fn dtheta1(u: &[C; 4], v: &[C; 4]) -> C {
    2.0 * (u[1] * v[0] - v[1] * u[0])
}

pub fn build_frame(point: [C; 2]) -> Result<FrameSample> {
    let r2 = point[0].norm_sqr() + point[1].norm_sqr();
    if (r2 - 1.0).abs() > 1e-14 {
        return Err(QflowError::OffSphere(r2));
    }
    let x = slots(point);
    let z = LinearField::Z.components(x);
    let zbar = LinearField::Zbar.components(x);
    let t = LinearField::T.components(x);

    // Structure equation d theta^1 = theta^1 ^ omega + A theta ^ theta^1bar,
    // evaluated on frame pairs where all but one term vanish.
    let omega_t = dtheta1(&z, &t);
    let omega_zbar = dtheta1(&z, &zbar);
    let torsion = dtheta1(&t, &zbar);
    // omega_1^1 is imaginary on real vectors.
    let omega_z = -omega_zbar.conj();

    // d/ds along T: dz_j = i z_j ds.
    let tz0 = I * point[0];
    let tz1 = I * point[1];
    let t_real = [tz0.re, tz0.im, tz1.re, tz1.im];
    Ok(FrameSample {
        point,
        t_real,
        z1: [z[0], z[1]],
        z,
        zbar,
        t,
        omega_t,
        omega_z,
        omega_zbar,
        torsion,
    })
}

/// Exact ambient first and second derivatives of a polynomial at a point.
#[derive(Debug, Clone, Copy)]
pub struct AmbientJet {
    pub value: C,
    pub grad: [C; 4],
    pub hess: [[C; 4]; 4],
}

impl AmbientJet {
    pub fn of(poly: &Poly, pw: &PowerTable) -> Self {
        let mut value = ZERO;
        let mut grad = [ZERO; 4];
        let mut hess = [[ZERO; 4]; 4];
        for (e, c) in poly.terms() {
            let base = [0, 1, 2, 3].map(|k| pw.get(k, e[k]));
            let lower = [0, 1, 2, 3].map(|k| if e[k] > 0 { pw.get(k, e[k] - 1) } else { ZERO });
            let lower2 = [0, 1, 2, 3].map(|k| if e[k] > 1 { pw.get(k, e[k] - 2) } else { ZERO });
            value += c * base[0] * base[1] * base[2] * base[3];
            for i in 0..4 {
                if e[i] == 0 {
                    continue;
                }
                let mut g = c * e[i] as f64 * lower[i];
                for (k, b) in base.iter().enumerate() {
                    if k != i {
                        g *= b;
                    }
                }
                grad[i] += g;
                for j in i..4 {
                    let h = if i == j {
                        if e[i] < 2 {
                            continue;
                        }
                        let mut h = c * (e[i] as f64) * (e[i] as f64 - 1.0) * lower2[i];
                        for (k, b) in base.iter().enumerate() {
                            if k != i {
                                h *= b;
                            }
                        }
                        h
                    } else {
                        if e[j] == 0 {
                            continue;
                        }
                        let mut h = c * (e[i] as f64) * (e[j] as f64) * lower[i] * lower[j];
                        for (k, b) in base.iter().enumerate() {
                            if k != i && k != j {
                                h *= b;
                            }
                        }
                        h
                    };
                    hess[i][j] += h;
                    if i != j {
                        hess[j][i] += h;
                    }
                }
            }
        }
        Self { value, grad, hess }
    }

    /// `X f` for a vector with components `x`.
    pub fn first(&self, x: &[C; 4]) -> C {
        (0..4).map(|j| x[j] * self.grad[j]).sum()
    }

    /// `X(Y f)` where `Y` is one of the linear frame fields.
    pub fn second(&self, x: &[C; 4], y: &[C; 4], y_field: LinearField) -> C {
        let m = y_field.matrix();
        let mut acc = ZERO;
        for i in 0..4 {
            for j in 0..4 {
                acc += x[i] * y[j] * self.hess[i][j];
            }
        }
        for j in 0..4 {
            let xy: C = (0..4).map(|k| m[j][k] * x[k]).sum();
            acc += xy * self.grad[j];
        }
        acc
    }
}

/// Covariant derivatives of a function at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct JetValues {
    pub value: f64,
    pub d1: C,
    pub d1bar: C,
    pub d0: C,
    pub d11: C,
    pub d11bar: C,
    pub d1bar1: C,
    pub d1bar1bar: C,
    pub d01: C,
    pub d01bar: C,
}

impl JetValues {
    pub fn from_ambient(a: &AmbientJet, f: &FrameSample) -> Self {
        let d1 = a.first(&f.z);
        let d1bar = a.first(&f.zbar);
        let d0 = a.first(&f.t);
        // omega_1bar^1bar(V) = conj(omega_1^1(conj V))
        let omegab_z = f.omega_zbar.conj();
        let omegab_zbar = f.omega_z.conj();
        Self {
            value: a.value.re,
            d1,
            d1bar,
            d0,
            d11: a.second(&f.z, &f.z, LinearField::Z) - f.omega_z * d1,
            d11bar: a.second(&f.zbar, &f.z, LinearField::Z) - f.omega_zbar * d1,
            d1bar1: a.second(&f.z, &f.zbar, LinearField::Zbar) - omegab_z * d1bar,
            d1bar1bar: a.second(&f.zbar, &f.zbar, LinearField::Zbar) - omegab_zbar * d1bar,
            d01: a.second(&f.z, &f.t, LinearField::T),
            d01bar: a.second(&f.zbar, &f.t, LinearField::T),
        }
    }

    /// `Delta_b f = f_{1 1bar} + f_{1bar 1}`.
    pub fn sublaplacian(&self) -> f64 {
        (self.d11bar + self.d1bar1).re
    }

    /// Residual of `f_{1bar 1} = f_{1 1bar} - i f_0`.
    pub fn commutation_residual(&self) -> f64 {
        (self.d1bar1 - self.d11bar + I * self.d0).norm()
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        self.value += a * x.value;
        self.d1 += a * x.d1;
        self.d1bar += a * x.d1bar;
        self.d0 += a * x.d0;
        self.d11 += a * x.d11;
        self.d11bar += a * x.d11bar;
        self.d1bar1 += a * x.d1bar1;
        self.d1bar1bar += a * x.d1bar1bar;
        self.d01 += a * x.d01;
        self.d01bar += a * x.d01bar;
    }
}

/// Jet of an arbitrary polynomial at a point.
pub fn jet_of_poly(poly: &Poly, frame: &FrameSample) -> JetValues {
    let pw = PowerTable::new(frame.point, poly.max_exponent().max(2));
    JetValues::from_ambient(&AmbientJet::of(poly, &pw), frame)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseNorms {
    /// `|grad_b f|^2 = 2 f_1 f_1bar`
    pub grad2: f64,
    /// `|grad_b^2 f|^2 = 2 f_1bar1bar f_11 + 2 f_1bar1 f_11bar`
    pub hess2: f64,
}

pub fn pointwise_norms(j: &JetValues) -> PointwiseNorms {
    PointwiseNorms {
        grad2: (2.0 * j.d1 * j.d1bar).re,
        hess2: (2.0 * (j.d1bar1bar * j.d11 + j.d1bar1 * j.d11bar)).re,
    }
}

/// Jets of every basis mode at every grid node; jets of a field are linear
/// combinations of these.
#[derive(Debug, Clone)]
pub struct JetTable {
    n_modes: usize,
    jets: Vec<JetValues>,
    pub frames: Vec<FrameSample>,
}

impl JetTable {
    pub fn new(space: &SpectralSpace) -> Result<Self> {
        Self::with_exec(space, space.exec)
    }

    pub fn with_exec(space: &SpectralSpace, exec: Exec) -> Result<Self> {
        let frames: Vec<FrameSample> =
            space.grid.nodes.iter().map(|n| build_frame(n.z)).collect::<Result<_>>()?;
        let deg = space.degree().max(2);
        let rows: Vec<Vec<JetValues>> = exec.map_slice(&frames, |f| {
            let pw = PowerTable::new(f.point, deg);
            space.basis.real.iter().map(|p| JetValues::from_ambient(&AmbientJet::of(p, &pw), f)).collect()
        });
        Ok(Self { n_modes: space.n_modes(), jets: rows.into_iter().flatten().collect(), frames })
    }

    pub fn n_nodes(&self) -> usize {
        self.frames.len()
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mode_jet(&self, node: usize, mode: usize) -> &JetValues {
        &self.jets[node * self.n_modes + mode]
    }

    pub fn jet(&self, field: &SpectralField, node: usize) -> JetValues {
        let mut out = JetValues::default();
        let row = &self.jets[node * self.n_modes..(node + 1) * self.n_modes];
        for (c, j) in field.coeffs().iter().zip(row) {
            if *c != 0.0 {
                out.axpy(*c, j);
            }
        }
        out
    }
}

/// Integrals entering the Bochner-type identities, all by grid quadrature of
/// pointwise jets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetIntegrals {
    /// `int (Delta_b f)^2`
    pub sublaplacian_sq: f64,
    /// `int |grad_b^2 f|^2`
    pub hess2: f64,
    /// `int (f_0)^2`
    pub t_sq: f64,
    /// `int |grad_b f|^2`
    pub grad2: f64,
    /// `int f Delta_b f`
    pub f_sublaplacian: f64,
}

pub fn jet_integrals(field: &SpectralField, table: &JetTable, weights: &[f64], exec: Exec) -> JetIntegrals {
    let terms = exec.map(table.n_nodes(), |i| {
        let j = table.jet(field, i);
        let n = pointwise_norms(&j);
        let lap = j.sublaplacian();
        let w = weights[i];
        [w * lap * lap, w * n.hess2, w * j.d0.re * j.d0.re, w * n.grad2, w * j.value * lap]
    });
    let mut acc = [0.0; 5];
    for t in terms {
        for k in 0..5 {
            acc[k] += t[k];
        }
    }
    JetIntegrals { sublaplacian_sq: acc[0], hess2: acc[1], t_sq: acc[2], grad2: acc[3], f_sublaplacian: acc[4] }
}

/// Solves the integral Bochner identity
/// `0 = int (Delta f)^2 - int |grad^2 f|^2 + 2 int f_0^2 - W int |grad f|^2`
/// for `W` on the real modes `(1,1)`, `(2,1)`, `(2,2)`, and requires the three
/// values to agree to `1e-8`.
pub fn measure_w0(space: &SpectralSpace, table: &JetTable) -> Result<f64> {
    if space.degree() < 4 || space.grid.order < 2 * 4 {
        return Err(QflowError::Invalid("measure_w0 needs degree >= 4 and grid order >= 8".into()));
    }
    let probes = [(1, 1), (2, 1), (2, 2)];
    let mut values = Vec::new();
    for (p, q) in probes {
        let mode = ModeIndex::new(p, q, 0, Part::Plus).expect("valid probe");
        let f = SpectralField::single(space.degree(), mode, 1.0);
        let ints = jet_integrals(&f, table, &space.grid.weights, space.exec);
        if ints.grad2.abs() < 1e-12 {
            return Err(QflowError::Singular(format!("probe {mode} has no horizontal gradient")));
        }
        values.push((ints.sublaplacian_sq - ints.hess2 + 2.0 * ints.t_sq) / ints.grad2);
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > 1e-8 {
        return Err(QflowError::Disagreement(format!("W0 probes disagree: {values:?}")));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Pointwise residual of the Bochner formula on a torsion-free background:
/// `1/2 Delta|grad f|^2 - |grad^2 f|^2 - <grad f, grad Delta f> - W|grad f|^2
///  + 2i f_1 f_{0 1bar} - 2i f_1bar f_{0 1}`.
pub fn bochner_pointwise_residual(field_poly: &Poly, w0: f64, frame: &FrameSample) -> f64 {
    let z = field_poly.apply_field(LinearField::Z);
    let zb = field_poly.apply_field(LinearField::Zbar);
    let grad2 = z.mul(&zb).scale_re(2.0);
    let lap = z.apply_field(LinearField::Zbar).add(&zb.apply_field(LinearField::Z));
    let j = jet_of_poly(field_poly, frame);
    let jg = jet_of_poly(&grad2, frame);
    let jl = jet_of_poly(&lap, frame);
    let norms = pointwise_norms(&j);
    let inner = j.d1 * jl.d1bar + j.d1bar * jl.d1;
    let torsion_free_terms = 2.0 * I * j.d1 * j.d01bar - 2.0 * I * j.d1bar * j.d01;
    let r = C::new(0.5 * jg.sublaplacian(), 0.0) - norms.hess2 - inner - w0 * norms.grad2 + torsion_free_terms;
    r.norm()
}

/// Ambient polynomial of a spectral field.
pub fn field_poly(field: &SpectralField, space: &SpectralSpace) -> Poly {
    let mut p = Poly::zero();
    for (m, c) in field.iter() {
        if c != 0.0 {
            p.add_scaled(&space.basis.real[mode_position(&m)], c);
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{build_basis, Node};
    use rand::{Rng, SeedableRng};

    fn random_points(n: usize, seed: u64) -> Vec<[C; 2]> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let eta = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
                Node::from_hopf(eta, rng.random_range(0.0..6.3), rng.random_range(0.0..6.3)).z
            })
            .collect()
    }

    #[test]
    fn characteristic_field_and_levi_form() {
        for p in random_points(100, 1) {
            let f = build_frame(p).unwrap();
            assert!((theta0(p, &f.t) - 1.0).norm() < 1e-12);
            for v in [&f.z, &f.zbar, &f.t] {
                assert!(dtheta0(&f.t, v).norm() < 1e-12);
            }
            assert!(theta0(p, &f.z).norm() < 1e-14);
            assert!((theta1(p, &f.z) - 1.0).norm() < 1e-14);
            assert!(theta1(p, &f.zbar).norm() < 1e-14);
            assert!(theta1(p, &f.t).norm() < 1e-14);
            // d theta0 = i theta^1 ^ theta^1bar  =>  d theta0(Z, Zbar) = i
            assert!((dtheta0(&f.z, &f.zbar) - I).norm() < 1e-14);
            assert!(f.torsion.norm() < 1e-14);
            assert!((f.omega_t - C::new(0.0, -2.0)).norm() < 1e-14);
            assert!(f.omega_zbar.norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_off_sphere() {
        assert!(build_frame([C::new(1.1, 0.0), ZERO]).is_err());
    }

    #[test]
    fn constant_field_has_zero_jet() {
        let f = build_frame(random_points(1, 2)[0]).unwrap();
        let j = jet_of_poly(&Poly::constant(C::new(3.0, 0.0)), &f);
        assert_eq!(j.value, 3.0);
        let n = pointwise_norms(&j);
        assert_eq!((n.grad2, n.hess2), (0.0, 0.0));
        assert_eq!(j.d11, ZERO);
        assert_eq!(j.d0, ZERO);
    }

    #[test]
    fn eigen_relations_on_complex_modes() {
        let b = build_basis(4);
        for p_ in random_points(20, 3) {
            let f = build_frame(p_).unwrap();
            for deg in 0..=4usize {
                for p in 0..=deg {
                    let q = deg - p;
                    for m in 0..=deg {
                        let poly = b.complex_mode(p, q, m).unwrap();
                        let pw = PowerTable::new(p_, 4);
                        let a = AmbientJet::of(&poly, &pw);
                        let j = JetValues::from_ambient(&a, &f);
                        let val = a.value;
                        let lap = j.d11bar + j.d1bar1;
                        let mu = -((2 * p * q + p + q) as f64);
                        assert!((lap - mu * val).norm() < 1e-11);
                        let t = C::new(0.0, p as f64 - q as f64);
                        assert!((j.d0 - t * val).norm() < 1e-11);
                        assert!(j.commutation_residual() < 1e-11);
                    }
                }
            }
        }
    }

    #[test]
    fn pointwise_bochner_holds_with_w2() {
        let space = SpectralSpace::new(4, 8);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let field = SpectralField::from_coeffs(4, (0..space.n_modes()).map(|_| rng.random_range(-1.0..1.0)).collect());
        let poly = field_poly(&field, &space);
        for p in random_points(30, 4) {
            let f = build_frame(p).unwrap();
            assert!(bochner_pointwise_residual(&poly, WEBSTER_CURVATURE, &f) < 1e-9);
            assert!(bochner_pointwise_residual(&poly, 1.1 * WEBSTER_CURVATURE, &f) > 1e-6);
        }
    }

    #[test]
    fn measured_w0_is_two() {
        let space = SpectralSpace::new(4, 8);
        let table = JetTable::new(&space).unwrap();
        let w = measure_w0(&space, &table).unwrap();
        assert!((w - WEBSTER_CURVATURE).abs() < 1e-10, "{w}");
        assert!(w > 0.0);
    }

    #[test]
    fn gradient_integral_by_parts() {
        let space = SpectralSpace::new(4, 8);
        let table = JetTable::new(&space).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let field = SpectralField::from_coeffs(4, (0..space.n_modes()).map(|_| rng.random_range(-1.0..1.0)).collect());
        let ints = jet_integrals(&field, &table, &space.grid.weights, Exec::Sequential);
        assert!((ints.grad2 + ints.f_sublaplacian).abs() < 1e-10 * ints.grad2);
    }
}
