use super::*;
use crate::frame::WEBSTER_CURVATURE;
use crate::sphere::{ModeIndex, Part, CONTACT_VOLUME};

fn mode(p: usize, q: usize, m: usize, part: Part) -> ModeIndex {
    ModeIndex::new(p, q, m, part).unwrap()
}

#[test]
fn energy_examples() {
    let z = SpectralField::zeros(4);
    assert_eq!(energy(&z, &z), 0.0);
    let c = 0.7;
    let f = SpectralField::single(4, mode(1, 1, 2, Part::Plus), c);
    assert!((energy(&f, &z) - 16.0 * c * c).abs() < 1e-14);
}

#[test]
fn surrogate_properties() {
    let f = sample_fields(3, 1, 4, 1.0, false).remove(0);
    assert!((sobolev_surrogate(&f, 0) - f.norm_sq()).abs() < 1e-14);
    let c = SpectralField::constant(4, 1.5);
    for k in 0..4 {
        assert!((sobolev_surrogate(&c, k) - c.norm_sq()).abs() < 1e-12);
    }
    for k in 0..4 {
        assert!(sobolev_surrogate(&f, k + 1) > sobolev_surrogate(&f, k));
    }
}

#[test]
fn bochner_identities_on_modes_and_fields() {
    let space = SpectralSpace::new(4, 8);
    let dc = DiagnosticsContext::new(&space).unwrap();
    assert!((dc.measured_w0 - WEBSTER_CURVATURE).abs() < 1e-10);
    let f11 = SpectralField::single(4, mode(1, 1, 0, Part::Plus), 1.0);
    let j = dc.integrals(&f11);
    // 2*16 = 3*16 - H - 2*4  =>  H = 8
    assert!((j.hess2 - 8.0).abs() < 1e-10);
    assert!(dc.check_paneitz_bochner(&f11, 1e-8).pass);
    for f in sample_fields(5, 10, 4, 1.0, false) {
        assert!(dc.check_bochner(&f, 1e-8).pass);
        assert!(dc.check_paneitz_bochner(&f, 1e-8).pass);
    }
    let c = SpectralField::constant(4, 1.0);
    let jc = dc.integrals(&c);
    assert_eq!((jc.sublaplacian_sq, jc.hess2, jc.t_sq, jc.grad2), (0.0, 0.0, 0.0, 0.0));
    let bad = DiagnosticsContext::new(&space).unwrap().with_w0(1.1 * WEBSTER_CURVATURE);
    assert!(!bad.check_bochner(&f11, 1e-8).pass);
}

#[test]
fn condition_star_and_kernel_flag() {
    let space = SpectralSpace::new(4, 8);
    let dc = DiagnosticsContext::new(&space).unwrap();
    let perp = sample_fields(7, 20, 4, 1.0, true);
    let r = dc.check_condition_star(&perp, Some(7));
    assert!(r.pass && r.lhs <= 2.0);
    let (ratio, is_perp) = dc.condition_star_ratio(&SpectralField::single(4, mode(1, 1, 0, Part::Plus), 1.0));
    assert!(is_perp && (ratio - 0.5).abs() < 1e-12);
    // A (3,0) mode has ratio 3 - 2/3 > 2.
    let k = SpectralField::single(4, mode(3, 0, 0, Part::Plus), 1.0);
    let (ratio, is_perp) = dc.condition_star_ratio(&k);
    assert!(!is_perp && (ratio - 7.0 / 3.0).abs() < 1e-10);
    assert!(!dc.check_condition_star(&[k], None).pass);
}

#[test]
fn spectral_inequalities() {
    let fields = sample_fields(9, 50, 5, 0.5, true);
    let r = check_essential_positivity(&fields, 5);
    assert!(r.pass, "{r:?}");
    let f21 = SpectralField::single(5, mode(2, 1, 0, Part::Minus), 1.0);
    assert_eq!(paneitz_form(&f21) / f21.norm_sq(), 48.0);
    assert!(check_inequality5(&fields).pass);
    for f in &fields {
        assert!(check_interpolation(f, 0.1).pass);
        assert!(w_free_identity(f, 1e-12).pass);
    }
    let c = SpectralField::constant(5, 2.0);
    let r = check_interpolation(&c, 0.3);
    assert!(r.pass && r.lhs == 0.0);
}

#[test]
fn energy_gradient_and_total_q() {
    let fs = sample_fields(11, 3, 4, 1.0, false);
    let mut q0 = fs[1].clone();
    q0.coeffs_mut()[0] = 0.0;
    assert!(check_energy_gradient(&fs[0], &q0, &fs[2], 1e-8).pass);
    let space = SpectralSpace::new(4, 8);
    let tq = total_q(&fs[0].scale(0.05), &BackgroundGeometry::sphere(q0), &space).unwrap();
    assert!(tq.abs() < 1e-10);
}

#[test]
fn moser_fit_examples() {
    let space = SpectralSpace::new(3, 20);
    let sampler = MoserSampler::new(&space);
    let zero = sampler.evaluate(&SpectralField::zeros(3), &[1.0]).unwrap();
    assert!((zero.log_exp[0] - CONTACT_VOLUME.ln()).abs() < 1e-12);
    let f = SpectralField::single(3, mode(1, 1, 0, Part::Plus), 1.0);
    let a = sampler.evaluate(&f, &[1.0]).unwrap();
    let b = sampler.evaluate(&f.scale(2.0), &[1.0]).unwrap();
    assert!((b.grad4 / a.grad4 - 16.0).abs() < 1e-10);
    let sweep: Vec<MoserSample> = (-10..=10)
        .map(|i| sampler.evaluate(&f.scale(0.5 * i as f64), &training_scales()).unwrap())
        .collect();
    let env = fit_envelope(&sweep).unwrap();
    assert!(env.log_c >= CONTACT_VOLUME.ln() - 1e-12);
    assert_eq!(env.violations(&sweep, 1e-12), 0);
    let train = moser_fields(1, 30, 3, 3.0);
    let held = moser_fields(2, 30, 3, 3.0);
    let (_, rep) = moser_check(&sampler, &train, &held).unwrap();
    assert!(rep.residual.is_finite());
}

#[test]
fn report_rendering() {
    let r = IdentityReport::new("x", 1.0, 1.0, 0.0, 1e-9).with_context(Some(3), 6, 12);
    let line = render_jsonl(std::slice::from_ref(&r));
    assert!(line.contains("\"name\":\"x\"") && line.contains("\"N\":6") && line.contains("\"seed\":3"));
    assert!(line.ends_with('\n'));
    assert!(summary_table(&[r]).contains("1 checks, 0 failed"));
}
