use super::*;
use crate::Exec;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = HeisPoint> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, t)| HeisPoint::new(x, y, t))
}

fn close(a: &HeisPoint, b: &HeisPoint, tol: f64) -> bool {
    (a.z - b.z).norm() <= tol && (a.t - b.t).abs() <= tol
}

proptest! {
    #[test]
    fn group_axioms(u in point(), v in point(), w in point()) {
        prop_assert!(close(&u.mul(&v).mul(&w), &u.mul(&v.mul(&w)), 1e-12));
        prop_assert!(close(&u.mul(&u.inverse()), &HeisPoint::IDENTITY, 1e-15));
        prop_assert!(close(&u.inverse().mul(&u), &HeisPoint::IDENTITY, 1e-15));
        prop_assert_eq!(u.mul(&HeisPoint::IDENTITY), u);
    }

    #[test]
    fn dilation_is_automorphism(u in point(), v in point(), r in 0.1..5.0f64) {
        let lhs = u.mul(&v).dilate(r);
        let rhs = u.dilate(r).mul(&v.dilate(r));
        prop_assert!(close(&lhs, &rhs, 1e-11));
        prop_assert!((u.dilate(r).norm() - r * u.norm()).abs() <= 1e-12 * r * u.norm().max(1.0));
    }

    #[test]
    fn norm_symmetric_and_subadditive(u in point(), v in point()) {
        prop_assert!((u.inverse().norm() - u.norm()).abs() < 1e-15);
        prop_assert!(u.mul(&v).norm() <= u.norm() + v.norm() + 1e-12);
    }

    #[test]
    fn polar_radius(s in 0.0..3.0f64, a in -1.5..1.5f64, b in 0.0..6.2f64) {
        prop_assert!((HeisPoint::polar(s, a, b).norm() - s).abs() < 1e-12);
    }
}

#[test]
fn unit_norm() {
    assert_eq!(HeisPoint::new(1.0, 0.0, 0.0).norm(), 1.0);
    assert_eq!(HeisPoint::new(0.0, 0.0, 1.0).norm(), 1.0);
}

fn euclidean_partials(f: &TestFunction, u: &HeisPoint) -> [f64; 3] {
    let h = 1e-6;
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut d = [0.0; 3];
        d[k] = h;
        let p = HeisPoint::new(u.z.re + d[0], u.z.im + d[1], u.t + d[2]);
        let m = HeisPoint::new(u.z.re - d[0], u.z.im - d[1], u.t - d[2]);
        *o = (f.value(&p) - f.value(&m)) / (2.0 * h);
    }
    out
}

#[test]
fn gradients_match_finite_differences() {
    let pts = [HeisPoint::new(0.1, -0.2, 0.3), HeisPoint::new(0.35, 0.2, -0.1), HeisPoint::new(-0.05, 0.1, 0.02)];
    for f in default_corpus() {
        for u in &pts {
            let d = euclidean_partials(&f, u);
            let fd = horizontal(u, d[0], d[1], d[2]);
            let g = f.gradient(u);
            for k in 0..2 {
                assert!((fd[k] - g[k]).abs() < 1e-7 * (1.0 + g[k].abs()), "{}: {fd:?} vs {g:?}", f.label());
            }
        }
    }
}

#[test]
fn fields_are_left_invariant() {
    // X f(u) = d/de f(u . (e, 0, 0)), Y f(u) = d/de f(u . (0, e, 0)).
    let f: TestFunction = "poly-bump c0=1 cx=0.5 cy=-0.3 ct=0.4 a=0.9".parse().unwrap();
    let h = 1e-6;
    for u in [HeisPoint::new(0.2, -0.3, 0.1), HeisPoint::new(-0.4, 0.1, -0.2)] {
        let g = f.gradient(&u);
        for (k, dir) in [HeisPoint::new(h, 0.0, 0.0), HeisPoint::new(0.0, h, 0.0)].iter().enumerate() {
            let fd = (f.value(&u.mul(dir)) - f.value(&u.mul(&dir.inverse()))) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-7, "component {k}: {fd} vs {}", g[k]);
        }
    }
}

#[test]
fn coordinate_gradient_at_origin() {
    let x: TestFunction = "poly-bump c0=0 cx=1 a=1".parse().unwrap();
    assert_eq!(x.gradient(&HeisPoint::IDENTITY), [1.0, 0.0]);
    assert_eq!(TestFunction::Zero.gradient(&HeisPoint::new(0.1, 0.2, 0.3)), [0.0, 0.0]);
}

#[test]
fn gradient_homogeneity_under_dilation() {
    let f: TestFunction = "poly-bump c0=1 cx=0.5 ct=0.4 a=0.9".parse().unwrap();
    let r = 2.5;
    let g = TestFunction::Dilated { inner: Box::new(f.clone()), r };
    for u in [HeisPoint::new(0.1, 0.05, 0.02), HeisPoint::new(-0.2, 0.1, -0.05)] {
        let lhs = g.gradient_norm(&u);
        let rhs = r * f.gradient_norm(&u.dilate(r));
        assert!((lhs - rhs).abs() <= 1e-14 * rhs.max(1.0));
        let d = euclidean_partials(&g, &u);
        let fd = horizontal(&u, d[0], d[1], d[2]);
        assert!((fd[0].hypot(fd[1]) - lhs).abs() < 1e-6);
    }
}

#[test]
fn corpus_supported_in_unit_ball() {
    for f in default_corpus() {
        assert!(f.support_radius() <= 1.0, "{}", f.label());
    }
}

#[test]
fn corpus_parsing() {
    assert_eq!(parse_corpus("bump a=0.5 amp=2").unwrap(), vec![TestFunction::Bump { radius: 0.5, amp: 2.0 }]);
    assert!(parse_corpus("").unwrap().is_empty());
    assert!(parse_corpus("wave a=1").is_err());
    assert!(parse_corpus("bump b=1").is_err());
    assert!(parse_corpus("bump a").is_err());
    assert!(parse_corpus("bump dilate=0").is_err());
    for f in default_corpus() {
        assert_eq!(f.label().parse::<TestFunction>().unwrap(), f);
    }
}

#[test]
fn constant_value() {
    let l = cohn_lu_constant();
    assert!((l - 15.056).abs() < 1e-3, "{l}");
    // 2 pi B(1/2, 3/4) = 2 pi int_{-pi/2}^{pi/2} cos(a)^{1/2} da
    let rule = crate::quad::gauss_legendre(60);
    let mut beta = 0.0;
    for (x, w) in rule.0.iter().zip(&rule.1) {
        let theta = std::f64::consts::FRAC_PI_2 * x;
        let a = std::f64::consts::FRAC_PI_2 * theta.sin();
        beta += w * a.cos().sqrt() * std::f64::consts::FRAC_PI_2 * theta.cos() * std::f64::consts::FRAC_PI_2;
    }
    assert!((2.0 * std::f64::consts::PI * beta - l).abs() < 1e-12);
}

#[test]
fn ball_volume_converges() {
    let exact = BallGrid::exact_volume();
    let coarse = (BallGrid::new(4).unwrap().volume() - exact).abs();
    let fine = (BallGrid::new(12).unwrap().volume() - exact).abs();
    assert!(fine < 1e-12, "{fine}");
    assert!(fine <= coarse);
    assert!(BallGrid::new(8).unwrap().nodes.iter().all(|u| u.norm() < 1.0));
}

#[test]
fn cohn_lu_zero_function() {
    let r = check_cohn_lu(&TestFunction::Zero, &HeisPoint::IDENTITY, 8, Exec::Sequential).unwrap();
    assert_eq!(r.phi_v, 0.0);
    assert_eq!(r.integral, 0.0);
    assert_eq!(r.status, CohnLuStatus::Holds);
}

#[test]
fn cohn_lu_radial_bump_is_sharp() {
    let f = TestFunction::Bump { radius: 0.8, amp: 1.0 };
    let r = check_cohn_lu(&f, &HeisPoint::IDENTITY, 16, Exec::default()).unwrap();
    assert!(r.acceptable(), "{r:?}");
    assert!(r.margin.abs() < 1e-9, "{r:?}");
}

#[test]
fn cohn_lu_translated_bump_sharp_at_center() {
    let c = HeisPoint::new(0.2, -0.1, 0.15);
    let f = TestFunction::TranslatedBump { center: c, radius: 0.5, amp: 1.0 };
    let r = check_cohn_lu(&f, &c, 16, Exec::default()).unwrap();
    assert!(r.acceptable(), "{r:?}");
    assert!(r.margin.abs() < 1e-9, "{r:?}");
}

#[test]
fn cohn_lu_off_center_holds() {
    let f: TestFunction = "poly-bump c0=1 cx=0.5 cy=-0.3 ct=0.4 a=0.9".parse().unwrap();
    let r = check_cohn_lu(&f, &HeisPoint::new(0.15, 0.1, -0.3), 12, Exec::default()).unwrap();
    assert_eq!(r.status, CohnLuStatus::Holds, "{r:?}");
    assert!(r.to_identity_report().pass);
}

#[test]
fn lp_growth_scale_invariant() {
    let grid = BallGrid::new(24).unwrap();
    let ps = [4.0, 8.0, 16.0, 32.0, 64.0];
    let f = TestFunction::Bump { radius: 0.9, amp: 1.0 };
    let g = TestFunction::Bump { radius: 0.9, amp: 7.5 };
    let a = check_lp_growth(&f, &ps, &grid).unwrap();
    let b = check_lp_growth(&g, &ps, &grid).unwrap();
    for ((_, x), (_, y)) in a.ratios.iter().zip(&b.ratios) {
        assert!(x.is_finite() && (x - y).abs() < 1e-12 * x);
    }
    assert!(a.to_identity_report().pass);
    assert!(check_lp_growth(&TestFunction::Zero, &ps, &grid).is_err());
}

#[test]
fn lp_norm_survives_large_exponent() {
    let grid = BallGrid::new(8).unwrap();
    let values = vec![1e300; grid.nodes.len()];
    let n = grid.lp_norm(&values, 64.0);
    assert!(n.is_finite() && n > 0.0);
}

#[test]
fn exp_envelope_dominates_family() {
    let grid = BallGrid::new(16).unwrap();
    let env = exp_envelope(&default_corpus(), &[0.5, 1.0, 2.0, 3.0], &grid).unwrap();
    assert!(env.kappa >= 0.0 && env.log_c.is_finite());
    assert!(env.worst_excess <= 1e-12);
    assert!(exp_envelope(&[], &[1.0], &grid).is_err());
}

#[test]
fn group_checks_pass() {
    assert!(check_homogeneity(3, 10_000).pass);
    assert!(check_translation_jacobian(3, 200).pass);
    assert!(empirical_delta(3, 2000).pass);
}
