use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::solver::{run, Field, RadialField, RadialGrid, SolverConfig};
use crate::testfn::build_boundary_bump;
use crate::testfn::BumpParams;

fn half_square(x: Point) -> TestEval {
    TestEval { value: 0.5 * dot(x, x), grad: x, hess: [[1.0, 0.0], [0.0, 1.0]] }
}

#[test]
fn h1_of_quadratic_is_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let x = [rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7)];
        let y = [rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7)];
        assert!((kernel_h1(x, y, half_square, 1e-12) - 1.0 / (4.0 * PI)).abs() < 1e-14);
    }
    assert!((kernel_h1([0.1, 0.2], [0.1, 0.2], half_square, 1e-12) - 1.0 / (4.0 * PI)).abs() < 1e-15);
}

#[test]
fn h1_of_bump_is_bounded_and_local() {
    let rho = 0.1;
    let b = TestFunction::Interior(InteriorBump::free([0.0, 0.0], rho));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let x = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
        let y = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
        worst = worst.max(kernel_h1(x, y, |p| b.eval(p), 1e-12).abs());
    }
    // sup of the Hessian norm of the profile is 2 e^{-1/2}
    let bound = 2.0 * (-0.5f64).exp() / (4.0 * PI * rho * rho);
    assert!(worst <= bound * (1.0 + 1e-12), "{worst} vs {bound}");
    assert_eq!(kernel_h1([0.5, 0.5], [0.6, -0.4], |p| b.eval(p), 1e-12), 0.0);
}

#[test]
fn limit_function_examples() {
    let y = [0.6, 0.8];
    let v = limit_test_phi(y, [0.0, 0.0], 0.5, 0.5, half_square).unwrap();
    assert!((v - 3.0 / (8.0 * PI)).abs() < 1e-15, "{v}");
    let t = [-0.8, 0.6];
    let v = limit_test_phi(y, t, 0.0, 0.0, half_square).unwrap();
    assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-15);
    let zero = |_: Point| TestEval::ZERO;
    assert_eq!(limit_test_phi(y, t, 0.0, 0.0, zero).unwrap(), 0.0);
    assert!(limit_test_phi(y, [0.5, 0.0], 0.5, 0.5, half_square).is_err());
    assert!(limit_test_phi([0.5, 0.0], t, 0.0, 0.0, half_square).is_err());
}

#[test]
fn limit_function_pieces_sum() {
    let disk = DomainGeometry::unit_disk();
    let b = build_boundary_bump(&disk, [0.985, 0.0], 0.01, BumpParams::default()).unwrap();
    let psi = TestFunction::Boundary(b);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let th: f64 = rng.gen_range(-0.05..0.05);
        let y = [th.cos(), th.sin()];
        let l1: f64 = rng.gen_range(0.0..0.6);
        let l2: f64 = rng.gen_range(0.0..0.4);
        let m = (1.0 - (l1 + l2) * (l1 + l2)).sqrt();
        let yv = scale(m, [-y[1], y[0]]);
        let full = limit_test_phi(y, yv, l1, l2, |p| psi.eval(p)).unwrap();
        let p = limit_test_phi_pieces(y, yv, l1, l2, |p| psi.eval(p));
        let sum: f64 = p.iter().sum();
        assert!((full - sum).abs() <= 1e-9 * full.abs().max(1.0), "{full} vs {sum}");
    }
}

#[test]
fn weak_test_admissibility() {
    let disk = DomainGeometry::unit_disk();
    assert!(WeakTest::interior(&disk, [0.0, 0.0], 0.2).is_ok());
    let b = build_boundary_bump(&disk, [0.985, 0.0], 0.01, BumpParams::default()).unwrap();
    assert!(WeakTest::new(&disk, TestFunction::Boundary(b)).is_ok());
    let rect = DomainGeometry::rectangle(1.0, 1.0).unwrap();
    assert!(WeakTest::interior(&rect, [0.5, 0.5], 0.1).is_ok());
    let near = TestFunction::Interior(InteriorBump::free([0.1, 0.5], 0.1));
    assert!(matches!(WeakTest::new(&rect, near), Err(Error::UnsupportedDomain(_))));
}

#[test]
fn simpson_and_trapezoid_weights() {
    let t: Vec<f64> = (0..5).map(|k| 0.25 * k as f64).collect();
    let w = time_weights(&t);
    let v: f64 = t.iter().zip(&w).map(|(t, w)| w * t * t * t).sum();
    assert!((v - 0.25).abs() < 1e-15);
    let t = [0.0, 0.1, 0.3];
    let w = time_weights(&t);
    assert_eq!(w.iter().sum::<f64>(), 0.3);
}

fn radial_field(n: usize, f: impl Fn(f64) -> f64) -> RadialField {
    RadialField::from_fn(Arc::new(RadialGrid::uniform(n).unwrap()), f)
}

#[test]
fn radial_quadratic_terms_match_two_routes() {
    let u = radial_field(48, |r| 3.0 * (-r * r / 0.1).exp() + 0.5);
    let d = Density::Radial(u.clone());
    let psi = WeakTest::interior(&DomainGeometry::unit_disk(), [0.0, 0.0], 0.2).unwrap().psi;
    let paired = pair_terms(&d, &u.values, &psi, &WeakOptions { angles: Some(256), ..WeakOptions::default() }).unwrap();
    let paper = pair_terms(
        &d,
        &u.values,
        &psi,
        &WeakOptions { collar: CollarWeight::Paper, angles: Some(256), ..WeakOptions::default() },
    )
    .unwrap();
    let newton = newton_q1_radial(&u, &u.values, &psi);
    assert!((paired.q1 - newton).abs() < 2e-3 * newton.abs(), "{} vs {newton}", paired.q1);
    assert_eq!((paired.q2, paired.q3, paired.q4), (0.0, 0.0, 0.0));
    assert!(paper.q2.abs() > 1e-6 && paper.q3.abs() > 1e-6);
    assert!((paper.q3 - paper.q3_1 - paper.q3_2).abs() < 1e-12);
    let total = quadratic_total_by_potential(&u, &u.values, &psi);
    let sum = |p: &PairTerms| p.q1 + p.q2 + p.q3 + p.q4 + p.q5;
    assert!((sum(&paired) - total).abs() < 2e-3 * total.abs(), "{} vs {total}", sum(&paired));
    assert!((sum(&paired) - sum(&paper)).abs() < 1e-10 * total.abs());
}

#[test]
fn constant_state_has_zero_residual() {
    let cfg = SolverConfig { t_end: 0.004, snapshot_interval: 0.001, ..SolverConfig::default() };
    let u0 = Density::Radial(radial_field(32, |_| 2.0));
    let tr = run(&cfg, RegKind::cutoff(0.01).unwrap(), u0).unwrap();
    let test = WeakTest::interior(&DomainGeometry::unit_disk(), [0.0, 0.0], 0.2).unwrap();
    let q = weak_residual(&tr, &test, &WeakOptions { angles: Some(64), ..WeakOptions::default() }).unwrap();
    // quadrature tolerance at 32 cells and 64 angles
    assert!(q.residual.abs() < 5e-3 * q.q1.abs(), "{q:?}");
    let rect = Density::Rect(Field::constant(32, 32, 1.0, 1.0, 2.0));
    let tr = run(&cfg, RegKind::nonlinear(0.01).unwrap(), rect).unwrap();
    let test = WeakTest::interior(&DomainGeometry::rectangle(1.0, 1.0).unwrap(), [0.5, 0.5], 0.1).unwrap();
    let q = weak_residual(&tr, &test, &WeakOptions::default()).unwrap();
    assert_eq!((q.q2, q.q3, q.q4), (0.0, 0.0, 0.0));
    assert!(q.residual.abs() < 1e-12, "{q:?}");
}

#[test]
fn off_center_radial_test_refused() {
    let cfg = SolverConfig { t_end: 0.001, snapshot_interval: 0.001, ..SolverConfig::default() };
    let tr = run(&cfg, RegKind::cutoff(0.01).unwrap(), Density::Radial(radial_field(16, |_| 1.0))).unwrap();
    let test = WeakTest::interior(&DomainGeometry::unit_disk(), [0.2, 0.0], 0.1).unwrap();
    assert!(matches!(weak_residual(&tr, &test, &WeakOptions::default()), Err(Error::Precondition(_))));
}

#[test]
fn refinement_orders_from_residuals() {
    let lv = |n, r| RefinementLevel { n, breakdown: QBreakdown { residual: r, ..QBreakdown::default() } };
    let o = empirical_order(&[lv(64, 4e-3), lv(128, 1e-3), lv(256, 2.5e-4)]);
    assert!((o - 2.0).abs() < 1e-12);
}
