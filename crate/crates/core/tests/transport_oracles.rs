mod common;

use common::{brute_force, trapezoid};
use holonomy_lab::gauge::{
    apply_gauge_to_potential, random_smooth_gauge, GaugePotential, GroupKind, LieAlgebraBasis,
};
use holonomy_lab::geom::{self, Point};
use holonomy_lab::transport::{
    compose, holonomy, inverse, line_integral_at, loop_transport, path_ordered_exponential,
    path_ordered_exponential_at, Curve, TransportOptions,
};
use holonomy_lab::GridSpec;
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

fn plane() -> GridSpec {
    GridSpec::centered(2, 64, 0.25).unwrap()
}

fn su2_field(seed: u64) -> GaugePotential {
    GaugePotential::smooth_random(seed, LieAlgebraBasis::su2(1.3), &plane(), 3, 0.4).unwrap()
}

fn u1_field(seed: u64) -> GaugePotential {
    GaugePotential::smooth_random(seed, LieAlgebraBasis::u1(0.7), &plane(), 3, 0.4).unwrap()
}

fn test_curve() -> Curve {
    Curve::polyline(vec![[-2.0, -1.0], [1.5, -0.5], [0.5, 2.0], [-1.0, 1.0]]).unwrap()
}

#[test]
fn u1_line_integral_matches_trapezoid() {
    for seed in 0..5 {
        let a = u1_field(seed);
        let c = test_curve();
        let v = line_integral_at(&a, &c, 0.0, &TransportOptions::numeric()).unwrap()[0];
        let oracle = trapezoid(&a, &c, 4000);
        assert!((v - oracle).abs() < 1e-9, "seed {seed}: {v} vs {oracle}");
    }
}

#[test]
fn su2_transport_matches_fine_product() {
    for seed in 0..3 {
        let a = su2_field(seed);
        let c = test_curve();
        let w = path_ordered_exponential(&a, &c).unwrap();
        let oracle = brute_force(&a, &c, 2000);
        let err = (w.matrix() - oracle).norm();
        assert!(err < 1e-8, "seed {seed}: {err}");
    }
}

#[test]
fn solenoid_line_integral_is_the_swept_angle() {
    let centre = [0.3, -0.2];
    let flux = 1.7;
    let a = GaugePotential::solenoid(centre, flux, 0.0);
    let c = Curve::segment([-2.0, 1.0], [3.0, 0.5]).unwrap();
    let swept = geom::subtended_angle(centre, c.start(), c.end());
    let expected = flux * swept / TAU;
    for opts in [TransportOptions::default(), TransportOptions::numeric()] {
        let v = line_integral_at(&a, &c, 0.0, &opts).unwrap()[0];
        assert!((v - expected).abs() < 1e-9, "{v} vs {expected}");
    }
}

#[test]
fn holonomy_phase_sign_and_winding() {
    let q = 0.8;
    let flux = 1.1;
    let a = GaugePotential::solenoid([0.0, 0.0], flux, 0.0).with_coupling(q);
    for n in [-2, -1, 1, 3] {
        let c = Curve::circle([0.1, 0.2], 1.5, n, 24).unwrap();
        let h = holonomy(&a, &c).unwrap();
        let expected = geom::wrap_angle(-q * flux * n as f64);
        assert!(geom::wrap_angle(h.angle() - expected).abs() < 1e-10, "n={n}");
        let fwd = loop_transport(&a, &c, &TransportOptions::default()).unwrap();
        assert!(compose(&fwd, &h).unwrap().distance(&holonomy_lab::transport::GroupElement::identity(a.basis())) < 1e-12);
    }
}

#[test]
fn flat_exterior_loops_agree_across_radii() {
    let a = GaugePotential::nonabelian_flux_tube([0.0, 0.0], [1.0, -2.0, 0.5], 2.3, 0.0, 1.0).unwrap();
    let reference = holonomy(&a, &Curve::circle([0.0, 0.0], 0.5, 1, 32).unwrap()).unwrap();
    for r in [1.0, 2.5, 4.0] {
        let h = holonomy(&a, &Curve::circle([0.0, 0.0], r, 1, 32).unwrap()).unwrap();
        assert!(h.distance(&reference) < 1e-8, "r={r}");
    }
}

fn point() -> impl Strategy<Value = Point> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| [x, y])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reversal_gives_inverse(seed in 0u64..1000, p in point(), q in point(), r in point()) {
        prop_assume!(geom::norm(geom::sub(p, q)) > 0.1 && geom::norm(geom::sub(q, r)) > 0.1);
        let a = su2_field(seed);
        let c = Curve::polyline(vec![p, q, r]).unwrap();
        let w = path_ordered_exponential(&a, &c).unwrap();
        let back = path_ordered_exponential(&a, &c.reversed()).unwrap();
        prop_assert!(back.distance(&inverse(&w)) < 1e-10);
    }

    #[test]
    fn concatenation_is_multiplicative(seed in 0u64..1000, p in point(), q in point(), r in point(), s in 0.1..0.9f64) {
        prop_assume!(geom::norm(geom::sub(p, q)) > 0.1 && geom::norm(geom::sub(q, r)) > 0.1);
        let a = su2_field(seed);
        let c = Curve::polyline(vec![p, q, r]).unwrap();
        let (first, second) = c.split(s).unwrap();
        let whole = path_ordered_exponential(&a, &c).unwrap();
        let parts = compose(
            &path_ordered_exponential(&a, &second).unwrap(),
            &path_ordered_exponential(&a, &first).unwrap(),
        ).unwrap();
        prop_assert!(whole.distance(&parts) < 1e-9);
    }

    #[test]
    fn transport_is_gauge_covariant(seed in 0u64..1000, p in point(), q in point(), r in point()) {
        prop_assume!(geom::norm(geom::sub(p, q)) > 0.1 && geom::norm(geom::sub(q, r)) > 0.1);
        let a = su2_field(seed);
        let basis = a.basis();
        let u = random_smooth_gauge(seed + 1, GroupKind::SU2, &plane(), 3, 1.0).unwrap();
        let a2 = apply_gauge_to_potential(&a, &u).unwrap();
        let c = Curve::polyline(vec![p, q, r]).unwrap();
        let opts = TransportOptions::numeric();
        let w = path_ordered_exponential_at(&a, &c, 0.0, &opts).unwrap();
        let w2 = path_ordered_exponential_at(&a2, &c, 0.0, &opts).unwrap();
        let expected = u.matrix_at(&basis, c.end()) * w.matrix() * u.matrix_at(&basis, c.start()).adjoint();
        prop_assert!((w2.matrix() - expected).norm() < 1e-8);
    }

    #[test]
    fn flux_quanta_are_invisible(flux in -PI..PI, n in 1i32..3) {
        let a = GaugePotential::solenoid([0.0, 0.0], flux, 0.0);
        let b = GaugePotential::solenoid([0.0, 0.0], flux + TAU, 0.0);
        let c = Curve::circle([0.2, 0.1], 1.0, n, 16).unwrap();
        prop_assert!(holonomy(&a, &c).unwrap().distance(&holonomy(&b, &c).unwrap()) < 1e-10);
    }
}
