use holonomy_lab::geom::{self, Point};
use holonomy_lab::gravity::{poincare_transport, tangent_frame_distinguishability, ConeGeometry, PoincareElement};
use holonomy_lab::transport::Curve;
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

/// Rigid motion as a 3x3 homogeneous matrix, for an independent composition check.
fn homogeneous(e: &PoincareElement) -> [[f64; 3]; 3] {
    let (s, c) = e.rotation.sin_cos();
    [[c, -s, e.translation[0]], [s, c, e.translation[1]], [0.0, 0.0, 1.0]]
}

fn matmul(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn point() -> impl Strategy<Value = Point> {
    (-4.0..4.0f64, -4.0..4.0f64).prop_map(|(x, y)| [x, y])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_matches_matrix_product(r1 in -PI..PI, r2 in -PI..PI, t1 in point(), t2 in point()) {
        let a = PoincareElement { rotation: r1, translation: t1 };
        let b = PoincareElement { rotation: r2, translation: t2 };
        let m = matmul(homogeneous(&a), homogeneous(&b));
        let h = homogeneous(&a.compose(&b));
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((m[i][j] - h[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn enclosing_loops_give_the_closed_form(delta in -3.0..3.0f64, apex in point(), r in 0.5..3.0f64, phase0 in 0.0..TAU) {
        let g = ConeGeometry::new(apex, delta, 0.0).unwrap();
        let pts: Vec<Point> = (0..12)
            .map(|k| {
                let th = phase0 + TAU * k as f64 / 12.0;
                [apex[0] + r * th.cos(), apex[1] + r * th.sin()]
            })
            .collect();
        let loop_ = Curve::polygon(pts).unwrap();
        let e = poincare_transport(&g, &loop_).unwrap();
        let rel = geom::sub(loop_.start(), apex);
        let expected = geom::sub(rel, geom::rotate(rel, delta));
        prop_assert!((e.rotation - delta).abs() < 1e-10);
        prop_assert!(geom::norm(geom::sub(e.translation, expected)) < 1e-9);
    }

    #[test]
    fn open_curves_ignore_a_flat_cone(pts in proptest::collection::vec(point(), 2..6)) {
        let g = ConeGeometry::new([10.0, 10.0], 0.0, 0.0).unwrap();
        let c = Curve::polyline(pts).unwrap();
        let e = poincare_transport(&g, &c).unwrap();
        prop_assert!(e.rotation == 0.0);
        prop_assert!(geom::norm(geom::sub(e.translation, c.displacement())) < 1e-12);
    }
}

#[test]
fn seam_direction_does_not_change_loop_holonomy() {
    let loop_ = Curve::circle([0.2, 0.1], 2.0, 1, 20).unwrap();
    let reference = poincare_transport(&ConeGeometry::new([0.0, 0.0], 0.9, 0.0).unwrap(), &loop_).unwrap();
    for seam in [0.7, 2.0, -2.5] {
        let g = ConeGeometry::new([0.0, 0.0], 0.9, 0.0).unwrap().with_seam_angle(seam);
        let e = poincare_transport(&g, &loop_).unwrap();
        assert!(e.distance(&reference) < 1e-12, "seam {seam}");
    }
}

#[test]
fn frame_report_separates_deficits_differing_by_a_full_turn() {
    let loop_ = Curve::circle([0.0, 0.0], 1.5, 1, 16).unwrap();
    let a = tangent_frame_distinguishability(&ConeGeometry::new([0.0, 0.0], 1.0, 0.0).unwrap(), &loop_).unwrap();
    let b = tangent_frame_distinguishability(&ConeGeometry::new([0.0, 0.0], 1.0 - TAU, 0.0).unwrap(), &loop_).unwrap();
    assert!((a.holonomy_rotation_mod - b.holonomy_rotation_mod).abs() < 1e-12);
    assert!(((a.holonomy_rotation - b.holonomy_rotation) - TAU).abs() < 1e-12);
    assert!(((b.total_tangent_minus_frame - a.total_tangent_minus_frame) - TAU).abs() < 1e-12);
}
