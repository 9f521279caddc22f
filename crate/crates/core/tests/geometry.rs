use std::f64::consts::{PI, TAU};

use ndr_core::geometry::{region_boundary_band, CellShape, Domain};
use ndr_core::prelude::*;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn dist_to_segment(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let t = ((z - a) * (b - a).conj()).re / (b - a).norm_sqr();
    (z - (a + (b - a) * t.clamp(0.0, 1.0))).norm()
}

proptest! {
    #[test]
    fn segment_weights_sum_to_length(
        x0 in -2.0..2.0f64, y0 in 0.05..3.0f64,
        x1 in -2.0..2.0f64, y1 in 0.05..3.0f64,
        density in 3.0..60.0f64,
    ) {
        let (a, b) = (c(x0, y0), c(x1, y1));
        prop_assume!((b - a).norm() > 1e-3);
        let q = discretize_contour(&SupportSpec::segment(a, b), density).unwrap();
        let len = (b - a).norm();
        prop_assert!((q.total_weight() - len).abs() <= 1e-12 * len);
        for (z, w) in q.nodes.iter().zip(&q.weights) {
            prop_assert!(*w > 0.0);
            prop_assert!(dist_to_segment(*z, a, b) <= 1e-12);
            prop_assert!(z.im > 0.0);
        }
        prop_assert!(q.endpoint_flags[0] && q.endpoint_flags[q.len() - 1]);
    }

    #[test]
    fn arc_nodes_on_circle(
        cx in -1.0..1.0f64, lift in 0.0..1.0f64, r in 0.2..2.0f64,
        t0 in 0.0..PI, span in 0.1..PI, density in 5.0..60.0f64,
    ) {
        let center = c(cx, r + lift);
        let t1 = t0 + span;
        let spec = SupportSpec::new().with(Primitive::Arc { center, radius: r, angle_start: t0, angle_end: t1 });
        let q = discretize_contour(&spec, density).unwrap();
        let len = r * span;
        prop_assert!((q.total_weight() - len).abs() <= 1e-12 * len);
        for z in &q.nodes {
            prop_assert!(((z - center).norm() - r).abs() <= 1e-12 * r.max(1.0));
        }
    }

    #[test]
    fn refinement_halves_cells(density in 4.0..40.0f64, y in 0.1..2.0f64) {
        let spec = SupportSpec::segment(c(0.0, y), c(1.0, y + 1.0));
        let coarse = discretize_contour(&spec, density).unwrap();
        let fine = discretize_contour(&spec, 2.0 * density).unwrap();
        let n = coarse.len() as i64;
        prop_assert!((fine.len() as i64 - 2 * n).abs() <= 2);
        let h = coarse.cell_size.iter().cloned().fold(0.0, f64::max);
        let hf = fine.cell_size.iter().cloned().fold(0.0, f64::max);
        prop_assert!(hf <= 0.5 * h * (1.0 + 2.0 / n as f64));
    }

    #[test]
    fn rectangle_area_is_exact(k in 2usize..20, x0 in -1.0..1.0f64, y0 in 0.0..1.0f64) {
        let h = 0.05;
        let spec = SupportSpec::new().with(Primitive::Rectangle {
            min: c(x0, y0),
            max: c(x0 + h * k as f64, y0 + h * (k + 3) as f64),
        });
        let q = discretize_region(&spec, h).unwrap();
        prop_assert_eq!(q.len(), k * (k + 3));
        prop_assert!(q.cell_shape.iter().all(|s| *s == CellShape::Square));
        let area = h * h * (k * (k + 3)) as f64;
        prop_assert!((q.total_weight() - area).abs() <= 1e-12 * area);
    }
}

#[test]
fn unit_density_segment_nodes() {
    let q = discretize_contour(&SupportSpec::segment(c(0.0, 1.0), c(0.0, 2.0)), 10.0).unwrap();
    assert_eq!(q.len(), 10);
    for (k, (z, w)) in q.nodes.iter().zip(&q.weights).enumerate() {
        assert!((z - c(0.0, 1.0 + (k as f64 + 0.5) / 10.0)).norm() < 1e-14);
        assert!((w - 0.1).abs() < 1e-15);
    }
}

#[test]
fn half_disk_area_converges() {
    let spec = SupportSpec::new().with(Primitive::HalfDisk {
        center: c(0.0, 0.0),
        radius: 1.0,
        min_im: 0.01,
    });
    let exact = PI / 2.0 - 0.01 * 2.0;
    let mut last = f64::INFINITY;
    for h in [0.1, 0.05, 0.025] {
        let q = discretize_region(&spec, h).unwrap();
        let err = (q.total_weight() - exact).abs() / exact;
        if h == 0.05 {
            assert!(err < 0.03, "area error {err}");
        }
        assert!(err < last.max(1e-3));
        last = err;
    }
}

#[test]
fn real_interval_lives_on_the_kdv_line() {
    let q = discretize_contour(&SupportSpec::real_interval(0.0, 1.0), 20.0).unwrap();
    assert_eq!(q.domain, Domain::KdvLine);
    assert!(q.nodes.iter().all(|z| z.im == 0.0 && z.re > 0.0));
    assert!(outer_boundary_nodes(&q, &SupportSpec::real_interval(0.0, 1.0)).iter().all(|&o| o));
}

#[test]
fn nested_circles_only_outer_marked() {
    let circle = |r: f64| Primitive::Arc {
        center: c(0.0, 3.0),
        radius: r,
        angle_start: 0.0,
        angle_end: TAU,
    };
    let spec = SupportSpec::new().with(circle(1.0)).with(circle(0.5));
    let q = discretize_contour(&spec, 40.0).unwrap();
    let outer = outer_boundary_nodes(&q, &spec);
    for i in 0..q.len() {
        let r = (q.nodes[i] - c(0.0, 3.0)).norm();
        if r > 0.75 {
            assert!(outer[i], "outer circle node {i} not marked");
        } else {
            assert!(!outer[i], "inner circle node {i} marked");
        }
    }
}

#[test]
fn semicircle_shields_what_it_encloses() {
    // the arc and the real axis bound a component that Ω cannot reach
    let spec = SupportSpec::semicircle(c(0.0, 0.0), 1.0).with(Primitive::Segment {
        from: c(0.0, 0.2),
        to: c(0.0, 0.8),
    });
    let q = discretize_contour(&spec, 50.0).unwrap();
    let outer = outer_boundary_nodes(&q, &spec);
    for i in 0..q.len() {
        assert_eq!(outer[i], q.panel_of[i] == 0, "node {}", q.nodes[i]);
    }
}

#[test]
fn half_disk_outer_set_is_the_rim() {
    let spec = SupportSpec::new().with(Primitive::HalfDisk {
        center: c(0.0, 0.0),
        radius: 1.0,
        min_im: 0.01,
    });
    let q = discretize_region(&spec, 0.05).unwrap();
    let outer = outer_boundary_nodes(&q, &spec);
    let band = region_boundary_band(&q, &spec);
    for i in 0..q.len() {
        let z = q.nodes[i];
        let depth = (1.0 - z.norm()).min(z.im - 0.01);
        if depth > 0.15 {
            assert!(!outer[i] && !band[i], "deep node {z} marked");
        }
        if outer[i] {
            assert!(depth < 0.15);
        }
    }
    // every rim cell along the arc sees the outside
    for i in 0..q.len() {
        if 1.0 - q.nodes[i].norm() < 0.02 && q.nodes[i].im > 0.1 {
            assert!(outer[i]);
        }
    }
}

#[test]
fn errors_for_bad_supports() {
    assert!(matches!(
        discretize_contour(&SupportSpec::new(), 10.0),
        Err(NdrError::EmptySupport)
    ));
    assert!(matches!(
        discretize_contour(&SupportSpec::segment(c(0.0, -0.5), c(0.0, 1.0)), 10.0),
        Err(NdrError::NotInUpperHalfPlane { index: 0 })
    ));
    let dip = SupportSpec::new().with(Primitive::Rectangle {
        min: c(0.0, -0.1),
        max: c(1.0, 1.0),
    });
    assert!(discretize_region(&dip, 0.1).is_err());
    let small = SupportSpec::new().with(Primitive::Rectangle {
        min: c(0.0, 1.0),
        max: c(0.1, 1.1),
    });
    assert!(matches!(
        discretize_region(&small, 1.0),
        Err(NdrError::CellTooCoarse { .. })
    ));
}

#[test]
fn support_json_shape() {
    let json = r#"[
        {"type": "segment", "from": [0, 1], "to": [0, 2], "label": "band"},
        {"type": "arc", "center": [0, 0], "radius": 1, "angle_start": 0, "angle_end": 3.141592653589793}
    ]"#;
    let spec: SupportSpec = serde_json::from_str(json).unwrap();
    assert_eq!(spec.primitives.len(), 2);
    assert_eq!(spec.primitives[0].label, "band");
    assert!((spec.total_measure() - (1.0 + PI)).abs() < 1e-12);
    let back: SupportSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(back, spec);
}
