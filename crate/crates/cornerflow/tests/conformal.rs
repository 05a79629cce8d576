mod common;

use std::f64::consts::{PI, TAU};

use common::{disk, ellipse, plate, wedge, wedge_270};
use cornerflow::validation::probe_map;
use cornerflow::{ConformalMap, DomainKind, FlowError, Point};
use proptest::prelude::*;

fn shapes() -> Vec<ConformalMap> {
    vec![disk(), plate(), ellipse(), wedge_270(), wedge(0.75 * PI), wedge(2.0 * PI)]
}

#[test]
fn plate_and_wedge_corner_exponents() {
    let p = probe_map(&plate()).unwrap();
    assert_eq!(p.corner_fits.len(), 2);
    for c in &p.corner_fits {
        assert!((c.fitted_exponent + 0.5).abs() < 0.05, "{c:?}");
        assert_eq!(c.expected_exponent, -0.5);
    }
    let w = probe_map(&wedge_270()).unwrap();
    assert_eq!(w.corner_fits.len(), 1);
    assert!((w.corner_fits[0].fitted_exponent + 1.0 / 3.0).abs() < 0.05, "{:?}", w.corner_fits);
    assert_eq!(w.beta, None);
}

#[test]
fn smooth_shapes_have_no_corner_fits() {
    assert!(probe_map(&disk()).unwrap().corner_fits.is_empty());
    assert!(probe_map(&ellipse()).unwrap().corner_fits.is_empty());
}

#[test]
fn plate_far_field() {
    let ff = plate().farfield_coefficients().unwrap();
    assert!((ff.beta - 2.0).abs() < 1e-9);
    assert!(ff.beta_tilde.norm() < 1e-9);
    assert!(ff.residual_far <= ff.residual);
}

#[test]
fn interior_has_no_far_field() {
    assert_eq!(wedge_270().farfield_coefficients(), Err(FlowError::InteriorDomainHasNoFarField));
}

#[test]
fn boundary_attainment_along_rays() {
    for m in shapes() {
        for theta in [0.4, 1.9, 4.0] {
            let b = m.boundary_point(theta);
            if m.corner_distance(b) < 0.05 {
                continue;
            }
            let n = m.inward_normal(theta);
            let gaps: Vec<f64> = (0..10)
                .map(|k| m.mapped_gap(b + 1e-2 * 0.5f64.powi(k) * n).unwrap())
                .collect();
            for w in gaps.windows(2) {
                assert!(w[1] < w[0] && w[1] > 0.0, "{:?} {gaps:?}", m.spec().shape);
            }
            assert!(gaps[9] < 1e-4);
        }
    }
}

#[test]
fn jacobian_is_conformal() {
    for m in shapes() {
        let (lo, hi) = if m.is_exterior() { (1.1, 3.0) } else { (0.1, 0.9) };
        for k in 0..40 {
            let w = Point::from_polar(lo + (hi - lo) * (k as f64 / 40.0), TAU * (k as f64 * 0.618).fract());
            let x = m.inverse(w).unwrap();
            if m.corner_distance(x) < 1e-2 {
                continue;
            }
            let s = 1e-6 * m.boundary_distance(x).min(1.0);
            let tx = (m.map(x + s).unwrap() - m.map(x - s).unwrap()) / (2.0 * s);
            let ty = (m.map(x + Point::new(0.0, s)).unwrap() - m.map(x - Point::new(0.0, s)).unwrap()) / (2.0 * s);
            // Jacobian [[a, b], [c, d]]: Cauchy–Riemann a = d, b = −c
            let scale = tx.norm();
            assert!((tx.re - ty.im).abs() / scale < 1e-8);
            assert!((ty.re + tx.im).abs() / scale < 1e-8);
            let d = m.derivative(x).unwrap();
            assert!((d - tx).norm() / scale < 1e-7, "{:?} {d} {tx}", m.spec().shape);
            let det = tx.re * ty.im - ty.re * tx.im;
            assert!((det - d.norm_sqr()).abs() / d.norm_sqr() < 1e-6);
        }
    }
}

#[test]
fn points_outside_are_rejected() {
    assert!(matches!(disk().map(Point::new(0.5, 0.0)), Err(FlowError::PointOutsideDomain { .. })));
    assert!(matches!(wedge_270().map(Point::new(5.0, 5.0)), Err(FlowError::PointOutsideDomain { .. })));
    assert!(matches!(disk().inverse(Point::new(0.5, 0.0)), Err(FlowError::PointOutsideTarget { .. })));
}

proptest! {
    #[test]
    fn roundtrip_through_mapped_plane(r in 1.001f64..50.0, theta in 0.0f64..TAU, which in 0usize..3) {
        let m = [disk(), plate(), ellipse()][which].clone();
        let w = Point::from_polar(r, theta);
        let x = m.inverse(w).unwrap();
        prop_assert!(m.contains(x));
        let back = m.map(x).unwrap();
        prop_assert!((back - w).norm() <= 1e-10 * w.norm());
    }

    #[test]
    fn wedge_roundtrip(r in 0.01f64..0.99, theta in 0.0f64..TAU) {
        let m = wedge_270();
        let w = Point::from_polar(r, theta);
        let x = m.inverse(w).unwrap();
        prop_assert!(m.contains(x));
        prop_assert!((m.map(x).unwrap() - w).norm() < 1e-10);
    }

    #[test]
    fn exterior_maps_outside_unit_circle(x in -4.0f64..4.0, y in -4.0f64..4.0) {
        let m = plate();
        let z = Point::new(x, y);
        prop_assume!(m.contains(z));
        prop_assert!(m.map(z).unwrap().norm() > 1.0);
        prop_assert_eq!(m.kind(), DomainKind::Exterior);
    }
}
