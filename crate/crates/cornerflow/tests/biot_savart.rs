mod common;

use std::f64::consts::{PI, TAU};

use common::{disk, ellipse, plate};
use cornerflow::biot_savart::{
    circulation_probe, green_function, harmonic_field, ift_constant, ift_exponent, kernel_k, operator_r,
    velocity, velocity_at, CirculationSpec, Contour, VortexEnsemble, VortexParticle,
};
use cornerflow::config::{Omega0, PatchShape};
use cornerflow::lyapunov::near_boundary_samples;
use cornerflow::numerics::{linear_fit, log_spaced, median};
use cornerflow::transport::patch_init;
use cornerflow::validation::domain_samples;
use cornerflow::{ConformalMap, Point};
use proptest::prelude::*;

fn vortex(x: Point, g: f64, d: f64) -> VortexParticle {
    VortexParticle { position: x, circulation: g, blob_radius: d }
}

fn gaussian_patch(map: &ConformalMap, center: Point, width: f64, h: f64) -> VortexEnsemble {
    let om = Omega0::Gaussian { amplitude: -1.0, width };
    patch_init(map, PatchShape::Disk, center, 3.0 * width, &move |x| om.eval(x, center), h).unwrap()
}

#[test]
fn green_trace_on_boundary() {
    for m in [disk(), plate(), ellipse()] {
        let y = m.inverse(Point::new(2.0, 1.0)).unwrap();
        for k in 0..32 {
            let x = m.inverse(Point::from_polar(1.0 + 1e-8, TAU * (k as f64 + 0.5) / 32.0)).unwrap();
            assert!(green_function(&m, x, y).unwrap().abs() < 1e-6);
        }
    }
}

#[test]
fn green_is_negative_in_exterior() {
    let m = plate();
    let pts = domain_samples(&m, 100, 1);
    for w in pts.windows(2) {
        assert!(green_function(&m, w[0], w[1]).unwrap() < 0.0);
    }
}

#[test]
fn kernel_matches_perp_gradient() {
    for m in [disk(), plate(), ellipse()] {
        let pts = domain_samples(&m, 40, 9);
        for pair in pts.chunks(2) {
            let (x, y) = (pair[0], pair[1]);
            let k = kernel_k(&m, x, y).unwrap();
            let s = 1e-6 * (x - y).norm().min(m.boundary_distance(x));
            let gx = (green_function(&m, x + s, y).unwrap() - green_function(&m, x - s, y).unwrap()) / (2.0 * s);
            let gy = (green_function(&m, x + Point::new(0.0, s), y).unwrap()
                - green_function(&m, x - Point::new(0.0, s), y).unwrap())
                / (2.0 * s);
            assert!((k - Point::new(-gy, gx)).norm() / k.norm() < 1e-5);
        }
    }
}

#[test]
fn harmonic_field_circulation_and_decay() {
    for m in [disk(), plate(), ellipse()] {
        let c = CirculationSpec::new(&m, 1.0, &VortexEnsemble::empty()).unwrap();
        let g = circulation_probe(&m, &VortexEnsemble::empty(), &c, &Contour::circle(Point::new(0.0, 0.0), 5.0))
            .unwrap();
        assert!((g - 1.0).abs() < 1e-6);
        let rs = log_spaced(1e2, 1e4, 9);
        let ys: Vec<f64> = rs.iter().map(|&r| harmonic_field(&m, Point::from_polar(r, 0.7)).unwrap().norm().ln()).collect();
        let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
        let (slope, _) = linear_fit(&xs, &ys).unwrap();
        assert!((slope + 1.0).abs() < 0.01);
    }
}

#[test]
fn zero_alpha_far_field_is_dipolar() {
    let m = plate();
    let e = VortexEnsemble::new(vec![vortex(Point::new(1.5, 0.5), 1.0, 0.05)], 1.0);
    let c = CirculationSpec::new(&m, -1.0, &e).unwrap();
    assert_eq!(c.alpha, 0.0);
    let rs = log_spaced(1e2, 1e4, 9);
    let ys: Vec<f64> = rs.iter().map(|&r| velocity(&m, &e, &c, Point::from_polar(r, 2.2)).unwrap().norm().ln()).collect();
    let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let (slope, _) = linear_fit(&xs, &ys).unwrap();
    assert!((slope + 2.0).abs() < 0.05, "{slope}");
}

#[test]
fn nonzero_alpha_far_field() {
    let m = plate();
    let e = VortexEnsemble::new(vec![vortex(Point::new(1.5, 0.5), 1.0, 0.05)], 1.0);
    let c = CirculationSpec::new(&m, 0.5, &e).unwrap();
    let x = Point::from_polar(1e4, 1.0);
    let u = velocity(&m, &e, &c, x).unwrap();
    assert!((u.norm() * TAU * 1e4 / c.alpha - 1.0).abs() < 1e-3);
}

#[test]
fn enclosed_circulation_sums() {
    let m = disk();
    let e = VortexEnsemble::new(vec![vortex(Point::new(2.5, 0.0), 0.7, 0.05)], 1.0);
    let c = CirculationSpec::new(&m, 0.3, &e).unwrap();
    let g = circulation_probe(&m, &e, &c, &Contour::circle(Point::new(0.0, 0.0), 5.0)).unwrap();
    assert!((g - 1.0).abs() < 1e-3);
    // polyline around the obstacle only
    let square = Contour::Polyline {
        vertices: vec![Point::new(-1.5, -1.5), Point::new(1.5, -1.5), Point::new(1.5, 1.5), Point::new(-1.5, 1.5)],
        subdivisions: 400,
    };
    let g = circulation_probe(&m, &e, &c, &square).unwrap();
    assert!((g - 0.3).abs() < 1e-3 * (1.0 + 0.3 + 0.7), "{g}");
}

#[test]
fn velocity_is_divergence_free_and_tangent() {
    let m = plate();
    let e = gaussian_patch(&m, Point::new(1.6, 0.8), 0.15, 0.03);
    let c = CirculationSpec::new(&m, 1.0, &e).unwrap();
    for x in domain_samples(&m, 60, 4) {
        if e.particles.iter().any(|p| (p.position - x).norm() < 4.0 * p.blob_radius) {
            continue;
        }
        let s = 1e-5 * m.boundary_distance(x).min(m.corner_distance(x)).min(1.0);
        let u = |z: Point| velocity(&m, &e, &c, z).unwrap();
        let dx = (u(x + s) - u(x - s)) / (2.0 * s);
        let dy = (u(x + Point::new(0.0, s)) - u(x - Point::new(0.0, s))) / (2.0 * s);
        let grad = (dx.norm_sqr() + dy.norm_sqr()).sqrt();
        assert!((dx.re + dy.im).abs() < 1e-5 * grad);
    }
    let mut normal: f64 = 0.0;
    let mut speed: f64 = 0.0;
    for k in 0..64 {
        let theta = TAU * (k as f64 + 0.5) / 64.0;
        let b = m.boundary_point(theta);
        if m.corner_distance(b) < 0.1 {
            continue;
        }
        let n = m.inward_normal(theta);
        let u = velocity(&m, &e, &c, b + 1e-3 * n).unwrap();
        normal = normal.max((u.re * n.re + u.im * n.im).abs());
        speed = speed.max(u.norm());
    }
    assert!(normal / speed < 1e-2);
}

#[test]
fn remainder_bounded_up_to_boundary() {
    let m = plate();
    let e = gaussian_patch(&m, Point::new(1.6, 0.8), 0.15, 0.03);
    // interior reference: the collar just inside the near-boundary band
    let interior: Vec<f64> = near_boundary_samples(&m, 400, 1e-2, 1.0, 10.0, 8)
        .iter()
        .map(|&x| operator_r(&m, &e, x).unwrap().norm())
        .collect();
    let near = near_boundary_samples(&m, 1000, 1e-6, 1e-2, 10.0, 2);
    assert_eq!(near.len(), 1000);
    let sup = near.iter().map(|&x| operator_r(&m, &e, x).unwrap().norm()).fold(0.0, f64::max);
    assert!(sup < 3.0 * median(&interior), "{sup} {}", median(&interior));
}

#[test]
fn single_particle_remainder_bound() {
    let m = disk();
    let q = Point::new(2.0, 0.0);
    let e = VortexEnsemble::new(vec![vortex(q, 0.8, 0.01)], 1.0);
    for r in [3.0, 5.0, 10.0, 100.0] {
        let x = Point::from_polar(r, 1.0);
        assert!(operator_r(&m, &e, x).unwrap().norm() <= 2.0 * 0.8 / (x - q).norm());
    }
}

#[test]
fn ift_constant_stable_under_rescaling() {
    let m = plate();
    let a = ift_exponent(&m);
    // sup over a lattice covering the patch plus near-boundary points
    let mut samples = near_boundary_samples(&m, 400, 1e-6, 1e-2, 6.0, 4);
    for i in 0..150 {
        for j in 0..150 {
            let x = Point::new(-1.5 + 0.03 * i as f64, -1.5 + 0.03 * j as f64);
            if m.contains(x) {
                samples.push(x);
            }
        }
    }
    let cs: Vec<f64> = [0.3, 0.25, 0.2, 0.15]
        .iter()
        .map(|&s| {
            let e = patch_init(&m, PatchShape::Disk, Point::new(1.7, 0.8), s, &|_| -1.0, s / 10.0).unwrap();
            ift_constant(&m, &e, &samples, a).unwrap()
        })
        .collect();
    let mean = cs.iter().sum::<f64>() / cs.len() as f64;
    for c in &cs {
        assert!((c / mean - 1.0).abs() < 0.2, "{cs:?}");
    }
}

#[test]
fn blob_curl_recovers_vorticity() {
    let m = plate();
    let center = Point::new(2.0, 1.2);
    let width = 0.2;
    let e = gaussian_patch(&m, center, width, 0.02);
    let c = CirculationSpec::new(&m, 1.0, &e).unwrap();
    let mut checked = 0;
    for p in e.particles.iter().filter(|p| (p.position - center).norm() < width) {
        let x = p.position;
        let s = 1e-5;
        let u = velocity_at(
            &m,
            &e,
            &c,
            &[x + s, x - s, x + Point::new(0.0, s), x - Point::new(0.0, s)],
        )
        .unwrap();
        let curl = (u[0].im - u[1].im) / (2.0 * s) - (u[2].re - u[3].re) / (2.0 * s);
        let omega = -(-(x - center).norm_sqr() / (2.0 * width * width)).exp();
        assert!((curl - omega).abs() < 0.1 * omega.abs(), "{curl} {omega}");
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn disk_sheet_density() {
    let m = disk();
    let c = CirculationSpec::new(&m, 1.0, &VortexEnsemble::empty()).unwrap();
    for theta in [0.0, 1.0, 3.0] {
        let g = cornerflow::biot_savart::sheet_density(&m, &VortexEnsemble::empty(), &c, theta).unwrap();
        assert!((g - 1.0 / TAU).abs() < 1e-6);
    }
}

#[test]
fn plate_sheet_jump_matches_closed_form() {
    let m = plate();
    let c = CirculationSpec::new(&m, 1.0, &VortexEnsemble::empty()).unwrap();
    for x1 in [0.0, 0.3, -0.3, 0.6, -0.6] {
        let j = cornerflow::biot_savart::plate_sheet_jump(&m, &VortexEnsemble::empty(), &c, x1).unwrap();
        let exact = 1.0 / (PI * (1.0 - x1 * x1).sqrt());
        assert!((j - exact).abs() < 0.02 * exact, "{x1}: {j} vs {exact}");
    }
}

fn any_exterior_map() -> impl Strategy<Value = ConformalMap> {
    prop_oneof![Just(disk()), Just(plate()), Just(ellipse())]
}

proptest! {
    #[test]
    fn green_symmetric(m in any_exterior_map(), r1 in 1.01f64..5.0, t1 in 0.0f64..TAU, r2 in 1.01f64..5.0, t2 in 0.0f64..TAU) {
        let x = m.inverse(Point::from_polar(r1, t1)).unwrap();
        let y = m.inverse(Point::from_polar(r2, t2)).unwrap();
        prop_assume!((x - y).norm() > 1e-6);
        let d = green_function(&m, x, y).unwrap() - green_function(&m, y, x).unwrap();
        prop_assert!(d.abs() < 1e-12);
    }

    #[test]
    fn fraction_identity(ar in -5.0f64..5.0, ai in -5.0f64..5.0, br in -5.0f64..5.0, bi in -5.0f64..5.0) {
        let a = Point::new(ar, ai);
        let b = Point::new(br, bi);
        prop_assume!(a.norm() > 1e-3 && b.norm() > 1e-3 && (a - b).norm() > 1e-9);
        let lhs = (a / a.norm_sqr() - b / b.norm_sqr()).norm();
        let rhs = (a - b).norm() / (a.norm() * b.norm());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn negation_negates_velocity(g in -2.0f64..2.0, gamma0 in -2.0f64..2.0, r in 1.2f64..4.0, t in 0.0f64..TAU) {
        let m = plate();
        let e = VortexEnsemble::new(vec![vortex(Point::new(1.4, 0.7), g, 0.05), vortex(Point::new(-1.2, -0.9), 0.3, 0.05)], 1.0);
        let c = CirculationSpec::new(&m, gamma0, &e).unwrap();
        let n = e.negated();
        let cn = CirculationSpec::new(&m, -gamma0, &n).unwrap();
        let x = m.inverse(Point::from_polar(r, t)).unwrap();
        let u = velocity(&m, &e, &c, x).unwrap();
        let un = velocity(&m, &n, &cn, x).unwrap();
        prop_assert_eq!(u, -un);
    }
}
