use std::f64::consts::PI;

use approx::assert_relative_eq;
use conelab_core::domain::{radius, K_MAX};
use conelab_core::{Error, Polar, ReferenceLadder, SectorDomain};
use proptest::prelude::*;

#[test]
fn sector_constants() {
    let d = SectorDomain::new(1.0).unwrap();
    assert_eq!(d.phi, 1.0);
    assert_relative_eq!(d.half_angle, PI / 2.0, epsilon = 1e-15);

    let d = SectorDomain::new(3.0).unwrap();
    assert_eq!(d.phi, 0.5);
    assert_relative_eq!(d.half_angle, PI, epsilon = 1e-15);
    assert_eq!(d.eigenvalue, 0.25);

    let d = SectorDomain::new(2.0).unwrap();
    assert_relative_eq!(d.phi, 2.0 / 3.0, epsilon = 1e-15);
    assert_relative_eq!(d.half_angle, 0.75 * PI, epsilon = 1e-15);
}

#[test]
fn bad_gamma() {
    for g in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(matches!(SectorDomain::new(g), Err(Error::Domain(_))), "{g}");
    }
    assert!(matches!(SectorDomain::with_growth(1.0), Err(Error::GammaNotAboveOne(_))));
    assert!(matches!(SectorDomain::with_growth(0.5), Err(Error::GammaNotAboveOne(_))));
    assert!(SectorDomain::with_growth(1.5).is_ok());
}

#[test]
fn eta_values() {
    let d = SectorDomain::new(3.0).unwrap();
    assert_eq!(d.eta(0.0).unwrap(), 1.0);
    assert!(d.eta(PI).unwrap().abs() < 1e-16);
    assert!(d.eta(-PI).unwrap().abs() < 1e-16);
    assert!(matches!(d.eta(PI + 1e-9), Err(Error::Domain(_))));

    let d = SectorDomain::new(1.5).unwrap();
    let theta = d.half_angle / 2.0;
    assert_relative_eq!(d.eta(theta).unwrap(), (0.8 * theta).cos(), max_relative = 1e-15);
    assert_relative_eq!(d.eta(theta).unwrap(), (PI / 4.0).cos(), max_relative = 1e-15);
}

#[test]
fn harmonic_h_values() {
    let d = SectorDomain::new(1.0).unwrap();
    assert_relative_eq!(d.harmonic_h(Polar::new(0.5, 0.0)).unwrap(), 0.5, max_relative = 1e-15);
    let d = SectorDomain::new(3.0).unwrap();
    assert_relative_eq!(d.harmonic_h(Polar::new(0.25, 0.0)).unwrap(), 0.5, max_relative = 1e-15);
    assert!(d.harmonic_h(Polar::new(0.3, d.half_angle)).unwrap().abs() < 1e-16);
}

#[test]
fn harmonic_h_discrete_laplacian_is_second_order() {
    let d = SectorDomain::new(1.5).unwrap();
    let h_of = |x: f64, y: f64| d.harmonic_h(Polar::from_cartesian([x, y])).unwrap();
    let (x0, y0) = (0.1, 0.4);
    let lap = |h: f64| {
        (4.0 * h_of(x0, y0) - h_of(x0 + h, y0) - h_of(x0 - h, y0) - h_of(x0, y0 + h) - h_of(x0, y0 - h)) / (h * h)
    };
    let (e1, e2) = (lap(1e-2).abs(), lap(5e-3).abs());
    assert!(e1 < 1e-2, "{e1}");
    // halving the mesh divides the error by about four
    assert!(e2 < 0.3 * e1, "{e1} {e2}");
}

#[test]
fn ladder_examples() {
    let d = SectorDomain::new(2.0).unwrap();
    let lad = ReferenceLadder::new(d, 3).unwrap();
    assert_eq!(lad.point(1).r, 0.5);
    assert_eq!(lad.point(1).theta, 0.0);
    let [x, y] = lad.point(1).to_cartesian();
    assert!(x.abs() < 1e-16 && (y - 0.5).abs() < 1e-16);
    assert_eq!(lad.radius(1), 1.0);
    assert_eq!(lad.radius(3), 0.00390625);
    assert_eq!(lad.point(2).r, 1.0 / 32.0);
    assert!(lad.in_annulus(2, lad.point(2)));
    assert!(!lad.in_annulus(1, lad.point(2)));
    assert_eq!(radius(2), 1.0 / 16.0);
}

#[test]
fn ladder_depth_limits() {
    let d = SectorDomain::new(2.0).unwrap();
    assert!(ReferenceLadder::new(d, 0).is_err());
    assert!(ReferenceLadder::new(d, K_MAX).is_ok());
    assert!(matches!(ReferenceLadder::new(d, K_MAX + 1), Err(Error::Capacity(_))));
}

#[test]
fn ladder_distance_scales_like_radius() {
    let d = SectorDomain::new(1.5).unwrap();
    let lad = ReferenceLadder::new(d, 12).unwrap();
    let (c, cc) = lad.boundary_distance_band();
    assert!(c > 0.0 && cc < 16.0 && c <= cc);
    for k in 1..=12 {
        let scaled = lad.dist_to_annulus_boundary(k, lad.point(k)) * 16f64.powi(k as i32);
        assert!(scaled >= c * (1.0 - 1e-12) && scaled <= cc * (1.0 + 1e-12), "k={k}: {scaled}");
    }
}

#[test]
fn eta_comparable_to_edge_distance() {
    for g in [1.0, 1.5, 2.0, 3.0] {
        let d = SectorDomain::new(g).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 1..400 {
            let theta = d.half_angle * (1.0 - i as f64 / 400.0);
            let p = Polar::new(0.5, theta);
            let q = d.eta(theta).unwrap() / (d.dist_to_edges(p) / p.r);
            lo = lo.min(q);
            hi = hi.max(q);
        }
        assert!(lo > 0.1 && hi < 10.0, "γ={g}: [{lo}, {hi}]");
    }
}

proptest! {
    #[test]
    fn criticality(g in 1e-3f64..50.0) {
        let d = SectorDomain::new(g).unwrap();
        prop_assert!((d.phi * (1.0 + g) - 2.0).abs() < 1e-14);
        prop_assert!((2.0 * d.half_angle - (1.0 + g) * PI / 2.0).abs() < 1e-12 * g.max(1.0));
        prop_assert_eq!(d.eigenvalue, d.phi * d.phi);
        prop_assert!((d.phi * d.half_angle - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn harmonic_h_scaling(g in 0.2f64..6.0, r in 1e-3f64..1.0, s in 1e-3f64..1.0, u in -1.0f64..1.0) {
        let d = SectorDomain::new(g).unwrap();
        let theta = u * d.half_angle;
        let a = d.harmonic_h(Polar::new(r * s, theta)).unwrap();
        let b = s.powf(d.phi) * d.harmonic_h(Polar::new(r, theta)).unwrap();
        prop_assert!((a - b).abs() <= 1e-14 * b.max(1e-300));
    }

    #[test]
    fn cartesian_round_trip(r in 1e-6f64..1.0, theta in -3.1f64..3.1) {
        let p = Polar::new(r, theta);
        let q = Polar::from_cartesian(p.to_cartesian());
        prop_assert!((q.r - r).abs() < 1e-15);
        prop_assert!((q.theta - theta).abs() < 1e-13);
    }

    #[test]
    fn ladder_points_inside_their_annulus(g in 0.5f64..6.0, k in 1usize..=K_MAX) {
        let d = SectorDomain::new(g).unwrap();
        let lad = ReferenceLadder::new(d, K_MAX).unwrap();
        prop_assert!(lad.in_annulus(k, lad.point(k)));
        prop_assert!(d.contains(lad.point(k)));
    }
}
