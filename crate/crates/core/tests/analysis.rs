use conelab_core::analysis::{
    barrier_heps, boundary_rate, harnack_bands, lower_bound_check, modulus_check, ratio_trend, regime_partition,
    trichotomy_verdict, ModulusSpec,
};
use conelab_core::recursion::run;
use conelab_core::solver::{solve_fd, FdOptions, PolarGrid, SolutionField};
use conelab_core::{Error, ReferenceLadder, SectorDomain};

fn fd_field(gamma: f64, annuli: usize, per: usize, nt: usize, outer: Option<f64>) -> SolutionField {
    let d = SectorDomain::new(gamma).unwrap();
    let g = PolarGrid::with_depth(d, annuli, per, nt).unwrap();
    let outer_data = outer.map(|c| (0..=nt).map(|j| c * d.eta_unchecked(g.angle(j))).collect());
    let out = solve_fd(&g, &FdOptions { outer_data, ..Default::default() }).unwrap();
    assert!(out.bracket_ok());
    out.field
}

#[test]
fn sigma_is_increasing_near_zero() {
    for g in [1.5, 2.0, 3.0] {
        let s = ModulusSpec::new(g).unwrap();
        let ts: Vec<f64> = (1..60).map(|i| 1e-8 * 1.3f64.powi(i)).take_while(|&t| t < 0.05).collect();
        assert!(ts.windows(2).all(|w| s.sigma(w[1]) > s.sigma(w[0])), "γ={g}");
        assert!(s.sigma(1e-8) > 0.0);
    }
    assert!(matches!(ModulusSpec::new(1.0), Err(Error::GammaNotAboveOne(_))));
}

#[test]
fn barrier_positive_below_two() {
    for g in [1.0, 1.5] {
        let d = SectorDomain::new(g).unwrap();
        let grid = PolarGrid::new(d, 256, 96, 16f64.powi(-4)).unwrap();
        let rep = barrier_heps(&d, &grid).unwrap();
        assert!(rep.min_ratio > 0.0, "γ={g}: {rep:?}");
        assert!((rep.min_ratio / rep.continuum_bound - 1.0).abs() < 0.1, "γ={g}: {rep:?}");
    }
    let d = SectorDomain::new(2.0).unwrap();
    let grid = PolarGrid::new(d, 64, 32, 16f64.powi(-2)).unwrap();
    assert!(matches!(barrier_heps(&d, &grid), Err(Error::Domain(_))));
}

#[test]
fn trichotomy_from_recursion() {
    let s = run(1.5, 1.0, 1.0, 100_000).unwrap();
    let v = trichotomy_verdict(1.5, &s).unwrap();
    assert!(v.matches_log_law && v.expected_match, "{v:?}");
    for (g, s1) in [(2.0, std::f64::consts::E), (3.0, 1.0)] {
        let s = run(g, 1.0, s1, 100_000).unwrap();
        let v = trichotomy_verdict(g, &s).unwrap();
        assert!(!v.matches_log_law && !v.expected_match, "{v:?}");
        assert!(v.last_decade_drift > 0.02);
    }
    let short = run(1.5, 1.0, 1.0, 100).unwrap();
    assert!(trichotomy_verdict(1.5, &short).is_err());
}

#[test]
fn ratio_of_two_data_levels() {
    let u = fd_field(1.5, 6, 32, 32, Some(1.0));
    let v = fd_field(1.5, 6, 32, 32, Some(2.0));
    let lad = ReferenceLadder::new(u.grid.domain, u.grid.resolvable_depth()).unwrap();
    let rep = ratio_trend(&u, &v, &lad).unwrap();
    assert!(rep.global_min > 0.0 && rep.global_max < 1.0, "{rep:?}");
    assert!(rep.monotone_trend && rep.improves, "{rep:?}");
    let w = fd_field(1.5, 6, 32, 16, None);
    assert!(ratio_trend(&u, &w, &lad).is_err());
}

#[test]
fn harnack_and_lower_bound() {
    let u = fd_field(1.5, 6, 32, 32, Some(1.0));
    let big = fd_field(1.5, 6, 32, 32, None);
    let h = harnack_bands(&u, &big).unwrap();
    assert!(h.min_ratio >= 1.0 - 1e-9 && h.constant < 20.0, "{h:?}");
    let lb = lower_bound_check(&big, 40).unwrap();
    assert!(lb.min_ratio > 0.1, "{lb:?}");
}

#[test]
fn regime_bands_on_small_grid() {
    let f = fd_field(3.0, 6, 32, 64, None);
    let r1 = regime_partition(&f, 1).unwrap();
    assert!(r1.outer.as_ref().unwrap().width < 50.0);
    assert!(r1.bulk.is_none() && r1.near_edge.is_none());
    for k in 2..=4 {
        let r = regime_partition(&f, k).unwrap();
        assert!(r.outer.is_none());
        let bulk = r.bulk.unwrap();
        assert!(bulk.width < 50.0, "k={k}: {bulk:?}");
        assert!(r.threshold > 0.0 && r.threshold < 1.0);
    }
    assert!(matches!(regime_partition(&f, 5), Err(Error::Capacity(_))));
}

#[test]
fn modulus_stable_under_refinement() {
    let coarse = fd_field(1.5, 6, 32, 32, None);
    let fine = fd_field(1.5, 6, 64, 64, None);
    let spec = ModulusSpec::new(1.5).unwrap();
    let (a, b) = (modulus_check(&coarse, &spec, 500, 3).unwrap(), modulus_check(&fine, &spec, 500, 3).unwrap());
    assert!(a.max_ratio < 10.0 && b.max_ratio < 10.0);
    assert!((a.max_ratio / b.max_ratio).max(b.max_ratio / a.max_ratio) < 2.0, "{a:?} {b:?}");
    assert!(a.vertex_min > 0.1);
}

#[test]
fn boundary_rate_checks() {
    let f = fd_field(1.5, 1, 1024, 32, None);
    let rep = boundary_rate(&f, 0.0, 0.01, 0.2).unwrap();
    assert!((rep.corrected / rep.target - 1.0).abs() < 0.06, "{rep:?}");
    assert!(matches!(boundary_rate(&f, 0.0, 0.01, 0.011), Err(Error::Capacity(_))));
    let flat = fd_field(1.0, 1, 64, 16, None);
    assert!(matches!(boundary_rate(&flat, 0.0, 0.01, 0.2), Err(Error::GammaNotAboveOne(_))));
}
