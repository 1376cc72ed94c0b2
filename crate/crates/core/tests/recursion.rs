use std::f64::consts::E;

use conelab_core::numeric::bracket_root;
use conelab_core::recursion::{
    c_sensitivity, increment, run, run_with_schedule, t_increment, transform_t, RecursionModel, Regime,
};
use conelab_core::Error;
use proptest::prelude::*;

// first steps from S_1, solved to 30 digits with an independent root finder
const GOLDEN: f64 = 1.618_033_988_749_894_8;
const SUB_S2: f64 = 1.528_946_354_519_705_8;
const CRIT_S2: f64 = 2.847_347_783_840_906_3;
const INVERSE_CUBE_ROOT: f64 = 1.380_277_569_097_614_1;

#[test]
fn first_steps_match_frozen_roots() {
    let mut m = RecursionModel::new(3.0, 1.0, 1.0).unwrap();
    assert!((m.step().unwrap() - GOLDEN).abs() < 1e-12);
    let mut m = RecursionModel::new(1.5, 1.0, 1.0).unwrap();
    assert!((m.step().unwrap() - SUB_S2).abs() < 1e-12);
    let mut m = RecursionModel::new(2.0, 1.0, E).unwrap();
    let s2 = m.step().unwrap();
    assert!((s2 - CRIT_S2).abs() < 1e-12);
    assert!(s2 > E && s2 < E + 0.2);
}

#[test]
fn bisection_oracle_for_first_step() {
    for (g, s1) in [(1.5, 1.0), (2.0, E), (3.0, 1.0), (4.0, 2.0)] {
        let regime = Regime::of(g).unwrap();
        let oracle = bracket_root(|s| s - s1 - increment(regime, g, s), s1, s1 + 10.0, 1e-15).unwrap();
        let mut m = RecursionModel::new(g, 1.0, s1).unwrap();
        assert!((m.step().unwrap() - oracle).abs() < 1e-12 * oracle, "γ={g}");
    }
    // the root of S − 1 = S^{−3} is a different equation from the γ = 3 step
    let r = bracket_root(|s: f64| s - 1.0 - s.powi(-3), 1.0, 2.0, 1e-15).unwrap();
    assert!((r - INVERSE_CUBE_ROOT).abs() < 1e-12);
    assert!((r - GOLDEN).abs() > 0.2);
}

#[test]
fn sup_increments_decrease() {
    let mut m = RecursionModel::new(3.0, 1.0, 1.0).unwrap();
    for _ in 0..200 {
        m.step().unwrap();
    }
    let inc: Vec<f64> = m.a().windows(2).map(|w| w[1] - w[0]).collect();
    assert!(inc.iter().all(|&d| d > 0.0));
    assert!(inc.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn model_errors() {
    assert!(matches!(RecursionModel::new(1.0, 1.0, 1.0), Err(Error::GammaNotAboveOne(_))));
    assert!(RecursionModel::new(1.5, 0.0, 1.0).is_err());
    assert!(RecursionModel::new(1.5, 1.0, -1.0).is_err());
    assert!(RecursionModel::new(2.0, 1.0, 0.5).is_err());
    assert!(run(1.5, 1.0, 1.0, 1).is_err());
    assert!(matches!(run(1.5, 1.0, 1.0, 20_000_000), Err(Error::Capacity(_))));
    assert!(c_sensitivity(1.5, &[], 100).is_err());
}

#[test]
fn growth_exponents() {
    let s = run(1.5, 1.0, 1.0, 1_000_000).unwrap();
    assert!((s.fit_exponent - 0.4).abs() < 0.02, "{}", s.fit_exponent);
    let s = run(3.0, 1.0, 1.0, 1_000_000).unwrap();
    assert!((s.fit_exponent - 0.5).abs() < 0.02, "{}", s.fit_exponent);
    let s = run(2.0, 1.0, E, 1_000_000).unwrap();
    let q = |k: usize| s.values[k - 1].powi(3) / (k as f64 * (k as f64).ln());
    assert!((q(1_000_000) / q(100_000) - 1.0).abs() < 0.1);
    assert!((s.fit_logpower - 1.0 / 3.0).abs() < 0.05, "{}", s.fit_logpower);
}

#[test]
fn continuum_limit_sub() {
    // S ≈ ((γ+1) c k)^{1/(γ+1)} once the start is forgotten
    let (g, c, k) = (1.5, 2.0, 200_000);
    let s = run(g, c, 1.0, k).unwrap();
    let want = ((g + 1.0) * c * k as f64).powf(1.0 / (g + 1.0));
    assert!((s.values[k - 1] / want - 1.0).abs() < 1e-3);
}

#[test]
fn transform_limits() {
    let s = run(3.0, 1.0, 1.0, 1_000_000).unwrap();
    let t = transform_t(&s, 3.0).unwrap();
    assert!(t.increasing);
    // dT/dk = (γ+1) c/(γ−1) for T = S^{(γ+1)/(γ−1)}
    assert!((t.t_over_k / 2.0 - 1.0).abs() < 0.01, "{}", t.t_over_k);

    let s = run(1.5, 1.0, 1.0, 1_000_000).unwrap();
    let t = transform_t(&s, 1.5).unwrap();
    assert!(t.increasing);
    let (a, b) = (t_increment(&t, 100_000).unwrap(), t_increment(&t, 999_999).unwrap());
    assert!((b / a - 1.0).abs() < 0.02);
    assert!((b / 2.5 - 1.0).abs() < 0.01);

    let s = run(2.0, 1.0, E, 100_000).unwrap();
    assert!(transform_t(&s, 2.0).unwrap().increasing);
}

#[test]
fn constant_invariance() {
    let rep = c_sensitivity(3.0, &[0.5, 1.0, 2.0], 1_000_000).unwrap();
    assert!(rep.invariant, "{rep:?}");
    for e in &rep.entries {
        assert!((e.fit_exponent - 0.5).abs() < 0.02);
    }
    let rep = c_sensitivity(2.0, &[0.5, 2.0], 1_000_000).unwrap();
    for e in &rep.entries {
        assert!((e.fit_exponent - 1.0 / 3.0).abs() < 0.02, "{e:?}");
    }
    assert!(rep.entries[1].prefactor > rep.entries[0].prefactor);

    let direct = run(1.5, 1.0, 1.0, 10_000).unwrap();
    let rep = c_sensitivity(1.5, &[1.0], 10_000).unwrap();
    assert_eq!(rep.entries[0].fit_exponent, direct.fit_exponent);
}

#[test]
fn piecewise_constant_schedule_keeps_exponent() {
    let s = run_with_schedule(1.5, 1.0, 1_000_000, |k| if (k / 1000) % 2 == 0 { 0.5 } else { 2.0 }).unwrap();
    assert!((s.fit_exponent - 0.4).abs() < 0.02, "{}", s.fit_exponent);
    // at γ=2 the joint fit aliases with the schedule period; S³/(k ln k) does not
    let s = run_with_schedule(2.0, E, 1_000_000, |k| if (k / 1000) % 2 == 0 { 0.5 } else { 2.0 }).unwrap();
    let mean = run(2.0, 1.25, E, 1_000_000).unwrap();
    let q = |v: &[f64], k: usize| v[k - 1].powi(3) / (k as f64 * (k as f64).ln());
    assert!((q(&s.values, 1_000_000) / q(&s.values, 100_000) - 1.0).abs() < 0.1);
    assert!((q(&s.values, 1_000_000) / q(&mean.values, 1_000_000) - 1.0).abs() < 0.01);
}

#[test]
fn adjacent_terms_are_comparable() {
    let s = run(2.0, 1.0, E, 100_000).unwrap();
    let ratios: Vec<f64> = s.values.windows(2).map(|w| w[1] / w[0]).collect();
    assert!(ratios.iter().all(|&r| r > 1.0));
    assert!(ratios[ratios.len() - 1] - 1.0 < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn increment_law_and_monotonicity(g in 1.05f64..5.0, c in 0.1f64..5.0, s1 in 1.1f64..10.0) {
        let mut m = RecursionModel::new(g, c, s1).unwrap();
        let regime = m.regime;
        for _ in 0..200 {
            let prev = m.last();
            let s = m.step().unwrap();
            prop_assert!(s > prev);
            prop_assert!((s - prev - c * increment(regime, g, s)).abs() <= 1e-12 * s);
        }
    }
}
