use conelab_core::recursion::RecursionModel;
use conelab_core::solver::kernel::KernelOperator;
use conelab_core::solver::picard::solve_picard_with;
use conelab_core::solver::{extract_ak, solve_fd, FdOptions, PicardOptions, PolarGrid, SolutionField};
use conelab_core::{Error, GreenEvaluator, ReferenceLadder, SectorDomain};

fn grid(gamma: f64, annuli: usize, per: usize, nt: usize) -> PolarGrid {
    PolarGrid::with_depth(SectorDomain::new(gamma).unwrap(), annuli, per, nt).unwrap()
}

fn fd(g: &PolarGrid) -> SolutionField {
    let out = solve_fd(g, &FdOptions::default()).unwrap();
    assert!(out.bracket_ok(), "{:?}", out.stages);
    out.field
}

fn ladder_of(g: &PolarGrid) -> ReferenceLadder {
    ReferenceLadder::new(g.domain, g.resolvable_depth()).unwrap()
}

#[test]
fn grid_construction() {
    let d = SectorDomain::new(2.0).unwrap();
    assert!(matches!(PolarGrid::new(d, 12, 16, 1.0 / 256.0), Err(Error::Capacity(_))));
    assert!(matches!(PolarGrid::new(d, 3, 16, 0.5), Err(Error::Domain(_))));
    assert!(PolarGrid::new(d, 64, 16, 1.5).is_err());
    let g = PolarGrid::with_depth(d, 4, 16, 32).unwrap();
    assert_eq!(g.n_r, 64);
    assert!((g.nodes_per_annulus() - 16.0).abs() < 1e-9);
    assert_eq!(g.radius(0), 1.0);
    assert_eq!(g.radius(g.n_r), g.r_min);
    assert!((g.radius(16) - 1.0 / 16.0).abs() < 1e-15);
    assert_eq!(g.angle(g.n_theta), d.half_angle);
    assert!(g.angle(16).abs() < 1e-15);
    assert_eq!(g.index(1, 0), g.n_theta + 1);
    assert_eq!(g.len(), 65 * 33);
    // p_k = 16^{1−k}/2 must sit well above r_min = 16^{-4}
    assert_eq!(g.resolvable_depth(), 2);
    assert!(matches!(g.check_depth(3), Err(Error::Capacity(_))));
    let f = g.refined().unwrap();
    assert_eq!((f.n_r, f.n_theta), (128, 64));
    assert_eq!(f.r_min, g.r_min);
}

#[test]
fn kernel_table_matches_green_function() {
    let g = grid(1.5, 2, 16, 16);
    let op = KernelOperator::new(&g).unwrap();
    let ev = GreenEvaluator::new(g.domain);
    for (a, b) in [((3, 4), (9, 11)), ((1, 1), (30, 15)), ((12, 8), (13, 8)), ((20, 2), (5, 14))] {
        let want = ev.green(g.node(a.0, a.1), g.node(b.0, b.1)).unwrap();
        let got = op.table_value(a.0, a.1, b.0, b.1);
        assert!((got - want).abs() < 1e-10 * want.max(1.0), "{a:?} {b:?}: {got} vs {want}");
    }
}

#[test]
fn fd_bracket_and_residual() {
    let g = grid(1.5, 4, 32, 32);
    let out = solve_fd(&g, &FdOptions::default()).unwrap();
    assert!(out.bracket_ok());
    for s in &out.stages {
        assert!(s.upper_monotone && s.lower_monotone && s.ordered, "{s:?}");
    }
    assert_eq!(out.stages.last().unwrap().eps, 0.0);
    let f = &out.field;
    for i in 0..=g.n_r {
        for j in 0..=g.n_theta {
            if g.is_boundary(i, j) {
                assert_eq!(f.at(i, j), 0.0);
            } else {
                assert!(f.at(i, j) > 0.0);
                assert!(out.lower[g.index(i, j)] <= f.at(i, j) * (1.0 + 1e-9));
            }
        }
    }
    assert!(f.relative_residual(2) < 1e-6, "{}", f.relative_residual(2));
}

#[test]
fn fd_solution_is_symmetric() {
    let g = grid(2.0, 3, 16, 32);
    let f = fd(&g);
    for i in 1..g.n_r {
        for j in 1..g.n_theta {
            let (a, b) = (f.at(i, j), f.at(i, g.n_theta - j));
            assert!((a - b).abs() < 1e-8 * a, "{i} {j}");
        }
    }
}

#[test]
fn fd_options_rejected() {
    let g = grid(1.5, 2, 16, 16);
    let bad = [
        FdOptions { source_scale: 0.0, ..Default::default() },
        FdOptions { eps_schedule: vec![1e-3, 1e-2], ..Default::default() },
        FdOptions { eps_schedule: vec![], floor_free_stage: false, ..Default::default() },
        FdOptions { outer_data: Some(vec![1.0; 3]), ..Default::default() },
        FdOptions { outer_data: Some(vec![-1.0; 17]), ..Default::default() },
    ];
    for o in bad {
        assert!(matches!(solve_fd(&g, &o), Err(Error::Domain(_))), "{o:?}");
    }
}

#[test]
fn picard_agrees_with_fd() {
    let g = grid(1.5, 6, 32, 64);
    let f = fd(&g);
    let op = KernelOperator::new(&g).unwrap();
    let p = solve_picard_with(&op, Some(&f), &PicardOptions::default()).unwrap();
    assert!(p.fixed_point_residual < 1e-3, "{}", p.fixed_point_residual);
    let lad = ladder_of(&g);
    let (a, b) = (extract_ak(&f, &lad).unwrap(), extract_ak(&p.field, &lad).unwrap());
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x / y - 1.0).abs() < 0.03, "{:?} {:?}", a.values, b.values);
    }
    let cold = solve_picard_with(&op, None, &PicardOptions::default()).unwrap();
    let c = extract_ak(&cold.field, &lad).unwrap();
    for (x, y) in c.values.iter().zip(&b.values) {
        assert!((x / y - 1.0).abs() < 1e-6);
    }
}

#[test]
fn refinement_changes_little() {
    let g = grid(1.5, 4, 32, 32);
    let f = g.refined().unwrap();
    let (u, v) = (fd(&g), fd(&f));
    let lad = ladder_of(&g);
    for k in 1..=2 {
        let p = lad.point(k);
        let (a, b) = (u.interpolate(p).unwrap(), v.interpolate(p).unwrap());
        assert!((a / b - 1.0).abs() < 0.01, "k={k}: {a} {b}");
    }
}

#[test]
fn larger_source_gives_larger_solution() {
    let g = grid(2.0, 3, 16, 32);
    let u = fd(&g);
    let v = solve_fd(&g, &FdOptions { source_scale: 2.0, ..Default::default() }).unwrap().field;
    for i in 1..g.n_r {
        for j in 1..g.n_theta {
            assert!(v.at(i, j) > u.at(i, j));
        }
    }
    // V = 2^{1/(1+γ)} U exactly when the data vanish
    let s = 2f64.powf(1.0 / 3.0);
    let (i, j) = (g.n_r / 2, g.n_theta / 2);
    assert!((v.at(i, j) / u.at(i, j) - s).abs() < 1e-6);
}

#[test]
fn rescaled_solution_dominates() {
    // 16^φ U(x/16) is a supersolution with positive data on the unit arc
    let g = grid(2.0, 6, 16, 32);
    let u = fd(&g);
    let scale = 16f64.powf(g.domain.phi);
    for i in 1..(g.n_r - 48) {
        for j in 1..g.n_theta {
            let p = g.node(i, j);
            let q = g.node(i + 16, j);
            assert!(scale * u.interpolate(q).unwrap() >= u.interpolate(p).unwrap() * (1.0 - 1e-6), "{i} {j}");
        }
    }
}

#[test]
fn growth_sequence_increases() {
    for gamma in [1.5, 2.0, 3.0] {
        let g = grid(gamma, 6, 32, 32);
        let a = extract_ak(&fd(&g), &ladder_of(&g)).unwrap();
        assert_eq!(a.values.len(), 4);
        assert!(a.values.windows(2).all(|w| w[1] > w[0]), "γ={gamma}: {:?}", a.values);
        assert!(a.values[0] > 0.1 && a.values[0] < 10.0);
    }
}

#[test]
fn gamma_three_tracks_recursion() {
    let g = grid(3.0, 8, 32, 64);
    let a = extract_ak(&fd(&g), &ladder_of(&g)).unwrap().values;
    let worst = |c: f64| {
        let mut m = RecursionModel::new(3.0, c, a[0]).unwrap();
        let mut w = 0.0f64;
        for &x in &a[1..] {
            w = w.max((x / m.step().unwrap()).ln().abs());
        }
        w
    };
    let best = (0..200).map(|i| worst(0.05 * 1.03f64.powi(i))).fold(f64::INFINITY, f64::min);
    assert!(best < 2f64.ln(), "{best}");
}

#[test]
fn extract_beyond_depth_is_capacity() {
    let g = grid(1.5, 3, 16, 16);
    let f = fd(&g);
    let lad = ReferenceLadder::new(g.domain, 5).unwrap();
    assert!(matches!(extract_ak(&f, &lad), Err(Error::Capacity(_))));
    assert!(matches!(f.interpolate(lad.point(5)), Err(Error::Capacity(_))));
}

#[test]
fn csv_round_trip() {
    let g = grid(1.5, 2, 16, 16);
    let f = fd(&g);
    let mut buf = Vec::new();
    f.write_csv(&mut buf, &["config_hash abc".into()]).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("# config_hash abc\nr,theta,u\n"));
    let back = SolutionField::read_csv(&buf[..], &f.meta()).unwrap();
    for (a, b) in f.values.iter().zip(&back.values) {
        assert_eq!(a, b);
    }
    assert!(SolutionField::read_csv(&b"r,theta,u\n1,0,0\n"[..], &f.meta()).is_err());
}

#[test]
fn flat_half_disk_smoke() {
    let g = grid(1.0, 3, 16, 32);
    let f = fd(&g);
    let mid = f.at(g.n_r / 2, g.n_theta / 2);
    assert!(mid > 0.0 && mid.is_finite());
    // U grows no faster than linearly away from the flat edge
    let i = g.n_r / 3;
    let r = g.radius(i);
    for j in 1..4 {
        let d = r * (g.angle(j) + g.domain.half_angle).sin();
        assert!(f.at(i, j) / d < 20.0);
    }
}
