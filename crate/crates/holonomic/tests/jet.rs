mod support;

use approx::assert_relative_eq;
use holonomic::jet::{
    holonomy_residual, jet_distance, jet_of, par_max, sup_distance, taylor_section, CubeNbhd, FormalSection, Grid,
    JetError, JetSection, MapRep, Sampler,
};
use holonomic::taylor::{parse_expr, Expr, MultiIndex};
use rand::Rng;
use support::{classic_section, fd_derivative, random_cubic, random_expr, random_jet, rng};

fn map(src: &[&str], n: usize) -> MapRep {
    MapRep::from_exprs(n, src.iter().map(|s| parse_expr(s, n).unwrap()).collect()).unwrap()
}

#[test]
fn linear_map_jet() {
    let f = map(&["2*x1 - x2 + 1", "x1 + 3*x2"], 2);
    let j = jet_of(&f, &[0.4, -1.2], 1).unwrap();
    assert_relative_eq!(j.value()[0], 2.0 * 0.4 + 1.2 + 1.0, epsilon = 1e-15);
    assert_eq!(j.jacobian(), vec![vec![2.0, -1.0], vec![1.0, 3.0]]);
}

#[test]
fn hand_differentiated_jet() {
    let f = map(&["x1^2", "x1*x2"], 2);
    let j = jet_of(&f, &[1.0, 1.0], 1).unwrap();
    assert_eq!(j.value(), vec![1.0, 1.0]);
    assert_eq!(j.jacobian(), vec![vec![2.0, 0.0], vec![1.0, 1.0]]);
}

#[test]
fn random_cubic_jets_against_finite_differences() {
    let mut rng = rng(21);
    let h = 1e-3;
    for _ in 0..30 {
        let n = rng.gen_range(1..=3);
        let e = random_cubic(&mut rng, n);
        let f = MapRep::from_exprs(n, vec![e.clone()]).unwrap();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let j = jet_of(&f, &v, 2).unwrap();
        let eval = |x: &[f64]| e.eval(x).unwrap();
        for alpha in j.component(0).layout().indices() {
            let fd = fd_derivative(&eval, &v, alpha, h);
            assert!((j.entry(0, alpha) - fd).abs() <= 1e3 * h * h, "{e} at {v:?}, {alpha:?}");
        }
    }
}

#[test]
fn taylor_section_fixes_polynomials() {
    let p = map(&["1 - x1 + 2*x1*x2 + x2^2"], 2);
    let v = [0.3, 0.7];
    let s = jet_of(&p, &v, 2).unwrap();
    let back = taylor_section(&s);
    let far = [-1.5, 2.25];
    assert_relative_eq!(back.eval(&far).unwrap()[0], p.eval(&far).unwrap()[0], epsilon = 1e-12);

    let c = jet_of(&map(&["4.5"], 2), &v, 2).unwrap();
    let k = taylor_section(&c);
    assert_eq!(k.eval(&[9.0, -3.0]).unwrap(), vec![4.5]);
}

#[test]
fn taylor_section_round_trip() {
    let mut rng = rng(8);
    for _ in 0..100 {
        let n = rng.gen_range(1..=3);
        let q = rng.gen_range(1..=2);
        let r = rng.gen_range(0..=3);
        let s = random_jet(&mut rng, n, q, r);
        let back = jet_of(&taylor_section(&s), s.basepoint(), r).unwrap();
        assert!(jet_distance(&s, &back).unwrap() <= 1e-12);
    }
}

#[test]
fn jet_distance_examples() {
    let f = map(&["sin(x1)*x2"], 2);
    let j = jet_of(&f, &[0.2, 0.1], 2).unwrap();
    assert_eq!(jet_distance(&j, &j).unwrap(), 0.0);

    let g = map(&["sin(x1)*x2 - 0.75"], 2);
    let jg = jet_of(&g, &[0.2, 0.1], 2).unwrap();
    assert_relative_eq!(jet_distance(&j, &jg).unwrap(), 0.75, epsilon = 1e-15);

    let a = jet_of(&map(&["sin(x1)"], 1), &[0.0], 3).unwrap();
    let b = jet_of(&map(&["x1"], 1), &[0.0], 3).unwrap();
    assert_relative_eq!(jet_distance(&a, &b).unwrap(), 1.0, epsilon = 1e-15);
}

#[test]
fn jet_distance_rejects_mismatched_jets() {
    let a = jet_of(&map(&["x1"], 1), &[0.0], 2).unwrap();
    let b = jet_of(&map(&["x1"], 1), &[0.5], 2).unwrap();
    assert!(matches!(jet_distance(&a, &b), Err(JetError::BasepointMismatch { .. })));
    let c = jet_of(&map(&["x1"], 1), &[0.0], 1).unwrap();
    assert!(matches!(jet_distance(&a, &c), Err(JetError::Shape(_))));
}

#[test]
fn jet_distance_is_a_metric() {
    let mut rng = rng(3);
    for _ in 0..200 {
        let n = rng.gen_range(1..=3);
        let r = rng.gen_range(0..=3);
        let a = random_jet(&mut rng, n, 2, r);
        let move_to = |s: holonomic::jet::JetPoint| {
            let comps = s
                .components()
                .iter()
                .map(|c| holonomic::taylor::TruncatedSeries::from_coeffs(a.basepoint(), r, c.coeffs()).unwrap())
                .collect();
            holonomic::jet::JetPoint::new(comps).unwrap()
        };
        let b = move_to(random_jet(&mut rng, n, 2, r));
        let c = move_to(random_jet(&mut rng, n, 2, r));
        let d = |x, y| jet_distance(x, y).unwrap();
        assert_eq!(d(&a, &a), 0.0);
        assert!(d(&a, &b) > 0.0);
        assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-12);
        assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }
}

#[test]
fn sup_distance_examples() {
    let f = JetSection::holonomic(map(&["x1*x2", "cos(x1)"], 2), 2);
    let g = JetSection::holonomic(map(&["x1*x2", "cos(x1) + 0.3"], 2), 2);
    let grid = Grid::over_cube(1, 2, 0.05, 11);
    assert_eq!(sup_distance(&f, &f, &grid).unwrap().value, 0.0);
    assert_relative_eq!(sup_distance(&f, &g, &grid).unwrap().value, 0.3, epsilon = 1e-12);
}

#[test]
fn sup_distance_reports_first_offending_node() {
    let c = Expr::constant;
    let formal = FormalSection::new(2, 1, vec![vec![c(0.0), c(1.0), c(0.0)]])
        .unwrap()
        .with_domain(CubeNbhd::new(1, 2, 0.1));
    let f = JetSection::formal(formal);
    let grid = Grid::over_cube(1, 2, 0.2, 5);
    match sup_distance(&f, &f, &grid) {
        Err(JetError::OutsideDomain(p)) => assert_eq!(p, grid.point(0)),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn holonomic_residual_is_second_order() {
    let mut rng = rng(17);
    for _ in 0..10 {
        let e = random_expr(&mut rng, 2, 4);
        let f = JetSection::holonomic(MapRep::from_exprs(2, vec![e.clone()]).unwrap(), 2);
        let grid = Grid::over_cube(1, 2, 0.1, 5);
        let res = |h: f64| holonomy_residual(&f, &grid, h, &[0, 1]).unwrap().value / (h * h);
        let (a, b, c) = (res(1e-1), res(1e-2), res(1e-3));
        for (x, y) in [(a, b), (b, c)] {
            if x.max(y) > 1e-6 {
                assert!(y <= 4.0 * x + 1e-6 && x <= 4.0 * y + 1e-3, "{e}: {a} {b} {c}");
            }
        }
        let coarse = holonomy_residual(&f, &grid, 1e-2, &[0, 1]).unwrap().value;
        let fine = holonomy_residual(&f, &grid, 0.5e-2, &[0, 1]).unwrap().value;
        if coarse > 1e-9 {
            assert!((3.0..5.0).contains(&(coarse / fine)), "{e}: ratio {}", coarse / fine);
        }
    }
}

#[test]
fn classic_section_residual_is_one() {
    let f = classic_section();
    let grid = Grid::over_cube(1, 2, 0.05, 9);
    for h in [1e-1, 1e-2, 1e-3] {
        let w = holonomy_residual(&f, &grid, h, &[0, 1]).unwrap();
        assert_relative_eq!(w.value, 1.0, epsilon = 1e-12);
        assert_eq!(w.index, 0);
    }
}

#[test]
fn formal_entries_by_multi_index() {
    let f = FormalSection::from_entries(
        2,
        1,
        2,
        [(0, MultiIndex::new(&[1, 1]), parse_expr("x1 + x2", 2).unwrap())],
    )
    .unwrap();
    let j = f.jet(&[0.5, 0.25]).unwrap();
    assert_eq!(j.entry(0, &MultiIndex::new(&[1, 1])), 0.75);
    assert_eq!(j.entry(0, &MultiIndex::new(&[2, 0])), 0.0);
    assert!(FormalSection::from_entries(2, 1, 1, [(0, MultiIndex::new(&[2, 0]), Expr::constant(1.0))]).is_err());
}

#[test]
fn cube_neighbourhood_geometry() {
    let u = CubeNbhd::new(2, 3, 0.1);
    assert!(u.contains(&[0.5, 0.5, 0.05]));
    assert!(!u.contains(&[0.5, 0.5, 0.1]));
    assert!(u.contains(&[1.05, -0.05, 0.0]));
    assert!(!u.contains(&[1.08, -0.08, 0.0]));
    assert!(u.in_top_cap(&[0.5, 0.5, 0.06]));
    assert!(u.in_bottom_cap(&[0.5, 0.5, -0.06]));
    assert!(!u.in_top_cap(&[0.5, 0.5, 0.04]));
    assert_relative_eq!(u.boundary_distance(&[0.3, 0.9, 0.0]), 0.1, epsilon = 1e-15);

    // fibers of the last-but-one coordinate: y = x1, t = x2, no free directions
    assert_relative_eq!(
        u.fiber_distance(&[0.3, 0.52, 0.0], 1, &[0.3], 0.5),
        0.02,
        epsilon = 1e-12
    );
    assert!(!u.in_fiber_boundary_nbhd(&[0.3, 0.5, 0.0], 1, &[0.3], 0.5));
    // l = 2: t = x1, the fiber is the segment in x2
    assert!(u.in_fiber_nbhd(&[0.45, 0.7, 0.0], 2, &[], 0.4));
    assert!(u.in_fiber_boundary_nbhd(&[0.4, 0.97, 0.0], 2, &[], 0.4));
    assert!(!u.in_fiber_boundary_nbhd(&[0.4, 0.5, 0.0], 2, &[], 0.4));
}

#[test]
fn grid_layout_and_refinement() {
    let g = Grid::over_cube(1, 2, 0.1, 5);
    assert_eq!(g.len(), 25);
    assert_eq!(g.point(0), vec![0.0, -0.1]);
    assert_eq!(g.point(24), vec![1.0, 0.1]);
    assert_eq!(g.point(5), vec![0.25, -0.1]);
    let fine = g.refined();
    assert_eq!(fine.len(), 81);
    assert_relative_eq!(fine.min_step(), 0.025, epsilon = 1e-15);
    let flat = Grid::over_cube(1, 2, 0.0, 5);
    assert_eq!(flat.len(), 5);
}

#[test]
fn parallel_max_is_thread_independent() {
    let vals: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 101) as f64).collect();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| par_max(vals.len(), |i| Ok::<_, ()>(vals[i])).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(4));
    assert_eq!(a.value, 100.0);
    assert_eq!(vals[a.index], 100.0);
    assert!(vals[..a.index].iter().all(|&v| v < 100.0));

    let errs = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| par_max(100, |i| if i % 30 == 29 { Err(i) } else { Ok(1.0) }))
    };
    assert_eq!(errs(1), Err(29));
    assert_eq!(errs(3), Err(29));
    assert!(par_max(3, |i| Ok::<_, ()>(if i == 1 { f64::NAN } else { 1.0 }))
        .unwrap()
        .value
        .is_nan());
}
