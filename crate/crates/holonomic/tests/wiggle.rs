mod support;

use std::sync::Arc;

use approx::assert_relative_eq;
use holonomic::jet::{
    holonomy_residual, jet_distance, Diffeo, FormalSection, Grid, Inverse, JetSection, MapRep, Sampler,
};
use holonomic::taylor::{Expr, Layout, UnivariateFn};
use holonomic::wiggle::{make_cutoff, make_phi, make_shear, pushforward, ShearDiffeo};
use rand::Rng;
use support::{fd_derivative, random_cubic, random_expr, rng};

#[test]
fn cutoff_values() {
    for n in [1, 4, 16, 64] {
        let th = make_cutoff(n, 3).unwrap();
        assert_eq!(th.eval(0.5), 1.0);
        assert_eq!(th.eval(-0.01), 0.0);
        assert_eq!(th.eval(1.01), 0.0);
        let nf = n as f64;
        assert_eq!(th.eval(1.0 / (4.0 * nf)), 1.0);
        assert_eq!(th.eval(1.0 - 1.0 / (4.0 * nf)), 1.0);
        assert_eq!(th.eval(1.0 / (8.0 * nf)), 0.0);
        assert_eq!(th.eval(0.0), 0.0);
        assert_eq!(th.eval(1.0), 0.0);
    }
    assert!(make_cutoff(4, 2).is_err());
    assert!(make_cutoff(0, 3).is_err());
}

#[test]
fn cutoff_ramp_is_monotone() {
    let n = 8;
    let th = make_cutoff(n, 3).unwrap();
    let mut rng = rng(1);
    let end = 1.0 / (4.0 * n as f64);
    for _ in 0..1000 {
        let a = rng.gen_range(0.0..end);
        let b = rng.gen_range(0.0..end);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        assert!(th.eval(lo) <= th.eval(hi));
        assert!((0.0..=1.0).contains(&th.eval(a)));
    }
}

#[test]
fn cutoff_derivatives_are_continuous() {
    let th = make_cutoff(2, 4).unwrap();
    for joint in [1.0 / 16.0, 1.0 / 8.0, 7.0 / 8.0, 15.0 / 16.0] {
        let a = th.taylor_coeffs(joint - 1e-7, 4);
        let b = th.taylor_coeffs(joint + 1e-7, 4);
        for j in 0..=3 {
            assert!(
                (a[j] - b[j]).abs() < 1e-3 * 16f64.powi(j as i32),
                "order {j} at {joint}"
            );
        }
    }
}

#[test]
fn phi_single_level() {
    for n in [1, 3, 4, 7] {
        let phi = make_phi(n, 1, 1, 3, false).unwrap();
        assert_relative_eq!(
            phi.eval(&[0.5]).unwrap(),
            (n as f64 * std::f64::consts::PI).cos(),
            epsilon = 1e-12
        );
    }
    assert!(make_phi(4, 1, 2, 3, false).is_err());
    assert!(make_phi(4, 2, 0, 3, false).is_err());
}

#[test]
fn phi_bounded_and_vanishing_near_boundary() {
    let mut rng = rng(2);
    for (k, l, rel) in [(1, 1, false), (2, 1, true), (2, 2, true), (3, 2, true)] {
        let n = 6;
        let phi = make_phi(n, k, l, 3, rel).unwrap();
        let margin = 1.0 / (8.0 * n as f64);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.1..1.1)).collect();
            let v = phi.eval(&x).unwrap();
            assert!(v.abs() <= 1.0);
            let near = x.iter().any(|&c| c < margin || c > 1.0 - margin);
            if near {
                assert_eq!(v, 0.0, "k={k} l={l} at {x:?}");
            }
        }
    }
}

#[test]
fn shear_basics() {
    let zero = make_shear(Expr::constant(0.0), 0.2, 2, 1).unwrap();
    let id = ShearDiffeo::identity(3, 2);
    let mut rng = rng(4);
    let phi = make_phi(4, 1, 1, 3, false).unwrap();
    let delta1 = 0.075;
    let h = make_shear(phi.clone(), delta1, 2, 1).unwrap();
    let mut max_disp: f64 = 0.0;
    let mut max_formula: f64 = 0.0;
    for _ in 0..10_000 {
        let x = [rng.gen_range(-0.2..1.2), rng.gen_range(-1.0..1.0)];
        assert_eq!(zero.apply(&x), x.to_vec());
        let y = h.apply(&x);
        assert_eq!(y[0], x[0]);
        let d = ((y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2)).sqrt();
        max_disp = max_disp.max(d);
        max_formula = max_formula.max(delta1 * phi.eval(&x).unwrap().abs());
        let back = h.apply_inverse(&y);
        assert!((back[1] - x[1]).abs() <= 1e-14);
        let z = [x[0], x[1], 0.3];
        assert_eq!(id.apply(&z), z.to_vec());
    }
    assert!((max_disp - max_formula).abs() <= 1e-12);
    assert!(max_disp <= h.displacement_bound());
    assert!(make_shear(Expr::var(1), 0.1, 2, 1).is_err());
    assert!(make_shear(Expr::var(0), 0.0, 2, 1).is_err());
}

fn random_shear<R: Rng>(rng: &mut R, n: usize, k: usize) -> ShearDiffeo {
    let phi = random_expr(rng, k, 3);
    make_shear(phi, rng.gen_range(0.05..0.5), n, k).unwrap()
}

#[test]
fn pushforward_by_identity() {
    let f = JetSection::holonomic(MapRep::from_exprs(2, vec![random_cubic(&mut rng(9), 2)]).unwrap(), 2);
    let g = pushforward(Arc::new(ShearDiffeo::identity(2, 1)), &f).unwrap();
    let grid = Grid::over_cube(1, 2, 0.3, 7);
    for i in 0..grid.len() {
        let p = grid.point(i);
        assert_eq!(jet_distance(&f.jet(&p).unwrap(), &g.jet(&p).unwrap()).unwrap(), 0.0);
    }
}

#[test]
fn first_order_pushforward_against_finite_differences() {
    let mut rng = rng(12);
    let h = 1e-3;
    for _ in 0..20 {
        let e = random_cubic(&mut rng, 2);
        let shear = random_shear(&mut rng, 2, 1);
        let f = JetSection::holonomic(MapRep::from_exprs(2, vec![e.clone()]).unwrap(), 1);
        let pushed = pushforward(Arc::new(shear.clone()), &f).unwrap();
        let v = [rng.gen_range(0.0..1.0), rng.gen_range(-0.2..0.2)];
        let composed = |x: &[f64]| e.eval(&shear.apply_inverse(x)).unwrap();
        let j = pushed.jet(&v).unwrap();
        for alpha in Layout::get(2, 1).indices() {
            let fd = fd_derivative(&composed, &v, alpha, h);
            let scale = 1.0 + j.entry(0, alpha).abs();
            assert!((j.entry(0, alpha) - fd).abs() <= 1e2 * h * h * scale, "{alpha:?}");
        }
    }
}

fn random_formal<R: Rng>(rng: &mut R, n: usize, r: usize) -> JetSection {
    let len = Layout::get(n, r).len();
    let entries = (0..2)
        .map(|_| (0..len).map(|_| random_expr(rng, n, 2)).collect())
        .collect();
    JetSection::formal(FormalSection::new(n, r, entries).unwrap())
}

#[test]
fn inverse_pushforward_undoes_pushforward() {
    let mut rng = rng(13);
    for _ in 0..100 {
        let n = rng.gen_range(2..=3);
        let k = rng.gen_range(1..n);
        let r = rng.gen_range(1..=2);
        let f = random_formal(&mut rng, n, r);
        let h: Arc<dyn Diffeo> = Arc::new(random_shear(&mut rng, n, k));
        let there = pushforward(h.clone(), &f).unwrap();
        let back = pushforward(Arc::new(Inverse(h)), &there).unwrap();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..1.5)).collect();
        let d = jet_distance(&f.jet(&v).unwrap(), &back.jet(&v).unwrap()).unwrap();
        assert!(d <= 1e-10, "{d}");
    }
}

#[test]
fn pushforward_is_functorial() {
    let mut rng = rng(14);
    for _ in 0..100 {
        let n = 3;
        let k = 2;
        let r = rng.gen_range(1..=2);
        let f = random_formal(&mut rng, n, r);
        let h1 = random_shear(&mut rng, n, k);
        let h2 = random_shear(&mut rng, n, k);
        let both = pushforward(Arc::new(h2.compose(&h1)), &f).unwrap();
        let stepwise = pushforward(Arc::new(h2), &pushforward(Arc::new(h1), &f).unwrap()).unwrap();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..1.5)).collect();
        let d = jet_distance(&both.jet(&v).unwrap(), &stepwise.jet(&v).unwrap()).unwrap();
        assert!(d <= 1e-10, "{d}");
    }
}

#[test]
fn pushforward_preserves_holonomy() {
    let mut rng = rng(15);
    let e = random_expr(&mut rng, 2, 3);
    let f = JetSection::holonomic(MapRep::from_exprs(2, vec![e]).unwrap(), 2);
    let shear = make_shear(make_phi(2, 1, 1, 3, false).unwrap(), 0.1, 2, 1).unwrap();
    let g = pushforward(Arc::new(shear), &f).unwrap();
    let grid = Grid::over_cube(1, 2, 0.1, 9);
    for s in [&f, &g] {
        let a = holonomy_residual(s, &grid, 1e-2, &[0, 1]).unwrap().value;
        let b = holonomy_residual(s, &grid, 0.5e-2, &[0, 1]).unwrap().value;
        assert!((3.0..5.0).contains(&(a / b)), "{a} {b}");
    }
}
