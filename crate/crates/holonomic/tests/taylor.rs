mod support;

use approx::assert_relative_eq;
use holonomic::taylor::{
    compose_series, parse_expr, substitute, taylor_expand, Expr, MultiIndex, TaylorError, TruncatedSeries,
};
use proptest::prelude::*;
use rand::Rng;
use support::{fd_derivative, random_canonical, random_expr, rng};

#[test]
fn binomial_expansion() {
    let f = parse_expr("x1^2", 1).unwrap();
    let s = taylor_expand(&f, &[1.0], 2).unwrap();
    assert_eq!(s.coeffs(), &[1.0, 2.0, 1.0]);
}

#[test]
fn sine_series() {
    let f = parse_expr("sin(x1)", 1).unwrap();
    let s = taylor_expand(&f, &[0.0], 3).unwrap();
    let expect = [0.0, 1.0, 0.0, -1.0 / 6.0];
    for (a, b) in s.coeffs().iter().zip(expect) {
        assert_relative_eq!(*a, b, epsilon = 1e-16);
    }
}

#[test]
fn exp_product_against_finite_differences() {
    let f = parse_expr("exp(x1*x2)", 2).unwrap();
    let p = [0.3, -0.2];
    let h = 1e-3;
    let s = taylor_expand(&f, &p, 3).unwrap();
    let eval = |x: &[f64]| f.eval(x).unwrap();
    for alpha in s.layout().indices() {
        let fd = fd_derivative(&eval, &p, alpha, h);
        let got = s.derivative_entry(alpha);
        assert!((got - fd).abs() <= 10.0 * h * h, "{alpha:?}: {got} vs {fd}");
    }
}

#[test]
fn expansion_reports_offending_node() {
    let f = parse_expr("1 + sqrt(x1 - 2)", 1).unwrap();
    match taylor_expand(&f, &[1.0], 2) {
        Err(TaylorError::Eval { node, .. }) => assert_eq!(node, "sqrt(x1 - 2.0)"),
        other => panic!("unexpected {other:?}"),
    }
    let g = parse_expr("1/x1", 1).unwrap();
    assert!(taylor_expand(&g, &[1e-10], 1).is_err());
    assert!(taylor_expand(&g, &[1e-8], 1).is_ok());
}

#[test]
fn first_order_coefficients_converge_quadratically() {
    let mut rng = rng(11);
    let h = 1e-3;
    for _ in 0..60 {
        let n = rng.gen_range(1..=3);
        let f = random_expr(&mut rng, n, 5);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = taylor_expand(&f, &p, 1).unwrap();
        let eval = |x: &[f64]| f.eval(x).unwrap();
        for i in 0..n {
            let alpha = MultiIndex::unit(n, i);
            let fd = fd_derivative(&eval, &p, &alpha, h);
            let c = (s.derivative_entry(&alpha) - fd).abs() / (h * h);
            assert!(c <= 1e3, "{f}: C = {c}");
        }
    }
}

#[test]
fn composition_matches_literal_expression() {
    let mut rng = rng(5);
    for _ in 0..50 {
        let n = rng.gen_range(1..=3);
        let r = rng.gen_range(1..=3);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let coef = |rng: &mut rand_chacha::ChaCha8Rng| rng.gen_range(-2.0..2.0f64);
        // inner: random cubic in the inputs
        let mut inner = Expr::constant(coef(&mut rng));
        for i in 0..n {
            let xi = Expr::var(i);
            inner = inner
                + Expr::constant(coef(&mut rng)) * xi.clone()
                + Expr::constant(coef(&mut rng)) * xi.clone().powi(2)
                + Expr::constant(coef(&mut rng)) * xi.powi(3);
        }
        // outer: cubic in one variable
        let a = [coef(&mut rng), coef(&mut rng), coef(&mut rng), coef(&mut rng)];
        let outer_of = |u: Expr| {
            Expr::constant(a[0])
                + Expr::constant(a[1]) * u.clone()
                + Expr::constant(a[2]) * u.clone().powi(2)
                + Expr::constant(a[3]) * u.powi(3)
        };
        let inner_s = taylor_expand(&inner, &p, r).unwrap();
        let outer_s = taylor_expand(&outer_of(Expr::var(0)), &[inner_s.value()], r).unwrap();
        let composed = compose_series(&outer_s, &inner_s).unwrap();
        let direct = taylor_expand(&outer_of(inner.clone()), &p, r).unwrap();
        for (x, y) in composed.coeffs().iter().zip(direct.coeffs()) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()), "{x} vs {y}");
        }
    }
}

#[test]
fn substitution_recenters_polynomials() {
    // a polynomial expanded at one point and re-expanded at another
    let f = parse_expr("x1^3 - 2*x1*x2^2 + x2 - 4", 2).unwrap();
    let at = taylor_expand(&f, &[0.4, -0.7], 3).unwrap();
    let q = [1.3, 0.2];
    let vars: Vec<_> = (0..2).map(|i| TruncatedSeries::variable(&q, 3, i)).collect();
    let moved = substitute(&at, &vars).unwrap();
    let direct = taylor_expand(&f, &q, 3).unwrap();
    for (x, y) in moved.coeffs().iter().zip(direct.coeffs()) {
        assert_relative_eq!(*x, *y, epsilon = 1e-12);
    }
}

fn series_strategy() -> impl Strategy<Value = (TruncatedSeries, TruncatedSeries, TruncatedSeries)> {
    (1usize..=3, 0usize..=3).prop_flat_map(|(n, r)| {
        let len = holonomic::taylor::Layout::get(n, r).len();
        let bp = prop::collection::vec(-1.0..1.0f64, n);
        let c = || prop::collection::vec(-1e3..1e3f64, len);
        (bp, c(), c(), c()).prop_map(move |(bp, a, b, d)| {
            (
                TruncatedSeries::from_coeffs(&bp, r, &a).unwrap(),
                TruncatedSeries::from_coeffs(&bp, r, &b).unwrap(),
                TruncatedSeries::from_coeffs(&bp, r, &d).unwrap(),
            )
        })
    })
}

fn close(x: &TruncatedSeries, y: &TruncatedSeries, scale: f64) -> bool {
    x.coeffs()
        .iter()
        .zip(y.coeffs())
        .all(|(a, b)| (a - b).abs() <= 1e-12 * scale)
}

proptest! {
    #[test]
    fn ring_axioms((a, b, c) in series_strategy()) {
        let big = |s: &TruncatedSeries| s.coeffs().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = (big(&a) * big(&b) * big(&c)).max(1.0) * a.coeffs().len().pow(2) as f64;
        prop_assert!(close(&(&(&a * &b) * &c), &(&a * &(&b * &c)), scale));
        prop_assert!(close(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c)), scale));
        prop_assert!(close(&(&a * &b), &(&b * &a), scale));
        prop_assert_eq!(&(&a + &b) - &b, {
            let mut t = &a + &b;
            t.axpy(-1.0, &b);
            t
        });
    }

    #[test]
    fn print_parse_round_trip(seed in 0u64..5000) {
        let mut rng = rng(seed);
        let n = rng.gen_range(1..=4);
        let e = random_canonical(&mut rng, n, 6);
        let printed = e.to_string();
        let back = parse_expr(&printed, n).unwrap();
        prop_assert_eq!(&back, &e, "printed as {}", printed);
    }
}
