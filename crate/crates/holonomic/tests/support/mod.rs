#![allow(dead_code)]

use holonomic::taylor::{Builtin, Expr, MultiIndex};
use rand::Rng;

/// Random smooth expression in `n` variables. Denominators and radicands are
/// kept away from zero by construction.
pub fn random_expr<R: Rng>(rng: &mut R, n: usize, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.7) {
            Expr::var(rng.gen_range(0..n))
        } else {
            Expr::constant((rng.gen_range(-2.0..2.0f64) * 8.0).round() / 8.0)
        };
    }
    let sub = |rng: &mut R| random_expr(rng, n, depth - 1);
    match rng.gen_range(0..10) {
        0 | 1 => sub(rng) + sub(rng),
        2 => sub(rng) - sub(rng),
        3 | 4 => sub(rng) * sub(rng),
        5 => sub(rng) / (Expr::constant(1.5) + Expr::call(Builtin::Cos, sub(rng))),
        6 => Expr::call(Builtin::Sin, sub(rng)),
        7 => Expr::call(Builtin::Cos, sub(rng)),
        8 => Expr::call(Builtin::Exp, Expr::call(Builtin::Sin, sub(rng))),
        _ => {
            if rng.gen_bool(0.5) {
                Expr::call(Builtin::Sqrt, Expr::constant(1.0) + sub(rng).powi(2))
            } else {
                sub(rng).powi(rng.gen_range(2..=3))
            }
        }
    }
}

/// Random expression tree in the canonical form produced by the parser
/// (negated literals are folded into constants).
pub fn random_canonical<R: Rng>(rng: &mut R, n: usize, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..3) {
            0 => Expr::constant(rng.gen_range(-100.0..100.0f64)),
            1 => Expr::constant(rng.gen_range(0..20) as f64),
            _ => Expr::var(rng.gen_range(0..n)),
        };
    }
    let sub = |rng: &mut R| random_canonical(rng, n, depth - 1);
    match rng.gen_range(0..9) {
        0 => sub(rng) + sub(rng),
        1 => sub(rng) - sub(rng),
        2 => sub(rng) * sub(rng),
        3 => sub(rng) / sub(rng),
        4 => -sub(rng),
        5 => sub(rng).powi(rng.gen_range(-3..5)),
        6 => Expr::call(Builtin::Sin, sub(rng)),
        7 => Expr::call(Builtin::Exp, sub(rng)),
        _ => Expr::call(Builtin::Sqrt, sub(rng)),
    }
}

/// Central finite-difference estimate of ∂^α f at `x` using tensor-product
/// stencils of orders up to 3.
pub fn fd_derivative(f: &dyn Fn(&[f64]) -> f64, x: &[f64], alpha: &MultiIndex, h: f64) -> f64 {
    fn rec(f: &dyn Fn(&[f64]) -> f64, x: &mut Vec<f64>, alpha: &[usize], axis: usize, h: f64) -> f64 {
        if axis == alpha.len() {
            return f(x);
        }
        let stencil: &[(f64, f64)] = match alpha[axis] {
            0 => &[(0.0, 1.0)],
            1 => &[(1.0, 0.5), (-1.0, -0.5)],
            2 => &[(1.0, 1.0), (0.0, -2.0), (-1.0, 1.0)],
            3 => &[(2.0, 0.5), (1.0, -1.0), (-1.0, 1.0), (-2.0, -0.5)],
            e => panic!("stencil order {e} not supported"),
        };
        let scale = h.powi(alpha[axis] as i32);
        let orig = x[axis];
        let mut acc = 0.0;
        for &(off, w) in stencil {
            x[axis] = orig + off * h;
            acc += w * rec(f, x, alpha, axis + 1, h);
        }
        x[axis] = orig;
        acc / scale
    }
    let exps: Vec<usize> = alpha.exponents().collect();
    rec(f, &mut x.to_vec(), &exps, 0, h)
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Random polynomial of degree ≤ 3 in `n` variables with coefficients in [−2, 2].
pub fn random_cubic<R: Rng>(rng: &mut R, n: usize) -> Expr {
    let layout = holonomic::taylor::Layout::get(n, 3);
    let mut e = Expr::constant(rng.gen_range(-2.0..2.0));
    for alpha in &layout.indices()[1..] {
        let mut term = Expr::constant(rng.gen_range(-2.0..2.0));
        for (i, p) in alpha.exponents().enumerate() {
            if p > 0 {
                term = term * Expr::var(i).powi(p as i32);
            }
        }
        e = e + term;
    }
    e
}

/// Random jet with coefficients in [−1, 1] over a random basepoint in [−1, 1]^n.
pub fn random_jet<R: Rng>(rng: &mut R, n: usize, q: usize, r: usize) -> holonomic::jet::JetPoint {
    use holonomic::taylor::TruncatedSeries;
    let bp: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let len = holonomic::taylor::Layout::get(n, r).len();
    let comps = (0..q)
        .map(|_| {
            let c: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
            TruncatedSeries::from_coeffs(&bp, r, &c).unwrap()
        })
        .collect();
    holonomic::jet::JetPoint::new(comps).unwrap()
}

/// The formal section over R^2 with value 0 and first derivatives (1, 0).
pub fn classic_section() -> holonomic::jet::JetSection {
    use holonomic::jet::{FormalSection, JetSection};
    let c = Expr::constant;
    JetSection::formal(FormalSection::new(2, 1, vec![vec![c(0.0), c(1.0), c(0.0)]]).unwrap())
}
