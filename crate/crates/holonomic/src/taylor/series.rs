use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use smallvec::SmallVec;

use super::multiindex::{Layout, MultiIndex};
use super::TaylorError;

/// Guard distance from a singularity for reciprocal and square root.
pub const SINGULARITY_GUARD: f64 = 1e-9;

pub(crate) type Coeffs = SmallVec<[f64; 10]>;
pub(crate) type Point = SmallVec<[f64; 4]>;

/// Truncated Taylor expansion at `basepoint`; `coeffs[i]` is
/// ∂^α f / α! for the i-th multi-index of the layout.
#[derive(Clone)]
pub struct TruncatedSeries {
    layout: &'static Layout,
    basepoint: Point,
    coeffs: Coeffs,
}

impl TruncatedSeries {
    pub fn zero(basepoint: &[f64], r: usize) -> Self {
        let layout = Layout::get(basepoint.len(), r);
        TruncatedSeries {
            layout,
            basepoint: basepoint.into(),
            coeffs: smallvec::smallvec![0.0; layout.len()],
        }
    }

    pub fn constant(basepoint: &[f64], r: usize, c: f64) -> Self {
        let mut s = Self::zero(basepoint, r);
        s.coeffs[0] = c;
        s
    }

    /// The coordinate function `x_i` expanded at `basepoint`.
    pub fn variable(basepoint: &[f64], r: usize, i: usize) -> Self {
        let mut s = Self::constant(basepoint, r, basepoint[i]);
        if r >= 1 {
            s.coeffs[s.layout.unit_rank(i)] = 1.0;
        }
        s
    }

    /// Takes ownership of a dense coefficient vector in graded-lex order.
    pub fn from_coeffs(basepoint: &[f64], r: usize, coeffs: &[f64]) -> Result<Self, TaylorError> {
        let layout = Layout::get(basepoint.len(), r);
        if coeffs.len() != layout.len() {
            return Err(TaylorError::Shape(format!(
                "expected {} coefficients for n={}, r={}, got {}",
                layout.len(),
                basepoint.len(),
                r,
                coeffs.len()
            )));
        }
        Ok(TruncatedSeries {
            layout,
            basepoint: basepoint.into(),
            coeffs: coeffs.into(),
        })
    }

    pub fn layout(&self) -> &'static Layout {
        self.layout
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn r(&self) -> usize {
        self.layout.r()
    }

    pub fn basepoint(&self) -> &[f64] {
        &self.basepoint
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.layout.rank(alpha).map_or(0.0, |k| self.coeffs[k])
    }

    /// Raw partial derivative ∂^α f at the basepoint.
    pub fn derivative_entry(&self, alpha: &MultiIndex) -> f64 {
        self.layout
            .rank(alpha)
            .map_or(0.0, |k| self.coeffs[k] * self.layout.factorial(k))
    }

    /// Raw derivative entries in layout order.
    pub fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * self.layout.factorial(k))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.layout.same(other.layout) && self.basepoint == other.basepoint
    }

    fn check(&self, other: &Self) {
        assert!(
            self.same_shape(other),
            "series shape mismatch: {:?} at {:?} vs {:?} at {:?}",
            self.layout,
            self.basepoint,
            other.layout,
            other.basepoint
        );
    }

    fn like(&self) -> Self {
        TruncatedSeries {
            layout: self.layout,
            basepoint: self.basepoint.clone(),
            coeffs: smallvec::smallvec![0.0; self.layout.len()],
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|x| *x *= c);
        out
    }

    pub fn add_scalar(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// Same series with a zero constant term.
    pub fn nilpotent_part(&self) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = 0.0;
        out
    }

    /// `self + c * other`, in place.
    pub fn axpy(&mut self, c: f64, other: &Self) {
        self.check(other);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
    }

    pub fn mul_series(&self, other: &Self) -> Self {
        self.check(other);
        let mut out = self.like();
        let (a, b) = (&self.coeffs, &other.coeffs);
        for &(i, j, k) in self.layout.products() {
            out.coeffs[k as usize] += a[i as usize] * b[j as usize];
        }
        out
    }

    /// Evaluates `Σ c_j u^j` where `u = self − self.value()`, i.e. the
    /// composition of a univariate expansion with coefficients `c` (taken at
    /// `self.value()`) with this series.
    pub fn compose_univariate(&self, c: &[f64]) -> Self {
        let r = self.r();
        let u = self.nilpotent_part();
        let top = r.min(c.len().saturating_sub(1));
        let mut acc = self.like();
        acc.coeffs[0] = c.get(top).copied().unwrap_or(0.0);
        for j in (0..top).rev() {
            acc = acc.mul_series(&u);
            acc.coeffs[0] += c[j];
        }
        acc
    }

    fn newton_iterations(&self) -> usize {
        let mut it = 0;
        while (1usize << it) < self.r() + 1 {
            it += 1;
        }
        it
    }

    pub fn recip(&self) -> Result<Self, TaylorError> {
        let a0 = self.value();
        if a0.abs() < SINGULARITY_GUARD || !a0.is_finite() {
            return Err(TaylorError::Domain(format!(
                "reciprocal of a series with constant term {a0}"
            )));
        }
        let mut y = self.like();
        y.coeffs[0] = 1.0 / a0;
        for _ in 0..self.newton_iterations() {
            // y <- y (2 - a y)
            let ay = self.mul_series(&y);
            let corr = ay.scale(-1.0).add_scalar(2.0);
            y = y.mul_series(&corr);
        }
        Ok(y)
    }

    pub fn div_series(&self, other: &Self) -> Result<Self, TaylorError> {
        Ok(self.mul_series(&other.recip()?))
    }

    pub fn sqrt(&self) -> Result<Self, TaylorError> {
        let a0 = self.value();
        if a0 < SINGULARITY_GUARD || !a0.is_finite() {
            return Err(TaylorError::Domain(format!(
                "square root of a series with constant term {a0}"
            )));
        }
        // Newton iteration for a^{-1/2}, then multiply by a.
        let mut z = self.like();
        z.coeffs[0] = 1.0 / a0.sqrt();
        for _ in 0..self.newton_iterations() {
            let zz = z.mul_series(&z);
            let azz = self.mul_series(&zz);
            let corr = azz.scale(-0.5).add_scalar(1.5);
            z = z.mul_series(&corr);
        }
        let mut out = self.mul_series(&z);
        out.coeffs[0] = a0.sqrt();
        Ok(out)
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        let c: Vec<f64> = (0..=self.r())
            .scan(1.0, |fact, j| {
                if j > 0 {
                    *fact *= j as f64;
                }
                Some(e / *fact)
            })
            .collect();
        self.compose_univariate(&c)
    }

    pub fn sin(&self) -> Self {
        self.compose_univariate(&trig_coeffs(self.value(), self.r(), 0))
    }

    pub fn cos(&self) -> Self {
        self.compose_univariate(&trig_coeffs(self.value(), self.r(), 1))
    }

    /// Integer power by repeated squaring; negative exponents go through the reciprocal.
    pub fn powi(&self, e: i32) -> Result<Self, TaylorError> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut k = e.unsigned_abs();
        let mut acc = base.like();
        acc.coeffs[0] = 1.0;
        let mut sq = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul_series(&sq);
            }
            k >>= 1;
            if k > 0 {
                sq = sq.mul_series(&sq);
            }
        }
        Ok(acc)
    }

    /// Partial derivative in variable `i`, one order lower.
    pub fn differentiate(&self, i: usize) -> Result<Self, TaylorError> {
        let r = self.r();
        if r == 0 {
            return Err(TaylorError::Shape("cannot differentiate an order-0 series".into()));
        }
        let target = Layout::get(self.n(), r - 1);
        let mut coeffs: Coeffs = smallvec::smallvec![0.0; target.len()];
        for (k, beta) in target.indices().iter().enumerate() {
            let up = beta.with_incremented(i);
            let src = self.layout.rank(&up).expect("index within order");
            coeffs[k] = self.coeffs[src] * up.get(i) as f64;
        }
        Ok(TruncatedSeries {
            layout: target,
            basepoint: self.basepoint.clone(),
            coeffs,
        })
    }

    /// Same expansion truncated to a lower order.
    pub fn truncate(&self, r: usize) -> Self {
        assert!(r <= self.r());
        let target = Layout::get(self.n(), r);
        TruncatedSeries {
            layout: target,
            basepoint: self.basepoint.clone(),
            coeffs: self.coeffs[..target.len()].into(),
        }
    }

    /// Evaluates the Taylor polynomial at `x`.
    pub fn eval_polynomial(&self, x: &[f64]) -> f64 {
        let d: SmallVec<[f64; 4]> = x.iter().zip(&self.basepoint).map(|(a, b)| a - b).collect();
        self.layout
            .indices()
            .iter()
            .zip(&self.coeffs)
            .map(|(alpha, c)| {
                c * alpha
                    .exponents()
                    .zip(&d)
                    .map(|(e, di)| di.powi(e as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// Text form: a header `n r basepoint…` followed by one
    /// `exponents… coefficient` line per index in graded-lex order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        write!(s, "{} {}", self.n(), self.r()).unwrap();
        for b in &self.basepoint {
            write!(s, " {b:?}").unwrap();
        }
        s.push('\n');
        for (alpha, c) in self.layout.indices().iter().zip(&self.coeffs) {
            if alpha.is_empty() {
                writeln!(s, "{c:?}").unwrap();
            } else {
                writeln!(s, "{alpha} {c:?}").unwrap();
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, TaylorError> {
        let bad = |msg: &str| TaylorError::Format(msg.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("empty input"))?
            .split_whitespace()
            .collect();
        if header.len() < 2 {
            return Err(bad("header needs n and r"));
        }
        let n: usize = header[0].parse().map_err(|_| bad("bad n"))?;
        let r: usize = header[1].parse().map_err(|_| bad("bad r"))?;
        if n > super::MAX_VARS || r > super::MAX_ORDER {
            return Err(bad("n or r out of range"));
        }
        if header.len() != 2 + n {
            return Err(bad("basepoint length does not match n"));
        }
        let bp = header[2..]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| bad("bad basepoint coordinate")))
            .collect::<Result<Vec<_>, _>>()?;
        let mut s = Self::zero(&bp, r);
        let mut seen = 0;
        for (k, line) in lines.enumerate() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != n + 1 {
                return Err(bad(&format!(
                    "line {} has {} fields, expected {}",
                    k + 2,
                    toks.len(),
                    n + 1
                )));
            }
            let exps = toks[..n]
                .iter()
                .map(|t| t.parse::<usize>().map_err(|_| bad("bad exponent")))
                .collect::<Result<Vec<_>, _>>()?;
            let alpha = MultiIndex::new(&exps);
            if k >= s.layout.len() || s.layout.multi_index(k) != &alpha {
                return Err(bad(&format!("index {alpha:?} out of graded-lex order")));
            }
            s.coeffs[k] = toks[n].parse().map_err(|_| bad("bad coefficient"))?;
            seen += 1;
        }
        if seen != s.layout.len() {
            return Err(bad("missing coefficients"));
        }
        Ok(s)
    }
}

/// Taylor coefficients of sin (phase 0) or cos (phase 1) at `a`.
fn trig_coeffs(a: f64, r: usize, phase: usize) -> Vec<f64> {
    let (s, c) = a.sin_cos();
    let cycle = [s, c, -s, -c];
    let mut fact = 1.0;
    (0..=r)
        .map(|j| {
            if j > 0 {
                fact *= j as f64;
            }
            cycle[(j + phase) % 4] / fact
        })
        .collect()
}

impl PartialEq for TruncatedSeries {
    fn eq(&self, other: &Self) -> bool {
        self.same_shape(other) && self.coeffs == other.coeffs
    }
}

impl std::fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TruncatedSeries")
            .field("n", &self.n())
            .field("r", &self.r())
            .field("basepoint", &self.basepoint.as_slice())
            .field("coeffs", &self.coeffs.as_slice())
            .finish()
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: Self) -> TruncatedSeries {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: Self) -> TruncatedSeries {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: Self) -> TruncatedSeries {
        self.mul_series(rhs)
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        self.scale(-1.0)
    }
}

impl Add for TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(mut self, rhs: Self) -> TruncatedSeries {
        self.axpy(1.0, &rhs);
        self
    }
}

impl Sub for TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(mut self, rhs: Self) -> TruncatedSeries {
        self.axpy(-1.0, &rhs);
        self
    }
}

impl Mul for TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: Self) -> TruncatedSeries {
        self.mul_series(&rhs)
    }
}

impl Neg for TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        self.scale(-1.0)
    }
}

/// Composes a one-variable expansion `outer` (at basepoint `a`) with `inner`,
/// whose constant term must equal `a`.
pub fn compose_series(outer: &TruncatedSeries, inner: &TruncatedSeries) -> Result<TruncatedSeries, TaylorError> {
    if outer.n() != 1 {
        return Err(TaylorError::Shape(format!(
            "outer series must have one input, has {}",
            outer.n()
        )));
    }
    check_basepoint(outer.basepoint(), &[inner.value()])?;
    let c: Vec<f64> = outer.coeffs().to_vec();
    Ok(inner.compose_univariate(&c))
}

/// Composes a multivariate expansion with one inner series per outer input.
/// The inner constant terms must match the outer basepoint.
pub fn compose_multi(outer: &TruncatedSeries, inner: &[TruncatedSeries]) -> Result<TruncatedSeries, TaylorError> {
    let at: Point = inner.iter().map(|s| s.value()).collect();
    check_basepoint(outer.basepoint(), &at)?;
    substitute(outer, inner)
}

/// Substitutes `inner` into the Taylor polynomial of `outer` with no basepoint
/// requirement. Exact for the polynomial: truncation commutes with products.
pub fn substitute(outer: &TruncatedSeries, inner: &[TruncatedSeries]) -> Result<TruncatedSeries, TaylorError> {
    if inner.len() != outer.n() {
        return Err(TaylorError::Shape(format!(
            "outer has {} inputs but {} inner series were given",
            outer.n(),
            inner.len()
        )));
    }
    let first = inner
        .first()
        .ok_or_else(|| TaylorError::Shape("substitution needs at least one inner series".into()))?;
    for s in inner {
        if !s.same_shape(first) {
            return Err(TaylorError::Shape("inner series disagree in shape".into()));
        }
    }
    let r_out = outer.r();
    let r_in = first.r();
    if r_out == 1 {
        // affine outer: the common case for jet transport
        let mut acc = TruncatedSeries::constant(first.basepoint(), r_in, outer.coeffs[0]);
        for (i, s) in inner.iter().enumerate() {
            let c = outer.coeffs[1 + i];
            if c != 0.0 {
                acc.axpy(c, s);
                acc.coeffs[0] -= c * outer.basepoint[i];
            }
        }
        return Ok(acc);
    }
    // powers[i][e] = (inner_i - p_i)^e
    let powers: Vec<Vec<TruncatedSeries>> = inner
        .iter()
        .zip(outer.basepoint())
        .map(|(s, &p)| {
            let d = s.add_scalar(-p);
            let mut v = Vec::with_capacity(r_out + 1);
            v.push(TruncatedSeries::constant(first.basepoint(), r_in, 1.0));
            for e in 1..=r_out {
                let next = v[e - 1].mul_series(&d);
                v.push(next);
            }
            v
        })
        .collect();
    let mut acc = TruncatedSeries::zero(first.basepoint(), r_in);
    for (alpha, &c) in outer.layout.indices().iter().zip(outer.coeffs.iter()) {
        if c == 0.0 {
            continue;
        }
        let mut term: Option<TruncatedSeries> = None;
        for (i, e) in alpha.exponents().enumerate() {
            if e == 0 {
                continue;
            }
            term = Some(match term {
                None => powers[i][e].clone(),
                Some(t) => t.mul_series(&powers[i][e]),
            });
        }
        match term {
            None => acc.coeffs[0] += c,
            Some(t) => acc.axpy(c, &t),
        }
    }
    Ok(acc)
}

fn check_basepoint(expected: &[f64], got: &[f64]) -> Result<(), TaylorError> {
    let ok = expected.len() == got.len()
        && expected
            .iter()
            .zip(got)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    if ok {
        Ok(())
    } else {
        Err(TaylorError::BasepointMismatch {
            expected: expected.to_vec(),
            got: got.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn square_at_one() {
        let x = TruncatedSeries::variable(&[1.0], 2, 0);
        let y = &x * &x;
        assert_eq!(y.coeffs(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn sine_at_zero() {
        let x = TruncatedSeries::variable(&[0.0], 3, 0);
        let s = x.sin();
        assert_relative_eq!(s.coeffs()[1], 1.0);
        assert_relative_eq!(s.coeffs()[3], -1.0 / 6.0);
        assert_eq!(s.coeffs()[0], 0.0);
        assert_eq!(s.coeffs()[2], 0.0);
    }

    #[test]
    fn reciprocal_and_sqrt() {
        let x = TruncatedSeries::variable(&[2.0], 4, 0);
        let inv = x.recip().unwrap();
        for (j, c) in inv.coeffs().iter().enumerate() {
            let expect = (-1f64).powi(j as i32) / 2f64.powi(j as i32 + 1);
            assert_relative_eq!(*c, expect, epsilon = 1e-15);
        }
        let s = x.sqrt().unwrap();
        let back = &s * &s;
        for (a, b) in back.coeffs().iter().zip(x.coeffs()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-14);
        }
        assert!(TruncatedSeries::variable(&[0.0], 2, 0).recip().is_err());
        assert!(TruncatedSeries::variable(&[-1.0], 2, 0).sqrt().is_err());
    }

    #[test]
    fn powi_matches_products() {
        let x = TruncatedSeries::variable(&[0.7, -0.2], 3, 0);
        let y = TruncatedSeries::variable(&[0.7, -0.2], 3, 1);
        let s = x.add_scalar(1.0).mul_series(&y.add_scalar(2.0));
        let p = s.powi(3).unwrap();
        let q = s.mul_series(&s).mul_series(&s);
        for (a, b) in p.coeffs().iter().zip(q.coeffs()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-13);
        }
        let m = s.powi(-2).unwrap().mul_series(&s.powi(2).unwrap());
        assert_relative_eq!(m.coeffs()[0], 1.0, epsilon = 1e-14);
        for c in &m.coeffs()[1..] {
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn identity_and_constant_composition() {
        let inner = TruncatedSeries::variable(&[0.3, 0.4], 3, 0).sin();
        let outer_id = TruncatedSeries::variable(&[inner.value()], 3, 0);
        assert_eq!(compose_series(&outer_id, &inner).unwrap(), inner);

        let c = TruncatedSeries::constant(&[0.3, 0.4], 3, 0.25);
        let outer = TruncatedSeries::variable(&[0.25], 3, 0).exp();
        let got = compose_series(&outer, &c).unwrap();
        assert_relative_eq!(got.value(), 0.25f64.exp());
        assert!(got.coeffs()[1..].iter().all(|&v| v == 0.0));

        let wrong = TruncatedSeries::variable(&[1.0], 3, 0);
        assert!(matches!(
            compose_series(&wrong, &c),
            Err(TaylorError::BasepointMismatch { .. })
        ));
    }

    #[test]
    fn differentiate_lowers_order() {
        let x = TruncatedSeries::variable(&[0.5, 1.0], 3, 0);
        let y = TruncatedSeries::variable(&[0.5, 1.0], 3, 1);
        let f = x.mul_series(&x).mul_series(&y); // x^2 y
        let fx = f.differentiate(0).unwrap(); // 2 x y
        assert_eq!(fx.r(), 2);
        assert_relative_eq!(fx.value(), 1.0);
        assert_relative_eq!(fx.derivative_entry(&MultiIndex::new(&[1, 0])), 2.0);
        assert_relative_eq!(fx.derivative_entry(&MultiIndex::new(&[1, 1])), 2.0);
    }

    #[test]
    fn text_round_trip() {
        let x = TruncatedSeries::variable(&[0.1, -2.5], 2, 0);
        let y = TruncatedSeries::variable(&[0.1, -2.5], 2, 1);
        let s = (&x * &y).exp();
        let text = s.to_text();
        assert!(text.starts_with("2 2 0.1 -2.5\n0 0 "));
        assert_eq!(TruncatedSeries::from_text(&text).unwrap(), s);
        assert!(TruncatedSeries::from_text("2 1 0.0 0.0\n0 0 1.0\n").is_err());
    }
}
