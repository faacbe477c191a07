//! Cut-offs, the oscillating profile φ_N, shear diffeomorphisms and their
//! action on jet sections.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::jet::{Diffeo, Inverse, JetError, JetSection};
use crate::taylor::{Builtin, Expr, SmoothStep, TruncatedSeries, UnivariateFn};

pub const DEFAULT_SMOOTHNESS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WiggleError {
    #[error("level {l} is outside 1..={k}")]
    InvalidLevel { l: usize, k: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// θ_N: zero near R∖I, one on [1/(4N), 1 − 1/(4N)], with polynomial ramps on
/// [1/(8N), 1/(4N)] and the mirror interval.
#[derive(Debug, Clone)]
pub struct Cutoff {
    n_osc: usize,
    ramp: SmoothStep,
    name: String,
}

impl Cutoff {
    pub fn n_osc(&self) -> usize {
        self.n_osc
    }

    pub fn smoothness(&self) -> usize {
        self.ramp.order()
    }

    pub fn max_slope(&self) -> f64 {
        self.ramp.max_slope()
    }
}

pub fn make_cutoff(n_osc: usize, m: usize) -> Result<Cutoff, WiggleError> {
    if n_osc == 0 {
        return Err(WiggleError::InvalidParameter("N must be positive".into()));
    }
    if m < 3 {
        return Err(WiggleError::InvalidParameter(format!("smoothness {m} below 3")));
    }
    let nf = n_osc as f64;
    Ok(Cutoff {
        n_osc,
        ramp: SmoothStep::new("ramp", m, 1.0 / (8.0 * nf), 1.0 / (4.0 * nf)),
        name: format!("theta{n_osc}_{m}"),
    })
}

impl UnivariateFn for Cutoff {
    fn name(&self) -> &str {
        &self.name
    }

    fn smoothness(&self) -> usize {
        self.ramp.order()
    }

    fn taylor_coeffs(&self, t: f64, order: usize) -> Vec<f64> {
        if t <= 0.5 {
            self.ramp.taylor_coeffs(t, order)
        } else {
            let mut c = self.ramp.taylor_coeffs(1.0 - t, order);
            c.iter_mut().skip(1).step_by(2).for_each(|v| *v = -*v);
            c
        }
    }

    fn eval(&self, t: f64) -> f64 {
        self.ramp.eval(t.min(1.0 - t))
    }
}

/// φ_N over R^k with y = x1..x_{k−l}, t = x_{k−l+1}, x = the remaining cube
/// coordinates. With `relative` unset the y and x factors are left out.
pub fn make_phi(n_osc: usize, k: usize, l: usize, m: usize, relative: bool) -> Result<Expr, WiggleError> {
    if l == 0 || l > k {
        return Err(WiggleError::InvalidLevel { l, k });
    }
    let theta: Arc<dyn UnivariateFn> = Arc::new(make_cutoff(n_osc, m)?);
    let t = k - l;
    let mut phi = Expr::named(theta.clone(), Expr::var(t))
        * Expr::call(Builtin::Cos, Expr::constant(2.0 * n_osc as f64 * PI) * Expr::var(t));
    if relative {
        for i in (0..k).filter(|&i| i != t) {
            phi = phi * Expr::named(theta.clone(), Expr::var(i));
        }
    }
    Ok(phi)
}

/// One summand δ·φ of a shear.
#[derive(Clone, Debug, PartialEq)]
pub struct ShearTerm {
    pub amplitude: f64,
    pub phi: Expr,
}

/// x ↦ (x_1, …, x_{n−1}, x_n + Σ δ_j φ_j(x_1, …, x_k)).
#[derive(Clone, Debug, PartialEq)]
pub struct ShearDiffeo {
    n: usize,
    k: usize,
    terms: Vec<ShearTerm>,
}

pub fn make_shear(phi: Expr, amplitude: f64, n: usize, k: usize) -> Result<ShearDiffeo, WiggleError> {
    if amplitude <= 0.0 {
        return Err(WiggleError::InvalidParameter(format!(
            "amplitude {amplitude} must be positive"
        )));
    }
    if k >= n || phi.arity() > k {
        return Err(WiggleError::Dimension(format!(
            "profile over {} variables for a shear of R^{n} along a {k}-cube",
            phi.arity()
        )));
    }
    Ok(ShearDiffeo {
        n,
        k,
        terms: vec![ShearTerm { amplitude, phi }],
    })
}

impl ShearDiffeo {
    pub fn identity(n: usize, k: usize) -> Self {
        ShearDiffeo {
            n,
            k,
            terms: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn terms(&self) -> &[ShearTerm] {
        &self.terms
    }

    /// `self ∘ other`; shears along x_n commute, so this just adds profiles.
    pub fn compose(&self, other: &ShearDiffeo) -> ShearDiffeo {
        assert_eq!(self.n, other.n, "shears of different spaces");
        ShearDiffeo {
            n: self.n,
            k: self.k.max(other.k),
            terms: self.terms.iter().chain(&other.terms).cloned().collect(),
        }
    }

    /// Σ δ_j φ_j at the cube coordinates of `x`.
    pub fn offset(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amplitude * t.phi.eval(x).expect("shear profiles are total"))
            .sum()
    }

    /// Σ δ_j, which bounds ‖h − Id‖ since every |φ_j| ≤ 1.
    pub fn displacement_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude.abs()).sum()
    }

    fn offset_series(&self, x: &[f64], r: usize) -> Result<TruncatedSeries, JetError> {
        let mut acc = TruncatedSeries::zero(x, r);
        for t in &self.terms {
            acc.axpy(t.amplitude, &t.phi.taylor_expand(x, r)?);
        }
        Ok(acc)
    }

    fn shifted_jet(&self, x: &[f64], r: usize, sign: f64) -> Result<Vec<TruncatedSeries>, JetError> {
        if x.len() != self.n {
            return Err(JetError::Shape(format!(
                "point in R^{} for a shear of R^{}",
                x.len(),
                self.n
            )));
        }
        let mut comps: Vec<TruncatedSeries> = (0..self.n).map(|i| TruncatedSeries::variable(x, r, i)).collect();
        if !self.terms.is_empty() {
            comps[self.n - 1].axpy(sign, &self.offset_series(x, r)?);
        }
        Ok(comps)
    }
}

impl fmt::Display for ShearDiffeo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "identity");
        }
        write!(f, "x{} +=", self.n)?;
        for (i, t) in self.terms.iter().enumerate() {
            let sep = if i == 0 { " " } else { " + " };
            write!(f, "{sep}{}*[{}]", t.amplitude, t.phi)?;
        }
        Ok(())
    }
}

impl Diffeo for ShearDiffeo {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        y[self.n - 1] += self.offset(x);
        y
    }

    fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        let mut x = y.to_vec();
        x[self.n - 1] -= self.offset(y);
        x
    }

    fn jet(&self, x: &[f64], r: usize) -> Result<Vec<TruncatedSeries>, JetError> {
        self.shifted_jet(x, r, 1.0)
    }

    fn inverse_jet(&self, y: &[f64], r: usize) -> Result<Vec<TruncatedSeries>, JetError> {
        self.shifted_jet(y, r, -1.0)
    }

    fn describe(&self) -> String {
        format!("shear {self}")
    }
}

/// h_* F: holonomic sections stay holonomic (f ↦ f ∘ h⁻¹); other sections
/// are transported jet by jet.
pub fn pushforward(h: Arc<dyn Diffeo>, f: &JetSection) -> Result<JetSection, WiggleError> {
    if h.dim() != f.n() {
        return Err(WiggleError::Dimension(format!(
            "diffeomorphism of R^{} acting on a section over R^{}",
            h.dim(),
            f.n()
        )));
    }
    Ok(match f {
        JetSection::Holonomic { map, r } => JetSection::Holonomic {
            map: map.clone().compose(Arc::new(Inverse(h))),
            r: *r,
        },
        other => JetSection::Transported {
            diffeo: h,
            inner: Arc::new(other.clone()),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirrored_coefficients_alternate_sign() {
        let c = make_cutoff(4, 3).unwrap();
        let left = c.taylor_coeffs(0.05, 3);
        let right = c.taylor_coeffs(0.95, 3);
        assert!((left[0] - right[0]).abs() < 1e-14);
        assert!((left[1] + right[1]).abs() < 1e-12);
        assert!((left[2] - right[2]).abs() < 1e-9);
    }
}
