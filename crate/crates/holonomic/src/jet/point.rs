use crate::taylor::{substitute, MultiIndex, TruncatedSeries};

use super::JetError;

/// An r-jet at a point: one truncated series per output component.
#[derive(Clone, Debug, PartialEq)]
pub struct JetPoint {
    components: Vec<TruncatedSeries>,
}

impl JetPoint {
    pub fn new(components: Vec<TruncatedSeries>) -> Result<Self, JetError> {
        let first = components
            .first()
            .ok_or_else(|| JetError::Shape("a jet needs at least one component".into()))?;
        if components.iter().any(|c| !c.same_shape(first)) {
            return Err(JetError::Shape("jet components disagree in n, r or basepoint".into()));
        }
        Ok(JetPoint { components })
    }

    pub fn n(&self) -> usize {
        self.components[0].n()
    }

    pub fn q(&self) -> usize {
        self.components.len()
    }

    pub fn r(&self) -> usize {
        self.components[0].r()
    }

    pub fn basepoint(&self) -> &[f64] {
        self.components[0].basepoint()
    }

    pub fn components(&self) -> &[TruncatedSeries] {
        &self.components
    }

    pub fn into_components(self) -> Vec<TruncatedSeries> {
        self.components
    }

    pub fn component(&self, j: usize) -> &TruncatedSeries {
        &self.components[j]
    }

    pub fn value(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.value()).collect()
    }

    /// Raw derivative ∂^α f_j at the basepoint.
    pub fn entry(&self, j: usize, alpha: &MultiIndex) -> f64 {
        self.components[j].derivative_entry(alpha)
    }

    /// Matrix of first derivatives, rows indexed by output. Requires r ≥ 1.
    pub fn jacobian(&self) -> Vec<Vec<f64>> {
        assert!(self.r() >= 1, "jacobian needs a jet of order at least 1");
        let n = self.n();
        self.components
            .iter()
            .map(|c| (0..n).map(|i| c.coeffs()[1 + i]).collect())
            .collect()
    }

    /// Jet at `v` of the Taylor polynomial map of `self`.
    pub fn recenter(&self, v: &[f64]) -> Result<JetPoint, JetError> {
        if v.len() != self.n() {
            return Err(JetError::Shape(format!(
                "point in R^{} for a jet over R^{}",
                v.len(),
                self.n()
            )));
        }
        let vars: Vec<TruncatedSeries> = (0..v.len())
            .map(|i| TruncatedSeries::variable(v, self.r(), i))
            .collect();
        let components = self
            .components
            .iter()
            .map(|c| substitute(c, &vars))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(JetPoint { components })
    }

    /// Pointwise affine combination `(1 − s)·self + s·other` of jets at the same point.
    pub fn lerp(&self, other: &JetPoint, s: f64) -> Result<JetPoint, JetError> {
        check_pair(self, other)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| {
                let mut out = a.scale(1.0 - s);
                out.axpy(s, b);
                out
            })
            .collect();
        Ok(JetPoint { components })
    }
}

fn check_pair(a: &JetPoint, b: &JetPoint) -> Result<(), JetError> {
    if a.n() != b.n() || a.q() != b.q() || a.r() != b.r() {
        return Err(JetError::Shape(format!(
            "jets of shape (n={}, q={}, r={}) and (n={}, q={}, r={})",
            a.n(),
            a.q(),
            a.r(),
            b.n(),
            b.q(),
            b.r()
        )));
    }
    let same = a
        .basepoint()
        .iter()
        .zip(b.basepoint())
        .all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs()));
    if !same {
        return Err(JetError::BasepointMismatch {
            a: a.basepoint().to_vec(),
            b: b.basepoint().to_vec(),
        });
    }
    Ok(())
}

/// Sup over all components and multi-indices of the difference of raw
/// derivative entries.
pub fn jet_distance(a: &JetPoint, b: &JetPoint) -> Result<f64, JetError> {
    jet_distance_masked(a, b, None)
}

/// As [`jet_distance`], restricted to the layout ranks where `mask` is true.
pub fn jet_distance_masked(a: &JetPoint, b: &JetPoint, mask: Option<&[bool]>) -> Result<f64, JetError> {
    check_pair(a, b)?;
    let layout = a.components[0].layout();
    let mut worst = 0.0f64;
    for (ca, cb) in a.components.iter().zip(&b.components) {
        for (k, (x, y)) in ca.coeffs().iter().zip(cb.coeffs()).enumerate() {
            if mask.is_some_and(|m| !m[k]) {
                continue;
            }
            let d = (x - y).abs() * layout.factorial(k);
            if d.is_nan() {
                return Ok(f64::NAN);
            }
            worst = worst.max(d);
        }
    }
    Ok(worst)
}
