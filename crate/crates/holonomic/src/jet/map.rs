use std::sync::Arc;

use crate::taylor::{compose_multi, substitute, Expr, TruncatedSeries};

use super::{JetError, JetPoint};

/// Smooth map R^n → R^q that can produce its own jets.
pub trait SmoothMap: Send + Sync {
    fn n(&self) -> usize;
    fn q(&self) -> usize;
    fn jet(&self, v: &[f64], r: usize) -> Result<JetPoint, JetError>;

    fn eval(&self, v: &[f64]) -> Result<Vec<f64>, JetError> {
        Ok(self.jet(v, 0)?.value())
    }

    fn describe(&self) -> String;
}

/// Diffeomorphism of R^n (or of an open subset) with an evaluable inverse.
pub trait Diffeo: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn apply_inverse(&self, y: &[f64]) -> Vec<f64>;
    /// Components of the map expanded at `x`.
    fn jet(&self, x: &[f64], r: usize) -> Result<Vec<TruncatedSeries>, JetError>;
    /// Components of the inverse expanded at `y`.
    fn inverse_jet(&self, y: &[f64], r: usize) -> Result<Vec<TruncatedSeries>, JetError>;
    fn describe(&self) -> String;
}

/// Composes `outer`, a jet at the point `inner` maps to, with the inner
/// expansion. The outer basepoint must be the inner constant terms.
pub fn compose_jet(outer: &JetPoint, inner: &[TruncatedSeries]) -> Result<JetPoint, JetError> {
    let components = outer
        .components()
        .iter()
        .map(|c| compose_multi(c, inner))
        .collect::<Result<Vec<_>, _>>()?;
    JetPoint::new(components)
}

/// Values of a list of series, i.e. the point they are centered over in the target.
pub fn image_point(series: &[TruncatedSeries]) -> Vec<f64> {
    series.iter().map(|s| s.value()).collect()
}

/// Concrete smooth map representation.
#[derive(Clone)]
pub enum MapRep {
    /// One expression per output over `n` inputs.
    Exprs {
        n: usize,
        exprs: Arc<Vec<Expr>>,
    },
    /// The Taylor polynomial map of a jet.
    Polynomial(Arc<JetPoint>),
    /// `outer ∘ inner`.
    Compose {
        outer: Arc<MapRep>,
        inner: Arc<dyn Diffeo>,
    },
    /// `w·a + (1 − w)·b` for a scalar weight expression `w`.
    Blend {
        weight: Arc<Expr>,
        a: Arc<MapRep>,
        b: Arc<MapRep>,
    },
    Custom(Arc<dyn SmoothMap>),
}

impl MapRep {
    pub fn from_exprs(n: usize, exprs: Vec<Expr>) -> Result<MapRep, JetError> {
        if exprs.is_empty() {
            return Err(JetError::Shape("a map needs at least one output".into()));
        }
        if let Some(e) = exprs.iter().find(|e| e.arity() > n) {
            return Err(JetError::Shape(format!("expression '{e}' uses more than {n} inputs")));
        }
        Ok(MapRep::Exprs {
            n,
            exprs: Arc::new(exprs),
        })
    }

    pub fn compose(self, inner: Arc<dyn Diffeo>) -> MapRep {
        MapRep::Compose {
            outer: Arc::new(self),
            inner,
        }
    }

    pub fn blend(weight: Expr, a: MapRep, b: MapRep) -> MapRep {
        MapRep::Blend {
            weight: Arc::new(weight),
            a: Arc::new(a),
            b: Arc::new(b),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            MapRep::Exprs { n, .. } => *n,
            MapRep::Polynomial(s) => s.n(),
            MapRep::Compose { inner, .. } => inner.dim(),
            MapRep::Blend { a, .. } => a.n(),
            MapRep::Custom(m) => m.n(),
        }
    }

    pub fn q(&self) -> usize {
        match self {
            MapRep::Exprs { exprs, .. } => exprs.len(),
            MapRep::Polynomial(s) => s.q(),
            MapRep::Compose { outer, .. } => outer.q(),
            MapRep::Blend { a, .. } => a.q(),
            MapRep::Custom(m) => m.q(),
        }
    }

    pub fn jet(&self, v: &[f64], r: usize) -> Result<JetPoint, JetError> {
        if v.len() != self.n() {
            return Err(JetError::Shape(format!(
                "point of dimension {} for a map on R^{}",
                v.len(),
                self.n()
            )));
        }
        match self {
            MapRep::Exprs { exprs, .. } => {
                let comps = exprs
                    .iter()
                    .map(|e| e.taylor_expand(v, r))
                    .collect::<Result<Vec<_>, _>>()?;
                JetPoint::new(comps)
            }
            MapRep::Polynomial(s) => {
                let vars: Vec<TruncatedSeries> = (0..v.len()).map(|i| TruncatedSeries::variable(v, r, i)).collect();
                let comps = s
                    .components()
                    .iter()
                    .map(|c| substitute(c, &vars))
                    .collect::<Result<Vec<_>, _>>()?;
                JetPoint::new(comps)
            }
            MapRep::Compose { outer, inner } => {
                let ij = inner.jet(v, r)?;
                let oj = outer.jet(&image_point(&ij), r)?;
                compose_jet(&oj, &ij)
            }
            MapRep::Blend { weight, a, b } => {
                let w = weight.taylor_expand(v, r)?;
                let ja = a.jet(v, r)?;
                let jb = b.jet(v, r)?;
                let one_minus = w.scale(-1.0).add_scalar(1.0);
                let comps = ja
                    .components()
                    .iter()
                    .zip(jb.components())
                    .map(|(x, y)| &(&w * x) + &(&one_minus * y))
                    .collect();
                JetPoint::new(comps)
            }
            MapRep::Custom(m) => m.jet(v, r),
        }
    }

    pub fn eval(&self, v: &[f64]) -> Result<Vec<f64>, JetError> {
        match self {
            MapRep::Exprs { exprs, .. } => exprs.iter().map(|e| e.eval(v).map_err(JetError::from)).collect(),
            MapRep::Compose { outer, inner } => outer.eval(&inner.apply(v)),
            MapRep::Custom(m) => m.eval(v),
            _ => Ok(self.jet(v, 0)?.value()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            MapRep::Exprs { exprs, .. } => {
                let parts: Vec<String> = exprs.iter().map(|e| e.to_string()).collect();
                format!("({})", parts.join(", "))
            }
            MapRep::Polynomial(s) => format!("taylor polynomial at {:?}", s.basepoint()),
            MapRep::Compose { outer, inner } => format!("{} o {}", outer.describe(), inner.describe()),
            MapRep::Blend { weight, a, b } => {
                format!("blend[{weight}]({}, {})", a.describe(), b.describe())
            }
            MapRep::Custom(m) => m.describe(),
        }
    }
}

/// J^r_f at `v`.
pub fn jet_of(f: &MapRep, v: &[f64], r: usize) -> Result<JetPoint, JetError> {
    f.jet(v, r)
}

/// The polynomial map of degree ≤ r whose jet at the basepoint is `s`.
pub fn taylor_section(s: &JetPoint) -> MapRep {
    MapRep::Polynomial(Arc::new(s.clone()))
}

/// Translation x ↦ x + c.
#[derive(Debug, Clone)]
pub struct Translation {
    pub offset: Vec<f64>,
}

impl Diffeo for Translation {
    fn dim(&self) -> usize {
        self.offset.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.offset).map(|(a, b)| a + b).collect()
    }

    fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.offset).map(|(a, b)| a - b).collect()
    }

    fn jet(&self, x: &[f64], r: usize) -> Result<Vec<TruncatedSeries>, JetError> {
        Ok((0..x.len())
            .map(|i| TruncatedSeries::variable(x, r, i).add_scalar(self.offset[i]))
            .collect())
    }

    fn inverse_jet(&self, y: &[f64], r: usize) -> Result<Vec<TruncatedSeries>, JetError> {
        Ok((0..y.len())
            .map(|i| TruncatedSeries::variable(y, r, i).add_scalar(-self.offset[i]))
            .collect())
    }

    fn describe(&self) -> String {
        format!("translation by {:?}", self.offset)
    }
}

/// The inverse of a diffeomorphism, with the roles of the evaluators swapped.
pub struct Inverse(pub Arc<dyn Diffeo>);

impl Diffeo for Inverse {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.0.apply_inverse(x)
    }
    fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        self.0.apply(y)
    }
    fn jet(&self, x: &[f64], r: usize) -> Result<Vec<TruncatedSeries>, JetError> {
        self.0.inverse_jet(x, r)
    }
    fn inverse_jet(&self, y: &[f64], r: usize) -> Result<Vec<TruncatedSeries>, JetError> {
        self.0.jet(y, r)
    }
    fn describe(&self) -> String {
        format!("inverse of {}", self.0.describe())
    }
}

/// `steps[last] ∘ … ∘ steps[0]`: the first element is applied first.
pub struct Chain(pub Vec<Arc<dyn Diffeo>>);

impl Diffeo for Chain {
    fn dim(&self) -> usize {
        self.0.first().map_or(0, |d| d.dim())
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.0.iter().fold(x.to_vec(), |p, d| d.apply(&p))
    }

    fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        self.0.iter().rev().fold(y.to_vec(), |p, d| d.apply_inverse(&p))
    }

    fn jet(&self, x: &[f64], r: usize) -> Result<Vec<TruncatedSeries>, JetError> {
        let mut it = self.0.iter();
        let Some(first) = it.next() else {
            return Ok((0..x.len()).map(|i| TruncatedSeries::variable(x, r, i)).collect());
        };
        let mut acc = first.jet(x, r)?;
        for d in it {
            let outer = d.jet(&image_point(&acc), r)?;
            acc = outer
                .iter()
                .map(|c| compose_multi(c, &acc))
                .collect::<Result<Vec<_>, _>>()?;
        }
        Ok(acc)
    }

    fn inverse_jet(&self, y: &[f64], r: usize) -> Result<Vec<TruncatedSeries>, JetError> {
        let mut it = self.0.iter().rev();
        let Some(first) = it.next() else {
            return Ok((0..y.len()).map(|i| TruncatedSeries::variable(y, r, i)).collect());
        };
        let mut acc = first.inverse_jet(y, r)?;
        for d in it {
            let outer = d.inverse_jet(&image_point(&acc), r)?;
            acc = outer
                .iter()
                .map(|c| compose_multi(c, &acc))
                .collect::<Result<Vec<_>, _>>()?;
        }
        Ok(acc)
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|d| d.describe()).collect();
        format!("chain[{}]", parts.join("; "))
    }
}
