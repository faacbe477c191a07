use std::sync::Arc;

use crate::taylor::{Expr, Layout, MultiIndex, TruncatedSeries};

use super::map::{compose_jet, image_point, Diffeo, MapRep};
use super::{CubeNbhd, JetError, JetPoint};

/// A jet field given by an arbitrary evaluator.
pub trait JetField: Send + Sync {
    fn n(&self) -> usize;
    fn q(&self) -> usize;
    fn r(&self) -> usize;
    fn jet(&self, v: &[f64]) -> Result<JetPoint, JetError>;
    /// True when the field is J^r of a genuine map on its domain.
    fn is_holonomic(&self) -> bool {
        false
    }
    fn describe(&self) -> String;
}

/// Section given by independent expressions for every raw derivative entry.
#[derive(Clone)]
pub struct FormalSection {
    n: usize,
    q: usize,
    r: usize,
    // entries[j][rank] evaluates ∂^α f_j
    entries: Vec<Vec<Expr>>,
    domain: Option<CubeNbhd>,
}

impl FormalSection {
    /// `entries[j]` lists one expression per multi-index of the (n, r) layout.
    pub fn new(n: usize, r: usize, entries: Vec<Vec<Expr>>) -> Result<Self, JetError> {
        let len = Layout::get(n, r).len();
        if entries.is_empty() {
            return Err(JetError::Shape("a section needs at least one output".into()));
        }
        for row in &entries {
            if row.len() != len {
                return Err(JetError::Shape(format!(
                    "expected {len} entries per output for n={n}, r={r}, got {}",
                    row.len()
                )));
            }
            if let Some(e) = row.iter().find(|e| e.arity() > n) {
                return Err(JetError::Shape(format!("entry '{e}' uses more than {n} inputs")));
            }
        }
        Ok(FormalSection {
            n,
            q: entries.len(),
            r,
            entries,
            domain: None,
        })
    }

    /// Builds from sparse `(output, multi-index, expression)` triples;
    /// unlisted entries are zero.
    pub fn from_entries(
        n: usize,
        q: usize,
        r: usize,
        given: impl IntoIterator<Item = (usize, MultiIndex, Expr)>,
    ) -> Result<Self, JetError> {
        let layout = Layout::get(n, r);
        let mut entries = vec![vec![Expr::constant(0.0); layout.len()]; q];
        for (j, alpha, e) in given {
            let k = layout
                .rank(&alpha)
                .ok_or_else(|| JetError::Shape(format!("multi-index {alpha:?} exceeds order {r}")))?;
            if j >= q {
                return Err(JetError::Shape(format!("output {j} out of range")));
            }
            entries[j][k] = e;
        }
        Self::new(n, r, entries)
    }

    pub fn with_domain(mut self, domain: CubeNbhd) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn domain(&self) -> Option<&CubeNbhd> {
        self.domain.as_ref()
    }

    pub fn entry(&self, j: usize, alpha: &MultiIndex) -> Option<&Expr> {
        Layout::get(self.n, self.r).rank(alpha).map(|k| &self.entries[j][k])
    }

    pub fn entries(&self) -> &[Vec<Expr>] {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn jet(&self, v: &[f64]) -> Result<JetPoint, JetError> {
        if let Some(d) = &self.domain {
            if !d.contains(v) {
                return Err(JetError::OutsideDomain(v.to_vec()));
            }
        }
        let layout = Layout::get(self.n, self.r);
        let comps = self
            .entries
            .iter()
            .map(|row| {
                let mut s = TruncatedSeries::zero(v, self.r);
                for (k, e) in row.iter().enumerate() {
                    s.coeffs_mut()[k] = e.eval(v)? / layout.factorial(k);
                }
                Ok(s)
            })
            .collect::<Result<Vec<_>, JetError>>()?;
        JetPoint::new(comps)
    }
}

/// Evaluable section of J^r(R^n, R^q).
#[derive(Clone)]
pub enum JetSection {
    Holonomic {
        map: MapRep,
        r: usize,
    },
    Formal(Arc<FormalSection>),
    /// Push-forward of `inner` by `diffeo`.
    Transported {
        diffeo: Arc<dyn Diffeo>,
        inner: Arc<JetSection>,
    },
    /// Pointwise `(1 − s)·a + s·b`.
    Combination {
        a: Arc<JetSection>,
        b: Arc<JetSection>,
        s: f64,
    },
    Field(Arc<dyn JetField>),
}

impl JetSection {
    pub fn holonomic(map: MapRep, r: usize) -> JetSection {
        JetSection::Holonomic { map, r }
    }

    pub fn formal(f: FormalSection) -> JetSection {
        JetSection::Formal(Arc::new(f))
    }

    pub fn n(&self) -> usize {
        match self {
            JetSection::Holonomic { map, .. } => map.n(),
            JetSection::Formal(f) => f.n(),
            JetSection::Transported { diffeo, .. } => diffeo.dim(),
            JetSection::Combination { a, .. } => a.n(),
            JetSection::Field(f) => f.n(),
        }
    }

    pub fn q(&self) -> usize {
        match self {
            JetSection::Holonomic { map, .. } => map.q(),
            JetSection::Formal(f) => f.q(),
            JetSection::Transported { inner, .. } => inner.q(),
            JetSection::Combination { a, .. } => a.q(),
            JetSection::Field(f) => f.q(),
        }
    }

    pub fn r(&self) -> usize {
        match self {
            JetSection::Holonomic { r, .. } => *r,
            JetSection::Formal(f) => f.r(),
            JetSection::Transported { inner, .. } => inner.r(),
            JetSection::Combination { a, .. } => a.r(),
            JetSection::Field(f) => f.r(),
        }
    }

    /// Structural holonomy: true when the section is J^r of a map by construction.
    pub fn is_holonomic(&self) -> bool {
        match self {
            JetSection::Holonomic { .. } => true,
            JetSection::Formal(_) | JetSection::Combination { .. } => false,
            JetSection::Transported { inner, .. } => inner.is_holonomic(),
            JetSection::Field(f) => f.is_holonomic(),
        }
    }

    pub fn jet(&self, v: &[f64]) -> Result<JetPoint, JetError> {
        match self {
            JetSection::Holonomic { map, r } => map.jet(v, *r),
            JetSection::Formal(f) => f.jet(v),
            JetSection::Transported { diffeo, inner } => {
                let back = diffeo.inverse_jet(v, inner.r())?;
                let s = inner.jet(&image_point(&back))?;
                compose_jet(&s, &back)
            }
            JetSection::Combination { a, b, s } => a.jet(v)?.lerp(&b.jet(v)?, *s),
            JetSection::Field(f) => f.jet(v),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            JetSection::Holonomic { map, r } => format!("J^{r} {}", map.describe()),
            JetSection::Formal(f) => format!("formal section (n={}, q={}, r={})", f.n(), f.q(), f.r()),
            JetSection::Transported { diffeo, inner } => {
                format!("({})_* {}", diffeo.describe(), inner.describe())
            }
            JetSection::Combination { a, b, s } => {
                format!("(1-{s})*[{}] + {s}*[{}]", a.describe(), b.describe())
            }
            JetSection::Field(f) => f.describe(),
        }
    }
}
