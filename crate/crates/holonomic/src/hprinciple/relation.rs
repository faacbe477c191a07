use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::jet::{JetPoint, JetSection, Sampler};
use crate::taylor::{parse_expr, Expr, Layout};

use super::HError;

/// Open subset of the circle of directions: a union of open arcs (lo, hi),
/// angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    arcs: Vec<(f64, f64)>,
}

impl DirectionSet {
    pub fn new(arcs: Vec<(f64, f64)>) -> Result<Self, HError> {
        if arcs.is_empty() {
            return Err(HError::InvalidParameter("empty direction set".into()));
        }
        for &(lo, hi) in &arcs {
            if !(lo.is_finite() && hi.is_finite() && lo < hi && hi - lo < TAU) {
                return Err(HError::InvalidParameter(format!("bad arc ({lo}, {hi})")));
            }
        }
        Ok(DirectionSet { arcs })
    }

    /// Arcs given in degrees.
    pub fn from_degrees(arcs: &[(f64, f64)]) -> Result<Self, HError> {
        Self::new(arcs.iter().map(|&(a, b)| (a.to_radians(), b.to_radians())).collect())
    }

    /// Directions within `half_width` (radians) of the line at angle `axis`,
    /// in both orientations.
    pub fn around_line(axis: f64, half_width: f64) -> Result<Self, HError> {
        Self::new(vec![
            (axis - half_width, axis + half_width),
            (axis + PI - half_width, axis + PI + half_width),
        ])
    }

    pub fn arcs(&self) -> &[(f64, f64)] {
        &self.arcs
    }

    /// Signed angular distance to the boundary: positive inside.
    pub fn margin(&self, theta: f64) -> f64 {
        self.arcs
            .iter()
            .map(|&(lo, hi)| {
                let t = lo + (theta - lo).rem_euclid(TAU);
                if t > lo && t < hi {
                    (t - lo).min(hi - t)
                } else {
                    -(t - hi).abs().min((lo + TAU - t).abs())
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.margin(theta) > 0.0
    }
}

impl fmt::Display for DirectionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .arcs
            .iter()
            .map(|(a, b)| format!("{}:{}", a.to_degrees(), b.to_degrees()))
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

#[derive(Debug, Clone)]
pub enum RelationKind {
    /// Rank of the differential at least `rank`.
    Rank { rank: usize },
    /// Curves in the plane whose tangent lies in the set.
    Directions(DirectionSet),
    /// Positive where the expression, over the raw jet entries, is positive.
    Custom { source: String, expr: Expr },
}

/// Open differential relation in J^r(R^n, R^q) with an operational margin.
///
/// Rank margins are σ_rank(J)/√(nq), directional margins |v|·sin(angle
/// margin)/√2: both bound the entrywise jet perturbation that keeps the
/// point inside.
#[derive(Debug, Clone)]
pub struct Relation {
    pub n: usize,
    pub q: usize,
    pub r: usize,
    pub kind: RelationKind,
    name: String,
}

impl Relation {
    pub fn k_mersion(n: usize, q: usize, k: usize) -> Result<Self, HError> {
        if k == 0 || k > n.min(q) {
            return Err(HError::InvalidParameter(format!(
                "rank {k} impossible for maps R^{n} -> R^{q}"
            )));
        }
        Ok(Relation {
            n,
            q,
            r: 1,
            kind: RelationKind::Rank { rank: k },
            name: format!("k-mersion({k})"),
        })
    }

    pub fn immersion(n: usize, q: usize) -> Result<Self, HError> {
        if n > q {
            return Err(HError::InvalidParameter(format!("no immersions R^{n} -> R^{q}")));
        }
        Ok(Relation {
            name: "immersion".into(),
            ..Self::k_mersion(n, q, n)?
        })
    }

    pub fn submersion(n: usize, q: usize) -> Result<Self, HError> {
        if q > n {
            return Err(HError::InvalidParameter(format!("no submersions R^{n} -> R^{q}")));
        }
        Ok(Relation {
            name: "submersion".into(),
            ..Self::k_mersion(n, q, q)?
        })
    }

    pub fn directions(set: DirectionSet) -> Self {
        Relation {
            n: 1,
            q: 2,
            r: 1,
            name: format!("direction-set({set})"),
            kind: RelationKind::Directions(set),
        }
    }

    /// Margin expression over the raw entries of the jet, component by
    /// component in graded-lex order, named x1, x2, ….
    pub fn custom(n: usize, q: usize, r: usize, source: &str) -> Result<Self, HError> {
        let vars = q * Layout::get(n, r).len();
        let expr = parse_expr(source, vars).map_err(|e| HError::InvalidParameter(format!("margin expression: {e}")))?;
        Ok(Relation {
            n,
            q,
            r,
            name: format!("custom({source})"),
            kind: RelationKind::Custom {
                source: source.to_string(),
                expr,
            },
        })
    }

    /// Catalog lookup: `immersion`, `submersion`, `k-mersion(k)`,
    /// `direction-set(lo:hi, …)` in degrees.
    pub fn from_name(name: &str, n: usize, q: usize) -> Result<Self, HError> {
        let name = name.trim();
        let arg = |prefix: &str| {
            name.strip_prefix(prefix)
                .and_then(|s| s.trim().strip_prefix('('))
                .and_then(|s| s.strip_suffix(')'))
                .map(str::trim)
        };
        if name == "immersion" {
            return Self::immersion(n, q);
        }
        if name == "submersion" {
            return Self::submersion(n, q);
        }
        if let Some(a) = arg("k-mersion") {
            let k = a
                .parse::<usize>()
                .map_err(|_| HError::InvalidParameter(format!("bad rank in {name}")))?;
            return Self::k_mersion(n, q, k);
        }
        if let Some(a) = arg("direction-set") {
            if (n, q) != (1, 2) {
                return Err(HError::InvalidParameter("direction sets need n = 1, q = 2".into()));
            }
            let mut arcs = Vec::new();
            for part in a.split(',') {
                let bad = || HError::InvalidParameter(format!("bad arc '{part}' (expected lo:hi in degrees)"));
                let (lo, hi) = part.split_once(':').ok_or_else(bad)?;
                let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
                let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
                arcs.push((lo, hi));
            }
            return Ok(Self::directions(DirectionSet::from_degrees(&arcs)?));
        }
        Err(HError::InvalidParameter(format!("unknown relation '{name}'")))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Which diffeomorphisms the relation is invariant under (documentation only).
    pub fn invariance(&self) -> &'static str {
        match self.kind {
            RelationKind::Rank { .. } => "all diffeomorphisms of the source",
            RelationKind::Directions(_) => "none in general",
            RelationKind::Custom { .. } => "unspecified",
        }
    }

    /// Slack of `s`: positive inside.
    pub fn margin(&self, s: &JetPoint) -> f64 {
        match &self.kind {
            RelationKind::Rank { rank } => {
                let sv = singular_values(&s.jacobian());
                sv.get(rank - 1).copied().unwrap_or(0.0) / ((self.n * self.q) as f64).sqrt()
            }
            RelationKind::Directions(set) => {
                let j = s.jacobian();
                let (a, b) = (j[0][0], j[1][0]);
                let len = a.hypot(b);
                if len == 0.0 {
                    return 0.0;
                }
                let d = set.margin(b.atan2(a)).clamp(-FRAC_PI_2, FRAC_PI_2);
                len * d.sin() / 2f64.sqrt()
            }
            RelationKind::Custom { expr, .. } => {
                let len = Layout::get(self.n, self.r).len();
                let x: Vec<f64> = s
                    .components()
                    .iter()
                    .flat_map(|c| c.entries().take(len).collect::<Vec<_>>())
                    .collect();
                expr.eval(&x).unwrap_or(f64::NAN)
            }
        }
    }

    pub fn contains(&self, s: &JetPoint) -> bool {
        self.margin(s) > 0.0
    }
}

fn matrix(m: &[Vec<f64>]) -> DMatrix<f64> {
    let cols = m.first().map_or(0, Vec::len);
    DMatrix::from_fn(m.len(), cols, |i, j| m[i][j])
}

/// Singular values of a small dense matrix, largest first.
pub fn singular_values(m: &[Vec<f64>]) -> Vec<f64> {
    let mut sv: Vec<f64> = matrix(m).singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub(crate) fn determinant(m: &[Vec<f64>]) -> f64 {
    matrix(m).determinant()
}

/// Membership of a section's jets at sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalCheck {
    pub inside: Vec<bool>,
    pub margins: Vec<f64>,
    pub min_margin: f64,
    /// Lowest sample index attaining the minimum margin.
    pub worst_index: usize,
    /// min |det J| for square differentials.
    pub min_abs_det: Option<f64>,
}

impl FormalCheck {
    pub fn nodes(&self) -> usize {
        self.inside.len()
    }

    pub fn outside(&self) -> usize {
        self.inside.iter().filter(|b| !**b).count()
    }

    pub fn all_in(&self) -> bool {
        self.outside() == 0
    }
}

pub(crate) fn check_jets(jets: &[JetPoint], rel: &Relation) -> FormalCheck {
    let margins: Vec<f64> = jets.par_iter().map(|s| rel.margin(s)).collect();
    let inside = margins.iter().map(|&m| m > 0.0).collect();
    let (worst_index, min_margin) = margins
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bm), (i, m)| {
            if m < bm || (m.is_nan() && !bm.is_nan()) {
                (i, m)
            } else {
                (bi, bm)
            }
        });
    let min_abs_det = (rel.n == rel.q && rel.r >= 1).then(|| {
        jets.par_iter()
            .map(|s| determinant(&s.jacobian()).abs())
            .collect::<Vec<_>>()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    });
    FormalCheck {
        inside,
        margins,
        min_margin,
        worst_index,
        min_abs_det,
    }
}

pub(crate) fn sample_jets<S: Sampler + ?Sized>(f: &JetSection, samples: &S) -> Result<Vec<JetPoint>, HError> {
    (0..samples.len())
        .into_par_iter()
        .map(|i| f.jet(&samples.point(i)).map_err(HError::from))
        .collect()
}

/// Evaluates the relation on `f` at every sample point.
pub fn is_formal_solution<S: Sampler + ?Sized>(
    f: &JetSection,
    rel: &Relation,
    samples: &S,
) -> Result<FormalCheck, HError> {
    if f.n() != rel.n || f.q() != rel.q || f.r() < rel.r {
        return Err(HError::InvalidParameter(format!(
            "section in J^{}(R^{}, R^{}) against a relation in J^{}(R^{}, R^{})",
            f.r(),
            f.n(),
            f.q(),
            rel.r,
            rel.n,
            rel.q
        )));
    }
    Ok(check_jets(&sample_jets(f, samples)?, rel))
}
