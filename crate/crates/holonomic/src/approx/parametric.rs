use std::sync::Arc;

use crate::jet::{
    jet_distance_masked, par_max, Axis, FormalSection, Grid, JetError, JetField, JetPoint, JetSection, MapRep, Sampler,
};
use crate::taylor::{Expr, Layout, MultiIndex, TruncatedSeries};

use super::engine::{approximate_over_cube, level_delta, slab_nodes, ApproxResult};
use super::sampling::TubeSampler;
use super::{ApproxError, EngineConfig, RelativeData};

/// A family F_z of formal sections of J^r(R^n, R^q), z ∈ I^m. Entry
/// expressions and the germ are written over x1..xn followed by z1..zm.
///
/// Lifted coordinates are (x1..xk, z1..zm, x_{k+1}..xn), so the cube
/// I^k × I^m comes first and the normal directions last.
#[derive(Clone)]
pub struct ParametricFamily {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub r: usize,
    /// `entries[j][rank]` for the ranks of the (n, r) layout.
    pub entries: Vec<Vec<Expr>>,
    /// Holonomic germ G(x, z) that F_z agrees with near the boundary of I^k × I^m.
    pub germ: Vec<Expr>,
}

impl ParametricFamily {
    pub fn q(&self) -> usize {
        self.entries.len()
    }

    fn check(&self) -> Result<(), ApproxError> {
        let len = Layout::get(self.n, self.r).len();
        let vars = self.n + self.m;
        let bad = |m: String| Err(ApproxError::InvalidParameter(m));
        if self.entries.is_empty() || self.entries.iter().any(|row| row.len() != len) {
            return bad(format!("each output needs {len} entries"));
        }
        if self.germ.len() != self.entries.len() {
            return bad("germ and section have different numbers of outputs".into());
        }
        if self
            .entries
            .iter()
            .flatten()
            .chain(&self.germ)
            .any(|e| e.arity() > vars)
        {
            return bad(format!("expressions may only use x1..x{} and z1..z{}", self.n, self.m));
        }
        if self.k >= self.n {
            return Err(ApproxError::Codimension { k: self.k, n: self.n });
        }
        Ok(())
    }

    /// Variable map from (x, z) order to lifted order.
    fn to_lifted(&self) -> Vec<usize> {
        let (k, m) = (self.k, self.m);
        (0..self.n)
            .map(|i| if i < k { i } else { m + i })
            .chain(k..k + m)
            .collect()
    }

    /// The germ as a map on the lifted space.
    pub fn lifted_germ(&self) -> Result<MapRep, ApproxError> {
        let map = self.to_lifted();
        Ok(MapRep::from_exprs(
            self.n + self.m,
            self.germ.iter().map(|e| e.remap_vars(&map)).collect(),
        )?)
    }
}

/// Lifted section over R^{n+m}: entries without z derivatives are those of
/// F_z, the others are exact z-derivatives of them.
struct Lifted {
    n: usize,
    m: usize,
    r: usize,
    // entries over the lifted variables, indexed as in ParametricFamily
    entries: Vec<Vec<Expr>>,
    // per lifted rank: (rank of the x part, rank of the z part inside that
    // entry's expansion, factor turning the expansion coefficient into ours)
    table: Vec<(usize, usize, f64)>,
}

impl Lifted {
    fn new(n: usize, m: usize, k: usize, r: usize, entries: Vec<Vec<Expr>>) -> Self {
        let small = Layout::get(n, r);
        let big = Layout::get(n + m, r);
        let table = big
            .indices()
            .iter()
            .enumerate()
            .map(|(rank, beta)| {
                let ex: Vec<usize> = beta.exponents().collect();
                let ax: Vec<usize> = ex[..k].iter().chain(&ex[k + m..]).copied().collect();
                let ax = MultiIndex::new(&ax);
                let az: Vec<usize> = (0..n + m)
                    .map(|i| if (k..k + m).contains(&i) { ex[i] } else { 0 })
                    .collect();
                let az = MultiIndex::new(&az);
                let xr = small.rank(&ax).expect("x part lies in the small layout");
                let zr = Layout::get(n + m, r - ax.order())
                    .rank(&az)
                    .expect("z part fits the remaining order");
                (xr, zr, az.factorial() / big.factorial(rank))
            })
            .collect();
        Lifted {
            n,
            m,
            r,
            entries,
            table,
        }
    }
}

impl JetField for Lifted {
    fn n(&self) -> usize {
        self.n + self.m
    }
    fn q(&self) -> usize {
        self.entries.len()
    }
    fn r(&self) -> usize {
        self.r
    }

    fn jet(&self, v: &[f64]) -> Result<JetPoint, JetError> {
        let (n, m, r) = (self.n, self.m, self.r);
        if v.len() != n + m {
            return Err(JetError::Shape(format!(
                "point in R^{} for a section over R^{}",
                v.len(),
                n + m
            )));
        }
        let small = Layout::get(n, r);
        let mut comps = Vec::with_capacity(self.entries.len());
        for row in &self.entries {
            let expansions = small
                .indices()
                .iter()
                .zip(row)
                .map(|(alpha, e)| e.taylor_expand(v, r - alpha.order()))
                .collect::<Result<Vec<_>, _>>()?;
            let coeffs: Vec<f64> = self
                .table
                .iter()
                .map(|&(xr, zr, f)| expansions[xr].coeffs()[zr] * f)
                .collect();
            comps.push(TruncatedSeries::from_coeffs(v, r, &coeffs)?);
        }
        JetPoint::new(comps)
    }

    fn describe(&self) -> String {
        format!("lift of a {}-parameter family over R^{}", self.m, self.n)
    }
}

/// Lift of the family to J^r(R^{n+m}, R^q).
pub fn lift_family(fam: &ParametricFamily) -> Result<JetSection, ApproxError> {
    fam.check()?;
    let map = fam.to_lifted();
    let entries = fam
        .entries
        .iter()
        .map(|row| row.iter().map(|e| e.remap_vars(&map)).collect())
        .collect();
    Ok(JetSection::Field(Arc::new(Lifted::new(
        fam.n, fam.m, fam.k, fam.r, entries,
    ))))
}

/// Ranks of the lifted (n + m, r) layout without z derivatives.
pub fn z_free_mask(n: usize, k: usize, m: usize, r: usize) -> Vec<bool> {
    Layout::get(n + m, r)
        .indices()
        .iter()
        .map(|b| (k..k + m).all(|i| b.get(i) == 0))
        .collect()
}

/// π: forgets the z directions of a lifted jet, returning z and the jet over x.
pub fn project_jet(j: &JetPoint, k: usize, m: usize) -> Result<(Vec<f64>, JetPoint), JetError> {
    let big_n = j.n();
    let n = big_n - m;
    let r = j.r();
    let v = j.basepoint();
    let x: Vec<f64> = v[..k].iter().chain(&v[k + m..]).copied().collect();
    let small = Layout::get(n, r);
    let big = Layout::get(big_n, r);
    let comps = j
        .components()
        .iter()
        .map(|c| {
            let coeffs: Vec<f64> = small
                .indices()
                .iter()
                .map(|a| {
                    let a: Vec<usize> = a.exponents().collect();
                    let mut ex = a[..k].to_vec();
                    ex.extend(std::iter::repeat_n(0, m));
                    ex.extend(&a[k..]);
                    c.coeffs()[big.rank(&MultiIndex::new(&ex)).expect("same order")]
                })
                .collect();
            TruncatedSeries::from_coeffs(&x, r, &coeffs)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((v[k..k + m].to_vec(), JetPoint::new(comps)?))
}

/// Output of the parametric engine: the lifted result and its slices.
pub struct ParametricResult {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub result: ApproxResult,
    /// The input family lifted (equal to the input when m = 0).
    pub lifted: JetSection,
}

impl ParametricResult {
    /// Lifted point of (z, x).
    pub fn lifted_point(&self, z: &[f64], x: &[f64]) -> Vec<f64> {
        x[..self.k].iter().chain(z).chain(&x[self.k..]).copied().collect()
    }

    /// F̃_z at x.
    pub fn section_at(&self, z: &[f64], x: &[f64]) -> Result<JetPoint, JetError> {
        let v = self.lifted_point(z, x);
        Ok(project_jet(&self.result.section.jet(&v)?, self.k, self.m)?.1)
    }

    /// h_z(x).
    pub fn shear_at(&self, z: &[f64], x: &[f64]) -> Vec<f64> {
        let v = self.lifted_point(z, x);
        let mut y = x.to_vec();
        y[self.n - 1] += self.result.shear.offset(&v);
        y
    }
}

/// Parametric holonomic approximation over I^k with parameters in I^m, in
/// relative mode around the family's germ with the given collar.
pub fn approximate_parametric(
    fam: &ParametricFamily,
    collar: f64,
    cfg: &EngineConfig,
) -> Result<ParametricResult, ApproxError> {
    fam.check()?;
    let (n, m, k, r) = (fam.n, fam.m, fam.k, fam.r);
    let mut cfg = cfg.clone();
    cfg.relative = Some(RelativeData {
        germ: fam.lifted_germ()?,
        collar,
    });
    if m == 0 {
        let section = JetSection::formal(FormalSection::new(n, r, fam.entries.clone())?);
        let result = approximate_over_cube(&section, k, &cfg)?;
        return Ok(ParametricResult {
            m,
            n,
            k,
            result,
            lifted: section,
        });
    }
    let lifted = lift_family(fam)?;
    check_boundary(&lifted, fam, cfg.delta)?;
    cfg.mask = Some(z_free_mask(n, k, m, r));
    let mut result = approximate_over_cube(&lifted, k + m, &cfg)?;

    let kk = k + m;
    let n_max = result.report.levels.iter().map(|l| l.n_osc).max().unwrap_or(1);
    let margin = 1.0 / (8.0 * n_max as f64);
    let nodes: Vec<usize> = (0..kk)
        .map(|a| {
            let l = kk - a;
            result
                .report
                .levels
                .get(l - 1)
                .map_or(cfg.grid_nodes, |s| cfg.grid_nodes.max(slab_nodes(s.n_osc)))
        })
        .collect();
    let cube = Grid::new(nodes.iter().map(|&c| Axis::new(0.0, 1.0, c)).collect());
    let tau = level_delta(cfg.delta, kk) / 8.0;
    let tube = TubeSampler::new(cube, n + m, tau, result.shear.clone());
    let shear = &result.shear;
    let z_near = |u: &[f64], w: f64| u[k..kk].iter().any(|&c| c.min(1.0 - c) <= w);
    let identity_near_ends = par_max(tube.len(), |i| {
        let u = tube.straight(i);
        Ok::<f64, JetError>(if z_near(&u, margin) {
            shear.offset(&u).abs()
        } else {
            0.0
        })
    })?
    .value;
    let mask = cfg.mask.as_deref();
    let section = &result.section;
    let endpoint = par_max(tube.len(), |i| {
        let u = tube.straight(i);
        if !z_near(&u, 0.0) {
            return Ok(0.0);
        }
        let p = tube.point(i);
        jet_distance_masked(&section.jet(&p)?, &lifted.jet(&p)?, mask)
    })?
    .value;
    let rep = &mut result.report;
    rep.push_extra("parametric.m", m);
    rep.push_extra("parametric.displacement", rep.displacement);
    rep.push_extra("parametric.identity_near_ends", identity_near_ends);
    rep.push_extra("parametric.eps_measured", rep.eps_measured);
    rep.push_extra("parametric.endpoint_error", endpoint);
    Ok(ParametricResult {
        m,
        n,
        k,
        result,
        lifted,
    })
}

/// The lift must match the germ on the faces z ∈ {0, 1} of the parameter cube.
fn check_boundary(lifted: &JetSection, fam: &ParametricFamily, delta: f64) -> Result<(), ApproxError> {
    let (n, m, k) = (fam.n, fam.m, fam.k);
    let germ = JetSection::holonomic(fam.lifted_germ()?, fam.r);
    let mut axes = vec![Axis::new(0.0, 1.0, 11); k];
    axes.extend((0..m).map(|_| Axis::new(0.0, 1.0, 2)));
    axes.extend((k..n).map(|_| Axis::new(-delta / 2.0, delta / 2.0, 3)));
    let grid = Grid::new(axes);
    let worst = par_max(grid.len(), |i| {
        let p = grid.point(i);
        crate::jet::jet_distance(&lifted.jet(&p)?, &germ.jet(&p)?)
    })?;
    if !(worst.value <= 1e-9) {
        return Err(ApproxError::InvalidParameter(format!(
            "family is not holonomic at the parameter boundary: differs from the germ by {} at {:?}",
            worst.value,
            grid.point(worst.index)
        )));
    }
    Ok(())
}
