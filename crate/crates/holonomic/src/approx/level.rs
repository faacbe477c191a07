use std::sync::Arc;

use crate::jet::{
    jet_distance, jet_distance_masked, par_max, CubeNbhd, Diffeo, Grid, JetError, JetField, JetPoint, Sampler,
};
use crate::taylor::{SmoothStep, TruncatedSeries, UnivariateFn};
use crate::wiggle::{make_phi, make_shear, ShearDiffeo};

use super::family::FiberwiseFamily;
use super::ApproxError;

/// Adjacent pieces must agree to this absolute tolerance on slab interfaces.
pub const SEAM_TOLERANCE: f64 = 1e-9;

/// Share of the level thickness used as wiggle amplitude.
pub(crate) const AMPLITUDE_RATIO: f64 = 0.75;

/// One level of the construction in its own straight frame: the shear h and
/// the pieces G^i assembled over the slabs i/2N ≤ t ≤ (i+1)/2N.
pub struct LevelOutput {
    family: Arc<FiberwiseFamily>,
    n_osc: usize,
    amplitude: f64,
    shear: ShearDiffeo,
    chi: SmoothStep,
}

impl LevelOutput {
    pub fn new(family: Arc<FiberwiseFamily>, n_osc: usize, smoothness: usize) -> Result<Self, ApproxError> {
        let (k, l, n) = (family.k(), family.level(), family.n());
        let delta = family.delta();
        let phi = make_phi(n_osc, k, l, smoothness, family.is_relative())?;
        let amplitude = AMPLITUDE_RATIO * delta;
        let shear = make_shear(phi, amplitude, n, k)?;
        Ok(LevelOutput {
            family,
            n_osc,
            amplitude,
            shear,
            chi: SmoothStep::new("chi", smoothness, -delta / 2.0, delta / 2.0),
        })
    }

    pub fn family(&self) -> &Arc<FiberwiseFamily> {
        &self.family
    }

    pub fn level(&self) -> usize {
        self.family.level()
    }

    pub fn n_osc(&self) -> usize {
        self.n_osc
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn shear(&self) -> &ShearDiffeo {
        &self.shear
    }

    /// Coordinate index of t = x_{k−l+1}.
    pub fn t_axis(&self) -> usize {
        self.family.k() - self.family.level()
    }

    pub fn pieces(&self) -> usize {
        2 * self.n_osc
    }

    /// Slab containing `t`, clamped to the cube.
    pub fn slab(&self, t: f64) -> usize {
        let m = self.pieces();
        ((t * m as f64).floor().max(0.0) as usize).min(m - 1)
    }

    fn node(&self, i: usize) -> f64 {
        i as f64 / self.pieces() as f64
    }

    fn index(&self, y: &[f64], i: usize) -> Vec<f64> {
        let mut idx = y.to_vec();
        idx.push(self.node(i));
        idx
    }

    /// G^i_y at `v`: F^i for even i, the x_n-blend of F^{i−1} and F^{i+1} for odd i.
    pub fn piece_jet(&self, i: usize, y: &[f64], v: &[f64]) -> Result<JetPoint, JetError> {
        if i.is_multiple_of(2) {
            return self.family.member_jet(&self.index(y, i), v);
        }
        let n = self.family.n();
        let r = self.family.r();
        let c = self.chi.taylor_coeffs(v[n - 1], r);
        let constant = c[1..].iter().all(|&x| x == 0.0);
        if constant && c[0] == 1.0 {
            return self.family.member_jet(&self.index(y, i + 1), v);
        }
        if constant && c[0] == 0.0 {
            return self.family.member_jet(&self.index(y, i - 1), v);
        }
        let upper = self.family.member_jet(&self.index(y, i + 1), v)?;
        let lower = self.family.member_jet(&self.index(y, i - 1), v)?;
        let x = TruncatedSeries::variable(v, r, n - 1).compose_univariate(&c);
        let comps = upper
            .components()
            .iter()
            .zip(lower.components())
            .map(|(a, b)| {
                let mut d = a.clone();
                d.axpy(-1.0, b);
                let mut out = b.clone();
                out.axpy(1.0, &(&x * &d));
                out
            })
            .collect();
        JetPoint::new(comps)
    }

    /// The assembled section at `v`, with the index y given explicitly.
    pub(crate) fn piece_jet_at(&self, y: &[f64], v: &[f64]) -> Result<JetPoint, JetError> {
        self.piece_jet(self.slab(v[self.t_axis()]), y, v)
    }

    /// Worst mismatch between the two pieces meeting at each interface
    /// t = i/2N, sampled on the wiggled cube and at x_n offsets ±τ from it.
    pub fn seam_check(&self, cube: &Grid, tau: f64) -> Result<SeamReport, ApproxError> {
        let n = self.family.n();
        let ta = self.t_axis();
        let collapsed = collapse_axis(cube, ta);
        let per = collapsed.len();
        let interfaces = self.pieces() - 1;
        let offsets = [-tau, 0.0, tau];
        let total = per * interfaces * offsets.len();
        let point = |idx: usize| {
            let (rest, o) = (idx / offsets.len(), idx % offsets.len());
            let (i, g) = (rest / per + 1, rest % per);
            let mut u = collapsed.point(g);
            u[ta] = self.node(i);
            u.resize(n, 0.0);
            u[n - 1] = offsets[o];
            (i, self.shear.apply(&u))
        };
        let worst = par_max(total, |idx| {
            let (i, p) = point(idx);
            let y = &p[..ta];
            jet_distance(&self.piece_jet(i - 1, y, &p)?, &self.piece_jet(i, y, &p)?)
        })?;
        let (i, p) = point(worst.index);
        Ok(SeamReport {
            value: worst.value,
            t: self.node(i),
            phase: self.shear.offset(&p) / self.amplitude,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeamReport {
    pub value: f64,
    pub t: f64,
    pub phase: f64,
}

impl JetField for LevelOutput {
    fn n(&self) -> usize {
        self.family.n()
    }
    fn q(&self) -> usize {
        self.family.q()
    }
    fn r(&self) -> usize {
        self.family.r()
    }
    fn jet(&self, v: &[f64]) -> Result<JetPoint, JetError> {
        self.piece_jet_at(&v[..self.t_axis()], v)
    }
    fn is_holonomic(&self) -> bool {
        true
    }
    fn describe(&self) -> String {
        format!("level {} with N = {} and {}", self.level(), self.n_osc, self.shear)
    }
}

/// The grid with axis `a` reduced to a single node.
fn collapse_axis(cube: &Grid, a: usize) -> Grid {
    let mut axes = cube.axes.clone();
    axes[a] = crate::jet::Axis::fixed(0.0);
    Grid::new(axes)
}

/// σ(N): the largest jet distance between consecutive members F^{i−1}, F^i on
/// samples of U_{i−1} ∩ U_i. `cube` supplies the nodes of the y and fiber
/// coordinates; t runs over t_{i−1}, the midpoint and t_i, and x_n over
/// −δ/2, 0, δ/2.
pub fn sigma(family: &FiberwiseFamily, n_osc: usize, cube: &Grid, mask: Option<&[bool]>) -> Result<f64, ApproxError> {
    let (k, l, n) = (family.k(), family.level(), family.n());
    let delta = family.delta();
    let pieces = 2 * n_osc;
    let spacing = 1.0 / pieces as f64;
    if spacing / 2.0 >= delta {
        return Err(ApproxError::EmptyOverlap { level: l, n_osc, delta });
    }
    let ta = k - l;
    let collapsed = collapse_axis(cube, ta);
    let per = collapsed.len();
    let ts = [0.0, 0.5, 1.0];
    let xs = [-delta / 2.0, 0.0, delta / 2.0];
    let nbhd = CubeNbhd::new(k, n, delta);
    let total = per * pieces * ts.len() * xs.len();
    let worst = par_max(total, |idx| -> Result<f64, ApproxError> {
        let (rest, xi) = (idx / xs.len(), idx % xs.len());
        let (rest, ti) = (rest / ts.len(), rest % ts.len());
        let (i, g) = (rest / per + 1, rest % per);
        let lo = (i - 1) as f64 * spacing;
        let hi = i as f64 * spacing;
        let mut v = collapsed.point(g);
        v[ta] = lo + ts[ti] * spacing;
        v.resize(n, 0.0);
        v[n - 1] = xs[xi];
        let y = &v[..ta];
        if !nbhd.in_fiber_nbhd(&v, l, y, lo) || !nbhd.in_fiber_nbhd(&v, l, y, hi) {
            return Ok(0.0);
        }
        let mut a = y.to_vec();
        a.push(lo);
        let mut b = y.to_vec();
        b.push(hi);
        Ok(jet_distance_masked(
            &family.member_jet(&a, &v)?,
            &family.member_jet(&b, &v)?,
            mask,
        )?)
    })?;
    Ok(worst.value)
}

/// Level output together with the measured interpolation error
/// max_i ‖G^i − F^i‖ over samples of U_i.
pub struct Interpolation {
    pub output: Arc<LevelOutput>,
    pub error: f64,
}

/// Builds the interpolating pieces for all odd i and measures them against
/// F^i at t = i/2N, x_n ∈ [−δ/2, δ/2]. Fails with [`ApproxError::IncreaseN`]
/// when the error is not below `eps`.
pub fn interpolate(
    family: Arc<FiberwiseFamily>,
    n_osc: usize,
    eps: f64,
    cube: &Grid,
    smoothness: usize,
    mask: Option<&[bool]>,
) -> Result<Interpolation, ApproxError> {
    let out = LevelOutput::new(family.clone(), n_osc, smoothness)?;
    let n = family.n();
    let delta = family.delta();
    let ta = out.t_axis();
    let collapsed = collapse_axis(cube, ta);
    let per = collapsed.len();
    let xs = [-delta / 2.0, -delta / 4.0, 0.0, delta / 4.0, delta / 2.0];
    let total = per * n_osc * xs.len();
    let worst = par_max(total, |idx| -> Result<f64, ApproxError> {
        let (rest, xi) = (idx / xs.len(), idx % xs.len());
        let (j, g) = (rest / per, rest % per);
        let i = 2 * j + 1;
        let mut v = collapsed.point(g);
        v[ta] = out.node(i);
        v.resize(n, 0.0);
        v[n - 1] = xs[xi];
        let y = &v[..ta];
        let idx_i = out.index(y, i);
        Ok(jet_distance_masked(
            &out.piece_jet(i, y, &v)?,
            &family.member_jet(&idx_i, &v)?,
            mask,
        )?)
    })?;
    if !(worst.value < eps) {
        return Err(ApproxError::IncreaseN {
            n_osc,
            measured: worst.value,
            target: eps,
        });
    }
    Ok(Interpolation {
        output: Arc::new(out),
        error: worst.value,
    })
}
