use std::sync::Arc;

use crate::jet::{
    holonomy_residual, jet_distance, par_max, sup_distance_masked, taylor_section, Axis, CubeNbhd, Diffeo, Grid,
    JetError, JetSection, Sampler,
};
use crate::wiggle::ShearDiffeo;

use super::family::{base_fiberwise, FiberwiseFamily};
use super::level::{interpolate, sigma, LevelOutput, SeamReport, SEAM_TOLERANCE};
use super::report::{ErrorReport, LevelSummary, MetricsRow, ResidualCheck, Status};
use super::sampling::TubeSampler;
use super::{ApproxError, EngineConfig};

/// Largest half-step lattice refined everywhere; beyond it only a window
/// around the coarse maximizer is refined.
pub const REFINE_FULL_LIMIT: usize = 1 << 20;
const REFINE_WINDOW_CELLS: usize = 4;

/// Thickness used at level `l`: δ/4^{l−1}.
pub(crate) fn level_delta(delta: f64, l: usize) -> f64 {
    delta / 4f64.powi(l as i32 - 1)
}

/// What one level needs besides its N.
pub struct LevelInput {
    pub family: Arc<FiberwiseFamily>,
    /// F̃^{l−1} in the original coordinates (F itself for l = 1).
    pub previous: JetSection,
    /// Composition H_{l−1} of the shears of the earlier levels.
    pub frame: ShearDiffeo,
    /// Sample nodes per cube axis; the entry of this level's t axis is raised
    /// to 4N + 1 when needed.
    pub axis_nodes: Vec<usize>,
    /// Nodes per cube axis for the holonomy residual.
    pub residual_nodes: Vec<usize>,
    /// Largest N of the earlier levels.
    pub n_max: usize,
    pub tau: f64,
}

/// Measurements of one level at one N.
pub struct LevelAttempt {
    pub n_osc: usize,
    pub sigma: f64,
    pub interpolation_error: f64,
    /// sup |F̃^l − F̃^{l−1}| on the tube around H_l(I^k).
    pub error: f64,
    pub seam: SeamReport,
    pub residual: f64,
    pub output: Arc<LevelOutput>,
    /// F̃^l in the original coordinates.
    pub section: JetSection,
    /// H_l.
    pub shear: ShearDiffeo,
    pub samples: usize,
    /// The error was only measured on the sparse screening grid, where it
    /// already exceeded the target; `error` is then a lower bound.
    pub screened: bool,
}

/// Nodes on a t axis with N oscillations: every seam, slab midpoint and
/// quarter phase of the wiggle.
pub(crate) fn slab_nodes(n_osc: usize) -> usize {
    4 * n_osc + 1
}

fn cube_grid(nodes: &[usize]) -> Grid {
    Grid::new(nodes.iter().map(|&c| Axis::new(0.0, 1.0, c)).collect())
}

fn residual_step(n_max: usize, tau: f64) -> f64 {
    (1e-2f64).min(1.0 / (64.0 * n_max as f64)).min(tau / 2.0)
}

/// Runs the level described by `input` with N = `n_osc`: σ(N), the
/// interpolating pieces, the shear, the seam check and the level error.
pub fn inductional_step(input: &LevelInput, n_osc: usize, cfg: &EngineConfig) -> Result<LevelAttempt, ApproxError> {
    run_step(input, n_osc, cfg, None)
}

/// With `screen = Some(target)` the error is first measured on a grid that
/// keeps only `grid_nodes` on the axes of other levels; the full grid is
/// skipped when that alone exceeds the target.
fn run_step(
    input: &LevelInput,
    n_osc: usize,
    cfg: &EngineConfig,
    screen: Option<f64>,
) -> Result<LevelAttempt, ApproxError> {
    let fam = &input.family;
    let (k, n, l) = (fam.k(), fam.n(), fam.level());
    let ta = k - l;
    let mask = cfg.mask.as_deref();
    let mut nodes = input.axis_nodes.clone();
    nodes[ta] = nodes[ta].max(slab_nodes(n_osc));
    let cube = cube_grid(&nodes);
    let thin = |v: &[usize]| -> Vec<usize> {
        v.iter()
            .enumerate()
            .map(|(a, &c)| if a == ta { c } else { c.min(cfg.grid_nodes) })
            .collect()
    };
    // per-interface quantities only need the other axes at base resolution
    let coarse = cube_grid(&thin(&nodes));

    let sigma = sigma(fam, n_osc, &coarse, mask)?;
    let interp = interpolate(fam.clone(), n_osc, f64::INFINITY, &coarse, cfg.smoothness, mask)?;
    let output = interp.output;
    let seam = output.seam_check(&coarse, input.tau)?;

    let local: Arc<dyn Diffeo> = Arc::new(input.frame.clone());
    let field = JetSection::Field(output.clone());
    let section = if input.frame.terms().is_empty() {
        field
    } else {
        JetSection::Transported {
            diffeo: local,
            inner: Arc::new(field),
        }
    };
    let shear = input.frame.compose(output.shear());

    let mut rnodes = input.residual_nodes.clone();
    rnodes[ta] = rnodes[ta].max(2 * n_osc + 1);
    let step = residual_step(input.n_max.max(n_osc), input.tau);
    let axes: Vec<usize> = (ta..n).collect();

    if let Some(target) = screen {
        let sparse = TubeSampler::new(coarse.clone(), n, input.tau, shear.clone());
        let lower = sup_distance_masked(&section, &input.previous, &sparse, mask)?.value;
        if lower > target {
            let rs = TubeSampler::new(cube_grid(&thin(&rnodes)), n, 0.0, shear.clone());
            let residual = holonomy_residual(&section, &rs, step, &axes)?.value;
            return Ok(LevelAttempt {
                n_osc,
                sigma,
                interpolation_error: interp.error,
                error: lower,
                seam,
                residual,
                output,
                section,
                shear,
                samples: sparse.len(),
                screened: true,
            });
        }
    }

    let tube = TubeSampler::new(cube, n, input.tau, shear.clone());
    let error = sup_distance_masked(&section, &input.previous, &tube, mask)?.value;
    let rs = TubeSampler::new(cube_grid(&rnodes), n, 0.0, shear.clone());
    let residual = holonomy_residual(&section, &rs, step, &axes)?.value;

    Ok(LevelAttempt {
        n_osc,
        sigma,
        interpolation_error: interp.error,
        error,
        seam,
        residual,
        output,
        section,
        shear,
        samples: tube.len(),
        screened: false,
    })
}

/// Holonomic approximation of `f` near a wiggled copy of I^k ⊂ R^n.
pub struct ApproxResult {
    /// F̃, holonomic near H(I^k).
    pub section: JetSection,
    /// The composed shear H = h_1 ∘ … ∘ h_k.
    pub shear: ShearDiffeo,
    pub levels: Vec<Arc<LevelOutput>>,
    pub report: ErrorReport,
}

fn params(f: &JetSection, k: usize, cfg: &EngineConfig) -> Vec<(String, String)> {
    let mut p = vec![
        ("n".to_string(), f.n().to_string()),
        ("k".into(), k.to_string()),
        ("r".into(), f.r().to_string()),
        ("q".into(), f.q().to_string()),
        ("delta".into(), cfg.delta.to_string()),
        ("eps".into(), cfg.eps.to_string()),
        ("smoothness".into(), cfg.smoothness.to_string()),
        ("n_floor".into(), cfg.n_floor.to_string()),
        ("n_cap".into(), cfg.n_cap.to_string()),
        ("grid_nodes".into(), cfg.grid_nodes.to_string()),
    ];
    match &cfg.relative {
        Some(rel) => {
            p.push(("relative".into(), "true".into()));
            p.push(("collar".into(), rel.collar.to_string()));
        }
        None => p.push(("relative".into(), "false".into())),
    }
    if let Some(m) = &cfg.mask {
        p.push(("masked_entries".into(), m.iter().filter(|b| !**b).count().to_string()));
    }
    p
}

fn validate(f: &JetSection, k: usize, cfg: &EngineConfig) -> Result<(), ApproxError> {
    let n = f.n();
    if k >= n {
        return Err(ApproxError::Codimension { k, n });
    }
    let bad = |m: String| Err(ApproxError::InvalidParameter(m));
    if !(cfg.delta > 0.0 && cfg.delta.is_finite()) {
        return bad(format!("delta = {} must be positive", cfg.delta));
    }
    if !(cfg.eps > 0.0 && cfg.eps.is_finite()) {
        return bad(format!("eps = {} must be positive", cfg.eps));
    }
    if cfg.n_floor == 0 || cfg.n_cap < cfg.n_floor {
        return bad(format!("N range {}..{} is empty", cfg.n_floor, cfg.n_cap));
    }
    if cfg.grid_nodes < 2 {
        return bad("at least two grid nodes per axis".into());
    }
    if let Some(rel) = &cfg.relative {
        if !(rel.collar > 0.0 && rel.collar <= 0.5) {
            return bad(format!("collar {} outside (0, 1/2]", rel.collar));
        }
        if rel.germ.n() != n || rel.germ.q() != f.q() {
            return bad("germ dimensions differ from the section".into());
        }
    }
    if let Some(m) = &cfg.mask {
        if m.len() != crate::taylor::Layout::get(n, f.r()).len() {
            return bad("mask length differs from the jet layout".into());
        }
    }
    Ok(())
}

fn row(level: usize, a: &LevelAttempt) -> MetricsRow {
    MetricsRow {
        level,
        n_osc: a.n_osc,
        sigma: a.sigma,
        eps_measured: a.error,
        seam_max: a.seam.value,
        holonomy_residual: a.residual,
        displacement: a.shear.displacement_bound(),
    }
}

/// Top-level driver: runs levels 1..=k, doubling N at every level until
/// the level error meets its share of ε, and measures the result.
pub fn approximate_over_cube(f: &JetSection, k: usize, cfg: &EngineConfig) -> Result<ApproxResult, ApproxError> {
    validate(f, k, cfg)?;
    let n = f.n();
    let mut report = ErrorReport::new(params(f, k, cfg));
    if k == 0 {
        let origin = vec![0.0; n];
        let section = JetSection::holonomic(taylor_section(&f.jet(&origin)?), f.r());
        report.eps_measured = 0.0;
        return Ok(ApproxResult {
            section,
            shear: ShearDiffeo::identity(n, 0),
            levels: Vec::new(),
            report,
        });
    }
    let mask = cfg.mask.as_deref();
    let tau = level_delta(cfg.delta, k) / 8.0;
    report.tube = tau;
    let mut input = LevelInput {
        family: Arc::new(base_fiberwise(f, k, cfg.delta, cfg.relative.clone())),
        previous: f.clone(),
        frame: ShearDiffeo::identity(n, k),
        axis_nodes: vec![cfg.grid_nodes; k],
        residual_nodes: vec![cfg.grid_nodes; k],
        n_max: 1,
        tau,
    };
    let mut levels = Vec::new();
    let mut spent = 0.0;
    let mut seam_max = 0.0f64;

    for l in 1..=k {
        let delta_l = level_delta(cfg.delta, l);
        let target = (cfg.eps - spent) / (k - l + 1) as f64 / 2.0;
        let mut accepted = None;
        let mut n_osc = cfg.n_floor;
        while n_osc <= cfg.n_cap {
            let overlap = 1.0 / (4.0 * n_osc as f64) < delta_l;
            let collar_ok = cfg.relative.as_ref().is_none_or(|rel| n_osc as f64 * rel.collar >= 2.0);
            if overlap && collar_ok {
                let a = run_step(&input, n_osc, cfg, Some(target))?;
                report.rows.push(row(l, &a));
                if !(a.seam.value <= SEAM_TOLERANCE) {
                    report.status = Status::SeamMismatch;
                    report.seam_max = a.seam.value;
                    report.shear = a.shear.to_string();
                    return Err(ApproxError::SeamMismatch {
                        level: l,
                        n_osc,
                        value: a.seam.value,
                        t: a.seam.t,
                        phase: a.seam.phase,
                        report: Box::new(report),
                    });
                }
                if !a.screened && a.error <= target {
                    accepted = Some(a);
                    break;
                }
            }
            n_osc *= 2;
        }
        let Some(a) = accepted else {
            report.status = Status::NCapExceeded;
            report.shear = input.frame.to_string();
            return Err(ApproxError::NCapExceeded {
                level: l,
                cap: cfg.n_cap,
                report: Box::new(report),
            });
        };
        spent += a.error;
        seam_max = seam_max.max(a.seam.value);
        report.levels.push(LevelSummary {
            level: l,
            n_osc: a.n_osc,
            delta: delta_l,
            amplitude: a.output.amplitude(),
            sigma: a.sigma,
            interpolation_error: a.interpolation_error,
            error: a.error,
            target,
            seam_max: a.seam.value,
            holonomy_residual: a.residual,
        });
        let ta = k - l;
        input.axis_nodes[ta] = input.axis_nodes[ta].max(slab_nodes(a.n_osc));
        input.residual_nodes[ta] = input.residual_nodes[ta].max(2 * a.n_osc + 1);
        input.n_max = input.n_max.max(a.n_osc);
        levels.push(a.output.clone());
        if l < k {
            input.family = Arc::new(FiberwiseFamily::pulled(a.output.clone(), level_delta(cfg.delta, l + 1)));
        }
        input.previous = a.section;
        input.frame = a.shear;
    }

    let section = input.previous;
    let shear = input.frame;
    let cube = cube_grid(&input.axis_nodes);
    let tube = TubeSampler::new(cube, n, tau, shear.clone());
    report.samples = tube.len();
    report.seam_max = seam_max;
    report.shear = shear.to_string();
    let coarse = sup_distance_masked(&section, f, &tube, mask)?;
    report.eps_measured = coarse.value;
    if cfg.refine {
        let fine = tube.refined();
        let fine = if fine.len() <= REFINE_FULL_LIMIT {
            report.push_extra("eps_refined_scope", "full");
            fine
        } else {
            report.push_extra("eps_refined_scope", "window");
            tube.refined_window(coarse.index, REFINE_WINDOW_CELLS)
        };
        report.eps_measured_refined = Some(sup_distance_masked(&section, f, &fine, mask)?.value);
    }

    let step = residual_step(input.n_max, tau);
    let rs = TubeSampler::new(cube_grid(&input.residual_nodes), n, 0.0, shear.clone());
    let axes: Vec<usize> = (0..n).collect();
    report.residual = Some(ResidualCheck {
        step,
        coarse: holonomy_residual(&section, &rs, step, &axes)?.value,
        fine: holonomy_residual(&section, &rs, step / 2.0, &axes)?.value,
    });

    report.displacement_bound = shear.displacement_bound();
    report.displacement = par_max(tube.len(), |i| {
        Ok::<f64, JetError>(shear.offset(&tube.straight(i)).abs())
    })?
    .value;
    let nbhd = CubeNbhd::new(k, n, cfg.delta);
    report.inside_domain = par_max(tube.len(), |i| {
        Ok::<f64, JetError>(if nbhd.contains(&tube.point(i)) { 0.0 } else { 1.0 })
    })?
    .value
        == 0.0;

    let margin = 1.0 / (8.0 * input.n_max as f64);
    let near_boundary = |i: usize| {
        let u = tube.straight(i);
        u[..k].iter().any(|&c| c.min(1.0 - c) <= margin)
    };
    report.phi_boundary_max = par_max(tube.len(), |i| {
        Ok::<f64, JetError>(if near_boundary(i) {
            shear.offset(&tube.straight(i)).abs()
        } else {
            0.0
        })
    })?
    .value;
    if cfg.relative.is_some() {
        report.boundary_fidelity = Some(
            par_max(tube.len(), |i| {
                if !near_boundary(i) {
                    return Ok(0.0);
                }
                let p = tube.point(i);
                jet_distance(&section.jet(&p)?, &f.jet(&p)?)
            })?
            .value,
        );
    }

    if !(report.eps_measured < cfg.eps) {
        report.status = Status::EpsNotMet;
        return Err(ApproxError::EpsNotMet {
            measured: report.eps_measured,
            eps: cfg.eps,
            report: Box::new(report),
        });
    }
    report.status = Status::Success;
    Ok(ApproxResult {
        section,
        shear,
        levels,
        report,
    })
}
