//! Holonomic approximation over a cube: fiberwise families, interpolation,
//! the inductive wiggling construction, and the parametric version.

mod engine;
mod family;
mod level;
mod parametric;
mod report;
mod sampling;

use thiserror::Error;

use crate::jet::{JetError, MapRep};
use crate::wiggle::{WiggleError, DEFAULT_SMOOTHNESS};

pub use engine::{approximate_over_cube, inductional_step, ApproxResult, LevelAttempt, LevelInput};
pub use family::{base_fiberwise, FiberwiseFamily};
pub use level::{interpolate, sigma, Interpolation, LevelOutput, SeamReport, SEAM_TOLERANCE};
pub use parametric::{
    approximate_parametric, lift_family, project_jet, z_free_mask, ParametricFamily, ParametricResult,
};
pub use report::{ErrorReport, LevelSummary, MetricsRow, ResidualCheck, Status, METRICS_HEADER};
pub use sampling::TubeSampler;

/// Holonomic germ that the section agrees with near the boundary of the
/// cube, and the width of the collar over which family members are blended
/// into it.
#[derive(Clone)]
pub struct RelativeData {
    pub germ: MapRep,
    pub collar: f64,
}

/// Engine parameters.
#[derive(Clone)]
pub struct EngineConfig {
    pub delta: f64,
    pub eps: f64,
    pub relative: Option<RelativeData>,
    /// Differentiability class of θ_N and of the interpolation ramp.
    pub smoothness: usize,
    /// First N tried at every level.
    pub n_floor: usize,
    pub n_cap: usize,
    /// Minimum nodes per cube axis for sup-norm sampling.
    pub grid_nodes: usize,
    /// Also measure the final error on the half-step refined samples.
    pub refine: bool,
    /// Layout ranks counted by the norm; `None` counts every entry.
    pub mask: Option<Vec<bool>>,
}

impl EngineConfig {
    pub fn new(delta: f64, eps: f64) -> Self {
        EngineConfig {
            delta,
            eps,
            relative: None,
            smoothness: DEFAULT_SMOOTHNESS,
            n_floor: 4,
            n_cap: 4096,
            grid_nodes: 41,
            refine: true,
            mask: None,
        }
    }

    pub fn relative(mut self, germ: MapRep, collar: f64) -> Self {
        self.relative = Some(RelativeData { germ, collar });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApproxError {
    #[error("the cube must have positive codimension: k = {k} is not below n = {n}")]
    Codimension { k: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Wiggle(#[from] WiggleError),
    #[error("level {level}: neighbourhoods of adjacent fibers do not overlap for N = {n_osc} and delta = {delta}")]
    EmptyOverlap { level: usize, n_osc: usize, delta: f64 },
    #[error("interpolation error {measured} exceeds {target} at N = {n_osc}; increase N")]
    IncreaseN { n_osc: usize, measured: f64, target: f64 },
    #[error("level {level}: no N up to {cap} met the error target")]
    NCapExceeded {
        level: usize,
        cap: usize,
        report: Box<ErrorReport>,
    },
    #[error("level {level}, N = {n_osc}: seam mismatch {value} at t = {t} (wiggle phase {phase})")]
    SeamMismatch {
        level: usize,
        n_osc: usize,
        value: f64,
        t: f64,
        phase: f64,
        report: Box<ErrorReport>,
    },
    #[error("measured error {measured} is not below eps = {eps}")]
    EpsNotMet {
        measured: f64,
        eps: f64,
        report: Box<ErrorReport>,
    },
}

impl ApproxError {
    /// The partial report carried by engine failures.
    pub fn report(&self) -> Option<&ErrorReport> {
        match self {
            ApproxError::NCapExceeded { report, .. }
            | ApproxError::SeamMismatch { report, .. }
            | ApproxError::EpsNotMet { report, .. } => Some(report),
            _ => None,
        }
    }
}
