//! Jets over cube neighbourhoods: jet points, maps, sections, and the
//! sampled norms used to compare them.

mod domain;
mod map;
mod measure;
mod point;
mod section;

pub use domain::{Axis, CubeNbhd, Grid, Mapped, Sampler};
pub use map::{
    compose_jet, image_point, jet_of, taylor_section, Chain, Diffeo, Inverse, MapRep, SmoothMap, Translation,
};
pub use measure::{holonomy_residual, par_max, sup_distance, sup_distance_masked, Worst};
pub use point::{jet_distance, jet_distance_masked, JetPoint};
pub use section::{FormalSection, JetField, JetSection};

use crate::taylor::TaylorError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JetError {
    #[error(transparent)]
    Taylor(#[from] TaylorError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("jets live over different points {a:?} and {b:?}")]
    BasepointMismatch { a: Vec<f64>, b: Vec<f64> },
    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),
}
