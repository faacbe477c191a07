//! Open relations invariant under diffeomorphisms, over model manifolds:
//! formal solutions, compressions, the solution pipeline, directed curves.

mod compress;
mod directed;
mod relation;
mod solve;

use thiserror::Error;

use crate::approx::ApproxError;
use crate::jet::JetError;
use crate::taylor::TaylorError;
use crate::wiggle::WiggleError;

pub use compress::{make_compression, CompressionIsotopy, Core, Model, Squeeze};
pub use directed::{directed_curve, CurveFrame, DirectedConfig, DirectedReport, DirectedStep, TangentHomotopy};
pub use relation::{is_formal_solution, singular_values, DirectionSet, FormalCheck, Relation, RelationKind};
pub use solve::{solve_open_invariant, FrameCheck, SolutionReport, SolveConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("core must have positive codimension and fix the trailing coordinates: {0}")]
    Core(String),
    #[error("formal solution margin {margin} is below the required {required}")]
    MarginTooSmall { margin: f64, required: f64 },
    #[error("approximation left the relation at {outside} of {nodes} samples (min margin {margin})")]
    LeftRelation { outside: usize, nodes: usize, margin: f64 },
    #[error("homotopy step of {angle} rad needs more than {cap} pieces below pi/4")]
    StepTooLarge { angle: f64, cap: usize },
    #[error("step {step}: no neighbourhood radius keeps the tangent directions admissible")]
    MarginExhausted { step: usize },
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Wiggle(#[from] WiggleError),
    #[error(transparent)]
    Taylor(#[from] TaylorError),
}
