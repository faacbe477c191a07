//! Truncated multivariate Taylor arithmetic and the expression language.

mod expr;
mod multiindex;
mod parse;
mod series;
mod smoothstep;

use thiserror::Error;

pub use expr::{Builtin, Expr, UnivariateFn};
pub use multiindex::{Layout, MultiIndex, MAX_ORDER, MAX_VARS};
pub use parse::{parse_expr, ExprParser, ParseError};
pub use series::{compose_multi, compose_series, substitute, TruncatedSeries, SINGULARITY_GUARD};
pub use smoothstep::{ramp_polynomial, SmoothStep};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaylorError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{message} in '{node}'")]
    Eval { message: String, node: String },
    #[error("basepoint mismatch: expected {expected:?}, got {got:?}")]
    BasepointMismatch { expected: Vec<f64>, got: Vec<f64> },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("malformed series text: {0}")]
    Format(String),
}

/// Taylor expansion of an expression at a point.
pub fn taylor_expand(f: &Expr, basepoint: &[f64], r: usize) -> Result<TruncatedSeries, TaylorError> {
    f.taylor_expand(basepoint, r)
}
