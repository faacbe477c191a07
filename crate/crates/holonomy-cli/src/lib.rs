//! Scenario files, their execution, and figure output for the `holonomy` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod run;
pub mod scenario;
pub mod svg;

use std::fmt::Display;

use thiserror::Error;

pub use run::{run, sweep_csv, Artifacts};
pub use scenario::Scenario;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad scenario file, bad flags, impossible parameters.
    #[error("input error: {0}")]
    Input(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    /// Library errors raised while building inputs count as input errors.
    pub fn engine_input(err: impl Display) -> Self {
        CliError::Input(err.to_string())
    }

    pub fn io(path: impl Display, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_string(),
            source,
        }
    }

    /// 1 for input problems, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Io { .. } => 2,
        }
    }
}
