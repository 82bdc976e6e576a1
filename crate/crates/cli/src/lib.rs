// Copyright 2026 bgl-sff Contributors
// SPDX-License-Identifier: Apache-2.0

//! The `bglsff` command-line tool as a library, so tests can drive it in-process.
//!
//! Exit codes: 0 success, 2 usage or input errors, 3 numerical failures,
//! 4 resource and I/O errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csvio;
pub mod plot;
pub mod run;

pub use config::{parse_config, Job, ParseOutcome, RunConfig};
pub use run::{execute, main_with_args};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] bgl_sff::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use bgl_sff::Error as E;
        match self {
            CliError::Usage(_) | CliError::Parse(_) => 2,
            CliError::Io(_) => 4,
            CliError::Core(E::InvalidArgument(_)) => 2,
            CliError::Core(E::Resource(_)) => 4,
            CliError::Core(_) => 3,
        }
    }
}
