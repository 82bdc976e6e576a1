// Copyright 2026 bgl-sff Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("filter vanishes on the whole spectrum at t = {t}")]
    DegenerateFilter { t: f64 },
    #[error("evolution filtered out all diagonal weight (normalization {norm:e})")]
    DegenerateEvolution { norm: f64 },
    #[error("integration failed at t = {t}: trace drift {drift:e} per step exceeds {limit:e}; use a smaller dt")]
    IntegrationFailure { t: f64, drift: f64, limit: f64 },
    #[error("curve never settles within the plateau band (f_p = {f_p:e}, epsilon = {epsilon})")]
    NotSaturated { f_p: f64, epsilon: f64 },
    #[error("all {0} realizations failed")]
    AllRealizationsFailed(usize),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
