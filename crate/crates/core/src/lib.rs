// Copyright 2026 bgl-sff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Fidelity-based spectral form factors of chaotic Hamiltonians under
//! balanced gain and loss, spectral filtering and energy dephasing.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`). The `*64`
//! and `*32` aliases below fix the scalar for application code.
//!
//! Module layout follows the pipeline: [`hamiltonians`] builds SYK and GOE
//! matrices, [`spectral`] diagonalizes them, [`sff`] evaluates closed-form
//! form factors, [`dynamics`] propagates states, [`ensemble`] averages over
//! disorder and [`analysis`] extracts dip and plateau times.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod hamiltonians;
pub mod scalar;
pub mod sff;
pub mod spectral;

pub use analysis::{
    find_dip, find_plateau_time, ramp_metrics, smooth_curve, sweep, tail_average, AnalysisConfig, Dip,
    PlateauReference, RampMetrics, SweepEntry, SweepParameter, SweepResult,
};
pub use dynamics::{
    coherent_gibbs, evolve_bgl_closed, evolve_pure_closed, fidelity, integrate_bgl_ode, integrate_bgl_ode_energy_basis,
    integrate_bgl_pure, mean_energy, overlap, purity, Basis, ButcherTableau, DensityMatrix, OdeConfig, PureTrajectory,
    StateVector, Trajectory, TrajectoryRow, WFunction,
};
pub use ensemble::{
    derive_seed, ensemble_plateau, realization_spectra, reduce_curves, run_ensemble, EnsembleSpec, Evaluator, Model,
    OdeSettings, SffCurve, TimeGrid, XSource,
};
pub use error::{Error, Result};
pub use hamiltonians::{
    build_goe_hamiltonian, build_majorana_set, build_syk_hamiltonian, goe_instance, syk_instance, GoeParams,
    HamiltonianInstance, MajoranaSet, ModelTag, Provenance, SykCouplings, SykParams,
};
pub use scalar::{CMatrix, CVector, Real};
pub use sff::{
    plateau_finite_time, plateau_value, sff_bgl, sff_dephasing_jumps, sff_filtered, sff_unitary, sff_via_kernel,
    ClosedForm, FilterSpec, KernelEstimate, PlateauMode,
};
pub use spectral::{
    cluster_degeneracies, diagonalize, eigensystem_of, partition_function, spectrum_of, DegeneracyClusters,
    EigenSystem, Spectrum,
};

pub type Spectrum64 = Spectrum<f64>;
pub type Spectrum32 = Spectrum<f32>;
pub type Hamiltonian64 = HamiltonianInstance<f64>;
pub type Hamiltonian32 = HamiltonianInstance<f32>;
pub type EigenSystem64 = EigenSystem<f64>;
pub type Clusters64 = DegeneracyClusters<f64>;
pub type Filter64 = FilterSpec<f64>;
pub type StateVector64 = StateVector<f64>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type OdeConfig64 = OdeConfig<f64>;
pub type TimeGrid64 = TimeGrid<f64>;
pub type EnsembleSpec64 = EnsembleSpec<f64>;
pub type SffCurve64 = SffCurve<f64>;
pub type SffCurve32 = SffCurve<f32>;
pub type RampMetrics64 = RampMetrics<f64>;
pub type SweepResult64 = SweepResult<f64>;
pub type AnalysisConfig64 = AnalysisConfig<f64>;
