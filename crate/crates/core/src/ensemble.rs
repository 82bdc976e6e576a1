// Copyright 2026 bgl-sff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Disorder ensembles: realizations in parallel, deterministic reduction.
//!
//! Realization `i` is seeded with [`derive_seed`]`(master_seed, i)`, results
//! are collected in index order, and the pointwise reduction is a pairwise sum
//! over that order. The output therefore does not depend on the number of
//! worker threads.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dynamics::{coherent_gibbs, integrate_bgl_pure, overlap, OdeConfig};
use crate::error::{Error, Result};
use crate::hamiltonians::{goe_instance, syk_instance, GoeParams, HamiltonianInstance, SykParams};
use crate::scalar::{pairwise_sum, Real};
use crate::sff::{plateau_value, ClosedForm, FilterSpec, PlateauMode};
use crate::spectral::{cluster_degeneracies, eigensystem_of, spectrum_of, Spectrum};

/// Largest dimension accepted by the `O(d^2)` dephasing-with-jumps evaluator.
pub const DEPHASING_DIM_CAP: usize = 2048;

/// Logarithmically spaced output times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T: Real> {
    pub t_min: T,
    pub t_max: T,
    pub points_per_decade: usize,
    pub include_zero: bool,
}

impl<T: Real> Default for TimeGrid<T> {
    /// `[1e-1, 1e6]` at 16 points per decade.
    fn default() -> Self {
        TimeGrid { t_min: T::lit(0.1), t_max: T::lit(1e6), points_per_decade: 16, include_zero: false }
    }
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t_min: T, t_max: T, points_per_decade: usize) -> Result<Self> {
        let g = TimeGrid { t_min, t_max, points_per_decade, include_zero: false };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > T::zero()) || !self.t_max.is_finite() || !(self.t_max > self.t_min) {
            return Err(Error::invalid(format!(
                "time grid needs 0 < t_min < t_max, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if self.points_per_decade == 0 {
            return Err(Error::invalid("points_per_decade must be >= 1"));
        }
        Ok(())
    }

    /// `t_min 10^{k / points_per_decade}` up to and including `t_max`.
    pub fn times(&self) -> Vec<T> {
        let ppd = T::from_usize_lossy(self.points_per_decade);
        let decades = (self.t_max / self.t_min).log10();
        let steps = (decades * ppd - T::lit(1e-9)).ceil().to_usize().unwrap_or(0).max(1);
        let mut out = Vec::with_capacity(steps + 2);
        if self.include_zero {
            out.push(T::zero());
        }
        for k in 0..steps {
            let t = self.t_min * T::lit(10.0).powf(T::from_usize_lossy(k) / ppd);
            if t < self.t_max {
                out.push(t);
            }
        }
        out.push(self.t_max);
        out
    }
}

/// Where the dephasing operator of the ODE evaluator comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XSource<T: Real> {
    /// The independent GOE `X` of [`Model::GoeWithX`].
    FromModel,
    /// `X = c H0`; commutes with `H0`.
    ScaledH0(T),
}

/// ODE evaluator settings; the output grid is the ensemble grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSettings<T: Real> {
    pub x_source: XSource<T>,
    pub dt: T,
    pub renormalize_every: usize,
}

/// How each realization's form factor is computed.
#[derive(Debug, Clone)]
pub enum Evaluator<T: Real> {
    Unitary,
    Bgl,
    DephasingJumps,
    Filtered(FilterSpec<T>),
    /// Integrates the nonlinear equation for the coherent Gibbs state.
    /// At `gamma = 0` the evolution is unitary and is evaluated exactly.
    Ode(OdeSettings<T>),
}

impl<T: Real> Evaluator<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Evaluator::Unitary => "unitary",
            Evaluator::Bgl => "bgl",
            Evaluator::DephasingJumps => "dephasing_jumps",
            Evaluator::Filtered(_) => "filtered",
            Evaluator::Ode(_) => "ode",
        }
    }
}

/// Disorder model. Seeds inside the parameters are ignored; each realization
/// uses its derived seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model<T: Real> {
    Syk(SykParams<T>),
    Goe(GoeParams<T>),
    /// GOE `H0` from stream 0 and an independent GOE `X` (scale `x_scale`) from stream 1.
    GoeWithX {
        h0: GoeParams<T>,
        x_scale: T,
    },
}

impl<T: Real> Model<T>
where
    StandardNormal: Distribution<T>,
{
    pub fn dim(&self) -> usize {
        match self {
            Model::Syk(p) => p.dim(),
            Model::Goe(p) | Model::GoeWithX { h0: p, .. } => p.dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Syk(p) => p.validate(),
            Model::Goe(p) => p.validate(),
            Model::GoeWithX { h0, x_scale } => {
                h0.validate()?;
                GoeParams { scale: *x_scale, ..*h0 }.validate()
            }
        }
    }

    /// Hamiltonian of one realization.
    pub fn hamiltonian(&self, seed: u64) -> Result<HamiltonianInstance<T>> {
        match self {
            Model::Syk(p) => syk_instance(&SykParams { seed, ..*p }),
            Model::Goe(p) | Model::GoeWithX { h0: p, .. } => goe_instance(&GoeParams { seed, ..*p }, 0),
        }
    }

    /// Dephasing operator of one realization, in the computational basis.
    pub fn x_operator(&self, seed: u64) -> Result<HamiltonianInstance<T>> {
        match self {
            Model::GoeWithX { h0, x_scale } => goe_instance(&GoeParams { seed, scale: *x_scale, ..*h0 }, 1),
            _ => Err(Error::invalid("this model has no independent X operator")),
        }
    }

    fn describe(&self, meta: &mut Vec<(String, String)>) {
        let mut put = |k: &str, v: String| meta.push((k.to_string(), v));
        match self {
            Model::Syk(p) => {
                put("model", "syk".into());
                put("n_majorana", p.n_majorana.to_string());
                put("j_scale", p.j_scale.to_string());
            }
            Model::Goe(p) => {
                put("model", "goe".into());
                put("dim", p.dim.to_string());
                put("scale", p.scale.to_string());
            }
            Model::GoeWithX { h0, x_scale } => {
                put("model", "goe_with_x".into());
                put("dim", h0.dim.to_string());
                put("scale", h0.scale.to_string());
                put("x_scale", x_scale.to_string());
            }
        }
    }
}

/// A complete ensemble job.
#[derive(Debug, Clone)]
pub struct EnsembleSpec<T: Real> {
    pub model: Model<T>,
    pub n_realizations: usize,
    pub master_seed: u64,
    pub evaluator: Evaluator<T>,
    pub beta: T,
    pub gamma: T,
    pub grid: TimeGrid<T>,
    /// Worker threads; `None` uses the ambient rayon pool. Never affects results.
    pub workers: Option<usize>,
}

impl<T: Real> EnsembleSpec<T>
where
    StandardNormal: Distribution<T>,
{
    pub fn new(model: Model<T>, evaluator: Evaluator<T>, beta: T, gamma: T) -> Self {
        EnsembleSpec {
            model,
            n_realizations: 1,
            master_seed: 0,
            evaluator,
            beta,
            gamma,
            grid: TimeGrid::default(),
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.grid.validate()?;
        if self.n_realizations == 0 {
            return Err(Error::invalid("n_realizations must be >= 1"));
        }
        if !(self.beta >= T::zero()) || !self.beta.is_finite() {
            return Err(Error::invalid(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        if !(self.gamma >= T::zero()) || !self.gamma.is_finite() {
            return Err(Error::invalid(format!("gamma must be finite and >= 0, got {}", self.gamma)));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("worker count must be >= 1"));
        }
        let d = self.model.dim();
        match &self.evaluator {
            Evaluator::DephasingJumps if d > DEPHASING_DIM_CAP => Err(Error::Resource(format!(
                "dephasing with jumps is O(d^2) per time; d = {d} exceeds {DEPHASING_DIM_CAP}"
            ))),
            Evaluator::Filtered(f) => f.validate(d),
            Evaluator::Ode(o) => {
                if matches!(o.x_source, XSource::FromModel) && !matches!(self.model, Model::GoeWithX { .. }) {
                    return Err(Error::invalid("x_source = model requires the goe_with_x model"));
                }
                OdeConfig { renormalize_every: o.renormalize_every, ..OdeConfig::new(o.dt, self.grid.times()) }
                    .validate()
            }
            _ => Ok(()),
        }
    }

    /// Ordered key/value echo of the job, for file preambles.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut m = Vec::new();
        m.push(("version".to_string(), env!("CARGO_PKG_VERSION").to_string()));
        self.model.describe(&mut m);
        let mut put = |k: &str, v: String| m.push((k.to_string(), v));
        put("evaluator", self.evaluator.name().into());
        match &self.evaluator {
            Evaluator::Filtered(f) => put("filter", format!("{f:?}")),
            Evaluator::Ode(o) => {
                let src = match o.x_source {
                    XSource::FromModel => "model".to_string(),
                    XSource::ScaledH0(c) => format!("scaled_h0({c})"),
                };
                put("x_source", src);
                put("dt", o.dt.to_string());
                put("renormalize_every", o.renormalize_every.to_string());
            }
            _ => {}
        }
        put("beta", self.beta.to_string());
        put("gamma", self.gamma.to_string());
        put("n_realizations", self.n_realizations.to_string());
        put("master_seed", self.master_seed.to_string());
        put("t_min", self.grid.t_min.to_string());
        put("t_max", self.grid.t_max.to_string());
        put("points_per_decade", self.grid.points_per_decade.to_string());
        put("include_zero", self.grid.include_zero.to_string());
        m
    }
}

/// Ensemble-averaged form factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SffCurve<T: Real> {
    pub times: Vec<T>,
    pub mean: Vec<T>,
    pub stderr: Vec<T>,
    pub n_ok: usize,
    pub n_failed: usize,
    /// `(realization index, message)` for each skipped realization.
    pub failures: Vec<(usize, String)>,
    pub metadata: Vec<(String, String)>,
}

impl<T: Real> SffCurve<T> {
    /// A curve with unit weight and zero error bars, e.g. from a single spectrum.
    pub fn from_values(times: Vec<T>, mean: Vec<T>) -> Result<Self> {
        if times.len() != mean.len() || times.is_empty() {
            return Err(Error::invalid("times and values must be nonempty and of equal length"));
        }
        let n = times.len();
        Ok(SffCurve {
            times,
            mean,
            stderr: vec![T::zero(); n],
            n_ok: 1,
            n_failed: 0,
            failures: Vec::new(),
            metadata: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.metadata.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.metadata.push((key.to_string(), value)),
        }
    }
}

/// SplitMix64 finalizer (Steele, Lea, Flood 2014); a bijection on `u64`.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `index`: `splitmix64(splitmix64(master) ^ index)`.
///
/// Injective in `index` for a fixed master, and platform independent.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

/// Pointwise mean and standard error (`sample std / sqrt(n)`) over curves of
/// equal length, summed pairwise in the given order.
pub fn reduce_curves<T: Real>(curves: &[Vec<T>]) -> Result<(Vec<T>, Vec<T>)> {
    let n = curves.len();
    if n == 0 {
        return Err(Error::invalid("nothing to reduce"));
    }
    let len = curves[0].len();
    if curves.iter().any(|c| c.len() != len) {
        return Err(Error::invalid("curves have different lengths"));
    }
    let nf = T::from_usize_lossy(n);
    let mut mean = Vec::with_capacity(len);
    let mut stderr = Vec::with_capacity(len);
    let mut column = vec![T::zero(); n];
    for k in 0..len {
        for (slot, c) in column.iter_mut().zip(curves) {
            *slot = c[k];
        }
        let m = pairwise_sum(&column) / nf;
        let se = if n > 1 {
            for x in column.iter_mut() {
                *x = (*x - m) * (*x - m);
            }
            (pairwise_sum(&column) / (nf - T::one())).sqrt() / nf.sqrt()
        } else {
            T::zero()
        };
        mean.push(m);
        stderr.push(se);
    }
    Ok((mean, stderr))
}

/// Runs `f` on a dedicated pool of `workers` threads, or inline on the ambient pool.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Resource(format!("cannot start {k} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn evaluate_realization<T: Real>(spec: &EnsembleSpec<T>, times: &[T], index: usize) -> Result<Vec<T>>
where
    StandardNormal: Distribution<T>,
{
    let seed = derive_seed(spec.master_seed, index as u64);
    let h = spec.model.hamiltonian(seed)?;
    let closed = match &spec.evaluator {
        Evaluator::Unitary => Some(ClosedForm::Unitary),
        Evaluator::Bgl => Some(ClosedForm::Bgl),
        Evaluator::DephasingJumps => Some(ClosedForm::DephasingJumps),
        Evaluator::Filtered(f) => Some(ClosedForm::Filtered(f.clone())),
        Evaluator::Ode(_) if spec.gamma == T::zero() => Some(ClosedForm::Unitary),
        Evaluator::Ode(_) => None,
    };
    if let Some(form) = closed {
        let s = spectrum_of(&h)?;
        return times.iter().map(|&t| form.evaluate(&s, spec.beta, spec.gamma, t)).collect();
    }
    let Evaluator::Ode(settings) = &spec.evaluator else { unreachable!() };
    let eig = eigensystem_of(&h)?;
    let x = match settings.x_source {
        XSource::FromModel => spec.model.x_operator(seed)?.matrix,
        XSource::ScaledH0(c) => &h.matrix * crate::scalar::creal(c),
    };
    let x_e = eig.to_energy_basis(&x);
    let psi = coherent_gibbs(&eig.spectrum, spec.beta)?;
    let cfg =
        OdeConfig { renormalize_every: settings.renormalize_every, ..OdeConfig::new(settings.dt, times.to_vec()) };
    let traj = integrate_bgl_pure(&psi, &eig.spectrum, &x_e, spec.gamma, &cfg)?;
    traj.states.iter().map(|st| overlap(&psi, st)).collect()
}

/// Averages the chosen form factor over `n_realizations` disorder draws.
///
/// Failed realizations are skipped and reported; the job fails only when all do.
pub fn run_ensemble<T: Real>(spec: &EnsembleSpec<T>) -> Result<SffCurve<T>>
where
    StandardNormal: Distribution<T>,
{
    spec.validate()?;
    let times = spec.grid.times();
    let results: Vec<Result<Vec<T>>> = with_workers(spec.workers, || {
        (0..spec.n_realizations).into_par_iter().map(|i| evaluate_realization(spec, &times, i)).collect()
    })?;

    let mut ok = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(Error::Resource(msg)) => return Err(Error::Resource(msg)),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    if ok.is_empty() {
        return Err(Error::AllRealizationsFailed(spec.n_realizations));
    }
    let (mean, stderr) = reduce_curves(&ok)?;
    let mut metadata = spec.metadata();
    metadata.push(("n_ok".into(), ok.len().to_string()));
    metadata.push(("n_failed".into(), failures.len().to_string()));
    Ok(SffCurve { times, mean, stderr, n_ok: ok.len(), n_failed: failures.len(), failures, metadata })
}

/// Spectra of every realization, in index order.
pub fn realization_spectra<T: Real>(
    model: &Model<T>,
    master_seed: u64,
    n: usize,
    workers: Option<usize>,
) -> Result<Vec<Spectrum<T>>>
where
    StandardNormal: Distribution<T>,
{
    model.validate()?;
    with_workers(workers, || {
        (0..n)
            .into_par_iter()
            .map(|i| spectrum_of(&model.hamiltonian(derive_seed(master_seed, i as u64))?))
            .collect::<Result<Vec<_>>>()
    })?
}

/// Ensemble average of the plateau formula, clustering each spectrum with
/// relative tolerance `tol`.
pub fn ensemble_plateau<T: Real>(spectra: &[Spectrum<T>], beta: T, mode: PlateauMode, tol: T) -> Result<T> {
    if spectra.is_empty() {
        return Err(Error::invalid("no spectra"));
    }
    let values: Vec<T> = spectra.iter().map(|s| plateau_value(&cluster_degeneracies(s, tol), beta, mode)).collect();
    Ok(pairwise_sum(&values) / T::from_usize_lossy(values.len()))
}
