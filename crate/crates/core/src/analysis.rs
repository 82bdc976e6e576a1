// Copyright 2026 bgl-sff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dip, ramp and plateau extraction from averaged curves, and parameter sweeps.

use rand_distr::{Distribution, StandardNormal};

use crate::ensemble::{run_ensemble, EnsembleSpec, Evaluator, SffCurve};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sff::{plateau_value, FilterSpec, PlateauMode};
use crate::spectral::DegeneracyClusters;

/// Centered moving geometric mean over `+-window_decades / 2` in `log10 t`.
///
/// Endpoints use truncated windows; `t = 0` points are left untouched.
pub fn smooth_curve<T: Real>(curve: &SffCurve<T>, window_decades: T) -> Result<SffCurve<T>> {
    if !(window_decades >= T::zero()) || !window_decades.is_finite() {
        return Err(Error::invalid(format!("smoothing window must be >= 0, got {window_decades}")));
    }
    let mut out = curve.clone();
    if window_decades == T::zero() {
        return Ok(out);
    }
    let half = window_decades * T::lit(0.5) * (T::one() + T::lit(1e-9));
    let tiny = T::lit(1e-300).max(T::eps() * T::eps() * T::eps());
    let logt: Vec<Option<T>> = curve.times.iter().map(|&t| (t > T::zero()).then(|| t.log10())).collect();
    let logf: Vec<T> = curve.mean.iter().map(|&f| f.max(tiny).ln()).collect();
    for i in 0..curve.len() {
        let Some(li) = logt[i] else { continue };
        let mut acc = T::zero();
        let mut n = 0usize;
        for j in 0..curve.len() {
            if let Some(lj) = logt[j] {
                if (lj - li).abs() <= half {
                    acc += logf[j];
                    n += 1;
                }
            }
        }
        out.mean[i] = (acc / T::from_usize_lossy(n)).exp();
    }
    out.set_meta("smoothing_window_decades", window_decades);
    Ok(out)
}

/// Location of the dip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dip<T: Real> {
    pub t_d: T,
    pub f_d: T,
    pub index: usize,
    /// The minimum sits on the first or last searched point.
    pub at_boundary: bool,
}

/// Global minimum for `t >= search_from`, earliest on ties.
pub fn find_dip<T: Real>(curve: &SffCurve<T>, search_from: T) -> Result<Dip<T>> {
    let first = curve
        .times
        .iter()
        .position(|&t| t >= search_from)
        .ok_or_else(|| Error::invalid(format!("search_from = {search_from} lies beyond the grid")))?;
    let mut best = first;
    for i in first..curve.len() {
        if curve.mean[i] < curve.mean[best] {
            best = i;
        }
    }
    Ok(Dip {
        t_d: curve.times[best],
        f_d: curve.mean[best],
        index: best,
        at_boundary: best == first || best + 1 == curve.len(),
    })
}

/// Earliest index after `dip_index` from which the curve stays within
/// `[f_p (1 - epsilon), f_p (1 + epsilon)]` to the end of the grid.
pub fn find_plateau_time<T: Real>(curve: &SffCurve<T>, f_p: T, epsilon: T, dip_index: usize) -> Result<(T, usize)> {
    if !(f_p > T::zero()) || !f_p.is_finite() {
        return Err(Error::invalid(format!("plateau value must be positive, got {f_p}")));
    }
    if !(epsilon > T::zero()) || !(epsilon < T::one()) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let lo = f_p * (T::one() - epsilon);
    let hi = f_p * (T::one() + epsilon);
    let inside = |i: usize| curve.mean[i] >= lo && curve.mean[i] <= hi;
    let not_saturated = || Error::NotSaturated { f_p: f_p.to_f64_lossy(), epsilon: epsilon.to_f64_lossy() };
    let n = curve.len();
    if dip_index + 1 >= n || !inside(n - 1) {
        return Err(not_saturated());
    }
    let mut k = n - 1;
    while k > dip_index + 1 && inside(k - 1) {
        k -= 1;
    }
    Ok((curve.times[k], k))
}

/// Plateau value the band is centered on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlateauReference<T: Real> {
    /// A precomputed value, e.g. from the plateau formula.
    Value(T),
    /// Arithmetic mean of the raw curve over the last `decades` of the grid.
    Tail { decades: T },
}

impl<T: Real> PlateauReference<T> {
    pub fn from_formula(clusters: &DegeneracyClusters<T>, beta: T, mode: PlateauMode) -> Self {
        PlateauReference::Value(plateau_value(clusters, beta, mode))
    }

    fn resolve(&self, curve: &SffCurve<T>) -> Result<T> {
        match *self {
            PlateauReference::Value(v) => Ok(v),
            PlateauReference::Tail { decades } => tail_average(curve, decades),
        }
    }

    fn label(&self) -> String {
        match self {
            PlateauReference::Value(v) => format!("value({v})"),
            PlateauReference::Tail { decades } => format!("tail({decades} decades)"),
        }
    }
}

/// Mean of the curve over `t >= t_max 10^{-decades}`.
pub fn tail_average<T: Real>(curve: &SffCurve<T>, decades: T) -> Result<T> {
    if !(decades > T::zero()) || curve.is_empty() {
        return Err(Error::invalid("tail average needs a positive span and a nonempty curve"));
    }
    let t_max = curve.times[curve.len() - 1];
    let from = t_max / T::lit(10.0).powf(decades);
    let tail: Vec<T> = curve.times.iter().zip(&curve.mean).filter(|(t, _)| **t >= from).map(|(_, f)| *f).collect();
    Ok(crate::scalar::pairwise_sum(&tail) / T::from_usize_lossy(tail.len()))
}

/// Knobs of the ramp extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig<T: Real> {
    pub window_decades: T,
    pub epsilon: T,
    /// Dip search starts here; `None` means the first positive grid time.
    pub search_from: Option<T>,
    pub plateau: PlateauReference<T>,
}

impl<T: Real> Default for AnalysisConfig<T> {
    fn default() -> Self {
        AnalysisConfig {
            window_decades: T::lit(0.5),
            epsilon: T::lit(0.1),
            search_from: None,
            plateau: PlateauReference::Tail { decades: T::one() },
        }
    }
}

/// Dip/plateau characterization of one curve. `ratio = t_p / t_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct RampMetrics<T: Real> {
    pub t_d: T,
    pub f_d: T,
    pub t_p: T,
    pub f_p: T,
    pub ratio: T,
    pub dip_index: usize,
    pub plateau_index: usize,
    pub window_decades: T,
    pub epsilon: T,
    pub plateau_source: String,
    /// `dip_at_boundary`, `no_ramp` (dip above the plateau).
    pub warnings: Vec<String>,
}

impl<T: Real> RampMetrics<T> {
    /// Depth of the correlation hole, `f_p / f_d`.
    pub fn depth(&self) -> T {
        self.f_p / self.f_d
    }

    pub fn resolved(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Smoothing, dip search, plateau reference and band entry in one call.
pub fn ramp_metrics<T: Real>(curve: &SffCurve<T>, cfg: &AnalysisConfig<T>) -> Result<RampMetrics<T>> {
    if curve.is_empty() {
        return Err(Error::invalid("empty curve"));
    }
    let smooth = smooth_curve(curve, cfg.window_decades)?;
    let search_from = cfg
        .search_from
        .or_else(|| curve.times.iter().copied().find(|&t| t > T::zero()))
        .ok_or_else(|| Error::invalid("curve has no positive times"))?;
    let dip = find_dip(&smooth, search_from)?;
    let f_p = cfg.plateau.resolve(curve)?;
    let mut warnings = Vec::new();
    if dip.at_boundary {
        warnings.push("dip_at_boundary".to_string());
    }
    if dip.f_d > f_p {
        warnings.push("no_ramp".to_string());
    }
    let (t_p, plateau_index) = find_plateau_time(&smooth, f_p, cfg.epsilon, dip.index)?;
    Ok(RampMetrics {
        t_d: dip.t_d,
        f_d: dip.f_d,
        t_p,
        f_p,
        ratio: t_p / dip.t_d,
        dip_index: dip.index,
        plateau_index,
        window_decades: cfg.window_decades,
        epsilon: cfg.epsilon,
        plateau_source: cfg.plateau.label(),
        warnings,
    })
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Gamma,
    /// Exponent of the power filter; needs a `Filtered(Power)` or `Bgl` template.
    Delta,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Gamma => "gamma",
            SweepParameter::Delta => "delta",
        }
    }
}

/// One swept value. Either `error` is set or both `curve` and `metrics` are.
#[derive(Debug, Clone)]
pub struct SweepEntry<T: Real> {
    pub value: T,
    pub curve: Option<SffCurve<T>>,
    pub metrics: Option<RampMetrics<T>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepResult<T: Real> {
    pub parameter: SweepParameter,
    pub entries: Vec<SweepEntry<T>>,
}

impl<T: Real> SweepResult<T> {
    /// Entry with the largest ratio among fully resolved metrics, earliest on ties.
    pub fn argmax_ratio(&self) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for (i, e) in self.entries.iter().enumerate() {
            if let Some(m) = e.metrics.as_ref().filter(|m| m.resolved()) {
                if best.is_none_or(|(_, r)| m.ratio > r) {
                    best = Some((i, m.ratio));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn ratios(&self) -> Vec<Option<T>> {
        self.entries.iter().map(|e| e.metrics.as_ref().map(|m| m.ratio)).collect()
    }
}

/// The template with `parameter` set to `value`.
pub fn specialize<T: Real>(template: &EnsembleSpec<T>, parameter: SweepParameter, value: T) -> Result<EnsembleSpec<T>>
where
    StandardNormal: Distribution<T>,
{
    let mut spec = template.clone();
    match parameter {
        SweepParameter::Gamma => {
            spec.gamma = value;
            if let Evaluator::Filtered(FilterSpec::Power { gamma, .. }) = &mut spec.evaluator {
                *gamma = value;
            }
        }
        SweepParameter::Delta => {
            let gamma = match &template.evaluator {
                Evaluator::Filtered(FilterSpec::Power { gamma, .. }) => *gamma,
                Evaluator::Bgl => template.gamma,
                _ => return Err(Error::invalid("a delta sweep needs the power filter or the bgl evaluator")),
            };
            spec.evaluator = Evaluator::Filtered(FilterSpec::Power { gamma, delta: value });
        }
    }
    Ok(spec)
}

/// Runs the ensemble at every value (same master seed, so the same disorder
/// realizations) and extracts ramp metrics. Failures are recorded per value.
pub fn sweep<T: Real>(
    template: &EnsembleSpec<T>,
    parameter: SweepParameter,
    values: &[T],
    cfg: &AnalysisConfig<T>,
) -> Result<SweepResult<T>>
where
    StandardNormal: Distribution<T>,
{
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    let mut entries = Vec::with_capacity(values.len());
    for &value in values {
        let spec = specialize(template, parameter, value)?;
        let mut entry = SweepEntry { value, curve: None, metrics: None, error: None };
        match run_ensemble(&spec) {
            Ok(mut curve) => {
                curve.set_meta("sweep_parameter", parameter.name());
                curve.set_meta("sweep_value", value);
                match ramp_metrics(&curve, cfg) {
                    Ok(m) => entry.metrics = Some(m),
                    Err(e) => entry.error = Some(e.to_string()),
                }
                entry.curve = Some(curve);
            }
            Err(Error::Resource(msg)) => return Err(Error::Resource(msg)),
            Err(e) => entry.error = Some(e.to_string()),
        }
        entries.push(entry);
    }
    Ok(SweepResult { parameter, entries })
}
