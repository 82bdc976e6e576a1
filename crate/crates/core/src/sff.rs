// Copyright 2026 bgl-sff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Closed-form spectral form factors of a single spectrum.
//!
//! Every evaluator is the fidelity `<psi_beta| rho_t |psi_beta>` of the
//! coherent Gibbs state and therefore lies in `[0, 1]`. The unitary, BGL and
//! filtered forms share one stabilized routine:
//!
//! ```text
//! F_t = |sum_n e^{-(beta + i t) E_n} g_n|^2 / ( Z(beta) sum_j e^{-beta E_j} g_j^2 )
//! ```
//!
//! with `g_n = 1` (unitary), `g_n = exp(-gamma t E_n^2)` (BGL) or a general
//! filter. Exponents are shifted by their maximum before exponentiation.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::scalar::{cis, max_of, norm_sqr, Real};
use crate::spectral::{DegeneracyClusters, Spectrum};

/// Spectral filter `g(E) >= 0`.
#[derive(Clone)]
pub enum FilterSpec<T: Real> {
    /// `g = 1`.
    None,
    /// `g(E) = exp(-gamma t |E|^delta)`; `delta = 2` is the BGL filter.
    Power { gamma: T, delta: T },
    /// `g(E) = 1 / (1 + gamma t E^2)`, same leading term as the Gaussian.
    Lorentzian { gamma: T },
    /// Time-independent values `g(E_n)` aligned with the sorted spectrum.
    Table(Vec<T>),
    /// Arbitrary `(E, t) -> g`.
    Function(Arc<dyn Fn(T, T) -> T + Send + Sync>),
}

impl<T: Real> fmt::Debug for FilterSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterSpec::None => write!(f, "None"),
            FilterSpec::Power { gamma, delta } => write!(f, "Power {{ gamma: {gamma}, delta: {delta} }}"),
            FilterSpec::Lorentzian { gamma } => write!(f, "Lorentzian {{ gamma: {gamma} }}"),
            FilterSpec::Table(v) => write!(f, "Table({} values)", v.len()),
            FilterSpec::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl<T: Real> FilterSpec<T> {
    pub fn power(gamma: T, delta: T) -> Self {
        FilterSpec::Power { gamma, delta }
    }

    /// Whether the filter strength grows with `t`.
    pub fn time_coupled(&self) -> bool {
        matches!(self, FilterSpec::Power { .. } | FilterSpec::Lorentzian { .. } | FilterSpec::Function(_))
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            FilterSpec::None | FilterSpec::Function(_) => Ok(()),
            FilterSpec::Power { gamma, delta } => {
                if !(*gamma >= T::zero()) || !(*delta >= T::zero()) {
                    return Err(Error::invalid("power filter needs gamma >= 0 and delta >= 0"));
                }
                Ok(())
            }
            FilterSpec::Lorentzian { gamma } => {
                if !(*gamma >= T::zero()) {
                    return Err(Error::invalid("Lorentzian filter needs gamma >= 0"));
                }
                Ok(())
            }
            FilterSpec::Table(v) => {
                if v.len() != dim {
                    return Err(Error::invalid(format!("filter table has {} values for a spectrum of {dim}", v.len())));
                }
                if v.iter().any(|g| !(*g >= T::zero()) || !g.is_finite()) {
                    return Err(Error::invalid("filter values must be finite and nonnegative"));
                }
                Ok(())
            }
        }
    }

    /// `ln g(E_n)` at time `t`; `-inf` where the filter vanishes.
    fn log_value(&self, n: usize, e: T, t: T) -> Result<T> {
        let neg_inf = T::lit(f64::NEG_INFINITY);
        let ln = |g: T| if g > T::zero() { g.ln() } else { neg_inf };
        Ok(match self {
            FilterSpec::None => T::zero(),
            FilterSpec::Power { gamma, delta } => -(*gamma * t * abs_pow(e, *delta)),
            FilterSpec::Lorentzian { gamma } => -(T::one() + *gamma * t * e * e).ln(),
            FilterSpec::Table(v) => ln(v[n]),
            FilterSpec::Function(f) => {
                let g = f(e, t);
                if !(g >= T::zero()) || !g.is_finite() {
                    return Err(Error::invalid(format!("filter returned {g} at E = {e}")));
                }
                ln(g)
            }
        })
    }
}

/// `|e|^delta` with `|0|^0 = 1` and an exact square for `delta = 2`.
#[inline]
pub(crate) fn abs_pow<T: Real>(e: T, delta: T) -> T {
    if delta == T::zero() {
        T::one()
    } else if delta == T::lit(2.0) {
        e * e
    } else if delta == T::one() {
        e.abs()
    } else {
        e.abs().powf(delta)
    }
}

/// One evaluated point of a form-factor curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SffPoint<T: Real> {
    pub t: T,
    pub value: T,
    pub beta: T,
    pub gamma: T,
}

fn check_args<T: Real>(beta: T, gamma: T, t: T) -> Result<()> {
    if !(beta >= T::zero()) || !beta.is_finite() {
        return Err(Error::invalid(format!("beta must be finite and >= 0, got {beta}")));
    }
    if !(gamma >= T::zero()) || !gamma.is_finite() {
        return Err(Error::invalid(format!("gamma must be finite and >= 0, got {gamma}")));
    }
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::invalid(format!("t must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn clamp_unit<T: Real>(x: T) -> Result<T> {
    if !x.is_finite() {
        return Err(Error::numeric(format!("form factor evaluated to {x}")));
    }
    Ok(x.max(T::zero()).min(T::one()))
}

/// Shared stabilized evaluation given `ln g_n` for every level.
fn filtered_core<T: Real>(s: &Spectrum<T>, beta: T, t: T, log_g: &[T]) -> Result<T> {
    // g -> c g leaves F unchanged; normalizing keeps constant filters exact
    let top = max_of(log_g.iter().copied());
    if !top.is_finite() {
        return Err(Error::DegenerateFilter { t: t.to_f64_lossy() });
    }
    let log_g: Vec<T> = log_g.iter().map(|&lg| lg - top).collect();
    let log_g = &log_g[..];
    let e = s.energies();
    let a: Vec<T> = e.iter().zip(log_g).map(|(&e, &lg)| -beta * e + lg).collect();
    let c: Vec<T> = e.iter().zip(log_g).map(|(&e, &lg)| -beta * e + lg + lg).collect();
    let ma = max_of(a.iter().copied());
    if !ma.is_finite() {
        return Err(Error::DegenerateFilter { t: t.to_f64_lossy() });
    }
    let mb = -beta * s.min();
    let mc = max_of(c.iter().copied());

    let mut num = nalgebra::Complex::new(T::zero(), T::zero());
    for (&en, &an) in e.iter().zip(&a) {
        num += cis(-t * en) * (an - ma).exp();
    }
    let z: T = e.iter().map(|&en| (-beta * en - mb).exp()).sum();
    let den: T = c.iter().map(|&cn| (cn - mc).exp()).sum();
    let scale = (ma + ma - mb - mc).exp();
    clamp_unit(norm_sqr(num) / (z * den) * scale)
}

/// `|Z(beta + i t)|^2 / Z(beta)^2`.
pub fn sff_unitary<T: Real>(s: &Spectrum<T>, beta: T, t: T) -> Result<T> {
    check_args(beta, T::zero(), t)?;
    let zeros = vec![T::zero(); s.dim()];
    filtered_core(s, beta, t, &zeros)
}

/// Form factor under balanced gain and loss with energy dephasing rate `gamma`.
pub fn sff_bgl<T: Real>(s: &Spectrum<T>, beta: T, gamma: T, t: T) -> Result<T> {
    check_args(beta, gamma, t)?;
    let log_g: Vec<T> = s.energies().iter().map(|&e| -(gamma * t * (e * e))).collect();
    filtered_core(s, beta, t, &log_g)
}

/// Form factor with an arbitrary filter `g(E)`.
pub fn sff_filtered<T: Real>(s: &Spectrum<T>, beta: T, filter: &FilterSpec<T>, t: T) -> Result<T> {
    check_args(beta, T::zero(), t)?;
    filter.validate(s.dim())?;
    let log_g = s.energies().iter().enumerate().map(|(n, &e)| filter.log_value(n, e, t)).collect::<Result<Vec<T>>>()?;
    filtered_core(s, beta, t, &log_g)
}

/// Fidelity under the full energy-dephasing Lindblad evolution (with jumps).
///
/// `O(d^2)`: coherences decay as `exp(-gamma t (E_n - E_m)^2)`.
pub fn sff_dephasing_jumps<T: Real>(s: &Spectrum<T>, beta: T, gamma: T, t: T) -> Result<T> {
    check_args(beta, gamma, t)?;
    let e = s.energies();
    let emin = s.min();
    let w: Vec<T> = e.iter().map(|&en| (-beta * (en - emin)).exp()).collect();
    let z: T = w.iter().copied().sum();
    let mut acc = T::zero();
    for n in 0..e.len() {
        acc += w[n] * w[n];
        let mut off = T::zero();
        for m in (n + 1)..e.len() {
            let de = e[n] - e[m];
            off += w[m] * (de * t).cos() * (-gamma * t * de * de).exp();
        }
        acc += T::lit(2.0) * w[n] * off;
    }
    clamp_unit(acc / (z * z))
}

/// Choice of closed-form evaluator.
#[derive(Debug, Clone)]
pub enum ClosedForm<T: Real> {
    Unitary,
    Bgl,
    DephasingJumps,
    Filtered(FilterSpec<T>),
}

impl<T: Real> ClosedForm<T> {
    /// Evaluates at one time. `gamma` is ignored by `Unitary` and `Filtered`.
    pub fn evaluate(&self, s: &Spectrum<T>, beta: T, gamma: T, t: T) -> Result<T> {
        match self {
            ClosedForm::Unitary => sff_unitary(s, beta, t),
            ClosedForm::Bgl => sff_bgl(s, beta, gamma, t),
            ClosedForm::DephasingJumps => sff_dephasing_jumps(s, beta, gamma, t),
            ClosedForm::Filtered(f) => sff_filtered(s, beta, f, t),
        }
    }

    pub fn point(&self, s: &Spectrum<T>, beta: T, gamma: T, t: T) -> Result<SffPoint<T>> {
        Ok(SffPoint { t, value: self.evaluate(s, beta, gamma, t)?, beta, gamma })
    }
}

/// Which long-time plateau to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlateauMode {
    /// Time average of the unitary form factor.
    Unitary,
    /// `t -> infinity` limit under BGL with `gamma > 0`.
    BglAsymptotic,
}

fn weighted_levels<T: Real>(c: &DegeneracyClusters<T>, beta: T) -> (Vec<T>, T) {
    // x_c = exp(-beta (E_c - E_min)); returns x and Z in the same scale
    let emin = c.energies[0];
    let x: Vec<T> = c.energies.iter().map(|&e| (-beta * (e - emin)).exp()).collect();
    let z = x.iter().zip(&c.multiplicities).map(|(&x, &n)| x * T::from_usize_lossy(n)).sum();
    (x, z)
}

/// Plateau value of the form factor from a clustered spectrum.
///
/// `Unitary`: `sum_c N_c^2 e^{-2 beta E_c} / Z^2`, the time average of
/// `|Z(beta + i t)|^2 / Z^2` (each of the `N_c` states of a level carries a
/// weight `N_c`).
///
/// `BglAsymptotic`: the clusters of smallest `|E|` survive,
/// `sum_* N_*^2 e^{-2 beta E_*} / (Z sum_* N_* e^{-beta E_*})`, which is
/// `N_* e^{-beta E_*} / Z` for a single such level.
pub fn plateau_value<T: Real>(clusters: &DegeneracyClusters<T>, beta: T, mode: PlateauMode) -> T {
    let (x, z) = weighted_levels(clusters, beta);
    let nn = |i: usize| T::from_usize_lossy(clusters.multiplicities[i]);
    match mode {
        PlateauMode::Unitary => {
            let s: T = (0..x.len()).map(|i| nn(i) * nn(i) * x[i] * x[i]).sum();
            s / (z * z)
        }
        PlateauMode::BglAsymptotic => {
            let min_abs = clusters.energies.iter().fold(T::lit(f64::INFINITY), |m, e| m.min(e.abs()));
            let width = clusters.energies[clusters.len() - 1] - clusters.energies[0];
            let slack = clusters.tolerance * width;
            let mut num = T::zero();
            let mut den = T::zero();
            for (i, &xi) in x.iter().enumerate() {
                if clusters.energies[i].abs() <= min_abs + slack {
                    num += nn(i) * nn(i) * xi * xi;
                    den += nn(i) * xi;
                }
            }
            num / (z * den)
        }
    }
}

/// Finite-time plateau estimate under BGL:
/// `sum N_n^2 e^{-2 beta E_n - 2 gamma t E_n^2} / (Z sum N_n e^{-beta E_n - 2 gamma t E_n^2})`.
pub fn plateau_finite_time<T: Real>(clusters: &DegeneracyClusters<T>, beta: T, gamma: T, t: T) -> T {
    let emin = clusters.energies[0];
    let z: T = clusters
        .energies
        .iter()
        .zip(&clusters.multiplicities)
        .map(|(&e, &n)| T::from_usize_lossy(n) * (-beta * (e - emin)).exp())
        .sum();
    // exponents relative to the largest damped weight
    let damp: Vec<T> =
        clusters.energies.iter().map(|&e| -beta * (e - emin) - T::lit(2.0) * gamma * t * e * e).collect();
    let shift = max_of(damp.iter().copied());
    let mut num = T::zero();
    let mut den = T::zero();
    for (i, &d) in damp.iter().enumerate() {
        let n = T::from_usize_lossy(clusters.multiplicities[i]);
        let x = (-beta * (clusters.energies[i] - emin)).exp();
        let y = (d - shift).exp();
        num += n * n * x * y;
        den += n * y;
    }
    num / (z * den)
}

/// Result of the kernel-quadrature evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEstimate<T: Real> {
    pub value: T,
    pub nodes: usize,
    /// False when successive node doublings never agreed to the tolerance.
    pub converged: bool,
}

pub const DEFAULT_KERNEL_NODES: usize = 64;
pub const MAX_KERNEL_NODES: usize = 512;
const KERNEL_TOL: f64 = 1e-8;

/// BGL form factor from the analytically continued partition function,
/// smoothed by the Gaussian kernel `K(t, s) = exp(-(t - s)^2 / (4 gamma t)) / sqrt(4 pi gamma t)`.
///
/// With `s = t + sqrt(2 gamma t) u` the kernel becomes the standard normal
/// density, integrated by Gauss-Hermite quadrature. The double integral in the
/// denominator factorizes level by level because `Z[beta + i(s - s')]` is a
/// sum of products. Node counts double from `nodes` until two successive
/// results agree to 1e-8 relative, up to [`MAX_KERNEL_NODES`].
pub fn sff_via_kernel<T: Real>(s: &Spectrum<T>, beta: T, gamma: T, t: T, nodes: usize) -> Result<KernelEstimate<T>> {
    check_args(beta, gamma, t)?;
    if !(gamma > T::zero()) || !(t > T::zero()) {
        return Err(Error::invalid("kernel representation needs gamma > 0 and t > 0"));
    }
    if nodes < 8 {
        return Err(Error::invalid(format!("kernel quadrature needs >= 8 nodes, got {nodes}")));
    }
    let mut n = nodes.min(MAX_KERNEL_NODES);
    let mut prev = kernel_quadrature(s, beta, gamma, t, n)?;
    while n < MAX_KERNEL_NODES {
        let next_n = (2 * n).min(MAX_KERNEL_NODES);
        let next = kernel_quadrature(s, beta, gamma, t, next_n)?;
        let tol = T::lit(KERNEL_TOL) * next.abs().max(T::lit(1e-300));
        n = next_n;
        let agreed = (next - prev).abs() <= tol;
        prev = next;
        if agreed {
            return Ok(KernelEstimate { value: prev, nodes: n, converged: true });
        }
    }
    Ok(KernelEstimate { value: prev, nodes: n, converged: false })
}

/// One Gauss-Hermite pass. Each level's Gaussian average
/// `E_u[exp(-i sigma u E)]` is entire in `u`, so it is evaluated on the line
/// `Im u = -sign(E) mu`, with `mu = sigma E*` and `E*` the smallest `|E|` of
/// that sign. On this line the integrand of the dominant levels no longer
/// oscillates, which keeps the quadrature accurate when `gamma t E*^2` is large.
fn kernel_quadrature<T: Real>(s: &Spectrum<T>, beta: T, gamma: T, t: T, n: usize) -> Result<T> {
    let rule = gauss_hermite(n);
    let (x, w) = (&rule.0, &rule.1);
    let sigma = (T::lit(2.0) * gamma * t).sqrt();
    let inv_sqrt_pi = T::lit(1.0 / std::f64::consts::PI.sqrt());
    let sqrt2 = T::lit(std::f64::consts::SQRT_2);
    let half = T::lit(0.5);
    let e = s.energies();
    let emin = s.min();
    let nearest = |pos: bool| {
        e.iter().filter(|&&v| (v >= T::zero()) == pos).map(|v| v.abs()).reduce(|a, b| a.min(b)).unwrap_or(T::zero())
    };
    let (mu_pos, mu_neg) = (sigma * nearest(true), sigma * nearest(false));

    // per level: log weight of b_n q_n and the remaining oscillatory average
    let mut log_a = Vec::with_capacity(e.len());
    let mut avg = Vec::with_capacity(e.len());
    for &en in e {
        let (mu, sgn) = if en >= T::zero() { (mu_pos, T::one()) } else { (mu_neg, -T::one()) };
        let freq = sigma * en - sgn * mu;
        let mut q = nalgebra::Complex::new(T::zero(), T::zero());
        for (&xk, &wk) in x.iter().zip(w) {
            if wk == 0.0 {
                continue;
            }
            q += cis(-freq * sqrt2 * T::lit(xk)) * (T::lit(wk) * inv_sqrt_pi);
        }
        log_a.push(half * mu * mu - sigma * mu * en.abs() - beta * (en - emin));
        avg.push(q * cis(-t * en));
    }
    let m = max_of(log_a.iter().copied());
    let log_b: Vec<T> = log_a.iter().zip(e).map(|(&la, &en)| la + la + beta * (en - emin)).collect();
    let mb = max_of(log_b.iter().copied());
    let mut num = nalgebra::Complex::new(T::zero(), T::zero());
    let (mut den, mut z) = (T::zero(), T::zero());
    for k in 0..e.len() {
        num += avg[k] * (log_a[k] - m).exp();
        den += norm_sqr(avg[k]) * (log_b[k] - mb).exp();
        z += (-beta * (e[k] - emin)).exp();
    }
    if !(den > T::zero()) {
        return Err(Error::numeric("kernel quadrature lost all weight"));
    }
    clamp_unit(norm_sqr(num) / (z * den) * (m + m - mb).exp())
}

/// Physicists' Gauss-Hermite nodes and weights for weight `exp(-x^2)`.
///
/// Nodes start from the eigenvalues of the Jacobi matrix and are polished by
/// Newton steps on the orthonormal Hermite recurrence, which also yields the
/// weights. Results are cached per node count.
pub fn gauss_hermite(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    type Rules = HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>;
    static CACHE: OnceLock<Mutex<Rules>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&n) {
        return hit.clone();
    }
    let rule = Arc::new(compute_gauss_hermite(n));
    cache.lock().unwrap_or_else(|e| e.into_inner()).insert(n, rule.clone());
    rule
}

fn compute_gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let jacobi = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            ((i.max(j)) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut x: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    x.sort_by(|a, b| b.total_cmp(a));

    let pim4 = std::f64::consts::PI.powf(-0.25);
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut w = vec![0.0; n];
    for i in 0..m {
        let mut z = if 2 * i + 1 == n { 0.0 } else { 0.5 * (x[i] - x[n - 1 - i]) };
        let mut pp = 0.0;
        for _ in 0..8 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
