// Copyright 2026 bgl-sff Contributors
// SPDX-License-Identifier: Apache-2.0

//! State-level evolution under balanced gain and loss.
//!
//! Two propagation routes:
//!
//! * [`evolve_bgl_closed`]: the exact solution when the dephasing operator is
//!   a function of `H0`, applied entrywise in the energy basis.
//! * [`integrate_bgl_ode`] / [`integrate_bgl_pure`]: explicit Runge-Kutta
//!   integration of the nonlinear master equation for an arbitrary Hermitian
//!   `X`, with `H_eff = H0 - i gamma X^2`.
//!
//! In the energy basis `H_eff = D - i Gamma` with `D = diag(E)` and
//! `Gamma = gamma X^2`, and the equation of motion is
//!
//! ```text
//! d rho / dt = -i [D, rho] - (Gamma rho + rho Gamma) + 2 Tr(Gamma rho) rho
//! ```
//!
//! whose last term keeps `Tr rho = 1` exactly. `X` corresponds to the
//! dephasing function through `X^2 = |w(H0)|^2`, so `X = sqrt(2) H0` is
//! `|w(E)|^2 = 2 E^2` and `w(E) = E` reproduces `H_eff = H0 - i gamma H0^2`.

use nalgebra::{Complex, DVector};

use crate::error::{Error, Result};
use crate::hamiltonians::HamiltonianInstance;
use crate::scalar::{cis, creal, czero, hermiticity_defect, max_of, norm_sqr, tolerance, CMatrix, CVector, Real};
use crate::spectral::{eigensystem_of, EigenSystem, Spectrum};

/// Basis a state is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Eigenbasis of `H0`, levels in ascending order.
    Energy,
    Computational,
}

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    amplitudes: CVector<T>,
    basis: Basis,
}

impl<T: Real> StateVector<T> {
    pub fn new(amplitudes: CVector<T>, basis: Basis) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("state vector is empty"));
        }
        let n2: T = amplitudes.iter().map(|z| norm_sqr(*z)).sum();
        if (n2.sqrt() - T::one()).abs() > tolerance::<T>(1e-12) {
            return Err(Error::invalid(format!("state vector norm {} is not 1", n2.sqrt())));
        }
        Ok(StateVector { amplitudes, basis })
    }

    /// Rescales to unit norm. Fails on a zero or non-finite vector.
    pub fn normalized(amplitudes: CVector<T>, basis: Basis) -> Result<Self> {
        let n2: T = amplitudes.iter().map(|z| norm_sqr(*z)).sum();
        if !(n2 > T::zero()) || !n2.is_finite() {
            return Err(Error::DegenerateEvolution { norm: n2.to_f64_lossy() });
        }
        let inv = creal(T::one() / n2.sqrt());
        Ok(StateVector { amplitudes: amplitudes * inv, basis })
    }

    pub fn amplitudes(&self) -> &CVector<T> {
        &self.amplitudes
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `|psi><psi|`.
    pub fn projector(&self) -> DensityMatrix<T> {
        DensityMatrix { matrix: &self.amplitudes * self.amplitudes.adjoint(), basis: self.basis }
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    matrix: CMatrix<T>,
    basis: Basis,
}

impl<T: Real> DensityMatrix<T> {
    /// Checks Hermiticity and trace to 1e-10 and eigenvalues `>= -1e-9`.
    pub fn new(matrix: CMatrix<T>, basis: Basis) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.is_empty() {
            return Err(Error::invalid("density matrix must be square and nonempty"));
        }
        let rho = DensityMatrix { matrix, basis };
        rho.validate()?;
        Ok(rho)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("density matrix has non-finite entries"));
        }
        let herm = hermiticity_defect(m);
        if herm > tolerance::<T>(1e-10) {
            return Err(Error::invalid(format!("density matrix is not Hermitian (defect {herm:e})")));
        }
        let tr = self.trace();
        if (tr - T::one()).abs() > tolerance::<T>(1e-10) {
            return Err(Error::invalid(format!("density matrix trace is {tr}, not 1")));
        }
        let h = (m + m.adjoint()) * creal(T::lit(0.5));
        let lowest = h.symmetric_eigenvalues().iter().fold(T::lit(f64::INFINITY), |a, &b| a.min(b));
        if lowest < -tolerance::<T>(1e-9) {
            return Err(Error::invalid(format!("density matrix has eigenvalue {lowest:e}")));
        }
        Ok(())
    }

    /// Diagonal density matrix from nonnegative weights summing to 1.
    pub fn diagonal(weights: &[T], basis: Basis) -> Result<Self> {
        let d = DVector::from_iterator(weights.len(), weights.iter().map(|&p| creal(p)));
        Self::new(CMatrix::from_diagonal(&d), basis)
    }

    pub(crate) fn from_parts(matrix: CMatrix<T>, basis: Basis) -> Self {
        DensityMatrix { matrix, basis }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> T {
        real_trace(&self.matrix)
    }

    /// The same state in the other basis of `eig`.
    pub fn change_basis(&self, eig: &EigenSystem<T>, to: Basis) -> DensityMatrix<T> {
        let matrix = match (self.basis, to) {
            (Basis::Computational, Basis::Energy) => eig.to_energy_basis(&self.matrix),
            (Basis::Energy, Basis::Computational) => eig.to_computational_basis(&self.matrix),
            _ => self.matrix.clone(),
        };
        DensityMatrix { matrix, basis: to }
    }
}

fn real_trace<T: Real>(m: &CMatrix<T>) -> T {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// The dephasing function `w(H0)`, specified through `|w(E)|^2`.
#[derive(Debug, Clone, PartialEq)]
pub enum WFunction<T: Real> {
    /// `w(E) = E`.
    Identity,
    /// `w(E) = c E`.
    Linear(T),
    /// `|w(E)|^2 = |E|^delta`.
    Power { delta: T },
    /// `|w(E_n)|^2` aligned with the sorted spectrum.
    Table(Vec<T>),
}

impl<T: Real> WFunction<T> {
    /// `|w(E_n)|^2` for level `n` of energy `e`.
    pub fn abs_sq(&self, n: usize, e: T) -> T {
        match self {
            WFunction::Identity => e * e,
            WFunction::Linear(c) => *c * *c * e * e,
            WFunction::Power { delta } => crate::sff::abs_pow(e, *delta),
            WFunction::Table(v) => v[n],
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            WFunction::Identity | WFunction::Linear(_) => Ok(()),
            WFunction::Power { delta } => {
                if *delta >= T::zero() {
                    Ok(())
                } else {
                    Err(Error::invalid("power dephasing needs delta >= 0"))
                }
            }
            WFunction::Table(v) => {
                if v.len() != dim {
                    return Err(Error::invalid(format!("|w|^2 table has {} values for dimension {dim}", v.len())));
                }
                if v.iter().any(|x| !(*x >= T::zero()) || !x.is_finite()) {
                    return Err(Error::invalid("|w|^2 values must be finite and nonnegative"));
                }
                Ok(())
            }
        }
    }
}

/// `c_n = exp(-beta E_n / 2) / sqrt(Z(beta))` in the energy basis.
pub fn coherent_gibbs<T: Real>(s: &Spectrum<T>, beta: T) -> Result<StateVector<T>> {
    if !(beta >= T::zero()) || !beta.is_finite() {
        return Err(Error::invalid(format!("beta must be finite and >= 0, got {beta}")));
    }
    let half = T::lit(0.5);
    let emin = s.min();
    let amps = DVector::from_iterator(s.dim(), s.energies().iter().map(|&e| creal((-half * beta * (e - emin)).exp())));
    StateVector::normalized(amps, Basis::Energy)
}

fn require_energy_basis(basis: Basis, what: &str) -> Result<()> {
    if basis != Basis::Energy {
        return Err(Error::invalid(format!("{what} must be given in the energy basis")));
    }
    Ok(())
}

fn check_gamma_t<T: Real>(gamma: T, t: T) -> Result<()> {
    if !(gamma >= T::zero()) || !gamma.is_finite() || !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::invalid(format!("need finite gamma >= 0 and t >= 0, got gamma={gamma}, t={t}")));
    }
    Ok(())
}

/// `-gamma t |w(E_n)|^2` for every level.
fn damping_exponents<T: Real>(s: &Spectrum<T>, gamma: T, t: T, w: &WFunction<T>) -> Vec<T> {
    s.energies()
        .iter()
        .enumerate()
        .map(|(n, &e)| {
            let a = w.abs_sq(n, e);
            if a == T::zero() {
                T::zero()
            } else {
                -(gamma * t * a)
            }
        })
        .collect()
}

/// Exact BGL propagation for dephasing through `w(H0)`:
///
/// `rho_nm(t) = rho_nm e^{-i(E_n - E_m)t - gamma t (|w_n|^2 + |w_m|^2)} / sum_k rho_kk e^{-2 gamma t |w_k|^2}`.
pub fn evolve_bgl_closed<T: Real>(
    rho0: &DensityMatrix<T>,
    s: &Spectrum<T>,
    gamma: T,
    t: T,
    w: &WFunction<T>,
) -> Result<DensityMatrix<T>> {
    require_energy_basis(rho0.basis, "initial state")?;
    check_gamma_t(gamma, t)?;
    let d = s.dim();
    if rho0.dim() != d {
        return Err(Error::invalid(format!("state dimension {} does not match spectrum {d}", rho0.dim())));
    }
    w.validate(d)?;
    let a = damping_exponents(s, gamma, t, w);
    let m = &rho0.matrix;
    let shift = max_of((0..d).filter(|&k| m[(k, k)].re > T::zero()).map(|k| a[k]));
    let den: T = (0..d).map(|k| m[(k, k)].re * (T::lit(2.0) * (a[k] - shift)).exp()).sum();
    if !(den > T::lit(1e-300)) || !shift.is_finite() {
        return Err(Error::DegenerateEvolution { norm: den.to_f64_lossy() });
    }
    let e = s.energies();
    let out = CMatrix::from_fn(d, d, |i, j| {
        let damp = (a[i] + a[j] - shift - shift).exp() / den;
        m[(i, j)] * cis(-(e[i] - e[j]) * t) * damp
    });
    Ok(DensityMatrix { matrix: out, basis: Basis::Energy })
}

/// Exact BGL propagation of a pure state: `psi_n e^{-i E_n t - gamma t |w_n|^2}`, renormalized.
pub fn evolve_pure_closed<T: Real>(
    psi0: &StateVector<T>,
    s: &Spectrum<T>,
    gamma: T,
    t: T,
    w: &WFunction<T>,
) -> Result<StateVector<T>> {
    require_energy_basis(psi0.basis, "initial state")?;
    check_gamma_t(gamma, t)?;
    if psi0.dim() != s.dim() {
        return Err(Error::invalid("state and spectrum dimensions differ"));
    }
    w.validate(s.dim())?;
    let a = damping_exponents(s, gamma, t, w);
    let c = &psi0.amplitudes;
    let shift = max_of((0..s.dim()).filter(|&k| norm_sqr(c[k]) > T::zero()).map(|k| a[k]));
    if !shift.is_finite() {
        return Err(Error::DegenerateEvolution { norm: 0.0 });
    }
    let e = s.energies();
    let v = DVector::from_fn(s.dim(), |n, _| c[n] * cis(-e[n] * t) * (a[n] - shift).exp());
    StateVector::normalized(v, Basis::Energy)
}

/// `<psi| rho |psi>`, checked to be real and clamped to `[0, 1]`.
pub fn fidelity<T: Real>(psi: &StateVector<T>, rho: &DensityMatrix<T>) -> Result<T> {
    if psi.basis != rho.basis {
        return Err(Error::invalid("state and density matrix are in different bases"));
    }
    if psi.dim() != rho.dim() {
        return Err(Error::invalid("state and density matrix dimensions differ"));
    }
    let v = (psi.amplitudes.adjoint() * &rho.matrix * &psi.amplitudes)[(0, 0)];
    if v.im.abs() > tolerance::<T>(1e-12) {
        return Err(Error::numeric(format!("fidelity has imaginary part {:e}", v.im)));
    }
    Ok(v.re.max(T::zero()).min(T::one()))
}

/// `|<psi|phi>|^2` for two pure states.
pub fn overlap<T: Real>(psi: &StateVector<T>, phi: &StateVector<T>) -> Result<T> {
    if psi.basis != phi.basis || psi.dim() != phi.dim() {
        return Err(Error::invalid("states are in different bases or dimensions"));
    }
    let v = psi.amplitudes.dotc(&phi.amplitudes);
    Ok(norm_sqr(v).max(T::zero()).min(T::one()))
}

/// `Tr rho^2`.
pub fn purity<T: Real>(rho: &DensityMatrix<T>) -> T {
    // Tr(rho rho) = sum_ij rho_ij rho_ji = sum_ij |rho_ij|^2 for Hermitian rho
    rho.matrix.iter().map(|z| norm_sqr(*z)).sum()
}

/// `Tr(rho H0) = sum_n rho_nn E_n`.
pub fn mean_energy<T: Real>(rho: &DensityMatrix<T>, s: &Spectrum<T>) -> Result<T> {
    require_energy_basis(rho.basis, "state")?;
    if rho.dim() != s.dim() {
        return Err(Error::invalid("state and spectrum dimensions differ"));
    }
    Ok(s.energies().iter().enumerate().map(|(n, &e)| rho.matrix[(n, n)].re * e).sum())
}

/// Explicit Runge-Kutta scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    /// Strictly lower triangular stage matrix, row `i` has `i` entries.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub order: usize,
}

impl ButcherTableau {
    pub fn classical_rk4() -> Self {
        ButcherTableau {
            a: vec![vec![], vec![0.5], vec![0.0, 0.5], vec![0.0, 0.0, 1.0]],
            b: vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            c: vec![0.0, 0.5, 0.5, 1.0],
            order: 4,
        }
    }

    /// Kutta's 3/8 rule, also fourth order.
    pub fn three_eighths() -> Self {
        ButcherTableau {
            a: vec![vec![], vec![1.0 / 3.0], vec![-1.0 / 3.0, 1.0], vec![1.0, -1.0, 1.0]],
            b: vec![0.125, 0.375, 0.375, 0.125],
            c: vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
            order: 4,
        }
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.b.len();
        if s == 0 || self.a.len() != s || self.c.len() != s {
            return Err(Error::invalid("Butcher tableau has inconsistent sizes"));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != i {
                return Err(Error::invalid("Butcher tableau must be explicit (strictly lower triangular)"));
            }
            if (row.iter().sum::<f64>() - self.c[i]).abs() > 1e-12 {
                return Err(Error::invalid("Butcher tableau rows must sum to c"));
            }
        }
        if (self.b.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("Butcher weights must sum to 1"));
        }
        Ok(())
    }
}

/// Fixed-step integration settings.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeConfig<T: Real> {
    pub tableau: ButcherTableau,
    pub dt: T,
    /// Renormalize the trace after this many steps.
    pub renormalize_every: usize,
    /// Ascending output times, `>= 0`.
    pub t_grid: Vec<T>,
}

/// Largest tolerated trace change in a single step.
pub const MAX_STEP_DRIFT: f64 = 1e-3;

impl<T: Real> OdeConfig<T> {
    pub fn new(dt: T, t_grid: Vec<T>) -> Self {
        OdeConfig { tableau: ButcherTableau::classical_rk4(), dt, renormalize_every: 1, t_grid }
    }

    pub fn validate(&self) -> Result<()> {
        self.tableau.validate()?;
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.renormalize_every == 0 {
            return Err(Error::invalid("renormalize_every must be >= 1"));
        }
        if self.t_grid.is_empty() {
            return Err(Error::invalid("output grid is empty"));
        }
        if !(self.t_grid[0] >= T::zero()) || self.t_grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("output times must be finite and >= 0"));
        }
        if self.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("output times must be strictly ascending"));
        }
        Ok(())
    }
}

trait RkState<T: Real>: Clone {
    fn add_scaled(&mut self, h: T, k: &Self);
    fn scale(&mut self, c: T);
    /// Projects rounding drift back onto the state manifold.
    fn tidy(&mut self) {}
}

impl<T: Real> RkState<T> for CMatrix<T> {
    fn add_scaled(&mut self, h: T, k: &Self) {
        self.zip_apply(k, |a, b| *a += b * h);
    }
    fn scale(&mut self, c: T) {
        *self *= creal(c);
    }
    fn tidy(&mut self) {
        let n = self.nrows();
        let half = T::lit(0.5);
        for j in 0..n {
            self[(j, j)].im = T::zero();
            for i in (j + 1)..n {
                let avg = (self[(i, j)] + self[(j, i)].conj()) * half;
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
        }
    }
}

impl<T: Real> RkState<T> for CVector<T> {
    fn add_scaled(&mut self, h: T, k: &Self) {
        self.zip_apply(k, |a, b| *a += b * h);
    }
    fn scale(&mut self, c: T) {
        *self *= creal(c);
    }
}

fn rk_step<T: Real, Y: RkState<T>>(tab: &ButcherTableau, y: &Y, h: T, f: &impl Fn(&Y) -> Y) -> Y {
    let mut ks: Vec<Y> = Vec::with_capacity(tab.stages());
    for row in &tab.a {
        let mut yi = y.clone();
        for (j, &aij) in row.iter().enumerate() {
            if aij != 0.0 {
                yi.add_scaled(h * T::lit(aij), &ks[j]);
            }
        }
        ks.push(f(&yi));
    }
    let mut out = y.clone();
    for (k, &bi) in ks.iter().zip(&tab.b) {
        if bi != 0.0 {
            out.add_scaled(h * T::lit(bi), k);
        }
    }
    out
}

/// Steps `y` through the output grid. `size` is the conserved quantity
/// (trace or squared norm) and must stay at 1. Calls `emit` at each output
/// time with a normalized copy and returns the largest pre-renormalization
/// deviation of `size` from 1 within each output interval.
fn drive<T: Real, Y: RkState<T>>(
    mut y: Y,
    cfg: &OdeConfig<T>,
    f: impl Fn(&Y) -> Y,
    size: impl Fn(&Y) -> T,
    mut emit: impl FnMut(T, &Y) -> Result<()>,
) -> Result<Vec<T>> {
    cfg.validate()?;
    let limit = T::lit(MAX_STEP_DRIFT);
    let mut drifts = Vec::with_capacity(cfg.t_grid.len());
    let mut t = T::zero();
    let mut steps = 0usize;
    for &target in &cfg.t_grid {
        let mut worst = T::zero();
        let span = target - t;
        if span > T::zero() {
            let n = (span / cfg.dt).ceil().to_usize().unwrap_or(usize::MAX).max(1);
            let h = span / T::from_usize_lossy(n);
            for k in 0..n {
                let before = size(&y);
                let next = rk_step(&cfg.tableau, &y, h, &f);
                let after = size(&next);
                let step_drift = (after / before - T::one()).abs();
                let t_now = t + h * T::from_usize_lossy(k + 1);
                if !after.is_finite() || !(step_drift <= limit) {
                    return Err(Error::IntegrationFailure {
                        t: t_now.to_f64_lossy(),
                        drift: step_drift.to_f64_lossy(),
                        limit: MAX_STEP_DRIFT,
                    });
                }
                y = next;
                steps += 1;
                if steps.is_multiple_of(cfg.renormalize_every) {
                    worst = worst.max((after - T::one()).abs());
                    y.scale(T::one() / after);
                    y.tidy();
                }
            }
            t = target;
        }
        let sz = size(&y);
        worst = worst.max((sz - T::one()).abs());
        let mut out = y.clone();
        out.scale(T::one() / sz);
        out.tidy();
        emit(target, &out)?;
        drifts.push(worst);
    }
    Ok(drifts)
}

/// Density-matrix trajectory at the configured output times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<DensityMatrix<T>>,
    /// Largest `|Tr rho - 1|` seen before renormalization in each interval.
    pub trace_drift: Vec<T>,
}

/// Pure-state trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PureTrajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<StateVector<T>>,
    pub norm_drift: Vec<T>,
}

/// Observables of one output time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow<T: Real> {
    pub t: T,
    pub fidelity: T,
    pub purity: T,
    pub mean_energy: T,
    pub trace_drift: T,
}

impl<T: Real> Trajectory<T> {
    /// Fidelity with `psi`, purity and mean energy at each output time.
    /// States must be in the energy basis of `s`.
    pub fn observables(&self, psi: &StateVector<T>, s: &Spectrum<T>) -> Result<Vec<TrajectoryRow<T>>> {
        self.times
            .iter()
            .zip(&self.states)
            .zip(&self.trace_drift)
            .map(|((&t, rho), &drift)| {
                Ok(TrajectoryRow {
                    t,
                    fidelity: fidelity(psi, rho)?,
                    purity: purity(rho),
                    mean_energy: mean_energy(rho, s)?,
                    trace_drift: drift,
                })
            })
            .collect()
    }
}

fn hermitian_operator<T: Real>(x: &CMatrix<T>, d: usize, what: &str) -> Result<()> {
    if x.nrows() != d || x.ncols() != d {
        return Err(Error::invalid(format!("{what} must be {d}x{d}")));
    }
    let scale = crate::scalar::max_abs(x).max(T::one());
    if hermiticity_defect(x) > crate::hamiltonians::hermitian_tolerance::<T>() * scale {
        return Err(Error::invalid(format!("{what} is not Hermitian")));
    }
    Ok(())
}

/// `Gamma = gamma X^2`, Hermitized against rounding.
fn loss_operator<T: Real>(x: &CMatrix<T>, gamma: T) -> CMatrix<T> {
    let g = x * x * creal(gamma);
    (&g + g.adjoint()) * creal(T::lit(0.5))
}

/// Integrates the nonlinear master equation in the energy basis of `s`.
/// `x_energy` is the dephasing operator in that basis.
pub fn integrate_bgl_ode_energy_basis<T: Real>(
    rho0: &DensityMatrix<T>,
    s: &Spectrum<T>,
    x_energy: &CMatrix<T>,
    gamma: T,
    cfg: &OdeConfig<T>,
) -> Result<Trajectory<T>> {
    require_energy_basis(rho0.basis, "initial state")?;
    let d = s.dim();
    if rho0.dim() != d {
        return Err(Error::invalid("state and spectrum dimensions differ"));
    }
    hermitian_operator(x_energy, d, "dephasing operator")?;
    check_gamma_t(gamma, T::zero())?;
    let e = s.energies().to_vec();
    let big_gamma = loss_operator(x_energy, gamma);
    let two = T::lit(2.0);

    let rhs = |rho: &CMatrix<T>| -> CMatrix<T> {
        let g = &big_gamma * rho;
        let tr_g = real_trace(&g) / real_trace(rho);
        let mut out = CMatrix::from_element(d, d, czero());
        for j in 0..d {
            for i in 0..d {
                let comm = rho[(i, j)] * Complex::new(T::zero(), -(e[i] - e[j]));
                out[(i, j)] = comm - g[(i, j)] - g[(j, i)].conj() + rho[(i, j)] * (two * tr_g);
            }
        }
        out
    };

    let mut times = Vec::with_capacity(cfg.t_grid.len());
    let mut states = Vec::with_capacity(cfg.t_grid.len());
    let trace_drift = drive(
        rho0.matrix.clone(),
        cfg,
        rhs,
        |m| real_trace(m),
        |t, m| {
            times.push(t);
            states.push(DensityMatrix::from_parts(m.clone(), Basis::Energy));
            Ok(())
        },
    )?;
    Ok(Trajectory { times, states, trace_drift })
}

/// Integrates the nonlinear master equation with `H_eff = H0 - i gamma X^2`.
///
/// `rho0` and `x_op` are given in the computational basis when `rho0` is
/// tagged so, otherwise `x_op` is still taken in the computational basis and
/// `rho0` in the eigenbasis of `h0`. Output states are returned in the
/// basis of `rho0`.
pub fn integrate_bgl_ode<T: Real>(
    rho0: &DensityMatrix<T>,
    h0: &HamiltonianInstance<T>,
    x_op: &CMatrix<T>,
    gamma: T,
    cfg: &OdeConfig<T>,
) -> Result<Trajectory<T>> {
    let d = h0.dim();
    if rho0.dim() != d {
        return Err(Error::invalid("state and Hamiltonian dimensions differ"));
    }
    hermitian_operator(x_op, d, "dephasing operator")?;
    let eig = eigensystem_of(h0)?;
    let rho_e = rho0.change_basis(&eig, Basis::Energy);
    let x_e = eig.to_energy_basis(x_op);
    let mut traj = integrate_bgl_ode_energy_basis(&rho_e, &eig.spectrum, &x_e, gamma, cfg)?;
    if rho0.basis == Basis::Computational {
        for st in &mut traj.states {
            *st = st.change_basis(&eig, Basis::Computational);
        }
    }
    Ok(traj)
}

/// Pure-state version of the nonlinear equation in the energy basis:
/// `d psi / dt = -i D psi - Gamma psi + <psi|Gamma|psi> psi`.
///
/// Costs one matrix-vector product per stage instead of a matrix product.
pub fn integrate_bgl_pure<T: Real>(
    psi0: &StateVector<T>,
    s: &Spectrum<T>,
    x_energy: &CMatrix<T>,
    gamma: T,
    cfg: &OdeConfig<T>,
) -> Result<PureTrajectory<T>> {
    require_energy_basis(psi0.basis, "initial state")?;
    let d = s.dim();
    if psi0.dim() != d {
        return Err(Error::invalid("state and spectrum dimensions differ"));
    }
    hermitian_operator(x_energy, d, "dephasing operator")?;
    check_gamma_t(gamma, T::zero())?;
    let e = s.energies().to_vec();
    let big_gamma = loss_operator(x_energy, gamma);
    let norm2 = |v: &CVector<T>| -> T { v.iter().map(|z| norm_sqr(*z)).sum() };

    let rhs = |psi: &CVector<T>| -> CVector<T> {
        let g = &big_gamma * psi;
        let expect = psi.dotc(&g).re / norm2(psi);
        DVector::from_fn(d, |i, _| psi[i] * Complex::new(expect, -e[i]) - g[i])
    };

    let mut times = Vec::with_capacity(cfg.t_grid.len());
    let mut states = Vec::with_capacity(cfg.t_grid.len());
    let norm_drift = drive(psi0.amplitudes.clone(), cfg, rhs, norm2, |t, v| {
        times.push(t);
        states.push(StateVector { amplitudes: v.clone(), basis: Basis::Energy });
        Ok(())
    })?;
    Ok(PureTrajectory { times, states, norm_drift })
}
