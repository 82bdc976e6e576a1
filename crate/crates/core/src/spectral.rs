// Copyright 2026 bgl-sff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Eigendecomposition and spectrum-level primitives.

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hamiltonians::{hermitian_tolerance, HamiltonianInstance, Provenance};
use crate::scalar::{cis, creal, max_abs, CMatrix, Real};

/// Default clustering tolerance, relative to the spectral width.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-10;

/// Sorted real eigenvalues of one Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T: Real> {
    energies: Vec<T>,
    pub provenance: Option<Provenance>,
}

impl<T: Real> Spectrum<T> {
    /// Sorts `energies` ascending; rejects empty or non-finite input.
    pub fn new(mut energies: Vec<T>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::invalid("spectrum must be nonempty"));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("spectrum has non-finite energies"));
        }
        energies.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        Ok(Spectrum { energies, provenance: None })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn min(&self) -> T {
        self.energies[0]
    }

    pub fn max(&self) -> T {
        self.energies[self.energies.len() - 1]
    }

    pub fn width(&self) -> T {
        self.max() - self.min()
    }
}

/// Spectrum plus orthonormal eigenvectors (columns, computational basis).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem<T: Real> {
    pub spectrum: Spectrum<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> EigenSystem<T> {
    /// `V^dagger A V`: an operator in the energy eigenbasis.
    pub fn to_energy_basis(&self, op: &CMatrix<T>) -> CMatrix<T> {
        self.vectors.adjoint() * op * &self.vectors
    }

    /// `V A V^dagger`: back to the computational basis.
    pub fn to_computational_basis(&self, op: &CMatrix<T>) -> CMatrix<T> {
        &self.vectors * op * self.vectors.adjoint()
    }

    /// `sum_n E_n |v_n><v_n|`.
    pub fn reconstruct(&self) -> CMatrix<T> {
        let d = self.spectrum.dim();
        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            d,
            self.spectrum.energies().iter().map(|&e| creal(e)),
        ));
        self.to_computational_basis(&diag)
    }
}

/// Output of [`diagonalize`].
#[derive(Debug, Clone, PartialEq)]
pub enum Diagonalization<T: Real> {
    Values(Spectrum<T>),
    Full(EigenSystem<T>),
}

impl<T: Real> Diagonalization<T> {
    pub fn spectrum(&self) -> &Spectrum<T> {
        match self {
            Diagonalization::Values(s) => s,
            Diagonalization::Full(e) => &e.spectrum,
        }
    }

    pub fn into_spectrum(self) -> Spectrum<T> {
        match self {
            Diagonalization::Values(s) => s,
            Diagonalization::Full(e) => e.spectrum,
        }
    }
}

/// Dense Hermitian eigensolve. Real matrices take the real symmetric path.
pub fn diagonalize<T: Real>(h: &HamiltonianInstance<T>, want_vectors: bool) -> Result<Diagonalization<T>> {
    let m = &h.matrix;
    let d = m.nrows();
    if d == 0 || m.ncols() != d {
        return Err(Error::invalid("Hamiltonian must be a nonempty square matrix"));
    }
    let scale = max_abs(m).max(T::one());
    let defect = crate::scalar::hermiticity_defect(m);
    if defect > hermitian_tolerance::<T>() * scale {
        return Err(Error::invalid(format!("matrix is not Hermitian (defect {defect:e})")));
    }
    let max_iter = 100 * d.max(10);
    let is_real = m.iter().all(|z| z.im == T::zero());

    let (values, vectors): (Vec<T>, Option<CMatrix<T>>) = match (is_real, want_vectors) {
        (true, false) => {
            let re: DMatrix<T> = m.map(|z| z.re);
            (re.symmetric_eigenvalues().iter().copied().collect(), None)
        }
        (false, false) => (m.clone().symmetric_eigenvalues().iter().copied().collect(), None),
        (true, true) => {
            let re: DMatrix<T> = m.map(|z| z.re);
            let eig = SymmetricEigen::try_new(re, T::eps(), max_iter)
                .ok_or_else(|| Error::numeric("real symmetric eigensolver did not converge"))?;
            let vecs = eig.eigenvectors.map(creal);
            (eig.eigenvalues.iter().copied().collect(), Some(vecs))
        }
        (false, true) => {
            let eig = SymmetricEigen::try_new(m.clone(), T::eps(), max_iter)
                .ok_or_else(|| Error::numeric("Hermitian eigensolver did not converge"))?;
            (eig.eigenvalues.iter().copied().collect(), Some(eig.eigenvectors))
        }
    };

    if values.iter().any(|e| !e.is_finite()) {
        return Err(Error::numeric("eigensolver produced non-finite eigenvalues"));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite"));
    let sorted: Vec<T> = order.iter().map(|&i| values[i]).collect();
    let spectrum = Spectrum { energies: sorted, provenance: Some(h.provenance.clone()) };

    Ok(match vectors {
        None => Diagonalization::Values(spectrum),
        Some(v) => {
            let vectors = CMatrix::from_fn(d, d, |r, c| v[(r, order[c])]);
            Diagonalization::Full(EigenSystem { spectrum, vectors })
        }
    })
}

/// Eigenvalues only.
pub fn spectrum_of<T: Real>(h: &HamiltonianInstance<T>) -> Result<Spectrum<T>> {
    Ok(diagonalize(h, false)?.into_spectrum())
}

/// Eigenvalues and eigenvectors.
pub fn eigensystem_of<T: Real>(h: &HamiltonianInstance<T>) -> Result<EigenSystem<T>> {
    match diagonalize(h, true)? {
        Diagonalization::Full(e) => Ok(e),
        Diagonalization::Values(_) => unreachable!("vectors requested"),
    }
}

/// `Z(z) = sum_n exp(-z E_n)` as `(mantissa, shift)` with `Z = mantissa * exp(shift)`.
///
/// The shift is the largest real exponent, so `|mantissa| <= d`.
pub fn partition_function_scaled<T: Real>(s: &Spectrum<T>, z: Complex<T>) -> (Complex<T>, T) {
    let shift = s.energies.iter().map(|&e| -z.re * e).fold(T::lit(f64::NEG_INFINITY), |a, b| a.max(b));
    let mut acc = Complex::new(T::zero(), T::zero());
    for &e in &s.energies {
        acc += cis(-z.im * e) * (-z.re * e - shift).exp();
    }
    (acc, shift)
}

/// `Z(z) = sum_n exp(-z E_n)` for complex `z = beta + i t`.
pub fn partition_function<T: Real>(s: &Spectrum<T>, z: Complex<T>) -> Result<Complex<T>> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::invalid("partition function argument must be finite"));
    }
    let (mantissa, shift) = partition_function_scaled(s, z);
    let factor = shift.exp();
    if !factor.is_finite() {
        return Err(Error::numeric(format!(
            "partition function overflows (log-scale {shift:e}); use partition_function_scaled"
        )));
    }
    Ok(mantissa * factor)
}

/// Clustered energy levels with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyClusters<T: Real> {
    pub energies: Vec<T>,
    pub multiplicities: Vec<usize>,
    pub tolerance: T,
}

impl<T: Real> DegeneracyClusters<T> {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Total number of states, `sum N_n`.
    pub fn dim(&self) -> usize {
        self.multiplicities.iter().sum()
    }
}

/// Greedy left-to-right clustering: a level joins the current cluster when it
/// lies within `tol * width` of its predecessor.
pub fn cluster_degeneracies<T: Real>(s: &Spectrum<T>, tol: T) -> DegeneracyClusters<T> {
    let gap = tol * s.width();
    let mut energies = Vec::new();
    let mut multiplicities = Vec::new();
    let mut sum = s.energies[0];
    let mut count = 1usize;
    for w in s.energies.windows(2) {
        if w[1] - w[0] <= gap {
            sum += w[1];
            count += 1;
        } else {
            energies.push(sum / T::from_usize_lossy(count));
            multiplicities.push(count);
            sum = w[1];
            count = 1;
        }
    }
    energies.push(sum / T::from_usize_lossy(count));
    multiplicities.push(count);
    DegeneracyClusters { energies, multiplicities, tolerance: tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{goe_instance, syk_instance, GoeParams, ModelTag, SykParams};
    use proptest::prelude::*;

    fn instance(rows: &[f64], d: usize) -> HamiltonianInstance<f64> {
        let m = CMatrix::from_row_slice(d, d, &rows.iter().map(|&x| creal(x)).collect::<Vec<_>>());
        HamiltonianInstance::from_matrix(m, Provenance::new(ModelTag::Goe, 0)).unwrap()
    }

    #[test]
    fn trivial_spectra() {
        assert_eq!(spectrum_of(&instance(&[5.0], 1)).unwrap().energies(), &[5.0]);
        let s = spectrum_of(&instance(&[0.0, 1.0, 1.0, 0.0], 2)).unwrap();
        assert!((s.energies()[0] + 1.0).abs() < 1e-15 && (s.energies()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[creal(0.0), creal(1.0), creal(2.0), creal(0.0)]);
        let h = HamiltonianInstance { matrix: m, provenance: Provenance::new(ModelTag::Goe, 0) };
        assert!(matches!(diagonalize(&h, false), Err(Error::InvalidArgument(_))));
    }

    fn check_residuals(h: &HamiltonianInstance<f64>) {
        let e = eigensystem_of(h).unwrap();
        let norm = h.matrix.norm();
        let d = h.dim();
        for n in 0..d {
            let v = e.vectors.column(n);
            let r = &h.matrix * v - v * creal(e.spectrum.energies()[n]);
            assert!(r.norm() <= 1e-10 * norm, "residual {}", r.norm());
        }
        let gram = e.vectors.adjoint() * &e.vectors;
        assert!(max_abs(&(gram - CMatrix::identity(d, d))) <= 1e-10);
        assert!(max_abs(&(e.reconstruct() - &h.matrix)) <= 1e-9 * norm);
        assert!(e.spectrum.energies().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn syk_eigenpairs_have_small_residuals() {
        check_residuals(&syk_instance(&SykParams::new(12, 3)).unwrap());
    }

    #[test]
    fn complex_hermitian_path_has_small_residuals() {
        let mut h = goe_instance(&GoeParams::<f64>::new(24, 8), 0).unwrap();
        let a = goe_instance(&GoeParams::<f64>::new(24, 9), 0).unwrap();
        // add i * antisymmetric part to leave the real path
        for r in 0..24 {
            for c in 0..24 {
                let x = if r < c {
                    a.matrix[(r, c)].re
                } else if r > c {
                    -a.matrix[(c, r)].re
                } else {
                    0.0
                };
                h.matrix[(r, c)].im += x;
            }
        }
        assert!(h.matrix.iter().any(|z| z.im != 0.0));
        check_residuals(&h);
    }

    #[test]
    fn partition_function_examples() {
        let s = Spectrum::new(vec![0.0f64, 1.0]).unwrap();
        let z0 = partition_function(&s, Complex::new(0.0, 0.0)).unwrap();
        assert_eq!(z0, Complex::new(2.0, 0.0));
        let zp = partition_function(&s, Complex::new(0.0, std::f64::consts::PI)).unwrap();
        assert!(zp.norm() < 1e-15);
        let huge = Spectrum::new(vec![-1000.0f64, 0.0]).unwrap();
        assert!(matches!(partition_function(&huge, Complex::new(1.0, 0.0)), Err(Error::Numeric(_))));
        let (m, shift) = partition_function_scaled(&huge, Complex::new(1.0, 0.0));
        assert_eq!(shift, 1000.0);
        assert!((m.re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn clustering_examples() {
        let s = Spectrum::new(vec![-1.0 / 16.0, -1.0 / 16.0, 1.0 / 16.0, 1.0 / 16.0]).unwrap();
        assert_eq!(cluster_degeneracies(&s, 1e-8).multiplicities, vec![2, 2]);
        let s = Spectrum::new(vec![0.0, 0.1, 0.5, 0.7]).unwrap();
        assert_eq!(cluster_degeneracies(&s, 1e-300).multiplicities, vec![1, 1, 1, 1]);
        let s = Spectrum::new(vec![0.0, 0.0, 0.0]).unwrap();
        let c = cluster_degeneracies(&s, 0.3);
        assert_eq!(c.multiplicities, vec![3]);
        assert_eq!(c.energies, vec![0.0]);
    }

    #[test]
    fn syk_twelve_is_doubly_degenerate() {
        let s = spectrum_of(&syk_instance(&SykParams::<f64>::new(12, 1)).unwrap()).unwrap();
        let c = cluster_degeneracies(&s, DEFAULT_DEGENERACY_TOL);
        assert!(c.multiplicities.iter().all(|&n| n == 2), "{:?}", c.multiplicities);
    }

    fn spectrum_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, 1..20)
    }

    proptest! {
        #[test]
        fn z_at_zero_is_dimension(e in spectrum_strategy()) {
            let s = Spectrum::new(e).unwrap();
            let z = partition_function(&s, Complex::new(0.0, 0.0)).unwrap();
            prop_assert_eq!(z.re, s.dim() as f64);
        }

        #[test]
        fn z_modulus_bounded_by_real_z(e in spectrum_strategy(), beta in 0.0f64..5.0, t in -50.0f64..50.0) {
            let s = Spectrum::new(e).unwrap();
            let zc = partition_function(&s, Complex::new(beta, t)).unwrap();
            let zr = partition_function(&s, Complex::new(beta, 0.0)).unwrap();
            prop_assert!(zc.norm() <= zr.re * (1.0 + 1e-12));
            prop_assert!(zr.re >= (-beta * s.min()).exp() * (1.0 - 1e-12));
        }

        #[test]
        fn multiplicities_sum_to_dimension(e in spectrum_strategy(), tol in 0.0f64..1.0) {
            let s = Spectrum::new(e).unwrap();
            let c = cluster_degeneracies(&s, tol);
            prop_assert_eq!(c.dim(), s.dim());
            prop_assert!(c.energies.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
