// Copyright 2026 bgl-sff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Hamiltonian instances: the quartic SYK model and the Gaussian Orthogonal
//! Ensemble.
//!
//! Majorana operators are realized through the Jordan-Wigner map
//!
//! ```text
//! chi_{2j-1} = (Z_1 ... Z_{j-1}) X_j / sqrt(2)
//! chi_{2j}   = (Z_1 ... Z_{j-1}) Y_j / sqrt(2)
//! ```
//!
//! so that `{chi_k, chi_l} = delta_kl`. Every Majorana, and every product of
//! Majoranas, is a Pauli string and therefore a monomial matrix (one nonzero
//! per column). The SYK Hamiltonian is accumulated string by string in
//! `O(C(n, 4) d)` instead of through dense matrix products.
//!
//! Qubit 1 is the most significant bit of the computational basis index,
//! matching `X_1 (x) X_2 (x) ...` Kronecker ordering.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::{creal, czero, CMatrix, Real};

/// Default cap on the bytes of one dense Hamiltonian.
pub const DEFAULT_MEMORY_BUDGET: usize = 4 << 30;

/// Pauli string `i^phase * X^x * Z^z`, with bit `q-1-j` of the masks acting on qubit `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
    /// Power of `i`, modulo 4.
    pub phase: u8,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0, phase: 0 };

    /// Product `self * rhs`.
    pub fn compose(self, rhs: PauliString) -> PauliString {
        // Z^z1 X^x2 = (-1)^{|z1 & x2|} X^x2 Z^z1
        let swaps = (self.z & rhs.x).count_ones() as u8;
        PauliString { x: self.x ^ rhs.x, z: self.z ^ rhs.z, phase: (self.phase + rhs.phase + 2 * (swaps % 2)) % 4 }
    }

    /// Nonzero entry in column `col`: returns `(row, value)`.
    #[inline]
    pub fn column_entry<T: Real>(self, col: usize) -> (usize, Complex<T>) {
        let sign_flip = (self.z & col as u64).count_ones() % 2 == 1;
        let quarter = (self.phase as u32 + if sign_flip { 2 } else { 0 }) % 4;
        let one = T::one();
        let zero = T::zero();
        let v = match quarter {
            0 => Complex::new(one, zero),
            1 => Complex::new(zero, one),
            2 => Complex::new(-one, zero),
            _ => Complex::new(zero, -one),
        };
        (col ^ self.x as usize, v)
    }

    /// Dense matrix of the string on `n_qubits` qubits.
    pub fn to_dense<T: Real>(self, n_qubits: usize) -> CMatrix<T> {
        let d = 1usize << n_qubits;
        let mut m = CMatrix::zeros(d, d);
        for col in 0..d {
            let (row, v) = self.column_entry(col);
            m[(row, col)] = v;
        }
        m
    }
}

/// The `n_majorana` Jordan-Wigner Majorana operators on `n_majorana / 2` qubits.
///
/// Operators are stored as Pauli strings; the common factor `1/sqrt(2)` is
/// implicit and applied by [`MajoranaSet::dense`].
#[derive(Debug, Clone, PartialEq)]
pub struct MajoranaSet {
    n_majorana: usize,
    strings: Vec<PauliString>,
}

impl MajoranaSet {
    pub fn n_majorana(&self) -> usize {
        self.n_majorana
    }

    pub fn n_qubits(&self) -> usize {
        self.n_majorana / 2
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits()
    }

    /// Pauli string of operator `k` (0-based), without the `1/sqrt(2)` factor.
    pub fn string(&self, k: usize) -> PauliString {
        self.strings[k]
    }

    /// Dense matrix of `chi_k` (0-based), including the `1/sqrt(2)` factor.
    pub fn dense<T: Real>(&self, k: usize) -> CMatrix<T> {
        let scale = creal(T::one() / T::lit(2.0).sqrt());
        self.strings[k].to_dense::<T>(self.n_qubits()) * scale
    }

    /// All operators as dense matrices. Only sensible for small sets.
    pub fn operators<T: Real>(&self) -> Vec<CMatrix<T>> {
        (0..self.n_majorana).map(|k| self.dense(k)).collect()
    }
}

/// Jordan-Wigner Majorana operators for an even count `n_majorana >= 2`.
pub fn build_majorana_set(n_majorana: usize) -> Result<MajoranaSet> {
    if n_majorana < 2 || !n_majorana.is_multiple_of(2) {
        return Err(Error::invalid(format!("Majorana count must be even and >= 2, got {n_majorana}")));
    }
    let q = n_majorana / 2;
    if q > 40 {
        return Err(Error::Resource(format!("{n_majorana} Majoranas need 2^{q} basis states")));
    }
    let bit = |j: usize| 1u64 << (q - 1 - j);
    let mut strings = Vec::with_capacity(n_majorana);
    for j in 0..q {
        let z_string: u64 = (0..j).map(bit).fold(0, |a, b| a | b);
        // X_j
        strings.push(PauliString { x: bit(j), z: z_string, phase: 0 });
        // Y_j = i X_j Z_j
        strings.push(PauliString { x: bit(j), z: z_string | bit(j), phase: 1 });
    }
    Ok(MajoranaSet { n_majorana, strings })
}

/// Source of independent standard normal draws.
///
/// Implemented for every [`rand::Rng`]; tests substitute scripted sources.
pub trait NormalSource<T> {
    fn next_normal(&mut self) -> T;
}

impl<T, R: Rng> NormalSource<T> for R
where
    StandardNormal: Distribution<T>,
{
    fn next_normal(&mut self) -> T {
        StandardNormal.sample(self)
    }
}

/// ChaCha20 generator for `(seed, stream)`. Streams are independent for the same seed.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTag {
    Syk,
    Goe,
}

impl ModelTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelTag::Syk => "syk",
            ModelTag::Goe => "goe",
        }
    }
}

/// Where a Hamiltonian came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub model: ModelTag,
    pub seed: u64,
    /// Parameter record as ordered `(key, value)` pairs.
    pub params: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(model: ModelTag, seed: u64) -> Self {
        Provenance { model, seed, params: Vec::new() }
    }

    fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }
}

/// Dense Hermitian Hamiltonian and its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianInstance<T: Real> {
    pub matrix: CMatrix<T>,
    pub provenance: Provenance,
}

impl<T: Real> HamiltonianInstance<T> {
    /// Wraps an arbitrary matrix after checking Hermiticity and finiteness.
    pub fn from_matrix(matrix: CMatrix<T>, provenance: Provenance) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::invalid("Hamiltonian must be a nonempty square matrix"));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("Hamiltonian has non-finite entries"));
        }
        let defect = crate::scalar::hermiticity_defect(&matrix);
        let scale = crate::scalar::max_abs(&matrix).max(T::one());
        if defect > hermitian_tolerance::<T>() * scale {
            return Err(Error::invalid(format!("matrix is not Hermitian (defect {defect:e})")));
        }
        Ok(HamiltonianInstance { matrix, provenance })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub(crate) fn hermitian_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::eps() * T::lit(64.0))
}

/// SYK model parameters. `n_majorana` is the total Majorana count (2N).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SykParams<T: Real> {
    pub n_majorana: usize,
    pub j_scale: T,
    pub seed: u64,
}

impl<T: Real> SykParams<T> {
    pub fn new(n_majorana: usize, seed: u64) -> Self {
        SykParams { n_majorana, j_scale: T::one(), seed }
    }

    pub fn dim(&self) -> usize {
        1usize << (self.n_majorana / 2)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_budget(DEFAULT_MEMORY_BUDGET)
    }

    pub fn validate_with_budget(&self, budget_bytes: usize) -> Result<()> {
        if self.n_majorana < 4 || !self.n_majorana.is_multiple_of(2) {
            return Err(Error::invalid(format!("SYK needs an even Majorana count >= 4, got {}", self.n_majorana)));
        }
        if !(self.j_scale > T::zero()) || !self.j_scale.is_finite() {
            return Err(Error::invalid("SYK coupling scale J must be positive"));
        }
        check_dense_budget::<T>(self.n_majorana / 2, budget_bytes)
    }

    /// Variance of each coupling, `3! J^2 / n_majorana^3`.
    pub fn coupling_variance(&self) -> T {
        let n = T::from_usize_lossy(self.n_majorana);
        T::lit(6.0) * self.j_scale * self.j_scale / (n * n * n)
    }
}

fn check_dense_budget<T: Real>(n_qubits: usize, budget_bytes: usize) -> Result<()> {
    if n_qubits >= 31 {
        return Err(Error::Resource(format!("2^{n_qubits} basis states")));
    }
    let d = 1usize << n_qubits;
    let bytes = d.checked_mul(d).and_then(|n| n.checked_mul(std::mem::size_of::<Complex<T>>()));
    match bytes {
        Some(b) if b <= budget_bytes => Ok(()),
        _ => Err(Error::Resource(format!(
            "a dense {d}x{d} Hamiltonian exceeds the memory budget of {budget_bytes} bytes"
        ))),
    }
}

/// Antisymmetric quartic couplings, one value per `k < l < m < n` in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct SykCouplings<T: Real> {
    n_majorana: usize,
    values: Vec<T>,
}

impl<T: Real> SykCouplings<T> {
    /// Builds a table from explicit values in lexicographic quadruple order.
    pub fn from_values(n_majorana: usize, values: Vec<T>) -> Result<Self> {
        let expected = quadruple_count(n_majorana);
        if values.len() != expected {
            return Err(Error::invalid(format!(
                "{n_majorana} Majoranas need {expected} couplings, got {}",
                values.len()
            )));
        }
        Ok(SykCouplings { n_majorana, values })
    }

    pub fn n_majorana(&self) -> usize {
        self.n_majorana
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `J_{klmn}` for arbitrary 0-based indices: antisymmetric, zero on repeats.
    pub fn get(&self, idx: [usize; 4]) -> T {
        let mut sorted = idx;
        let mut sign = T::one();
        // insertion sort tracking parity
        for i in 1..4 {
            let mut j = i;
            while j > 0 && sorted[j - 1] > sorted[j] {
                sorted.swap(j - 1, j);
                sign = -sign;
                j -= 1;
            }
        }
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return T::zero();
        }
        sign * self.values[quadruple_index(self.n_majorana, sorted)]
    }
}

/// `C(n, 4)`.
pub fn quadruple_count(n: usize) -> usize {
    if n < 4 {
        0
    } else {
        n * (n - 1) * (n - 2) * (n - 3) / 24
    }
}

/// Ordered quadruples `k < l < m < n` in lexicographic order.
pub fn quadruples(n: usize) -> impl Iterator<Item = [usize; 4]> {
    (0..n).flat_map(move |a| {
        (a + 1..n).flat_map(move |b| (b + 1..n).flat_map(move |c| (c + 1..n).map(move |d| [a, b, c, d])))
    })
}

fn quadruple_index(n: usize, q: [usize; 4]) -> usize {
    // rank of q among lexicographically ordered 4-subsets
    fn binom(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }
    let mut rank = 0;
    let mut prev = 0;
    for (pos, &v) in q.iter().enumerate() {
        let left = 4 - pos - 1;
        for skipped in prev..v {
            rank += binom(n - skipped - 1, left);
        }
        prev = v + 1;
    }
    rank
}

/// Draws one coupling per ordered quadruple, in lexicographic order.
pub fn sample_syk_couplings<T: Real>(params: &SykParams<T>, rng: &mut impl NormalSource<T>) -> Result<SykCouplings<T>> {
    params.validate()?;
    let std = params.coupling_variance().sqrt();
    let values = quadruples(params.n_majorana).map(|_| std * rng.next_normal()).collect();
    Ok(SykCouplings { n_majorana: params.n_majorana, values })
}

/// `H = (1/4) sum_{k<l<m<n} J_klmn chi_k chi_l chi_m chi_n`.
///
/// Equal to the unrestricted sum over all index tuples with prefactor
/// `1/(4 * 4!)`: both `J` and the operator product are antisymmetric, so the
/// 4! orderings of a quadruple coincide and repeated indices cancel.
pub fn build_syk_hamiltonian<T: Real>(
    params: &SykParams<T>,
    couplings: &SykCouplings<T>,
) -> Result<HamiltonianInstance<T>> {
    params.validate()?;
    if couplings.n_majorana != params.n_majorana || couplings.values.len() != quadruple_count(params.n_majorana) {
        return Err(Error::invalid(format!(
            "coupling table for {} Majoranas does not match {}",
            couplings.n_majorana, params.n_majorana
        )));
    }
    let majoranas = build_majorana_set(params.n_majorana)?;
    let d = majoranas.dim();
    // 1/4 prefactor times (1/sqrt 2)^4 from the Majorana normalization
    let prefactor = T::lit(1.0 / 16.0);
    let mut matrix = CMatrix::<T>::from_element(d, d, czero());
    for (q, &j) in quadruples(params.n_majorana).zip(couplings.values.iter()) {
        let string = q.iter().fold(PauliString::IDENTITY, |acc, &k| acc.compose(majoranas.string(k)));
        let coeff = prefactor * j;
        for col in 0..d {
            let (row, v) = string.column_entry::<T>(col);
            matrix[(row, col)] += v * coeff;
        }
    }
    let provenance = Provenance::new(ModelTag::Syk, params.seed)
        .with("n_majorana", params.n_majorana)
        .with("j_scale", params.j_scale);
    Ok(HamiltonianInstance { matrix, provenance })
}

/// Samples couplings from `seeded_rng(params.seed, 0)` and builds the Hamiltonian.
pub fn syk_instance<T: Real>(params: &SykParams<T>) -> Result<HamiltonianInstance<T>>
where
    StandardNormal: Distribution<T>,
{
    let mut rng = seeded_rng(params.seed, 0);
    let couplings = sample_syk_couplings(params, &mut rng)?;
    build_syk_hamiltonian(params, &couplings)
}

/// GOE parameters; entries have off-diagonal standard deviation `scale / sqrt(dim)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoeParams<T: Real> {
    pub dim: usize,
    pub seed: u64,
    pub scale: T,
}

impl<T: Real> GoeParams<T> {
    pub fn new(dim: usize, seed: u64) -> Self {
        GoeParams { dim, seed, scale: T::one() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::invalid(format!("GOE dimension must be >= 2, got {}", self.dim)));
        }
        if !(self.scale > T::zero()) || !self.scale.is_finite() {
            return Err(Error::invalid("GOE scale must be positive"));
        }
        let bytes = self.dim.checked_mul(self.dim).and_then(|n| n.checked_mul(std::mem::size_of::<Complex<T>>()));
        match bytes {
            Some(b) if b <= DEFAULT_MEMORY_BUDGET => Ok(()),
            _ => Err(Error::Resource(format!("GOE dimension {} exceeds the memory budget", self.dim))),
        }
    }

    /// Off-diagonal standard deviation.
    pub fn sigma(&self) -> T {
        self.scale / T::from_usize_lossy(self.dim).sqrt()
    }
}

/// Real symmetric Gaussian matrix; draws are consumed row-major over the upper triangle.
pub fn build_goe_hamiltonian<T: Real>(
    params: &GoeParams<T>,
    rng: &mut impl NormalSource<T>,
) -> Result<HamiltonianInstance<T>> {
    params.validate()?;
    let d = params.dim;
    let sigma = params.sigma();
    let sigma_diag = sigma * T::lit(2.0).sqrt();
    let mut matrix = CMatrix::<T>::from_element(d, d, czero());
    for i in 0..d {
        for j in i..d {
            let g = rng.next_normal();
            if i == j {
                matrix[(i, i)] = creal(g * sigma_diag);
            } else {
                let v = creal(g * sigma);
                matrix[(i, j)] = v;
                matrix[(j, i)] = v;
            }
        }
    }
    let provenance = Provenance::new(ModelTag::Goe, params.seed).with("dim", d).with("scale", params.scale);
    Ok(HamiltonianInstance { matrix, provenance })
}

/// GOE matrix drawn from `seeded_rng(params.seed, stream)`.
pub fn goe_instance<T: Real>(params: &GoeParams<T>, stream: u64) -> Result<HamiltonianInstance<T>>
where
    StandardNormal: Distribution<T>,
{
    let mut rng = seeded_rng(params.seed, stream);
    build_goe_hamiltonian(params, &mut rng)
}
