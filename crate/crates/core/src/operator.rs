//! Dense complex Hermitian operators on `n` qubits.
//!
//! Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of a
//! computational-basis index.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Maximum elementwise deviation from the conjugate transpose that is still
/// accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance on `tr ρ = 1` for a physical state.
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted for a physical state.
pub const EIGENVALUE_FLOOR: f64 = -1e-9;

/// A square complex matrix equal to its conjugate transpose.
#[derive(Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<Complex64>,
}

impl fmt::Debug for HermitianOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermitianOperator")
            .field("dim", &self.dim())
            .field("matrix", &self.matrix)
            .finish()
    }
}

impl HermitianOperator {
    /// Validates squareness and Hermiticity, then symmetrizes away rounding.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(invalid(format!(
                "operator must be a nonempty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let dev = hermitian_deviation(&matrix);
        if !(dev <= HERMITIAN_TOL) {
            return Err(invalid(format!(
                "matrix is not Hermitian (max deviation {dev:.3e})"
            )));
        }
        Ok(Self::hermitize(matrix))
    }

    /// Builds from a matrix known to be Hermitian up to rounding.
    pub(crate) fn hermitize(matrix: DMatrix<Complex64>) -> Self {
        let adj = matrix.adjoint();
        Self {
            matrix: (matrix + adj).unscale(2.0),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::identity(dim) * (1.0 / dim as f64)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        Self { matrix: m }
    }

    /// `|ψ⟩⟨ψ|` for the given (not necessarily normalized) vector.
    pub fn projector(psi: &[Complex64]) -> Self {
        let n = psi.len();
        let m = DMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj());
        Self::hermitize(m)
    }

    /// Builds from row-major real and imaginary parts.
    pub fn from_parts(dim: usize, re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != dim * dim || im.len() != dim * dim {
            return Err(invalid(format!(
                "expected {} entries for a {dim}x{dim} operator",
                dim * dim
            )));
        }
        let m = DMatrix::from_fn(dim, dim, |i, j| {
            Complex64::new(re[i * dim + j], im[i * dim + j])
        });
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of qubits if the dimension is a power of two.
    pub fn num_qubits(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    pub(crate) fn qubits_or_err(&self) -> Result<usize> {
        self.num_qubits().ok_or_else(|| {
            invalid(format!("dimension {} is not a power of two", self.dim()))
        })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// Hilbert–Schmidt inner product `tr(self · other)`, real for Hermitian pairs.
    pub fn inner(&self, other: &HermitianOperator) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        // tr(AB) = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij) for Hermitian B.
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// `⟨ψ|self|ψ⟩`.
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let d = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..d {
                row += self.matrix[(i, j)] * psi[j];
            }
            acc += psi[i].conj() * row;
        }
        acc.re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// Largest elementwise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &HermitianOperator) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Matrix product, which is Hermitian only for commuting factors; the
    /// result is returned as a plain matrix.
    pub fn product(&self, other: &HermitianOperator) -> DMatrix<Complex64> {
        &self.matrix * &other.matrix
    }

    pub fn transpose(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
        }
    }

    pub fn eigh(&self) -> Eigen {
        eig_hermitian_unchecked(self)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigh().values[0]
    }

    /// Applies a real function to the spectrum: `V f(Λ) V†`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        self.eigh().recompose_with(f)
    }
}

impl Add<&HermitianOperator> for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub<&HermitianOperator> for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul<f64> for HermitianOperator {
    type Output = HermitianOperator;
    fn mul(mut self, rhs: f64) -> HermitianOperator {
        self.matrix *= Complex64::new(rhs, 0.0);
        self
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.clone() * rhs
    }
}

fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// A unit-trace positive-semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState(HermitianOperator);

impl QuantumState {
    /// Checks trace and eigenvalue floor.
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(invalid(format!("state trace is {tr}, expected 1")));
        }
        let lmin = op.min_eigenvalue();
        if lmin < EIGENVALUE_FLOOR {
            return Err(invalid(format!(
                "state is not positive semidefinite (min eigenvalue {lmin:.3e})"
            )));
        }
        Ok(Self(op))
    }

    pub(crate) fn new_unchecked(op: HermitianOperator) -> Self {
        Self(op)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(HermitianOperator::maximally_mixed(dim))
    }

    /// `|ψ⟩⟨ψ|` for a normalized pure state.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("state vector has norm² {norm2}")));
        }
        Ok(Self(HermitianOperator::projector(psi)))
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.0
    }

    pub fn into_operator(self) -> HermitianOperator {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `(1−ε)ρ + ε𝟙/d`, used to lift a rank-deficient anchor into the
    /// interior before taking spectral gradients.
    pub fn regularized(&self, eps: f64) -> Self {
        let d = self.dim();
        let mixed = HermitianOperator::maximally_mixed(d);
        Self(&(&self.0 * (1.0 - eps)) + &(mixed * eps))
    }
}

impl AsRef<HermitianOperator> for QuantumState {
    fn as_ref(&self) -> &HermitianOperator {
        &self.0
    }
}

/// Eigendecomposition `V Λ V†` with eigenvalues in ascending order.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, aligned with `values`.
    pub vectors: DMatrix<Complex64>,
}

impl Eigen {
    pub fn recompose(&self) -> HermitianOperator {
        self.recompose_with(|x| x)
    }

    pub fn recompose_with(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let d = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let w = Complex64::new(f(lam), 0.0);
            for i in 0..d {
                scaled[(i, k)] *= w;
            }
        }
        HermitianOperator::hermitize(scaled * self.vectors.adjoint())
    }

    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k).iter().copied().collect()
    }
}

/// Eigendecomposition of a Hermitian operator.
pub fn eig_hermitian(op: &HermitianOperator) -> Result<Eigen> {
    let dev = hermitian_deviation(op.matrix());
    if !(dev <= HERMITIAN_TOL) {
        return Err(invalid(format!(
            "eigendecomposition needs a Hermitian input (deviation {dev:.3e})"
        )));
    }
    Ok(eig_hermitian_unchecked(op))
}

fn eig_hermitian_unchecked(op: &HermitianOperator) -> Eigen {
    let eig = SymmetricEigen::new(op.matrix().clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(op.dim(), op.dim(), |i, k| eig.eigenvectors[(i, order[k])]);
    Eigen { values, vectors }
}

/// Kronecker product `F₀ ⊗ F₁ ⊗ …` of square factors, leftmost factor first.
pub fn kron(factors: &[HermitianOperator]) -> Result<HermitianOperator> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| invalid("kron needs at least one factor"))?;
    let mut acc = first.matrix.clone();
    for f in rest {
        acc = acc.kronecker(&f.matrix);
    }
    Ok(HermitianOperator { matrix: acc })
}

/// Kronecker product of state vectors, leftmost factor first.
pub fn kron_vectors(factors: &[Vec<Complex64>]) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(1.0, 0.0)];
    for f in factors {
        acc = acc
            .iter()
            .flat_map(|a| f.iter().map(move |b| a * b))
            .collect();
    }
    acc
}

/// Bit mask (over computational-basis indices) of the given qubits.
pub(crate) fn qubit_mask(n: usize, qubits: &[usize]) -> Result<usize> {
    let mut mask = 0usize;
    for &q in qubits {
        if q >= n {
            return Err(invalid(format!("qubit index {q} out of range for {n} qubits")));
        }
        mask |= 1 << (n - 1 - q);
    }
    Ok(mask)
}

/// Partial transpose over the qubits in `party_a`.
pub fn partial_transpose(op: &HermitianOperator, party_a: &[usize]) -> Result<HermitianOperator> {
    let n = op.qubits_or_err()?;
    let mask = qubit_mask(n, party_a)?;
    Ok(partial_transpose_mask(op, mask))
}

pub(crate) fn partial_transpose_mask(op: &HermitianOperator, mask: usize) -> HermitianOperator {
    let d = op.dim();
    let src = op.matrix();
    let m = DMatrix::from_fn(d, d, |x, y| {
        // Swap the A-bits of row and column indices.
        let xs = (x & !mask) | (y & mask);
        let ys = (y & !mask) | (x & mask);
        src[(xs, ys)]
    });
    HermitianOperator { matrix: m }
}
