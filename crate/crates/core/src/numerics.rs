//! Dense complex linear algebra shared by the channel, solver and optimizer
//! modules.
//!
//! Matrices are `nalgebra` dense matrices over `Complex64`. The
//! [`HermitianMatrix`] newtype carries the Hermitian invariant; every
//! constructor either checks it or symmetrizes its input.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Relative tolerance used when checking the Hermitian property.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// A square complex matrix with `A = A^H`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Validates `m` and stores its symmetrized form `(m + m^H) / 2`.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return invalid(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            ));
        }
        let scale = m
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let n = m.nrows();
        for i in 0..n {
            if m[(i, i)].im.abs() > HERMITIAN_TOL * scale {
                return invalid(format!(
                    "diagonal entry {i} has imaginary part {}",
                    m[(i, i)].im
                ));
            }
            for j in (i + 1)..n {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > HERMITIAN_TOL * scale {
                    return invalid(format!("matrix is not Hermitian at ({i}, {j})"));
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    /// `(m + m^H) / 2` without a tolerance check. Panics on non-square input.
    pub fn symmetrized(m: ComplexMatrix) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "symmetrized: matrix must be square");
        let mut out = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        for i in 0..out.nrows() {
            out[(i, i)].im = 0.0;
        }
        HermitianMatrix(out)
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(ComplexMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(ComplexMatrix::identity(n, n))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(*d, 0.0);
        }
        HermitianMatrix(m)
    }

    /// Rank-one `x x^H`.
    pub fn outer(x: &ComplexVector) -> Self {
        Self::symmetrized(x * x.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        HermitianMatrix(&self.0 * C64::new(s, 0.0))
    }

    pub fn plus(&self, other: &HermitianMatrix) -> Self {
        assert_eq!(self.dim(), other.dim());
        HermitianMatrix(&self.0 + &other.0)
    }

    /// `x^H A x`, real for Hermitian `A`.
    pub fn quad_form(&self, x: &ComplexVector) -> f64 {
        x.dotc(&(&self.0 * x)).re
    }

    pub fn eig(&self) -> HermEig {
        let n = self.dim();
        let se = SymmetricEigen::new(self.0.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
        let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
        let mut vectors = ComplexMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &se.eigenvectors.column(src));
        }
        HermEig { values, vectors }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig().values.last().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition `A = V diag(values) V^H` with eigenvalues in
/// descending order and orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermEig {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = C64::new(self.values[j], 0.0);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// Hermitian eigendecomposition of a general complex matrix, after
/// validating that it is square and Hermitian.
pub fn herm_eig(a: &ComplexMatrix) -> Result<HermEig> {
    Ok(HermitianMatrix::new(a.clone())?.eig())
}

/// `Re Tr(A X)`.
pub fn trace_inner(a: &HermitianMatrix, x: &HermitianMatrix) -> Result<f64> {
    if a.dim() != x.dim() {
        return invalid(format!(
            "trace_inner: dimension mismatch {} vs {}",
            a.dim(),
            x.dim()
        ));
    }
    Ok(trace_product(a.as_matrix(), x.as_matrix()))
}

/// `Re Tr(A B)` for square matrices of equal size, computed without forming
/// the product.
pub(crate) fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

/// Frobenius-nearest positive semidefinite matrix: eigenvalues clamped at 0.
pub fn psd_project(a: &HermitianMatrix) -> HermitianMatrix {
    let mut e = a.eig();
    for v in e.values.iter_mut() {
        *v = v.max(0.0);
    }
    HermitianMatrix::symmetrized(e.reconstruct())
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// One draw from the circularly-symmetric complex Gaussian `CN(0, 1)`.
pub fn cn_sample<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn cn_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| cn_sample(rng))
}

pub fn cn_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| cn_sample(rng))
}

/// A random Hermitian matrix with CN(0,1) off-diagonal and N(0,1) diagonal
/// entries.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix {
    HermitianMatrix::symmetrized(cn_matrix(n, n, rng) * C64::new(std::f64::consts::SQRT_2, 0.0))
}
