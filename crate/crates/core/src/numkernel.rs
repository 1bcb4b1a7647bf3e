//! Dense Hermitian linear algebra: SPD solves, eigendecompositions,
//! positive-semidefiniteness certificates, square roots, the largest
//! eigenvalue of a symmetric pencil, and Gram–Schmidt in a Gram metric.
//!
//! Everything is generic over [`Scalar`] so real matrices stay on the `f64`
//! path while complex multipliers use `Complex64`.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Field of matrix entries: `f64` or `Complex64`.
pub trait Scalar: ComplexField<RealField = f64> + Copy {}

impl Scalar for f64 {}
impl Scalar for Complex64 {}

const HERMITIAN_TOL: f64 = 1e-12;

/// A dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T: Scalar> {
    a: DMatrix<T>,
    defect: f64,
}

impl<T: Scalar> SymMatrix<T> {
    /// Validates Hermitian symmetry to `1e-12` relative, then symmetrizes.
    pub fn new(a: DMatrix<T>) -> Result<Self> {
        let m = Self::symmetrized(a)?;
        if m.defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(m.defect));
        }
        Ok(m)
    }

    /// Symmetrizes without rejecting; the relative defect is recorded.
    pub fn symmetrized(a: DMatrix<T>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let scale = a.iter().map(|v| v.modulus()).fold(1.0_f64, f64::max);
        let adj = a.adjoint();
        let defect = a
            .iter()
            .zip(adj.iter())
            .map(|(x, y)| (*x - *y).modulus())
            .fold(0.0, f64::max)
            / scale;
        let half = T::from_real(0.5);
        let a = (a + adj) * half;
        Ok(SymMatrix { a, defect })
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        Self::new(DMatrix::from_fn(n, n, f))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix {
            a: DMatrix::identity(n, n),
            defect: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.a
    }

    /// Relative asymmetry found on construction.
    pub fn defect(&self) -> f64 {
        self.defect
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        self.a
            .row_iter()
            .map(|r| r.iter().map(|v| v.modulus()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `ξ* A ξ` (real for Hermitian `A`).
    pub fn quadratic_form(&self, xi: &DVector<T>) -> f64 {
        xi.dotc(&(&self.a * xi)).real()
    }
}

/// Lower-triangular factor `L` with `A = L L*`.
#[derive(Debug, Clone)]
pub struct Cholesky<T: Scalar> {
    l: DMatrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Fails when a pivot drops to `n·ε·max diag` or below.
    pub fn new(a: &SymMatrix<T>) -> Result<Self> {
        let n = a.dim();
        let m = a.matrix();
        let max_diag = (0..n).map(|i| m[(i, i)].real().abs()).fold(0.0, f64::max);
        let threshold = n as f64 * f64::EPSILON * max_diag;
        let mut l = DMatrix::<T>::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)].real();
            for k in 0..j {
                d -= l[(j, k)].modulus_squared();
            }
            if !(d > threshold) {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d });
            }
            let ljj = d.sqrt();
            l[(j, j)] = T::from_real(ljj);
            for i in j + 1..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conjugate();
                }
                l[(i, j)] = s.unscale(ljj);
            }
        }
        Ok(Cholesky { l })
    }

    pub fn l(&self) -> &DMatrix<T> {
        &self.l
    }

    /// Solves `L Y = B`.
    pub fn solve_lower(&self, b: &DMatrix<T>) -> DMatrix<T> {
        let n = self.l.nrows();
        let mut y = b.clone();
        for c in 0..y.ncols() {
            for i in 0..n {
                let mut s = y[(i, c)];
                for k in 0..i {
                    s -= self.l[(i, k)] * y[(k, c)];
                }
                y[(i, c)] = s / self.l[(i, i)];
            }
        }
        y
    }

    /// Solves `L* X = B`.
    pub fn solve_upper_adjoint(&self, b: &DMatrix<T>) -> DMatrix<T> {
        let n = self.l.nrows();
        let mut x = b.clone();
        for c in 0..x.ncols() {
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self.l[(k, i)].conjugate() * x[(k, c)];
                }
                x[(i, c)] = s / self.l[(i, i)];
            }
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<T>) -> DVector<T> {
        let y = self.solve_lower(&DMatrix::from_column_slice(b.len(), 1, b.as_slice()));
        let x = self.solve_upper_adjoint(&y);
        DVector::from_column_slice(x.as_slice())
    }
}

/// Solves `A x = b` for SPD `A`, with one step of iterative refinement when
/// the relative residual exceeds `1e-10`.
pub fn spd_solve<T: Scalar>(a: &SymMatrix<T>, b: &DVector<T>) -> Result<DVector<T>> {
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.len(),
        });
    }
    let chol = Cholesky::new(a)?;
    let mut x = chol.solve(b);
    let r = b - a.matrix() * &x;
    if r.norm() > 1e-10 * b.norm() {
        x += chol.solve(&r);
    }
    Ok(x)
}

/// Eigendecomposition with eigenvalues ascending and orthonormal columns.
#[derive(Debug, Clone)]
pub struct Eigen<T: Scalar> {
    pub values: Vec<f64>,
    pub vectors: DMatrix<T>,
}

pub fn sym_eig<T: Scalar>(a: &SymMatrix<T>) -> Result<Eigen<T>> {
    let m = a.matrix();
    let n = a.dim();
    if m.iter().any(|v| !(v.real().is_finite() && v.imaginary().is_finite())) {
        return Err(Error::ConvergenceFailure);
    }
    if n == 0 {
        return Ok(Eigen {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 100 * n.max(10))
        .ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);

    let lambda = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            T::from_real(values[r])
        } else {
            T::zero()
        }
    });
    let residual = (m * &vectors - &vectors * lambda).norm();
    if residual > 1e-9 * m.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::ConvergenceFailure);
    }
    Ok(Eigen { values, vectors })
}

/// Outcome of a positive-semidefiniteness test.
#[derive(Debug, Clone)]
pub struct PsdVerdict<T: Scalar> {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    /// Unit eigenvector of the smallest eigenvalue, first nonzero entry made
    /// real and positive.
    pub witness: DVector<T>,
    pub tolerance: f64,
}

/// Default tolerance `1e-9 · max(1, ‖A‖∞)`.
pub fn default_psd_tolerance<T: Scalar>(a: &SymMatrix<T>) -> f64 {
    1e-9 * a.inf_norm().max(1.0)
}

fn fix_phase<T: Scalar>(mut v: DVector<T>) -> DVector<T> {
    let norm = v.norm();
    if norm > 0.0 {
        v.unscale_mut(norm);
    }
    let biggest = v.iter().map(|x| x.modulus()).fold(0.0, f64::max);
    if let Some(first) = v.iter().find(|x| x.modulus() > 1e-12 * biggest).copied() {
        let phase = first.conjugate().unscale(first.modulus());
        v *= phase;
    }
    v
}

/// `is_psd ⟺ λ_min(A) ≥ −tol`.
pub fn psd_check<T: Scalar>(a: &SymMatrix<T>, tol: Option<f64>) -> Result<PsdVerdict<T>> {
    let tolerance = tol.unwrap_or_else(|| default_psd_tolerance(a));
    if a.dim() == 0 {
        return Ok(PsdVerdict {
            is_psd: true,
            min_eigenvalue: 0.0,
            witness: DVector::zeros(0),
            tolerance,
        });
    }
    let eig = sym_eig(a)?;
    let min_eigenvalue = eig.values[0];
    let witness = fix_phase(eig.vectors.column(0).into_owned());
    Ok(PsdVerdict {
        is_psd: min_eigenvalue >= -tolerance,
        min_eigenvalue,
        witness,
        tolerance,
    })
}

/// The psd square root `Q Λ^{1/2} Q*`; eigenvalues in `[−tol, 0)` are clamped.
pub fn sqrtm_psd<T: Scalar>(a: &SymMatrix<T>, tol: Option<f64>) -> Result<SymMatrix<T>> {
    let tolerance = tol.unwrap_or_else(|| default_psd_tolerance(a));
    let eig = sym_eig(a)?;
    if let Some(&min) = eig.values.first() {
        if min < -tolerance {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
    }
    let roots: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let mut scaled = eig.vectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= T::from_real(roots[j]);
    }
    SymMatrix::symmetrized(scaled * eig.vectors.adjoint())
}

/// Largest generalized eigenpair of the pencil `A ξ = λ B ξ`.
#[derive(Debug, Clone)]
pub struct PencilMax<T: Scalar> {
    pub value: f64,
    pub vector: DVector<T>,
    pub residual: f64,
}

/// Reduces to `L⁻¹ A L⁻*` with `B = L L*` and takes the top eigenpair.
pub fn gen_eig_max<T: Scalar>(a: &SymMatrix<T>, b: &SymMatrix<T>) -> Result<PencilMax<T>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            got: a.dim(),
        });
    }
    let chol = Cholesky::new(b)?;
    let y = chol.solve_lower(a.matrix());
    let c = chol.solve_lower(&y.adjoint());
    let reduced = SymMatrix::symmetrized(c)?;
    let eig = sym_eig(&reduced)?;
    let n = a.dim();
    let value = eig.values[n - 1];
    let top = eig.vectors.column(n - 1).into_owned();
    let xi = chol.solve_upper_adjoint(&DMatrix::from_column_slice(n, 1, top.as_slice()));
    let vector = fix_phase(DVector::from_column_slice(xi.as_slice()));
    let r = a.matrix() * &vector - b.matrix() * &vector * T::from_real(value);
    let residual = r.norm();
    let scale = a.matrix().norm() + value.abs() * b.matrix().norm();
    if residual > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::ConvergenceFailure);
    }
    Ok(PencilMax {
        value,
        vector,
        residual,
    })
}

/// Upper-triangular `C` with `C* V C = I`: column `j` holds the coefficients of
/// the `j`-th orthonormal vector obtained by Gram–Schmidt on the basis whose
/// Gram matrix is `V`, in the given order.
pub fn gram_schmidt_v<T: Scalar>(v: &SymMatrix<T>) -> Result<DMatrix<T>> {
    let chol = Cholesky::new(v)?;
    let n = v.dim();
    Ok(chol.solve_upper_adjoint(&DMatrix::identity(n, n)))
}

/// Largest singular value.
pub fn spectral_norm<T: Scalar>(m: &DMatrix<T>) -> Result<f64> {
    let gram = SymMatrix::symmetrized(m.adjoint() * m)?;
    let eig = sym_eig(&gram)?;
    Ok(eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}
