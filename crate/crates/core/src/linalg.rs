//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `⟨a|b⟩`, conjugate-linear in the first slot.
pub fn inner<'a, A, B>(a: A, b: B) -> Complex64
where
    A: IntoIterator<Item = &'a Complex64>,
    B: IntoIterator<Item = &'a Complex64>,
{
    a.into_iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn col_inner(a: &CMatrix, i: usize, b: &CMatrix, j: usize) -> Complex64 {
    inner(a.column(i).iter(), b.column(j).iter())
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

/// Hermitian part check: `max |M - M†|`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    let herm = (m + m.adjoint()).scale(0.5);
    herm.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Eigenvectors of an upper-triangular matrix by back substitution.
///
/// Column `k` solves `(T - t_kk) y = 0` with `y_k = 1`. Tiny pivots are replaced by
/// `eps·‖T‖` so that coalescing eigenvalues produce nearly parallel vectors instead of NaNs.
pub fn triangular_eigenvectors(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let scale = match max_abs(t) {
        m if m > 0.0 => m,
        _ => 1.0,
    };
    let smin = f64::EPSILON * scale;
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = re(1.0);
        for j in (0..k).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in (j + 1)..=k {
                acc += t[(j, l)] * y[(l, k)];
            }
            let mut pivot = t[(j, j)] - lambda;
            if pivot.norm() < smin {
                pivot = re(smin);
            }
            y[(j, k)] = -acc / pivot;
        }
        let norm = y.column(k).norm();
        if norm > 0.0 && norm.is_finite() {
            let mut col = y.column_mut(k);
            col /= re(norm);
        }
    }
    y
}

/// Complex Schur form `A = Q T Q†` followed by triangular back substitution.
/// Returns eigenvalues (unsorted) and unit-norm eigenvectors as columns.
pub fn eig_general(a: &CMatrix) -> Result<(Vec<Complex64>, CMatrix)> {
    ensure_square(a)?;
    if !is_finite(a) {
        return Err(Error::NonFinite);
    }
    let n = a.nrows();
    if n == 1 {
        return Ok((vec![a[(0, 0)]], CMatrix::identity(1, 1)));
    }
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::DefectiveMatrix("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let values = (0..n).map(|k| t[(k, k)]).collect();
    let vectors = q * triangular_eigenvectors(&t);
    Ok((values, vectors))
}

/// Inverse through LU; `None` when numerically singular.
pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    m.clone().try_inverse().filter(is_finite)
}

/// Kronecker product of two dense matrices.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[re(0.0), c(0.0, -1.0), c(0.0, 1.0), re(0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(-1.0)])
}

/// Wrap an angle into `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}
