//! Small dense complex linear algebra on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |U^H U - I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

pub fn hermiticity_defect(h: &CMatrix) -> f64 {
    max_abs(&(h - h.adjoint()))
}

/// Kronecker product `a ⊗ b` with `a` as the outer (slow) index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Orthonormal basis of the right null space: right singular vectors whose
/// singular value is below `tol`. Returned as columns.
pub fn null_space(m: &CMatrix, tol: f64) -> CMatrix {
    let n = m.ncols();
    let (values, vectors) = right_singular_pairs(m);
    let cols: Vec<CVector> = values
        .iter()
        .zip(vectors)
        .filter(|(s, _)| **s < tol)
        .map(|(_, v)| v)
        .collect();
    if cols.is_empty() {
        CMatrix::zeros(n, 0)
    } else {
        CMatrix::from_columns(&cols)
    }
}

/// All singular values of `m` (length `ncols`, padded with zeros when the
/// matrix is wide) paired with their right singular vectors, ascending.
pub fn right_singular_pairs(m: &CMatrix) -> (Vec<f64>, Vec<CVector>) {
    let n = m.ncols();
    // Work on the Gram-free square form so that short-wide inputs still yield
    // a full set of n right vectors.
    let square = if m.nrows() >= n {
        m.clone()
    } else {
        let mut padded = CMatrix::zeros(n, n);
        padded.rows_mut(0, m.nrows()).copy_from(m);
        padded
    };
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("requested right vectors");
    let mut pairs: Vec<(f64, CVector)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(k, s)| (*s, v_t.row(k).adjoint()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn min_singular_value(m: &CMatrix) -> f64 {
    m.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Hermitian eigendecomposition, eigenvalues ascending with matching columns.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let cols: Vec<CVector> = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    let vectors = if cols.is_empty() {
        CMatrix::zeros(h.nrows(), 0)
    } else {
        CMatrix::from_columns(&cols)
    };
    (values, vectors)
}

/// Solves `K x = E M x` for Hermitian `K` and Hermitian positive definite `M`
/// via `M = L L^H` and the standard problem `L^{-1} K L^{-H} y = E y`.
/// Eigenvectors come back M-orthonormal, eigenvalues ascending.
pub fn generalized_hermitian_eigen(k: &CMatrix, m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let reduced = whiten(&l, k);
    let (values, y) = hermitian_eigen(&reduced);
    let x = l
        .adjoint()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    Ok((values, x))
}

/// Eigenvalues only of `K x = E M x`.
pub fn generalized_hermitian_eigenvalues(k: &CMatrix, m: &CMatrix) -> Result<Vec<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
    if is_real(k) && is_real(m) {
        return real_generalized_eigenvalues(&k.map(|z| z.re), &m.map(|z| z.re));
    }
    let reduced = whiten(&chol.l(), k);
    let mut values: Vec<f64> = reduced.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| a.total_cmp(b));
    Ok(values)
}

fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

fn real_generalized_eigenvalues(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let l = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?
        .l();
    let left = l.solve_lower_triangular(k).expect("nonsingular factor");
    let reduced = l
        .solve_lower_triangular(&left.transpose())
        .expect("nonsingular factor")
        .transpose();
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let mut values: Vec<f64> = reduced.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| a.total_cmp(b));
    Ok(values)
}

// L^{-1} K L^{-H}, symmetrized against round-off.
fn whiten(l: &CMatrix, k: &CMatrix) -> CMatrix {
    let left = l.solve_lower_triangular(k).expect("nonsingular factor");
    let reduced = l
        .solve_lower_triangular(&left.adjoint())
        .expect("nonsingular factor")
        .adjoint();
    (&reduced + reduced.adjoint()) * c(0.5, 0.0)
}

/// Haar-distributed random unitary (QR of a complex Ginibre matrix with the
/// phases of R's diagonal divided out).
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) / std::f64::consts::SQRT_2
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}
