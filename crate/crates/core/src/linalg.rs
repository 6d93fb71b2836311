//! Small dense linear-algebra helpers on top of `nalgebra`.
//!
//! The error-corrected Gram matrices can be indefinite at small sample sizes
//! even when their population limit is positive definite, so solves go
//! through a symmetric eigendecomposition rather than a Cholesky factor.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Condition numbers above this are treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Outcome of a symmetric solve.
#[derive(Debug, Clone)]
pub struct SymSolve {
    pub solution: DVector<f64>,
    /// Ratio of largest to smallest absolute eigenvalue, always `>= 1`.
    pub condition: f64,
    /// Ridge added to the diagonal before solving (zero unless a fallback was used).
    pub regularizer: f64,
}

/// Why a symmetric solve was refused.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singular {
    pub condition: f64,
}

/// Eigenvalues of a symmetric matrix, using only its lower triangle.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    SymmetricEigen::new(m.clone()).eigenvalues
}

/// 2-norm condition number of a symmetric matrix (`inf` when singular).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = symmetric_eigenvalues(m);
    condition_from_eigenvalues(&eig)
}

fn condition_from_eigenvalues(eig: &DVector<f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for &l in eig.iter() {
        let a = l.abs();
        lo = lo.min(a);
        hi = hi.max(a);
    }
    if !(lo > 0.0) || !hi.is_finite() {
        f64::INFINITY
    } else {
        (hi / lo).max(1.0)
    }
}

/// Solves `m x = b` for symmetric (possibly indefinite) `m`.
///
/// Refuses when the condition number exceeds [`CONDITION_LIMIT`].
pub fn solve_symmetric(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<SymSolve, Singular> {
    let eig = SymmetricEigen::new(m.clone());
    let condition = condition_from_eigenvalues(&eig.eigenvalues);
    if !(condition <= CONDITION_LIMIT) {
        return Err(Singular { condition });
    }
    let q = &eig.eigenvectors;
    let mut coeffs = q.tr_mul(b);
    for (c, l) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
        *c /= *l;
    }
    Ok(SymSolve {
        solution: q * coeffs,
        condition,
        regularizer: 0.0,
    })
}

/// Like [`solve_symmetric`], but on refusal retries once with a ridge of
/// `1e-8 * |tr(m)| / d` on the diagonal.
pub fn solve_symmetric_regularized(
    m: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<SymSolve, Singular> {
    match solve_symmetric(m, b) {
        Ok(s) => Ok(s),
        Err(_) => {
            let d = m.nrows().max(1) as f64;
            let mut ridge = 1e-8 * m.trace().abs() / d;
            if !(ridge > 0.0) {
                ridge = 1e-8;
            }
            let shifted = m + DMatrix::<f64>::identity(m.nrows(), m.ncols()) * ridge;
            let mut s = solve_symmetric(&shifted, b)?;
            s.regularizer = ridge;
            Ok(s)
        }
    }
}

/// Largest absolute eigenvalue of a symmetric matrix (its operator norm).
pub fn symmetric_operator_norm(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m)
        .iter()
        .fold(0.0_f64, |acc, l| acc.max(l.abs()))
}

/// Clamps negative eigenvalues to zero and symmetrizes the result.
pub fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    let q = &eig.eigenvectors;
    let out = q * DMatrix::from_diagonal(&clamped) * q.transpose();
    (&out + out.transpose()) * 0.5
}

/// True when `m` is square, symmetric to `tol` (relative), and its eigenvalues
/// are all `>= -tol`.
pub fn is_symmetric_psd(m: &DMatrix<f64>, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > tol * scale {
                return false;
            }
        }
    }
    if m.iter().any(|v| !v.is_finite()) {
        return false;
    }
    symmetric_eigenvalues(m).iter().all(|&l| l >= -tol)
}
