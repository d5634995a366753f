//! Dense linear-algebra kernels used by identification and control design.
//!
//! Decompositions (SVD, Schur eigenvalues, symmetric eigenvalues) are backed
//! by `nalgebra`. The matrix exponential, principal logarithm and the
//! Riccati/Lyapunov solvers are implemented here so that their failure modes
//! are reported as [`NumericsError`] instead of silently producing NaNs.

mod decomp;
mod expm;
mod logm;
mod riccati;

pub(crate) use decomp::pinv_from_svd;
pub use decomp::{eig_real_parts, eigenvalues, pinv, svd, symmetric_eigenvalues, SvdResult};
pub use expm::{mat_exp, zoh_integral};
pub use logm::{mat_log_principal, sqrtm};
pub use riccati::{care_residual, solve_care, solve_care_with, solve_lyapunov, CareOptions};

use nalgebra::DMatrix;
use thiserror::Error;

/// Dense real matrix used throughout the crate.
pub type Matrix = DMatrix<f64>;

/// Default relative tolerance for [`pinv`].
pub const PINV_REL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("{op}: non-finite entry in {rows}x{cols} input")]
    NonFinite {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("{op}: expected a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("{op}: dimension mismatch ({detail})")]
    DimensionMismatch { op: &'static str, detail: String },
    #[error("{op}: empty matrix")]
    Empty { op: &'static str },
    #[error("svd did not converge for a {rows}x{cols} matrix")]
    SvdNoConvergence { rows: usize, cols: usize },
    #[error("eigenvalue iteration did not converge for a {n}x{n} matrix")]
    EigNoConvergence { n: usize },
    #[error("matrix exponential overflow (scaled 1-norm {norm:e})")]
    ExpOverflow { norm: f64 },
    #[error(
        "matrix logarithm undefined: eigenvalue {re:e}{im:+e}i lies on the closed negative real \
         axis or at the origin; reduce the sample time T_s"
    )]
    LogUndefined { re: f64, im: f64 },
    #[error("{op}: matrix is singular to working precision")]
    Singular { op: &'static str },
    #[error("{op}: iteration did not converge after {iterations} steps")]
    NoConvergence { op: &'static str, iterations: usize },
    #[error("care: {matrix} is not {property} (extreme eigenvalue {eigenvalue:e})")]
    NotDefinite {
        matrix: &'static str,
        property: &'static str,
        eigenvalue: f64,
    },
    #[error("care: {matrix} is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { matrix: &'static str, asymmetry: f64 },
    #[error("care: pair (A, B) is not stabilizable; spectral abscissa of seeded loop {abscissa:e}")]
    NotStabilizable { abscissa: f64 },
    #[error("care: closed loop is not Hurwitz (spectral abscissa {abscissa:e}); (A, Q) may not be detectable")]
    NotDetectable { abscissa: f64 },
    #[error("care: residual {residual:e} exceeds tolerance {tolerance:e} after {iterations} Newton steps")]
    Residual {
        residual: f64,
        tolerance: f64,
        iterations: usize,
    },
}

pub type Result<T> = std::result::Result<T, NumericsError>;

pub(crate) fn ensure_finite(op: &'static str, a: &Matrix) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NumericsError::NonFinite {
            op,
            rows: a.nrows(),
            cols: a.ncols(),
        })
    }
}

pub(crate) fn ensure_square(op: &'static str, a: &Matrix) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(NumericsError::NotSquare {
            op,
            rows: a.nrows(),
            cols: a.ncols(),
        })
    }
}

/// Solves `a * x = b` by LU with partial pivoting.
pub fn solve(op: &'static str, a: &Matrix, b: &Matrix) -> Result<Matrix> {
    ensure_square(op, a)?;
    if a.nrows() != b.nrows() {
        return Err(NumericsError::DimensionMismatch {
            op,
            detail: format!("lhs {}x{}, rhs {}x{}", a.nrows(), a.ncols(), b.nrows(), b.ncols()),
        });
    }
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or(NumericsError::Singular { op })?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(NumericsError::Singular { op })
    }
}

/// Inverse of a square matrix.
pub fn inverse(op: &'static str, a: &Matrix) -> Result<Matrix> {
    solve(op, a, &Matrix::identity(a.nrows(), a.nrows()))
}

/// Largest real part among the eigenvalues of `a`.
pub fn spectral_abscissa(a: &Matrix) -> Result<f64> {
    Ok(eig_real_parts(a)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `true` when every eigenvalue of `a` has a strictly negative real part.
/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

pub fn is_hurwitz(a: &Matrix) -> Result<bool> {
    Ok(a.nrows() == 0 || spectral_abscissa(a)? < 0.0)
}

pub(crate) fn one_norm(a: &Matrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
