use nalgebra::{DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;

use super::{ensure_finite, ensure_square, Matrix, NumericsError, Result};

const SVD_MAX_ITER: usize = 10_000;
const EIG_MAX_ITER: usize = 10_000;

/// Thin singular value decomposition `a = left * diag(singular_values) * right^T`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `m x k` with orthonormal columns, `k = min(m, n)`.
    pub left: Matrix,
    /// Descending, non-negative.
    pub singular_values: Vec<f64>,
    /// `n x k` with orthonormal columns.
    pub right: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let s = Matrix::from_diagonal(&DVector::from_column_slice(&self.singular_values));
        &self.left * s * self.right.transpose()
    }

    /// Number of singular values above `rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let cutoff = rel_tol * self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values
            .iter()
            .filter(|&&s| s > cutoff && s > 0.0)
            .count()
    }
}

pub fn svd(a: &Matrix) -> Result<SvdResult> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(NumericsError::Empty { op: "svd" });
    }
    ensure_finite("svd", a)?;
    let (rows, cols) = a.shape();
    let dec = SVD::try_new(a.clone(), true, true, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(NumericsError::SvdNoConvergence { rows, cols })?;
    let (u, v_t) = match (dec.u, dec.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(NumericsError::SvdNoConvergence { rows, cols }),
    };
    let mut order: Vec<usize> = (0..dec.singular_values.len()).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));
    let k = order.len();
    let mut left = Matrix::zeros(rows, k);
    let mut right = Matrix::zeros(cols, k);
    let mut singular_values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        left.set_column(dst, &u.column(src));
        right.set_column(dst, &v_t.row(src).transpose());
        singular_values.push(dec.singular_values[src].max(0.0));
    }
    Ok(SvdResult {
        left,
        singular_values,
        right,
    })
}

/// Moore-Penrose pseudo-inverse; singular values at or below
/// `rel_tol * sigma_max` are treated as zero.
pub fn pinv(a: &Matrix, rel_tol: f64) -> Result<Matrix> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(NumericsError::DimensionMismatch {
            op: "pinv",
            detail: format!("rel_tol must lie in (0, 1), got {rel_tol}"),
        });
    }
    let dec = svd(a)?;
    Ok(pinv_from_svd(&dec, rel_tol))
}

pub(crate) fn pinv_from_svd(dec: &SvdResult, rel_tol: f64) -> Matrix {
    let r = dec.rank(rel_tol);
    let (m, n) = (dec.left.nrows(), dec.right.nrows());
    if r == 0 {
        return Matrix::zeros(n, m);
    }
    let mut vs = dec.right.columns(0, r).into_owned();
    for (j, mut col) in vs.column_iter_mut().enumerate() {
        col /= dec.singular_values[j];
    }
    vs * dec.left.columns(0, r).transpose()
}

/// All eigenvalues of a square matrix via the real Schur form.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex64>> {
    ensure_square("eigenvalues", a)?;
    ensure_finite("eigenvalues", a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let balanced = balance(a);
    let schur = [f64::EPSILON, 64.0 * f64::EPSILON]
        .iter()
        .find_map(|&eps| Schur::try_new(balanced.clone(), eps, EIG_MAX_ITER))
        .ok_or(NumericsError::EigNoConvergence { n })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Diagonal similarity by powers of two that equalises row and column
/// norms; leaves the spectrum unchanged.
fn balance(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut m = a.clone();
    for _ in 0..100 {
        let mut converged = true;
        for i in 0..n {
            let c: f64 = (0..n).filter(|&j| j != i).map(|j| m[(j, i)].abs()).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let (mut cc, mut rr) = (c, r);
            while cc < rr / 2.0 {
                cc *= 2.0;
                rr /= 2.0;
                f *= 2.0;
            }
            while cc >= rr * 2.0 {
                cc /= 2.0;
                rr *= 2.0;
                f /= 2.0;
            }
            if (cc + rr) < 0.95 * (c + r) {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
    m
}

pub fn eig_real_parts(a: &Matrix) -> Result<Vec<f64>> {
    Ok(eigenvalues(a)?.into_iter().map(|z| z.re).collect())
}

/// Eigenvalues of the symmetric part of `a`, ascending.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    ensure_square("symmetric_eigenvalues", a)?;
    ensure_finite("symmetric_eigenvalues", a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let sym = (a + a.transpose()) * 0.5;
    let dec = SymmetricEigen::try_new(sym, f64::EPSILON, EIG_MAX_ITER)
        .ok_or(NumericsError::EigNoConvergence { n })?;
    let mut ev: Vec<f64> = dec.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Cyclic Jacobi eigenvalues of a symmetric matrix; test-only oracle.
    fn jacobi_eigenvalues(mut a: Matrix) -> Vec<f64> {
        let n = a.nrows();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)].powi(2))
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        ev
    }

    #[test]
    fn svd_identity_and_permuted_diagonal() {
        let s = svd(&Matrix::identity(3, 3)).unwrap();
        assert_eq!(s.singular_values.len(), 3);
        for v in &s.singular_values {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let a = Matrix::from_row_slice(3, 3, &[0.0, 2.0, 0.0, 0.0, 0.0, 1.0, 3.0, 0.0, 0.0]);
        let s = svd(&a).unwrap();
        for (got, want) in s.singular_values.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn svd_random_matches_gram_eigenvalues() {
        let a = random(8, 5, 11);
        let s = svd(&a).unwrap();
        let recon = (s.reconstruct() - &a).norm();
        assert!(recon <= 1e-9 * a.norm().max(1.0), "reconstruction {recon}");
        let oracle = jacobi_eigenvalues(a.transpose() * &a);
        for (sv, ev) in s.singular_values.iter().zip(oracle) {
            assert!((sv - ev.max(0.0).sqrt()).abs() < 1e-10, "{sv} vs {}", ev.sqrt());
        }
        let gram = s.left.transpose() * &s.left;
        assert!((gram - Matrix::identity(5, 5)).norm() <= 1e-9);
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut a = Matrix::zeros(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(svd(&a), Err(NumericsError::NonFinite { .. })));
    }

    #[test]
    fn pinv_diagonal_and_zero() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let p = pinv(&a, 1e-10).unwrap();
        let want = Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.25]);
        assert!((p - want).norm() < 1e-15);
        let z = pinv(&Matrix::zeros(3, 2), 1e-10).unwrap();
        assert_eq!(z.shape(), (2, 3));
        assert_eq!(z.norm(), 0.0);
    }

    #[test]
    fn pinv_rank_one_matches_least_squares() {
        let u = random(3, 1, 5);
        let v = random(3, 1, 6);
        let a = &u * v.transpose();
        let p = pinv(&a, 1e-10).unwrap();
        // For a rank-one a = u v^T the minimum-norm least-squares solution of
        // a x = b is v (u^T b) / (|u|^2 |v|^2); derived from the normal equations
        // restricted to span(v).
        for seed in 0..5 {
            let b = random(3, 1, 100 + seed);
            let direct = &v * ((u.transpose() * &b)[(0, 0)] / (u.norm_squared() * v.norm_squared()));
            assert!((&p * &b - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn eig_examples() {
        let mut ev = eig_real_parts(&Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -3.0])).unwrap();
        ev.sort_by(f64::total_cmp);
        assert_eq!(ev, vec![-3.0, -1.0]);
        let rot = eig_real_parts(&Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])).unwrap();
        assert!(rot.iter().all(|r| r.abs() < 1e-14));
        // (s+1)(s+2)(s+5) = s^3 + 8 s^2 + 17 s + 10
        let comp = Matrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, -10.0, -17.0, -8.0]);
        let mut ev = eig_real_parts(&comp).unwrap();
        ev.sort_by(f64::total_cmp);
        for (got, want) in ev.iter().zip([-5.0, -2.0, -1.0]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn balancing_keeps_the_spectrum_of_a_badly_scaled_matrix() {
        let n = 6;
        let t = random(n, n, 21);
        let d: Vec<f64> = (0..n).map(|i| 10f64.powi(3 * i as i32 - 6)).collect();
        let s = Matrix::from_diagonal(&DVector::from_vec(d.clone()));
        let s_inv = Matrix::from_diagonal(&DVector::from_vec(d.iter().map(|v| 1.0 / v).collect()));
        let a = &s * &t * s_inv;
        assert!(balance(&a).amax() < 1e-3 * a.amax());
        let key = |z: &Complex64| (z.re, z.im);
        let mut got = eigenvalues(&a).unwrap();
        let mut want = eigenvalues(&t).unwrap();
        got.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        want.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-9, "{got:?} {want:?}");
        }
    }
}
