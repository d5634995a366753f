//! Continuous algebraic Riccati equation by Kleinman-Newton iteration.
//!
//! Each Newton step is a Lyapunov solve `F^T P + P F + Q_k = 0`, done by a
//! dense Kronecker-product linear system. That is O(n^6) but exact and
//! residual-checkable; the systems here have at most a few dozen states.

use super::{
    ensure_finite, ensure_square, inverse, pinv, solve, spectral_abscissa, symmetric_eigenvalues,
    Matrix, NumericsError, Result,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CareOptions {
    pub max_iter: usize,
    /// Stop when `‖P_k − P_{k−1}‖_F ≤ step_tol · max(1, ‖P_k‖_F)`.
    pub step_tol: f64,
    /// Accept when the Riccati residual is `≤ residual_tol · max(1, ‖P‖_F)`.
    pub residual_tol: f64,
    /// Shift added to the open-loop spectral abscissa for the seeding gain.
    pub seed_shift: f64,
}

impl Default for CareOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            step_tol: 1e-13,
            residual_tol: 1e-7,
            seed_shift: 1.0,
        }
    }
}

/// Solves `a^T x + x a + q = 0` for `x`.
pub fn solve_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    ensure_square("solve_lyapunov", a)?;
    let n = a.nrows();
    if q.shape() != (n, n) {
        return Err(NumericsError::DimensionMismatch {
            op: "solve_lyapunov",
            detail: format!("a is {n}x{n}, q is {}x{}", q.nrows(), q.ncols()),
        });
    }
    let nn = n * n;
    let mut kron = Matrix::zeros(nn, nn);
    for j in 0..n {
        for i in 0..n {
            let row = i + n * j;
            // (a^T x)[i, j] = Σ_k a[k, i] x[k, j]
            for k in 0..n {
                kron[(row, k + n * j)] += a[(k, i)];
            }
            // (x a)[i, j] = Σ_l x[i, l] a[l, j]
            for l in 0..n {
                kron[(row, i + n * l)] += a[(l, j)];
            }
        }
    }
    let rhs = Matrix::from_column_slice(nn, 1, (-q).as_slice());
    let v = solve("solve_lyapunov", &kron, &rhs)?;
    let x = Matrix::from_column_slice(n, n, v.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

pub fn care_residual(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, p: &Matrix) -> Result<f64> {
    let r_inv = inverse("care_residual", r)?;
    let res = a.transpose() * p + p * a + q - p * b * r_inv * b.transpose() * p;
    Ok(res.norm())
}

fn check_symmetric(name: &'static str, m: &Matrix) -> Result<()> {
    let asym = (m - m.transpose()).norm();
    if asym > 1e-10 * m.norm().max(1.0) {
        return Err(NumericsError::NotSymmetric {
            matrix: name,
            asymmetry: asym,
        });
    }
    Ok(())
}

pub fn solve_care(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    solve_care_with(a, b, q, r, &CareOptions::default())
}

/// Stabilizing solution of `a^T P + P a + q − P b r^{-1} b^T P = 0`.
pub fn solve_care_with(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    opts: &CareOptions,
) -> Result<Matrix> {
    ensure_square("solve_care", a)?;
    let n = a.nrows();
    let m = b.ncols();
    if b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(NumericsError::DimensionMismatch {
            op: "solve_care",
            detail: format!(
                "a {n}x{n}, b {}x{}, q {}x{}, r {}x{}",
                b.nrows(),
                b.ncols(),
                q.nrows(),
                q.ncols(),
                r.nrows(),
                r.ncols()
            ),
        });
    }
    for (name, mat) in [("a", a), ("b", b), ("q", q), ("r", r)] {
        ensure_finite(name_op(name), mat)?;
    }
    check_symmetric("q", q)?;
    check_symmetric("r", r)?;
    let q_min = symmetric_eigenvalues(q)?.first().copied().unwrap_or(0.0);
    if q_min < -1e-10 * q.norm().max(1.0) {
        return Err(NumericsError::NotDefinite {
            matrix: "q",
            property: "positive semidefinite",
            eigenvalue: q_min,
        });
    }
    let r_min = symmetric_eigenvalues(r)?.first().copied().unwrap_or(0.0);
    if r_min <= 0.0 {
        return Err(NumericsError::NotDefinite {
            matrix: "r",
            property: "positive definite",
            eigenvalue: r_min,
        });
    }
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let r_inv = inverse("solve_care", r)?;
    let q = (q + q.transpose()) * 0.5;

    let mut gain = match stabilizing_seed(a, b, opts.seed_shift) {
        Ok(g) => g,
        Err(NumericsError::NotStabilizable { abscissa }) => {
            sign_function_seed(a, b, &q, &r_inv).ok_or(NumericsError::NotStabilizable { abscissa })?
        }
        Err(e) => return Err(e),
    };
    let mut prev: Option<Matrix> = None;
    let mut p = Matrix::zeros(n, n);
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        let closed = a - b * &gain;
        let qk = &q + gain.transpose() * r * &gain;
        p = solve_lyapunov(&closed, &qk)?;
        gain = &r_inv * b.transpose() * &p;
        if let Some(prev) = &prev {
            if (&p - prev).norm() <= opts.step_tol * p.norm().max(1.0) {
                break;
            }
        }
        prev = Some(p.clone());
    }

    let residual = care_residual(a, b, &q, r, &p)?;
    let tolerance = opts.residual_tol * p.norm().max(1.0);
    if !(residual <= tolerance) {
        return Err(NumericsError::Residual {
            residual,
            tolerance,
            iterations,
        });
    }
    let abscissa = spectral_abscissa(&(a - b * &r_inv * b.transpose() * &p))?;
    if abscissa >= 0.0 {
        return Err(NumericsError::NotDetectable { abscissa });
    }
    Ok(p)
}

fn name_op(name: &'static str) -> &'static str {
    match name {
        "a" => "solve_care(a)",
        "b" => "solve_care(b)",
        "q" => "solve_care(q)",
        _ => "solve_care(r)",
    }
}

/// Initial stabilizing gain. Zero when `a` is already Hurwitz, otherwise the
/// eigenvalue-shifted gain `K = b^T X^+` with
/// `(a + βI) X + X (a + βI)^T = 2 b b^T`, which places every closed-loop
/// eigenvalue on `Re s = −β` when `(a, b)` is controllable.
fn stabilizing_seed(a: &Matrix, b: &Matrix, shift: f64) -> Result<Matrix> {
    let n = a.nrows();
    let abscissa = spectral_abscissa(a)?;
    if abscissa < 0.0 {
        return Ok(Matrix::zeros(b.ncols(), n));
    }
    let beta = abscissa.max(0.0) + shift;
    let shifted_t = (a + Matrix::identity(n, n) * beta).transpose();
    let x = solve_lyapunov(&shifted_t, &(b * b.transpose() * -2.0))?;
    let gain = b.transpose() * pinv(&x, 1e-12)?;
    let closed = spectral_abscissa(&(a - b * &gain))?;
    if closed >= 0.0 {
        return Err(NumericsError::NotStabilizable { abscissa: closed });
    }
    Ok(gain)
}

/// Gain from the stable invariant subspace of the Hamiltonian
/// `[[a, −b r⁻¹ bᵀ], [−q, −aᵀ]]`, found with the scaled matrix sign
/// iteration. Used when the shifted seed is too ill-conditioned.
fn sign_function_seed(a: &Matrix, b: &Matrix, q: &Matrix, r_inv: &Matrix) -> Option<Matrix> {
    let n = a.nrows();
    let g = b * r_inv * b.transpose();
    let mut z = Matrix::zeros(2 * n, 2 * n);
    z.view_mut((0, 0), (n, n)).copy_from(a);
    z.view_mut((0, n), (n, n)).copy_from(&-&g);
    z.view_mut((n, 0), (n, n)).copy_from(&-q);
    z.view_mut((n, n), (n, n)).copy_from(&-a.transpose());
    for _ in 0..100 {
        let lu = z.clone().lu();
        let log_det: f64 = lu.u().diagonal().iter().map(|d| d.abs().ln()).sum();
        if !log_det.is_finite() {
            return None;
        }
        let c = (-log_det / (2 * n) as f64).exp();
        let inv = lu.try_inverse()?;
        let next = (&z * c + inv / c) * 0.5;
        let step = (&next - &z).norm();
        z = next;
        if step <= 1e-12 * z.norm() {
            break;
        }
    }
    let mut lhs = Matrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&z.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n))
        .copy_from(&(z.view((n, n), (n, n)) + Matrix::identity(n, n)));
    let mut rhs = Matrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n))
        .copy_from(&-(z.view((0, 0), (n, n)) + Matrix::identity(n, n)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&-z.view((n, 0), (n, n)));
    let p = pinv(&lhs, 1e-14).ok()? * rhs;
    let p = (&p + p.transpose()) * 0.5;
    let gain = r_inv * b.transpose() * p;
    let closed = spectral_abscissa(&(a - b * &gain)).ok()?;
    (closed < 0.0).then_some(gain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::is_hurwitz;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(v: f64) -> Matrix {
        Matrix::from_element(1, 1, v)
    }

    #[test]
    fn scalar_stable_zero_cost() {
        let p = solve_care(&scalar(-1.0), &scalar(1.0), &scalar(0.0), &scalar(1.0)).unwrap();
        assert!(p[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn scalar_unstable_matches_quadratic_formula() {
        // 2aP + q − P²/r = 0 with a = q = r = 1 gives P = 1 + √2.
        let p = solve_care(&scalar(1.0), &scalar(1.0), &scalar(1.0), &scalar(1.0)).unwrap();
        assert!((p[(0, 0)] - (1.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn random_six_state_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = Matrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0)) + Matrix::identity(6, 6) * 0.5;
        let b = Matrix::from_fn(6, 2, |_, _| rng.random_range(-1.0..1.0));
        let q = Matrix::identity(6, 6);
        let r = Matrix::identity(2, 2);
        let p = solve_care(&a, &b, &q, &r).unwrap();
        let res = care_residual(&a, &b, &q, &r, &p).unwrap();
        assert!(res <= 1e-7 * p.norm().max(1.0));
        assert!(is_hurwitz(&(&a - &b * b.transpose() * &p)).unwrap());
        assert!(symmetric_eigenvalues(&p).unwrap()[0] >= -1e-10);
    }

    #[test]
    fn lyapunov_scalar() {
        // 2 a x + q = 0
        let x = solve_lyapunov(&scalar(-2.0), &scalar(3.0)).unwrap();
        assert!((x[(0, 0)] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn unstabilizable_pair_is_rejected() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let b = Matrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let err = solve_care(&a, &b, &Matrix::identity(2, 2), &scalar(1.0)).unwrap_err();
        assert!(
            matches!(err, NumericsError::NotStabilizable { .. } | NumericsError::Singular { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn indefinite_weights_are_rejected() {
        let err = solve_care(&scalar(-1.0), &scalar(1.0), &scalar(-1.0), &scalar(1.0)).unwrap_err();
        assert!(matches!(err, NumericsError::NotDefinite { matrix: "q", .. }));
        let err = solve_care(&scalar(-1.0), &scalar(1.0), &scalar(1.0), &scalar(0.0)).unwrap_err();
        assert!(matches!(err, NumericsError::NotDefinite { matrix: "r", .. }));
    }
}
