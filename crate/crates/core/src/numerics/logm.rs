//! Principal matrix logarithm by inverse scaling and squaring: repeated
//! square roots until the argument is close to the identity, then a diagonal
//! Padé approximant of `log(I + X)` in its Gauss-Legendre partial-fraction
//! form.

use super::{
    eigenvalues, ensure_finite, ensure_square, inverse, one_norm, solve, Matrix, NumericsError,
    Result,
};

/// Gauss-Legendre nodes and weights on [-1, 1], 8 points.
const GL8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

const SQRT_LIMIT: usize = 64;
const DB_MAX_ITER: usize = 100;
/// `log(I + X)` via 8-point Padé is accurate to ~1e-17 for ‖X‖₁ ≤ 0.25.
const PADE_RADIUS: f64 = 0.25;

/// Principal square root by the product form of the Denman-Beavers iteration.
pub fn sqrtm(a: &Matrix) -> Result<Matrix> {
    ensure_square("sqrtm", a)?;
    ensure_finite("sqrtm", a)?;
    check_log_domain(a)?;
    sqrtm_unchecked(a)
}

fn sqrtm_unchecked(a: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    let ident = Matrix::identity(n, n);
    let mut m = a.clone();
    let mut y = a.clone();
    for _ in 0..DB_MAX_ITER {
        let m_inv = inverse("sqrtm", &m)?;
        y = &y * (&ident + &m_inv) * 0.5;
        m = (&ident + (&m + &m_inv) * 0.5) * 0.5;
        if one_norm(&(&m - &ident)) <= 1e-15 * (n as f64) {
            return Ok(y);
        }
    }
    Err(NumericsError::NoConvergence {
        op: "sqrtm",
        iterations: DB_MAX_ITER,
    })
}

fn check_log_domain(a: &Matrix) -> Result<()> {
    let scale = one_norm(a).max(f64::MIN_POSITIVE);
    for z in eigenvalues(a)? {
        let modulus = z.norm();
        let on_negative_axis = z.re <= 0.0 && z.im.abs() <= 1e-10 * modulus.max(1e-300);
        if modulus <= 1e-14 * scale || on_negative_axis {
            return Err(NumericsError::LogUndefined { re: z.re, im: z.im });
        }
    }
    Ok(())
}

/// Principal logarithm; eigenvalues of the result have imaginary parts in
/// `(-π, π)`.
pub fn mat_log_principal(a: &Matrix) -> Result<Matrix> {
    ensure_square("mat_log_principal", a)?;
    ensure_finite("mat_log_principal", a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    check_log_domain(a)?;
    let ident = Matrix::identity(n, n);

    let mut x = a.clone();
    let mut squarings = 0i32;
    while one_norm(&(&x - &ident)) > PADE_RADIUS {
        if squarings as usize >= SQRT_LIMIT {
            return Err(NumericsError::NoConvergence {
                op: "mat_log_principal",
                iterations: SQRT_LIMIT,
            });
        }
        x = sqrtm_unchecked(&x)?;
        squarings += 1;
    }

    let e = &x - &ident;
    let mut log = Matrix::zeros(n, n);
    for &(node, weight) in &GL8 {
        for t in [0.5 * (1.0 - node), 0.5 * (1.0 + node)] {
            let denom = &ident + &e * t;
            log += solve("mat_log_principal", &denom, &e)? * (0.5 * weight);
        }
    }
    Ok(log * 2f64.powi(squarings))
}
