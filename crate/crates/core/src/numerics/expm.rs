//! Matrix exponential by Padé scaling and squaring (Higham 2005 degrees and
//! thresholds).

use super::{ensure_finite, ensure_square, one_norm, solve, Matrix, NumericsError, Result};

const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Squarings beyond this count mean the scaled norm exceeds ~1e300.
const MAX_SQUARINGS: i32 = 1000;

/// `exp(a * t)`.
pub fn mat_exp(a: &Matrix, t: f64) -> Result<Matrix> {
    ensure_square("mat_exp", a)?;
    ensure_finite("mat_exp", a)?;
    let n = a.nrows();
    let at = a * t;
    let norm = one_norm(&at);
    if !norm.is_finite() {
        return Err(NumericsError::ExpOverflow { norm });
    }
    let ident = Matrix::identity(n, n);
    if norm == 0.0 {
        return Ok(ident);
    }

    for &(m, theta) in &THETA[..4] {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            return pade_low(&at, coeffs);
        }
    }

    let theta13 = THETA[4].1;
    let s = ((norm / theta13).log2().ceil() as i32).max(0);
    if s > MAX_SQUARINGS {
        return Err(NumericsError::ExpOverflow { norm });
    }
    let scaled = at * 2f64.powi(-s);
    let mut x = pade13(&scaled)?;
    for _ in 0..s {
        x = &x * &x;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(NumericsError::ExpOverflow { norm });
        }
    }
    Ok(x)
}

fn pade_low(a: &Matrix, b: &[f64]) -> Result<Matrix> {
    let n = a.nrows();
    let ident = Matrix::identity(n, n);
    let a2 = a * a;
    let mut u_even = &ident * b[1];
    let mut v = &ident * b[0];
    let mut pow = ident.clone();
    let m = b.len() - 1;
    let mut k = 2;
    while k <= m {
        pow = &pow * &a2;
        v += &pow * b[k];
        if k < m {
            u_even += &pow * b[k + 1];
        }
        k += 2;
    }
    let u = a * u_even;
    let x = solve("mat_exp", &(&v - &u), &(&v + &u))?;
    Ok(x)
}

fn pade13(a: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    let b = &B13;
    let ident = Matrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a * (&a6 * u_inner + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let v_inner = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * v_inner + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    solve("mat_exp", &(&v - &u), &(&v + &u))
}

/// `(e^{a t}, ∫_0^t e^{a τ} dτ)` from one exponential of the block matrix
/// `[[a, I], [0, 0]] * t`.
pub fn zoh_integral(a: &Matrix, t: f64) -> Result<(Matrix, Matrix)> {
    ensure_square("zoh_integral", a)?;
    let n = a.nrows();
    let mut block = Matrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(a);
    block
        .view_mut((0, n), (n, n))
        .copy_from(&Matrix::identity(n, n));
    let e = mat_exp(&block, t)?;
    Ok((
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, n)).into_owned(),
    ))
}
