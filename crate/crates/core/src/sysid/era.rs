use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{MarkovSequence, SysidError};
use crate::numerics::{self, Matrix, NumericsError};
use crate::statespace::{StateSpace, TimeDomain};

/// Block-Hankel pair built from a Markov sequence.
#[derive(Debug, Clone)]
pub struct Hankel {
    pub p: usize,
    pub outputs: usize,
    pub inputs: usize,
    pub sample_time: f64,
    pub feedthrough: Matrix,
    /// `p z x p v`, blocks `Y_{i+j+1}`.
    pub h: Matrix,
    /// Blocks `Y_{i+j+2}`; one block row short when the sequence ends at `Y_{2p-1}`.
    pub h_shift: Matrix,
    pub note: Option<String>,
}

fn fill(dst: &mut Matrix, markov: &MarkovSequence, block_rows: usize, p: usize, offset: usize) {
    let (z, v) = (markov.outputs(), markov.inputs());
    for i in 0..block_rows {
        for j in 0..p {
            dst.view_mut((i * z, j * v), (z, v))
                .copy_from(markov.block(i + j + offset));
        }
    }
}

pub fn build_hankel(markov: &MarkovSequence, p: usize) -> Result<Hankel, SysidError> {
    if p == 0 {
        return Err(SysidError::Shape("hankel size p must be at least 1".into()));
    }
    let (z, v) = (markov.outputs(), markov.inputs());
    let have = markov.len();
    if have + 1 < 2 * p {
        return Err(SysidError::InsufficientBlocks {
            required: 2 * p,
            got: have,
        });
    }
    let mut h = Matrix::zeros(p * z, p * v);
    fill(&mut h, markov, p, p, 1);
    let (shift_rows, note) = if have >= 2 * p {
        (p, None)
    } else {
        (
            p - 1,
            Some(format!(
                "only {have} pulse blocks available; the last block row of the shifted Hankel was dropped"
            )),
        )
    };
    let mut h_shift = Matrix::zeros(shift_rows * z, p * v);
    fill(&mut h_shift, markov, shift_rows, p, 2);
    Ok(Hankel {
        p,
        outputs: z,
        inputs: v,
        sample_time: markov.sample_time,
        feedthrough: markov.feedthrough.clone(),
        h,
        h_shift,
        note,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EraReport {
    pub hankel_size: usize,
    pub energy_threshold: f64,
    pub singular_values: Vec<f64>,
    /// `cumulative_energy[j]` is the energy fraction of the leading `j + 1` values.
    pub cumulative_energy: Vec<f64>,
    pub retained_order: usize,
    pub cumulative_energy_at_r: f64,
    /// Smallest order whose cumulative energy reaches 99.9%.
    pub order_at_99_9_percent: usize,
    /// Real eigenvalues on the closed negative axis moved before conversion.
    pub reflected_modes: usize,
    pub notes: Vec<String>,
    pub realized: StateSpace,
}

/// Relative level below which Hankel singular values count as numerical zeros.
pub const HSV_ZERO_TOL: f64 = 1e-12;

pub fn cumulative_energy(singular_values: &[f64]) -> Vec<f64> {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    let mut acc = 0.0;
    singular_values
        .iter()
        .map(|s| {
            acc += s * s;
            if total > 0.0 {
                (acc / total).min(1.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// ERA realization of order `r`, chosen by energy or by `r_override`.
pub fn era_realize(hankel: &Hankel, energy_threshold: f64, r_override: Option<usize>) -> Result<EraReport, SysidError> {
    if !(energy_threshold > 0.0 && energy_threshold <= 1.0) {
        return Err(SysidError::BadThreshold(energy_threshold));
    }
    let (z, v) = (hankel.outputs, hankel.inputs);
    let dec = numerics::svd(&hankel.h)?;
    let sv = dec.singular_values.clone();
    let energy = cumulative_energy(&sv);
    let usable = dec.rank(HSV_ZERO_TOL);
    if usable == 0 {
        return Err(SysidError::ThresholdUnreachable {
            threshold: energy_threshold,
            max_energy: 0.0,
        });
    }
    let max_energy = energy[usable - 1];
    let first_at = |t: f64| energy[..usable].iter().position(|&e| e >= t).map(|i| i + 1);
    let r = match r_override {
        Some(r) if r == 0 || r > usable => {
            return Err(SysidError::OrderOutOfRange { requested: r, usable });
        }
        Some(r) => r,
        None => first_at(energy_threshold).ok_or(SysidError::ThresholdUnreachable {
            threshold: energy_threshold,
            max_energy,
        })?,
    };

    let l = dec.left.columns(0, r).into_owned();
    let rt = dec.right.columns(0, r).transpose();
    let s_half = DVector::from_iterator(r, sv[..r].iter().map(|s| s.sqrt()));
    let s_mhalf = s_half.map(|s| 1.0 / s);
    let ctrl = Matrix::from_diagonal(&s_half) * &rt;
    let obs = &l * Matrix::from_diagonal(&s_half);
    let a = if hankel.h_shift.nrows() == hankel.h.nrows() {
        Matrix::from_diagonal(&s_mhalf) * l.transpose() * &hankel.h_shift * rt.transpose() * Matrix::from_diagonal(&s_mhalf)
    } else {
        let top = obs.rows(0, hankel.h_shift.nrows()).into_owned();
        let top_inv = numerics::pinv(&top, numerics::PINV_REL_TOL)?;
        top_inv * &hankel.h_shift * rt.transpose() * Matrix::from_diagonal(&s_mhalf)
    };
    let b = ctrl.columns(0, v).into_owned();
    let c = obs.rows(0, z).into_owned();
    let realized = StateSpace::new(
        a,
        b,
        c,
        hankel.feedthrough.clone(),
        TimeDomain::Discrete {
            sample_time: hankel.sample_time,
        },
    )?;
    Ok(EraReport {
        hankel_size: hankel.p,
        energy_threshold,
        order_at_99_9_percent: first_at(0.999).unwrap_or(usable),
        cumulative_energy_at_r: energy[r - 1],
        retained_order: r,
        singular_values: sv,
        cumulative_energy: energy,
        reflected_modes: 0,
        notes: hankel.note.iter().cloned().collect(),
        realized,
    })
}

fn needs_reflection(z: num_complex::Complex64, floor: f64) -> bool {
    z.im.abs() <= 1e-10 * z.norm().max(f64::MIN_POSITIVE) && z.re < 0.5 * floor
}

/// Moves every real eigenvalue `μ < floor / 2` of `A_d` to `max(|μ|, floor)` by a
/// rank-one update along its eigenvector pair, leaving `B_d`, `C_d` and the
/// rest of the spectrum untouched. Returns the number of moved modes.
pub fn reflect_nonpositive_modes(dss: &mut StateSpace, floor: f64) -> Result<usize, SysidError> {
    let n = dss.order();
    let mut moved = 0;
    for _ in 0..n {
        let eigs = numerics::eigenvalues(&dss.a)?;
        let Some(mu) = eigs.into_iter().find(|&z| needs_reflection(z, floor)).map(|z| z.re) else {
            break;
        };
        let shifted = &dss.a - Matrix::identity(n, n) * mu;
        let dec = numerics::svd(&shifted)?;
        let right = dec.right.column(n - 1).into_owned();
        let left = dec.left.column(n - 1).into_owned();
        let overlap = left.dot(&right);
        if overlap.abs() < 1e-12 {
            return Err(SysidError::Numerics(NumericsError::Singular {
                op: "reflect_nonpositive_modes: defective eigenvalue",
            }));
        }
        let target = mu.abs().max(floor);
        dss.a += (&right * left.transpose()) * ((target - mu) / overlap);
        moved += 1;
    }
    Ok(moved)
}

/// Continuous model whose zero-order-hold discretization at the model's
/// sample time is `dss`: `Ã = log(A_d)/T_s`, `B̃ = Φ⁻¹ B_d` with
/// `Φ = ∫_0^{T_s} e^{Ãτ} dτ`.
pub fn to_continuous(dss: &StateSpace) -> Result<StateSpace, SysidError> {
    let TimeDomain::Discrete { sample_time } = dss.domain else {
        return Err(SysidError::Shape("to_continuous needs a discrete model".into()));
    };
    let log_a = numerics::mat_log_principal(&dss.a)?;
    let a = log_a / sample_time;
    let (_, phi) = numerics::zoh_integral(&a, sample_time)?;
    let b = numerics::solve("to_continuous", &phi, &dss.b)?;
    Ok(StateSpace::new(a, b, dss.c.clone(), dss.d.clone(), TimeDomain::Continuous)?)
}
