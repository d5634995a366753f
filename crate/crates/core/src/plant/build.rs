use super::state::*;
use super::{AuxMap, ContinuousPlant, PlantError, PlantParams, CORE_ORDER, ORDER};
use crate::numerics::{self, Matrix};
use crate::statespace::{StateSpace, TimeDomain};

const INPUTS: usize = 6;
const REF_PG_I: usize = 0;
const REF_PG_R: usize = 1;
const REF_IDCI: usize = 2;
const REF_VDCR: usize = 3;
const LOAD_I: usize = 4;
const LOAD_R: usize = 5;

struct Side {
    f: usize,
    mf: usize,
    m: f64,
    d: f64,
    r_g: f64,
    ref_col: usize,
    t_ire: f64,
}

fn side_block(a: &mut Matrix, b: &mut Matrix, p: &PlantParams, s: &Side) {
    let m_eff = s.m + p.m_g;
    let d_eff = s.d + p.k_d;
    let (f, gov, valve, fuel, comb, pm, ire) = (
        s.f,
        s.f + GOV,
        s.f + VALVE,
        s.f + FUEL,
        s.f + COMB,
        s.f + PM,
        s.f + IRE,
    );
    a[(f, f)] = -d_eff / m_eff;
    a[(f, pm)] = 1.0 / m_eff;

    // Governor input e = ΔP_ref − Δf / R_g through (X s + 1)/(Y s + 1).
    let inv_r = 1.0 / s.r_g;
    let lead = p.x_g / p.y_g;
    a[(gov, f)] = -inv_r / p.y_g;
    b[(gov, s.ref_col)] = 1.0 / p.y_g;
    a[(gov, gov)] = -1.0 / p.y_g;

    let kv = p.e_g / p.u_g;
    a[(valve, f)] = -kv * lead * inv_r;
    b[(valve, s.ref_col)] = kv * lead;
    a[(valve, gov)] = kv * (1.0 - lead);
    a[(valve, valve)] = -1.0 / p.u_g;

    for (to, from, tau) in [(fuel, valve, p.t_f), (comb, fuel, p.t_cr), (pm, comb, p.t_cd)] {
        a[(to, from)] = 1.0 / tau;
        a[(to, to)] = -1.0 / tau;
    }

    a[(s.mf, f)] = 1.0 / p.t_mf;
    a[(s.mf, s.mf)] = -1.0 / p.t_mf;
    a[(ire, s.mf)] = 1.0 / s.t_ire;
    a[(ire, ire)] = -1.0 / s.t_ire;
}

/// PI loop with converter lag: `z' = ref − x`,
/// `τ x' = k_p (ref − x) + k_i z − x`, where `ref = ref_row · state + ref_b · u`.
#[allow(clippy::too_many_arguments)]
fn pi_loop(
    a: &mut Matrix,
    b: &mut Matrix,
    x: usize,
    z: usize,
    ref_row: &[f64],
    ref_col: usize,
    kp: f64,
    ki: f64,
    tau: f64,
) {
    for (j, &v) in ref_row.iter().enumerate() {
        a[(z, j)] += v;
        a[(x, j)] += kp * v / tau;
    }
    a[(z, x)] -= 1.0;
    b[(z, ref_col)] += 1.0;
    a[(x, x)] -= (1.0 + kp) / tau;
    a[(x, z)] += ki / tau;
    b[(x, ref_col)] += kp / tau;
}

/// Assembles the plant and checks that the non-integrator block is Hurwitz.
pub fn build_plant(params: &PlantParams) -> Result<ContinuousPlant, PlantError> {
    params.validate()?;
    let p = params;
    let lp = p.loops;
    let mut a = Matrix::zeros(ORDER, ORDER);
    let mut b = Matrix::zeros(ORDER, INPUTS);

    let inv = Side {
        f: F_I,
        mf: MF_I,
        m: p.m_i,
        d: p.d_i,
        r_g: p.r_gi,
        ref_col: REF_PG_I,
        t_ire: p.t_fi,
    };
    let rec = Side {
        f: F_R,
        mf: MF_R,
        m: p.m_r,
        d: p.d_r,
        r_g: p.r_gr,
        ref_col: REF_PG_R,
        t_ire: p.t_fr,
    };
    side_block(&mut a, &mut b, p, &inv);
    side_block(&mut a, &mut b, p, &rec);

    a[(MV, V_DC)] = 1.0 / p.t_mv;
    a[(MV, MV)] = -1.0 / p.t_mv;

    let v0 = p.v_dcr0 * 1e3;
    let i0 = p.i_dc0;
    let c_dc = p.c_dc * 1e-6;
    a[(V_DC, I_DCR)] = i0 / (c_dc * v0);
    a[(V_DC, I_DCI)] = -i0 / (c_dc * v0);
    let r_series = p.r_dc + 2.0 * p.commutation_resistance();
    a[(I_DCR, V_DCR)] = 2.0 * v0 / (p.l_dc * i0);
    a[(I_DCR, V_DC)] = -2.0 * v0 / (p.l_dc * i0);
    a[(I_DCR, I_DCR)] = -r_series / p.l_dc;

    let on = |flag: bool| if flag { 1.0 } else { 0.0 };

    // Inverter current order: droops and IRE oppose the measured deviation.
    let mut i_ref = vec![0.0; ORDER];
    let w_i = p.w_i * on(lp.ire_i);
    i_ref[MF_I] += -on(lp.freq_droop_i) / p.r_i - w_i / p.t_fi;
    i_ref[F_I + IRE] += w_i / p.t_fi;
    i_ref[MV] += on(lp.vdc_droop_i) / p.k_i;
    pi_loop(&mut a, &mut b, I_DCI, Z_I, &i_ref, REF_IDCI, p.k_pi, p.k_ii, p.tau_c);

    let mut v_ref = vec![0.0; ORDER];
    let w_r = p.w_r * on(lp.ire_r);
    v_ref[MF_R] += on(lp.freq_droop_r) / p.r_r + w_r / p.t_fr;
    v_ref[F_R + IRE] += -w_r / p.t_fr;
    v_ref[MV] += -on(lp.vdc_droop_r) / p.k_r;
    pi_loop(&mut a, &mut b, V_DCR, Z_R, &v_ref, REF_VDCR, p.k_pr, p.k_ir, p.tau_c);

    let kappa_r = p.poles as f64 * p.v_dcr0 * p.i_dc0 * 1e-3 / p.power_base;
    let kappa_i = p.poles as f64 * p.v_dci0 * p.i_dc0 * 1e-3 / p.power_base;
    let mut p_dci = vec![0.0; ORDER];
    p_dci[I_DCI] = kappa_i;
    p_dci[V_DC] = kappa_r;
    let mut p_dcr = vec![0.0; ORDER];
    p_dcr[I_DCR] = kappa_r;
    p_dcr[V_DCR] = kappa_r;

    let m_i = p.m_i + p.m_g;
    let m_r = p.m_r + p.m_g;
    for j in 0..ORDER {
        a[(F_I, j)] += p_dci[j] / m_i;
        a[(F_R, j)] -= p_dcr[j] / m_r;
    }
    b[(F_I, LOAD_I)] = -1.0 / m_i;
    b[(F_R, LOAD_R)] = -1.0 / m_r;

    a[(INT_F_I, F_I)] = 1.0;
    a[(INT_F_R, F_R)] = 1.0;
    a[(INT_V_DC, V_DC)] = 1.0;

    let mut c = Matrix::zeros(6, ORDER);
    for (row, col) in [F_I, F_R, V_DC, INT_F_I, INT_F_R, INT_V_DC].into_iter().enumerate() {
        c[(row, col)] = 1.0;
    }

    // Generator electrical output P_m − M_g dΔf/dt − k_d Δf.
    let mut aux_c = Matrix::zeros(6, ORDER);
    let mut aux_d = Matrix::zeros(6, INPUTS);
    for (row, f) in [(0, F_I), (1, F_R)] {
        aux_c[(row, f + PM)] = 1.0;
        for j in 0..ORDER {
            aux_c[(row, j)] -= p.m_g * a[(f, j)];
        }
        for j in 0..INPUTS {
            aux_d[(row, j)] -= p.m_g * b[(f, j)];
        }
        aux_c[(row, f)] -= p.k_d;
    }
    for j in 0..ORDER {
        aux_c[(2, j)] = p_dci[j];
        aux_c[(3, j)] = p_dcr[j];
    }
    aux_c[(4, I_DCI)] = 1.0;
    aux_c[(5, V_DCR)] = 1.0;

    let core = a.view((0, 0), (CORE_ORDER, CORE_ORDER)).into_owned();
    let eigs = numerics::eigenvalues(&core)?;
    let unstable: Vec<_> = eigs.into_iter().filter(|z| z.re >= 0.0).collect();
    if !unstable.is_empty() {
        return Err(PlantError::NotHurwitz { unstable });
    }

    let state_space = StateSpace::new(a, b, c, Matrix::zeros(6, INPUTS), TimeDomain::Continuous)?;
    Ok(ContinuousPlant {
        state_space,
        aux: AuxMap { c: aux_c, d: aux_d },
        params: params.clone(),
    })
}
