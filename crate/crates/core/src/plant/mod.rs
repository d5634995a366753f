//! Linear small-signal truth plant of two AC grids coupled by an LCC link.
//!
//! State layout (26 states):
//!
//! | index | state |
//! |-------|-------|
//! | 0–6   | inverter grid: Δf_i, governor lead-lag, valve, fuel, combustion, compressor discharge (ΔP_mi), IRE filter |
//! | 7–13  | rectifier grid, same order |
//! | 14–19 | ΔV_dc, ΔI_dcr, rectifier EMF ΔV_dcr, rectifier PI integrator, ΔI_dci, inverter PI integrator |
//! | 20–22 | transducers: Δf_i, Δf_r, ΔV_dc |
//! | 23–25 | integrals of Δf_i, Δf_r, ΔV_dc |
//!
//! dc quantities are in per unit of `V_dcr0` and `I_dc0`; powers and
//! frequencies in per unit of the declared bases.

mod build;
mod params;
mod sim;

pub use build::build_plant;
pub use params::{LoopToggles, PlantParams, Preset, CIGRE_JSON, JH_JSON};
pub use sim::{simulate, simulate_with, SampledPlant, SimOptions, DEFAULT_BLOWUP};

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::{self, Matrix, NumericsError};
use crate::signal::SignalError;
use crate::statespace::StateSpace;

pub const ORDER: usize = 26;
/// States 0..CORE_ORDER exclude the three output integrators.
pub const CORE_ORDER: usize = 23;

pub mod state {
    pub const F_I: usize = 0;
    pub const F_R: usize = 7;
    /// Offsets inside a grid block.
    pub const GOV: usize = 1;
    pub const VALVE: usize = 2;
    pub const FUEL: usize = 3;
    pub const COMB: usize = 4;
    pub const PM: usize = 5;
    pub const IRE: usize = 6;
    pub const V_DC: usize = 14;
    pub const I_DCR: usize = 15;
    pub const V_DCR: usize = 16;
    pub const Z_R: usize = 17;
    pub const I_DCI: usize = 18;
    pub const Z_I: usize = 19;
    pub const MF_I: usize = 20;
    pub const MF_R: usize = 21;
    pub const MV: usize = 22;
    pub const INT_F_I: usize = 23;
    pub const INT_F_R: usize = 24;
    pub const INT_V_DC: usize = 25;
}

pub const INPUT_LABELS: [&str; 4] = ["dPgi_ref", "dPgr_ref", "dIdci_ref", "dVdcr_ref"];
pub const DISTURBANCE_LABELS: [&str; 2] = ["dPli", "dPlr_net"];
pub const OUTPUT_LABELS: [&str; 6] = ["dfi", "dfr", "dVdc", "int_dfi", "int_dfr", "int_dVdc"];
pub const AUX_LABELS: [&str; 6] = ["dPgi", "dPgr", "dPdci", "dPdcr", "dIdci", "dVdcr"];

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("parameter json: {0}")]
    Json(String),
    #[error("assembled plant is not Hurwitz; unstable eigenvalues: {}", fmt_eigs(.unstable))]
    NotHurwitz { unstable: Vec<Complex64> },
    #[error("{context}: expected channels [{}], got [{}]", .expected.join(", "), .got.join(", "))]
    ChannelMismatch {
        context: &'static str,
        expected: Vec<String>,
        got: Vec<String>,
    },
    #[error("integration step {dt} does not divide the sample time {sample_time}")]
    BadStep { dt: f64, sample_time: f64 },
    #[error("refs and disturbances differ: {0}")]
    RecordMismatch(String),
    #[error("simulation diverged at t = {time} s (state norm {norm:e} > {bound:e})")]
    Divergence { time: f64, norm: f64, bound: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

fn fmt_eigs(eigs: &[Complex64]) -> String {
    eigs.iter()
        .map(|z| format!("{:.6}{:+.6}i", z.re, z.im))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Output map for the auxiliary channels, `aux = C_aux x + D_aux u`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxMap {
    pub c: Matrix,
    pub d: Matrix,
}

/// Assembled plant. `state_space.b` has the four SFC references followed
/// by the two load disturbances as columns.
#[derive(Debug, Clone)]
pub struct ContinuousPlant {
    pub state_space: StateSpace,
    pub aux: AuxMap,
    pub params: PlantParams,
}

impl ContinuousPlant {
    pub fn state_dimension(&self) -> usize {
        self.state_space.order()
    }

    pub fn input_labels(&self) -> &'static [&'static str] {
        &INPUT_LABELS
    }

    pub fn disturbance_labels(&self) -> &'static [&'static str] {
        &DISTURBANCE_LABELS
    }

    pub fn output_labels(&self) -> &'static [&'static str] {
        &OUTPUT_LABELS
    }

    pub fn aux_labels(&self) -> &'static [&'static str] {
        &AUX_LABELS
    }

    pub fn core_a(&self) -> Matrix {
        self.state_space
            .a
            .view((0, 0), (CORE_ORDER, CORE_ORDER))
            .into_owned()
    }

    /// Steady-state gain from `[r; w]` to `[Δf_i, Δf_r, ΔV_dc]`,
    /// `−C₁ A₁₁⁻¹ B₁` on the non-integrator block.
    pub fn dc_gain(&self) -> Result<Matrix, PlantError> {
        let ss = &self.state_space;
        let a11 = self.core_a();
        let b1 = ss.b.rows(0, CORE_ORDER).into_owned();
        let c1 = ss.c.view((0, 0), (3, CORE_ORDER)).into_owned();
        let x = numerics::solve("dc_gain", &a11, &b1)?;
        Ok(-(c1 * x))
    }

    /// Eigenvalues of the non-integrator block.
    pub fn core_eigenvalues(&self) -> Result<Vec<Complex64>, PlantError> {
        Ok(numerics::eigenvalues(&self.core_a())?)
    }
}
