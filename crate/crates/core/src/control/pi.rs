use serde::{Deserialize, Serialize};

use super::{ControlError, SfcController};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiMode {
    /// SFC on both grids through the generators and both converters.
    BothGrids,
    /// Rectifier-voltage SFC channel removed.
    InverterOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PiGains {
    pub kp_gen: f64,
    pub ki_gen: f64,
    pub kp_i: f64,
    pub ki_i: f64,
    pub kp_r: f64,
    pub ki_r: f64,
}

impl Default for PiGains {
    fn default() -> Self {
        Self {
            kp_gen: 0.8,
            ki_gen: 0.2,
            kp_i: 3.0,
            ki_i: 25.0,
            kp_r: 3.0,
            ki_r: 25.0,
        }
    }
}

/// Conventional PI secondary control. The integral terms use the plant's
/// integral outputs, so the controller itself is static.
#[derive(Debug, Clone, PartialEq)]
pub struct PiSfcController {
    pub gains: PiGains,
    pub mode: PiMode,
    pub sample_time: f64,
    pub saturation: Option<f64>,
}

impl PiSfcController {
    pub fn new(gains: PiGains, mode: PiMode, sample_time: f64) -> Self {
        Self {
            gains,
            mode,
            sample_time,
            saturation: None,
        }
    }

    /// `[ΔP_gi_ref, ΔP_gr_ref, ΔI_dci_ref, ΔV_dcr_ref]` for outputs
    /// `[Δf_i, Δf_r, ΔV_dc, ∫Δf_i, ∫Δf_r, ∫ΔV_dc]`.
    pub fn law(&self, y: &[f64]) -> [f64; 4] {
        let g = &self.gains;
        let (fi, fr, ifi, ifr) = (y[0], y[1], y[3], y[4]);
        let mut r = [
            -(g.kp_gen * fi + g.ki_gen * ifi),
            -(g.kp_gen * fr + g.ki_gen * ifr),
            -(g.kp_i * fi + g.ki_i * ifi),
            match self.mode {
                PiMode::BothGrids => g.kp_r * fr + g.ki_r * ifr,
                PiMode::InverterOnly => 0.0,
            },
        ];
        if let Some(limit) = self.saturation {
            for v in &mut r {
                *v = v.clamp(-limit, limit);
            }
        }
        r
    }
}

impl SfcController for PiSfcController {
    fn sample_time(&self) -> f64 {
        self.sample_time
    }

    fn step(&mut self, y: &[f64]) -> Result<Vec<f64>, ControlError> {
        if y.len() != 6 || y.iter().any(|v| !v.is_finite()) {
            return Err(ControlError::Measurement(y.to_vec()));
        }
        Ok(self.law(y).to_vec())
    }

    fn reset(&mut self) {}
}
