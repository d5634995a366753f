use serde::{Deserialize, Serialize};

use super::PlantError;

/// Which HVDC-side feedback loops are closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopToggles {
    /// Inverter P-f droop `1/R_i`.
    #[serde(default = "yes")]
    pub freq_droop_i: bool,
    /// Rectifier P-f droop `1/R_r`.
    #[serde(default = "yes")]
    pub freq_droop_r: bool,
    /// Inverter P-V_dc droop `1/K_i`.
    #[serde(default = "yes")]
    pub vdc_droop_i: bool,
    /// Rectifier P-V_dc droop `1/K_r`.
    #[serde(default = "yes")]
    pub vdc_droop_r: bool,
    #[serde(default = "yes")]
    pub ire_i: bool,
    #[serde(default = "yes")]
    pub ire_r: bool,
}

fn yes() -> bool {
    true
}

impl Default for LoopToggles {
    fn default() -> Self {
        Self::all()
    }
}

impl LoopToggles {
    pub fn all() -> Self {
        Self {
            freq_droop_i: true,
            freq_droop_r: true,
            vdc_droop_i: true,
            vdc_droop_r: true,
            ire_i: true,
            ire_r: true,
        }
    }

    /// No droop (P-f or P-V_dc) on either converter; IRE untouched.
    pub fn without_pfc(self) -> Self {
        Self {
            freq_droop_i: false,
            freq_droop_r: false,
            vdc_droop_i: false,
            vdc_droop_r: false,
            ..self
        }
    }

    pub fn without_ire(self) -> Self {
        Self {
            ire_i: false,
            ire_r: false,
            ..self
        }
    }

    /// Loops kept by the inverter-only conventional scheme: the rectifier
    /// frequency droop, its IRE and both voltage droops are open.
    pub fn inverter_only(self) -> Self {
        Self {
            freq_droop_r: false,
            ire_r: false,
            vdc_droop_i: false,
            vdc_droop_r: false,
            ..self
        }
    }
}

/// Small-signal parameters of the two grids and the LCC link.
///
/// Per-unit quantities are on `power_base` / `frequency_base`; dc
/// quantities are in the SI units of their field names (kV, A, Ω, H, μF)
/// and normalized internally by `V_dcr0` and `I_dc0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantParams {
    #[serde(rename = "M_i")]
    pub m_i: f64,
    #[serde(rename = "M_r")]
    pub m_r: f64,
    #[serde(rename = "D_i")]
    pub d_i: f64,
    #[serde(rename = "D_r")]
    pub d_r: f64,
    #[serde(rename = "N_i")]
    pub n_i: u32,
    #[serde(rename = "N_r")]
    pub n_r: u32,
    #[serde(rename = "M_g")]
    pub m_g: f64,
    pub k_d: f64,
    #[serde(rename = "X_g")]
    pub x_g: f64,
    #[serde(rename = "Y_g")]
    pub y_g: f64,
    pub e_g: f64,
    pub u_g: f64,
    #[serde(rename = "T_cr")]
    pub t_cr: f64,
    #[serde(rename = "T_f")]
    pub t_f: f64,
    #[serde(rename = "T_cd")]
    pub t_cd: f64,
    #[serde(rename = "R_gi")]
    pub r_gi: f64,
    #[serde(rename = "R_gr")]
    pub r_gr: f64,
    /// Per-generator SFC participation on the inverter side; empty means
    /// equal shares `1/N_i`.
    #[serde(default)]
    pub beta_i: Vec<f64>,
    #[serde(default)]
    pub beta_r: Vec<f64>,
    #[serde(rename = "R_i")]
    pub r_i: f64,
    #[serde(rename = "R_r")]
    pub r_r: f64,
    #[serde(rename = "K_i")]
    pub k_i: f64,
    #[serde(rename = "K_r")]
    pub k_r: f64,
    #[serde(rename = "W_i")]
    pub w_i: f64,
    #[serde(rename = "W_r")]
    pub w_r: f64,
    #[serde(rename = "T_fi")]
    pub t_fi: f64,
    #[serde(rename = "T_fr")]
    pub t_fr: f64,
    #[serde(rename = "R_dc")]
    pub r_dc: f64,
    #[serde(rename = "L_dc")]
    pub l_dc: f64,
    #[serde(rename = "C_dc")]
    pub c_dc: f64,
    pub k_pr: f64,
    pub k_ir: f64,
    pub k_pi: f64,
    pub k_ii: f64,
    #[serde(rename = "V_dcr0")]
    pub v_dcr0: f64,
    #[serde(rename = "V_dci0")]
    pub v_dci0: f64,
    #[serde(rename = "I_dc0")]
    pub i_dc0: f64,
    /// MW.
    pub power_base: f64,
    /// Hz.
    pub frequency_base: f64,

    /// Poles of the link (2 for a bipole).
    #[serde(default = "default_poles")]
    pub poles: u32,
    /// Rectifier commutation reactance per bridge (Ω).
    #[serde(rename = "X_c", default = "default_x_c")]
    pub x_c: f64,
    /// Series bridges per pole on the rectifier.
    #[serde(rename = "B", default = "default_bridges")]
    pub bridges: u32,
    /// First-order lag of both converter control loops (s).
    #[serde(default = "default_tau_c")]
    pub tau_c: f64,
    /// Frequency transducer time constant (s).
    #[serde(rename = "T_mf", default = "default_t_mf")]
    pub t_mf: f64,
    /// dc-voltage transducer time constant (s).
    #[serde(rename = "T_mv", default = "default_t_mv")]
    pub t_mv: f64,
    #[serde(default)]
    pub loops: LoopToggles,

    /// Converter internals kept for reference only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0_deg: Option<f64>,
    #[serde(rename = "TR", default, skip_serializing_if = "Option::is_none")]
    pub tr: Option<f64>,
}

fn default_poles() -> u32 {
    2
}
fn default_x_c() -> f64 {
    7.99
}
fn default_bridges() -> u32 {
    2
}
fn default_tau_c() -> f64 {
    0.01
}
fn default_t_mf() -> f64 {
    0.02
}
fn default_t_mv() -> f64 {
    0.1
}

pub const JH_JSON: &str = include_str!("../../presets/jh.json");
pub const CIGRE_JSON: &str = include_str!("../../presets/cigre.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Jh,
    Cigre,
}

impl Preset {
    pub fn params(self) -> PlantParams {
        let text = match self {
            Preset::Jh => JH_JSON,
            Preset::Cigre => CIGRE_JSON,
        };
        PlantParams::from_json(text).expect("shipped preset is valid")
    }
}

impl PlantParams {
    pub fn jh() -> Self {
        Preset::Jh.params()
    }

    pub fn cigre() -> Self {
        Preset::Cigre.params()
    }

    pub fn from_json(text: &str) -> Result<Self, PlantError> {
        let p: PlantParams =
            serde_json::from_str(text).map_err(|e| PlantError::Json(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }

    /// Participation factors, defaulting to equal shares.
    pub fn participation(&self, rectifier: bool) -> Vec<f64> {
        let (beta, n) = if rectifier {
            (&self.beta_r, self.n_r)
        } else {
            (&self.beta_i, self.n_i)
        };
        if beta.is_empty() {
            vec![1.0 / n as f64; n as usize]
        } else {
            beta.clone()
        }
    }

    /// Nominal dc power in MW, `poles · V_dcr0 · I_dc0`.
    pub fn nominal_dc_power(&self) -> f64 {
        self.poles as f64 * self.v_dcr0 * self.i_dc0 * 1e-3
    }

    /// Rectifier commutation resistance `(3/π) X_c B` (Ω).
    pub fn commutation_resistance(&self) -> f64 {
        3.0 / std::f64::consts::PI * self.x_c * self.bridges as f64
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let positive = [
            ("M_i", self.m_i),
            ("M_r", self.m_r),
            ("M_g", self.m_g),
            ("Y_g", self.y_g),
            ("u_g", self.u_g),
            ("e_g", self.e_g),
            ("T_cr", self.t_cr),
            ("T_f", self.t_f),
            ("T_cd", self.t_cd),
            ("R_gi", self.r_gi),
            ("R_gr", self.r_gr),
            ("R_i", self.r_i),
            ("R_r", self.r_r),
            ("K_i", self.k_i),
            ("K_r", self.k_r),
            ("T_fi", self.t_fi),
            ("T_fr", self.t_fr),
            ("R_dc", self.r_dc),
            ("L_dc", self.l_dc),
            ("C_dc", self.c_dc),
            ("V_dcr0", self.v_dcr0),
            ("V_dci0", self.v_dci0),
            ("I_dc0", self.i_dc0),
            ("power_base", self.power_base),
            ("frequency_base", self.frequency_base),
            ("tau_c", self.tau_c),
            ("T_mf", self.t_mf),
            ("T_mv", self.t_mv),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PlantError::InvalidParam {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        let non_negative = [
            ("D_i", self.d_i),
            ("D_r", self.d_r),
            ("k_d", self.k_d),
            ("X_g", self.x_g),
            ("W_i", self.w_i),
            ("W_r", self.w_r),
            ("k_pr", self.k_pr),
            ("k_ir", self.k_ir),
            ("k_pi", self.k_pi),
            ("k_ii", self.k_ii),
            ("X_c", self.x_c),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(PlantError::InvalidParam {
                    name,
                    reason: format!("must be non-negative and finite, got {v}"),
                });
            }
        }
        for (name, n) in [("N_i", self.n_i), ("N_r", self.n_r), ("poles", self.poles)] {
            if n == 0 {
                return Err(PlantError::InvalidParam {
                    name,
                    reason: "must be at least 1".into(),
                });
            }
        }
        for (name, beta, n) in [
            ("beta_i", &self.beta_i, self.n_i),
            ("beta_r", &self.beta_r, self.n_r),
        ] {
            if beta.is_empty() {
                continue;
            }
            if beta.len() != n as usize {
                return Err(PlantError::InvalidParam {
                    name,
                    reason: format!("has {} entries for {n} generators", beta.len()),
                });
            }
            let sum: f64 = beta.iter().sum();
            if beta.iter().any(|b| !(*b >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(PlantError::InvalidParam {
                    name,
                    reason: format!("must be non-negative and sum to 1, sum is {sum}"),
                });
            }
        }
        let dc = self.nominal_dc_power();
        if (dc - self.power_base).abs() > 0.01 * self.power_base {
            return Err(PlantError::InvalidParam {
                name: "power_base",
                reason: format!(
                    "nominal dc power {dc:.3} MW differs from the {} MW base by more than 1%",
                    self.power_base
                ),
            });
        }
        Ok(())
    }
}
