use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::signal::SignalRecord;

/// Band for settling and restoration checks (pu).
pub const SETTLING_BAND: f64 = 1e-3;
/// Time the frequency must stay inside the band to count as settled (s).
pub const SETTLING_HOLD: f64 = 5.0;

/// Per-case result metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub max_fi: f64,
    pub max_fr: f64,
    pub max_f_sum: f64,
    pub max_vdc: f64,
    pub max_pdci: f64,
    pub max_pdcr: f64,
    pub max_pgi: f64,
    pub max_pgr: f64,
    pub fi_rms: f64,
    pub fr_rms: f64,
    pub f_rms_sum: f64,
    pub pgi_rms: f64,
    pub pgr_rms: f64,
    pub pg_rms_sum: f64,
    /// Time after which `|Δf|` stays within the band to the end of the
    /// record, provided at least [`SETTLING_HOLD`] seconds remain.
    pub settling_fi: Option<f64>,
    pub settling_fr: Option<f64>,
    /// Largest `|Δf_i|`, `|Δf_r|` over the final [`SETTLING_HOLD`] seconds.
    pub final_f_dev: f64,
}

/// Generator participation used to spread the aggregate output over the
/// individual units.
#[derive(Debug, Clone, PartialEq)]
pub struct Participation {
    pub inverter: Vec<f64>,
    pub rectifier: Vec<f64>,
}

impl Participation {
    pub fn from_params(p: &crate::plant::PlantParams) -> Self {
        Self {
            inverter: p.participation(false),
            rectifier: p.participation(true),
        }
    }
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// RMS over samples and generators of `β_n ΔP_g`.
pub fn generator_rms(aggregate: &[f64], beta: &[f64]) -> f64 {
    let share = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
    rms(aggregate) * share
}

fn settling(x: &[f64], sample_time: f64) -> Option<f64> {
    let last_out = x.iter().rposition(|v| v.abs() >= SETTLING_BAND);
    let start = last_out.map_or(0, |i| i + 1);
    let remaining = (x.len().saturating_sub(start + 1)) as f64 * sample_time;
    (start < x.len() && remaining >= SETTLING_HOLD - 1e-9).then_some(start as f64 * sample_time)
}

pub fn compute_metrics(trace: &SignalRecord, participation: &Participation) -> Result<Metrics, HarnessError> {
    if trace.is_empty() {
        return Err(HarnessError::Metrics("empty trace".into()));
    }
    let ch = |name: &str| trace.channel(name).map_err(HarnessError::from);
    let (fi, fr, vdc) = (ch("dfi")?, ch("dfr")?, ch("dVdc")?);
    let (pgi, pgr, pdci, pdcr) = (ch("dPgi")?, ch("dPgr")?, ch("dPdci")?, ch("dPdcr")?);
    let ts = trace.sample_time();
    let (max_fi, max_fr) = (max_abs(&fi), max_abs(&fr));
    let (fi_rms, fr_rms) = (rms(&fi), rms(&fr));
    let pgi_rms = generator_rms(&pgi, &participation.inverter);
    let pgr_rms = generator_rms(&pgr, &participation.rectifier);
    let tail = ((SETTLING_HOLD / ts).round() as usize + 1).min(trace.len());
    let from = trace.len() - tail;
    Ok(Metrics {
        max_fi,
        max_fr,
        max_f_sum: max_fi + max_fr,
        max_vdc: max_abs(&vdc),
        max_pdci: max_abs(&pdci),
        max_pdcr: max_abs(&pdcr),
        max_pgi: max_abs(&pgi),
        max_pgr: max_abs(&pgr),
        fi_rms,
        fr_rms,
        f_rms_sum: fi_rms + fr_rms,
        pgi_rms,
        pgr_rms,
        pg_rms_sum: pgi_rms + pgr_rms,
        settling_fi: settling(&fi, ts),
        settling_fr: settling(&fr, ts),
        final_f_dev: max_abs(&fi[from..]).max(max_abs(&fr[from..])),
    })
}

impl Metrics {
    /// Named numeric metrics in table order; settling times are `NaN`
    /// when the signal never settles.
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        let opt = |v: Option<f64>| v.unwrap_or(f64::NAN);
        vec![
            ("max_dfi", self.max_fi),
            ("max_dfr", self.max_fr),
            ("max_df_sum", self.max_f_sum),
            ("max_dVdc", self.max_vdc),
            ("max_dPdci", self.max_pdci),
            ("max_dPdcr", self.max_pdcr),
            ("max_dPgi", self.max_pgi),
            ("max_dPgr", self.max_pgr),
            ("dfi_rms", self.fi_rms),
            ("dfr_rms", self.fr_rms),
            ("df_rms_sum", self.f_rms_sum),
            ("dPgi_rms", self.pgi_rms),
            ("dPgr_rms", self.pgr_rms),
            ("dPg_rms_sum", self.pg_rms_sum),
            ("settling_dfi_s", opt(self.settling_fi)),
            ("settling_dfr_s", opt(self.settling_fr)),
            ("final_df_dev", self.final_f_dev),
        ]
    }
}
