use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::control::{LqgConfig, PiGains};
use crate::plant::{LoopToggles, PlantParams, Preset};
use crate::signal::SignalRecord;
use crate::sysid::{ExcitationConfig, IdentifyConfig};

/// Disturbance channels of a scenario.
pub const PROFILE_LABELS: [&str; 3] = ["dPli", "dPlr", "dPw"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceChannel {
    #[serde(rename = "dPli")]
    LoadInverter,
    #[serde(rename = "dPlr")]
    LoadRectifier,
    #[serde(rename = "dPw")]
    Wind,
}

impl DisturbanceChannel {
    pub fn index(self) -> usize {
        match self {
            Self::LoadInverter => 0,
            Self::LoadRectifier => 1,
            Self::Wind => 2,
        }
    }
}

/// Finite pulse of `magnitude` starting at `time` and lasting `duration`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub channel: DisturbanceChannel,
    pub time: f64,
    pub magnitude: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceSpec {
    Steps { steps: Vec<StepSpec>, duration: f64 },
    Continuous(ProfileSpec),
    /// CSV with a time column and the channels `dPli`, `dPlr`, `dPw`.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub seed: u64,
    pub amplitude: f64,
    pub bandwidth: f64,
    pub duration: f64,
}

/// Frequency-regulation strategy being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Case {
    /// Data-driven LQG on all HVDC and generator channels.
    #[serde(rename = "1")]
    DataDriven,
    /// PI secondary control on both grids.
    #[serde(rename = "2")]
    PiBoth,
    /// PI secondary control with inverter-side HVDC loops only.
    #[serde(rename = "3")]
    PiInverter,
    /// Primary control only.
    #[serde(rename = "none")]
    NoSfc,
}

impl Case {
    pub fn label(self) -> &'static str {
        match self {
            Self::DataDriven => "case1",
            Self::PiBoth => "case2",
            Self::PiInverter => "case3",
            Self::NoSfc => "none",
        }
    }

    pub fn all() -> [Case; 3] {
        [Self::DataDriven, Self::PiBoth, Self::PiInverter]
    }
}

/// Which converter loops a sweep leaves closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Toggle {
    #[default]
    Base,
    /// No PFC droops on either converter.
    NoPfc,
    /// Neither IRE nor PFC.
    None,
}

impl Toggle {
    pub fn apply(self, loops: LoopToggles) -> LoopToggles {
        match self {
            Self::Base => loops,
            Self::NoPfc => loops.without_pfc(),
            Self::None => loops.without_pfc().without_ire(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Base => "base",
            Self::NoPfc => "a: no PFC",
            Self::None => "b: neither IRE nor PFC",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[derive(Default)]
pub struct ControllerSpec {
    pub lqg: LqgConfig,
    pub pi: PiGains,
}


fn default_cases() -> Vec<Case> {
    Case::all().to_vec()
}
fn default_dt() -> f64 {
    1e-3
}
fn default_ts() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "default_preset")]
    pub preset: Preset,
    /// Replaces the preset parameters when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<PlantParams>,
    #[serde(default)]
    pub toggle: Toggle,
    #[serde(default = "default_cases")]
    pub cases: Vec<Case>,
    pub disturbance: DisturbanceSpec,
    #[serde(default)]
    pub identification: IdentifyConfig,
    #[serde(default)]
    pub excitation: ExcitationConfig,
    #[serde(default)]
    pub controller: ControllerSpec,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_ts")]
    pub sample_time: f64,
}

fn default_preset() -> Preset {
    Preset::Jh
}

pub const STEP_IV_C_JSON: &str = include_str!("../../scenarios/step_iv_c.json");
pub const CONTINUOUS_IV_D_JSON: &str = include_str!("../../scenarios/continuous_iv_d.json");

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| HarnessError::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// The shipped step protocol.
    pub fn step_protocol() -> Self {
        Self::from_json(STEP_IV_C_JSON).expect("shipped scenario is valid")
    }

    /// The shipped continuous protocol.
    pub fn continuous_protocol() -> Self {
        Self::from_json(CONTINUOUS_IV_D_JSON).expect("shipped scenario is valid")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Scenario(msg));
        if !(self.dt > 0.0 && self.sample_time > 0.0) {
            return bad(format!("dt and sample_time must be positive ({}, {})", self.dt, self.sample_time));
        }
        if self.cases.is_empty() {
            return bad("at least one case is required".into());
        }
        match &self.disturbance {
            DisturbanceSpec::Steps { steps, duration } => {
                if !(*duration > 0.0) {
                    return bad(format!("duration must be positive, got {duration}"));
                }
                for s in steps {
                    if !(s.duration > 0.0 && s.time >= 0.0 && s.magnitude.is_finite()) {
                        return bad(format!("invalid step {s:?}"));
                    }
                }
            }
            DisturbanceSpec::Continuous(p) => {
                if !(p.duration > 0.0 && p.amplitude > 0.0 && p.bandwidth > 0.0) {
                    return bad(format!("invalid continuous profile {p:?}"));
                }
                if p.bandwidth > 0.5 / self.sample_time {
                    return bad(format!(
                        "bandwidth {} Hz exceeds the Nyquist limit {} Hz",
                        p.bandwidth,
                        0.5 / self.sample_time
                    ));
                }
            }
            DisturbanceSpec::File { .. } => {}
        }
        if let Some(p) = &self.params {
            p.validate()?;
        }
        Ok(())
    }

    pub fn plant_params(&self) -> PlantParams {
        self.params.clone().unwrap_or_else(|| self.preset.params())
    }

    /// Three-channel disturbance record `[ΔP_li, ΔP_lr, ΔP_w]`.
    pub fn disturbance_record(&self) -> Result<SignalRecord, HarnessError> {
        match &self.disturbance {
            DisturbanceSpec::Steps { steps, duration } => step_profile(steps, *duration, self.sample_time),
            DisturbanceSpec::Continuous(p) => {
                generate_continuous_profile(p.seed, p.amplitude, p.bandwidth, p.duration, self.sample_time)
            }
            DisturbanceSpec::File { path } => {
                let file = std::fs::File::open(path)
                    .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
                let rec = SignalRecord::read_csv(file)?;
                if (rec.sample_time() - self.sample_time).abs() > 1e-9 * self.sample_time {
                    return Err(HarnessError::Scenario(format!(
                        "{} is sampled at {} s, scenario expects {} s",
                        path.display(),
                        rec.sample_time(),
                        self.sample_time
                    )));
                }
                Ok(rec.select(&PROFILE_LABELS)?)
            }
        }
    }
}

fn samples(duration: f64, sample_time: f64) -> usize {
    (duration / sample_time).round() as usize + 1
}

pub fn step_profile(steps: &[StepSpec], duration: f64, sample_time: f64) -> Result<SignalRecord, HarnessError> {
    let n = samples(duration, sample_time);
    let mut rec = SignalRecord::zeros(sample_time, &PROFILE_LABELS, n)?;
    let eps = 1e-9 * sample_time;
    for k in 0..n {
        let t = rec.time(k);
        let row = rec.sample_mut(k);
        for s in steps {
            if t >= s.time - eps && t < s.time + s.duration - eps {
                row[s.channel.index()] += s.magnitude;
            }
        }
    }
    Ok(rec)
}

/// Low-pass three-pole smoothing coefficient for a cutoff in Hz.
fn pole(bandwidth: f64, sample_time: f64) -> f64 {
    (-2.0 * std::f64::consts::PI * bandwidth * sample_time).exp()
}

/// Zero-mean band-limited random profiles on the three disturbance
/// channels: white noise through three cascaded first-order lags with
/// cutoff `bandwidth`, mean removed, scaled so the peak equals `amplitude`.
pub fn generate_continuous_profile(
    seed: u64,
    amplitude: f64,
    bandwidth: f64,
    duration: f64,
    sample_time: f64,
) -> Result<SignalRecord, HarnessError> {
    if !(amplitude > 0.0 && bandwidth > 0.0 && duration > 0.0 && sample_time > 0.0) {
        return Err(HarnessError::Scenario(format!(
            "profile needs positive amplitude, bandwidth, duration and sample time \
             ({amplitude}, {bandwidth}, {duration}, {sample_time})"
        )));
    }
    if bandwidth > 0.5 / sample_time {
        return Err(HarnessError::Scenario(format!(
            "bandwidth {bandwidth} Hz exceeds the Nyquist limit {} Hz",
            0.5 / sample_time
        )));
    }
    let n = samples(duration, sample_time);
    let a = pole(bandwidth, sample_time);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = Vec::with_capacity(PROFILE_LABELS.len());
    for _ in 0..PROFILE_LABELS.len() {
        let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        for _ in 0..3 {
            let mut s = 0.0;
            for v in x.iter_mut() {
                s = a * s + (1.0 - a) * *v;
                *v = s;
            }
        }
        let mean = x.iter().sum::<f64>() / n as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            x.iter_mut().for_each(|v| *v *= amplitude / peak);
        }
        columns.push(x);
    }
    let rows = (0..n).map(|k| columns.iter().map(|c| c[k]).collect()).collect();
    Ok(SignalRecord::new(
        sample_time,
        PROFILE_LABELS.iter().map(|s| s.to_string()).collect(),
        rows,
    )?)
}

/// Plant disturbance inputs `[ΔP_li, ΔP_lr − ΔP_w]` from a profile.
pub fn plant_disturbances(profile: &SignalRecord) -> Result<SignalRecord, HarnessError> {
    let p = profile.select(&PROFILE_LABELS)?;
    let rows = p.samples().iter().map(|r| vec![r[0], r[1] - r[2]]).collect();
    Ok(SignalRecord::new(
        p.sample_time(),
        crate::plant::DISTURBANCE_LABELS.iter().map(|s| s.to_string()).collect(),
        rows,
    )?)
}
