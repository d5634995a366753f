//! Data-driven modeling: observer Markov parameters by least squares
//! (OKID), recovery of the system pulse response, block-Hankel ERA
//! realization and conversion to continuous time.

mod era;
mod okid;

pub use era::{
    build_hankel, cumulative_energy, era_realize, reflect_nonpositive_modes, to_continuous, EraReport, Hankel,
    HSV_ZERO_TOL,
};
pub use okid::{
    estimate_observer_markov, min_record_length, recover_system_markov, MarkovSequence, MatrixRows, ObserverBlock,
    ObserverMarkov,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::NumericsError;
use crate::plant::{self, ContinuousPlant, PlantError, SimOptions, DISTURBANCE_LABELS, INPUT_LABELS, OUTPUT_LABELS};
use crate::signal::{SignalError, SignalRecord};
use crate::statespace::StateSpace;

#[derive(Debug, Error)]
pub enum SysidError {
    #[error("record too short for the requested observer order: need at least {required} samples, got {got}")]
    TooShort { required: usize, got: usize },
    #[error("{what} is rank deficient (rank {rank}, need {required}); the data do not excite the system")]
    RankDeficient {
        what: &'static str,
        rank: usize,
        required: usize,
    },
    #[error("hankel needs {required} pulse blocks, got {got}")]
    InsufficientBlocks { required: usize, got: usize },
    #[error("energy threshold {threshold} is unreachable; maximum achievable energy is {max_energy}")]
    ThresholdUnreachable { threshold: f64, max_energy: f64 },
    #[error("energy threshold must lie in (0, 1], got {0}")]
    BadThreshold(f64),
    #[error("requested order {requested} outside 1..={usable} (numerical rank of the hankel)")]
    OrderOutOfRange { requested: usize, usable: usize },
    #[error("estimated feedthrough norm {norm:e} exceeds {tolerance:e}; the data are not consistent with a strictly proper plant")]
    Feedthrough { norm: f64, tolerance: f64 },
    #[error("shape: {0}")]
    Shape(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Plant(#[from] PlantError),
}

/// Default energy threshold of the pipeline.
pub const DEFAULT_ENERGY_THRESHOLD: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentifyConfig {
    /// Observer order `l`.
    pub observer_order: usize,
    /// Hankel block count `p`.
    pub hankel_blocks: usize,
    pub energy_threshold: f64,
    pub sample_time: f64,
    pub r_override: Option<usize>,
    /// Move real eigenvalues `≤ 0` of `A_d` before taking the logarithm.
    pub reflect_nonpositive: bool,
    pub reflect_floor: f64,
    /// Bound on `‖Ȳ_0‖_max`; `None` accepts any feedthrough.
    pub feedthrough_tolerance: Option<f64>,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        Self {
            observer_order: 30,
            hankel_blocks: 100,
            energy_threshold: DEFAULT_ENERGY_THRESHOLD,
            sample_time: 0.1,
            r_override: None,
            reflect_nonpositive: true,
            reflect_floor: 1e-6,
            feedthrough_tolerance: Some(1e-6),
        }
    }
}

/// Random-step excitation held for `hold` seconds on every input channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExcitationConfig {
    pub seed: u64,
    pub amplitude: f64,
    pub hold: f64,
    pub duration: f64,
}

impl Default for ExcitationConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            amplitude: 0.05,
            hold: 1.0,
            duration: 200.0,
        }
    }
}

/// Zero-mean uniform steps in `[-amplitude, amplitude]`, one column per label.
pub fn excitation<S: AsRef<str>>(
    cfg: &ExcitationConfig,
    sample_time: f64,
    labels: &[S],
) -> Result<SignalRecord, SysidError> {
    if !(cfg.amplitude > 0.0 && cfg.hold > 0.0 && cfg.duration > 0.0 && sample_time > 0.0) {
        return Err(SysidError::Shape(format!(
            "excitation needs positive amplitude, hold, duration and sample time ({cfg:?}, T_s = {sample_time})"
        )));
    }
    let n = (cfg.duration / sample_time).round() as usize + 1;
    let per = ((cfg.hold / sample_time).round() as usize).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::with_capacity(n);
    let mut level = vec![0.0; labels.len()];
    for k in 0..n {
        if k % per == 0 {
            for l in level.iter_mut() {
                *l = rng.random_range(-cfg.amplitude..=cfg.amplitude);
            }
        }
        rows.push(level.clone());
    }
    let names = labels.iter().map(|s| s.as_ref().to_string()).collect();
    Ok(SignalRecord::new(sample_time, names, rows)?)
}

/// Plant input labels in identification order: references then disturbances.
pub fn plant_input_labels() -> Vec<&'static str> {
    INPUT_LABELS.iter().chain(DISTURBANCE_LABELS.iter()).copied().collect()
}

/// Open-loop plant outputs for a six-channel input record.
pub fn plant_response(plant: &ContinuousPlant, u: &SignalRecord, opts: SimOptions) -> Result<SignalRecord, SysidError> {
    let refs = u.select(&INPUT_LABELS)?;
    let dist = u.select(&DISTURBANCE_LABELS)?;
    let trace = plant::simulate_with(plant, &refs, &dist, opts)?;
    Ok(trace.select(&OUTPUT_LABELS)?)
}

#[derive(Debug, Clone)]
pub struct Identified {
    pub report: EraReport,
    pub observer: ObserverMarkov,
    pub markov: MarkovSequence,
    /// Discrete model after eigenvalue reflection.
    pub discrete: StateSpace,
    pub continuous: StateSpace,
}

/// OKID → Markov recovery → Hankel → ERA → continuous model.
pub fn identify(u: &SignalRecord, y: &SignalRecord, cfg: &IdentifyConfig) -> Result<Identified, SysidError> {
    if (u.sample_time() - cfg.sample_time).abs() > 1e-9 * cfg.sample_time {
        return Err(SysidError::Shape(format!(
            "record sample time {} differs from configured T_s {}",
            u.sample_time(),
            cfg.sample_time
        )));
    }
    let observer = estimate_observer_markov(u, y, cfg.observer_order)?;
    if let Some(tol) = cfg.feedthrough_tolerance {
        let norm = observer.feedthrough.amax();
        if norm > tol {
            return Err(SysidError::Feedthrough { norm, tolerance: tol });
        }
    }
    let markov = recover_system_markov(&observer, 2 * cfg.hankel_blocks);
    let hankel = build_hankel(&markov, cfg.hankel_blocks)?;
    let mut report = era_realize(&hankel, cfg.energy_threshold, cfg.r_override)?;
    let mut discrete = report.realized.clone();
    if cfg.reflect_nonpositive {
        report.reflected_modes = reflect_nonpositive_modes(&mut discrete, cfg.reflect_floor)?;
        if report.reflected_modes > 0 {
            log::info!("moved {} non-positive real discrete modes before conversion", report.reflected_modes);
        }
    }
    let continuous = to_continuous(&discrete)?;
    Ok(Identified {
        report,
        observer,
        markov,
        discrete,
        continuous,
    })
}

/// Excites the plant on all six inputs and identifies a model from its outputs.
pub fn identify_plant(
    plant: &ContinuousPlant,
    excitation_cfg: &ExcitationConfig,
    cfg: &IdentifyConfig,
    opts: SimOptions,
) -> Result<(Identified, SignalRecord, SignalRecord), SysidError> {
    let u = excitation(excitation_cfg, cfg.sample_time, &plant_input_labels())?;
    let y = plant_response(plant, &u, opts)?;
    let id = identify(&u, &y, cfg)?;
    Ok((id, u, y))
}

/// Normalized RMS error `‖a − b‖ / ‖b‖` over a channel.
pub fn nrmse(model: &[f64], truth: &[f64]) -> f64 {
    let num: f64 = model.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = truth.iter().map(|b| b * b).sum();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

/// Sampled response of a continuous model to held inputs, from rest.
pub fn sampled_response(model: &StateSpace, u: &SignalRecord) -> Result<SignalRecord, SysidError> {
    let ts = u.sample_time();
    let d = model.discretize_zoh(ts)?;
    let mut x = nalgebra::DVector::zeros(d.order());
    let mut rows = Vec::with_capacity(u.len());
    for row in u.samples() {
        let uk = nalgebra::DVector::from_column_slice(row);
        let yk = &d.c * &x + &d.d * &uk;
        rows.push(yk.iter().copied().collect());
        x = &d.a * x + &d.b * uk;
    }
    let names = (0..d.outputs()).map(|j| format!("y{j}")).collect();
    Ok(SignalRecord::new(ts, names, rows)?)
}
