//! Secondary frequency control: an LQG regulator designed on an
//! identified model, conventional PI baselines, and the sampled
//! interconnection with the truth plant.

mod lqg;
mod pi;

pub use lqg::{
    design_kalman, design_lqr, disturbance_noise, KalmanDesign, LqgConfig, LqgController, LqgDesign, LqrDesign,
};
pub use pi::{PiGains, PiMode, PiSfcController};

use nalgebra::DVector;
use thiserror::Error;

use crate::numerics::NumericsError;
use crate::plant::{ContinuousPlant, PlantError, SimOptions, DISTURBANCE_LABELS, INPUT_LABELS};
use crate::signal::{SignalError, SignalRecord};

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("{stage} riccati equation failed on an order-{order} model (open-loop spectral abscissa {abscissa:e}): {source}")]
    Care {
        stage: &'static str,
        order: usize,
        abscissa: f64,
        source: NumericsError,
    },
    #[error("{which} matrix is not Hurwitz (spectral abscissa {abscissa:e})")]
    NotHurwitz { which: &'static str, abscissa: f64 },
    #[error("invalid measurement {0:?}")]
    Measurement(Vec<f64>),
    #[error("controller config: {0}")]
    Config(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// A sampled controller mapping the six measured outputs to the four
/// SFC references.
pub trait SfcController {
    fn sample_time(&self) -> f64;
    fn step(&mut self, y: &[f64]) -> Result<Vec<f64>, ControlError>;
    fn reset(&mut self);
}

/// No secondary control: every reference stays at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoSfc {
    pub sample_time: f64,
}

impl SfcController for NoSfc {
    fn sample_time(&self) -> f64 {
        self.sample_time
    }

    fn step(&mut self, y: &[f64]) -> Result<Vec<f64>, ControlError> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(ControlError::Measurement(y.to_vec()));
        }
        Ok(vec![0.0; INPUT_LABELS.len()])
    }

    fn reset(&mut self) {}
}

/// Channel names of a closed-loop trace: outputs, auxiliary channels,
/// references, disturbances.
pub fn closed_loop_labels() -> Vec<String> {
    let mut labels = ContinuousPlant::trace_labels();
    labels.extend(INPUT_LABELS.iter().chain(DISTURBANCE_LABELS.iter()).map(|s| s.to_string()));
    labels
}

/// Runs `controller` against the truth plant. At sample `k` the
/// controller reads `y_k`, its references are held with `w_k` over the
/// next period, and row `k` records `y_k`, the auxiliary channels, `r_k`
/// and `w_k`.
pub fn closed_loop(
    plant: &ContinuousPlant,
    controller: &mut dyn SfcController,
    disturbances: &SignalRecord,
    opts: SimOptions,
) -> Result<SignalRecord, ControlError> {
    let run = closed_loop_run(plant, controller, disturbances, opts)?;
    match run.divergence {
        Some(e) => Err(ControlError::Plant(e)),
        None => Ok(run.trace),
    }
}

/// Closed-loop trace that may have been cut short by divergence.
#[derive(Debug)]
pub struct ClosedLoopRun {
    /// Rows up to and including the last sample before the state left
    /// the blow-up bound.
    pub trace: SignalRecord,
    pub divergence: Option<PlantError>,
}

impl ClosedLoopRun {
    pub fn diverged_at(&self) -> Option<f64> {
        match self.divergence {
            Some(PlantError::Divergence { time, .. }) => Some(time),
            _ => None,
        }
    }
}

/// As [`closed_loop`], but a divergence ends the run early instead of
/// discarding the samples recorded so far.
pub fn closed_loop_run(
    plant: &ContinuousPlant,
    controller: &mut dyn SfcController,
    disturbances: &SignalRecord,
    opts: SimOptions,
) -> Result<ClosedLoopRun, ControlError> {
    if disturbances.width() != DISTURBANCE_LABELS.len() {
        return Err(ControlError::Plant(PlantError::ChannelMismatch {
            context: "closed_loop disturbances",
            expected: DISTURBANCE_LABELS.iter().map(|s| s.to_string()).collect(),
            got: disturbances.channels().to_vec(),
        }));
    }
    let ts = disturbances.sample_time();
    if (controller.sample_time() - ts).abs() > 1e-9 * ts {
        return Err(ControlError::Config(format!(
            "controller runs at {} s but the disturbance record is sampled at {ts} s",
            controller.sample_time()
        )));
    }
    let stepper = plant.sampled(ts, opts)?;
    let ss = &plant.state_space;
    let mut x = DVector::zeros(plant.state_dimension());
    let mut rows = Vec::with_capacity(disturbances.len());
    let mut divergence = None;
    for k in 0..disturbances.len() {
        let y: Vec<f64> = (&ss.c * &x).iter().copied().collect();
        let r = controller.step(&y)?;
        let w = &disturbances.samples()[k];
        let u = DVector::from_iterator(r.len() + w.len(), r.iter().chain(w).copied());
        let mut row = plant.observe(&x, &u);
        row.extend_from_slice(&r);
        row.extend_from_slice(w);
        rows.push(row);
        stepper.step(&mut x, &u);
        if let Err(e) = stepper.check(&x, (k + 1) as f64 * ts) {
            divergence = Some(e);
            break;
        }
    }
    Ok(ClosedLoopRun {
        trace: SignalRecord::new(ts, closed_loop_labels(), rows)?,
        divergence,
    })
}
