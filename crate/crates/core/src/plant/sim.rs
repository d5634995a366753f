//! Fixed-step RK4 integration with zero-order-hold inputs.
//!
//! For a linear plant with inputs held over a step, one classical RK4 step
//! is the affine map `x ← Φ_h x + Γ_h u` with the fourth-order Taylor
//! polynomials of `hA`. Composing that map over the substeps of one sample
//! gives the same result as stepping RK4, at a fraction of the cost.

use super::{ContinuousPlant, PlantError, AUX_LABELS, DISTURBANCE_LABELS, INPUT_LABELS, OUTPUT_LABELS};
use crate::numerics::Matrix;
use crate::signal::SignalRecord;

pub const DEFAULT_BLOWUP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub dt: f64,
    /// Divergence bound on the state ∞-norm.
    pub blowup: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            blowup: DEFAULT_BLOWUP,
        }
    }
}

/// RK4 propagation over one sample period.
#[derive(Debug, Clone)]
pub struct SampledPlant {
    pub phi: Matrix,
    pub gamma: Matrix,
    pub sample_time: f64,
    pub substeps: usize,
    pub blowup: f64,
}

pub(crate) fn substeps(sample_time: f64, dt: f64) -> Result<usize, PlantError> {
    if !(dt > 0.0 && dt.is_finite() && sample_time > 0.0) {
        return Err(PlantError::BadStep { dt, sample_time });
    }
    let m = (sample_time / dt).round();
    if m < 1.0 || (m * dt - sample_time).abs() > 1e-9 * sample_time {
        return Err(PlantError::BadStep { dt, sample_time });
    }
    Ok(m as usize)
}

impl SampledPlant {
    /// RK4 sample map of `x' = a x + b u`, `dt` dividing `sample_time`.
    pub fn new(a: &Matrix, b: &Matrix, sample_time: f64, opts: SimOptions) -> Result<Self, PlantError> {
        let m = substeps(sample_time, opts.dt)?;
        let n = a.nrows();
        let h = opts.dt;
        let ident = Matrix::identity(n, n);
        let ha = a * h;
        let ha2 = &ha * &ha;
        let ha3 = &ha2 * &ha;
        let ha4 = &ha3 * &ha;
        let phi_h = &ident + &ha + &ha2 / 2.0 + &ha3 / 6.0 + &ha4 / 24.0;
        let gamma_h = (&ident + &ha / 2.0 + &ha2 / 6.0 + &ha3 / 24.0) * b * h;
        let mut phi = ident.clone();
        let mut gamma = Matrix::zeros(n, b.ncols());
        for _ in 0..m {
            gamma = &phi_h * gamma + &gamma_h;
            phi = &phi_h * phi;
        }
        Ok(Self {
            phi,
            gamma,
            sample_time,
            substeps: m,
            blowup: opts.blowup,
        })
    }

    pub fn step(&self, x: &mut nalgebra::DVector<f64>, u: &nalgebra::DVector<f64>) {
        *x = &self.phi * &*x + &self.gamma * u;
    }

    pub fn check(&self, x: &nalgebra::DVector<f64>, time: f64) -> Result<(), PlantError> {
        let norm = x.amax();
        if !(norm <= self.blowup) {
            return Err(PlantError::Divergence {
                time,
                norm,
                bound: self.blowup,
            });
        }
        Ok(())
    }
}

impl ContinuousPlant {
    pub fn sampled(&self, sample_time: f64, opts: SimOptions) -> Result<SampledPlant, PlantError> {
        SampledPlant::new(&self.state_space.a, &self.state_space.b, sample_time, opts)
    }

    /// Channel names of a simulated trace: outputs then auxiliary channels.
    pub fn trace_labels() -> Vec<String> {
        OUTPUT_LABELS
            .iter()
            .chain(AUX_LABELS.iter())
            .map(|s| s.to_string())
            .collect()
    }

    /// `[y; aux]` for state `x` and held input `u`.
    pub fn observe(&self, x: &nalgebra::DVector<f64>, u: &nalgebra::DVector<f64>) -> Vec<f64> {
        let y = &self.state_space.c * x + &self.state_space.d * u;
        let aux = &self.aux.c * x + &self.aux.d * u;
        y.iter().chain(aux.iter()).copied().collect()
    }
}

fn check_channels(context: &'static str, rec: &SignalRecord, width: usize, labels: &[&str]) -> Result<(), PlantError> {
    if rec.width() != width {
        return Err(PlantError::ChannelMismatch {
            context,
            expected: labels.iter().map(|s| s.to_string()).collect(),
            got: rec.channels().to_vec(),
        });
    }
    Ok(())
}

pub fn simulate(
    plant: &ContinuousPlant,
    refs: &SignalRecord,
    disturbances: &SignalRecord,
    dt: f64,
) -> Result<SignalRecord, PlantError> {
    simulate_with(
        plant,
        refs,
        disturbances,
        SimOptions {
            dt,
            ..SimOptions::default()
        },
    )
}

/// Open-loop response from rest. Row `k` of the result is sampled at
/// `t = k T_s` with the inputs of row `k` already applied to the
/// feedthrough.
pub fn simulate_with(
    plant: &ContinuousPlant,
    refs: &SignalRecord,
    disturbances: &SignalRecord,
    opts: SimOptions,
) -> Result<SignalRecord, PlantError> {
    check_channels("simulate refs", refs, INPUT_LABELS.len(), &INPUT_LABELS)?;
    check_channels("simulate disturbances", disturbances, DISTURBANCE_LABELS.len(), &DISTURBANCE_LABELS)?;
    if refs.len() != disturbances.len() {
        return Err(PlantError::RecordMismatch(format!(
            "{} vs {} samples",
            refs.len(),
            disturbances.len()
        )));
    }
    if (refs.sample_time() - disturbances.sample_time()).abs() > 1e-12 * refs.sample_time() {
        return Err(PlantError::RecordMismatch(format!(
            "sample times {} vs {}",
            refs.sample_time(),
            disturbances.sample_time()
        )));
    }
    let ts = refs.sample_time();
    let stepper = plant.sampled(ts, opts)?;
    let n = plant.state_dimension();
    let mut x = nalgebra::DVector::zeros(n);
    let mut rows = Vec::with_capacity(refs.len());
    for k in 0..refs.len() {
        let u = nalgebra::DVector::from_iterator(
            6,
            refs.samples()[k].iter().chain(&disturbances.samples()[k]).copied(),
        );
        rows.push(plant.observe(&x, &u));
        stepper.step(&mut x, &u);
        stepper.check(&x, (k + 1) as f64 * ts)?;
    }
    Ok(SignalRecord::new(ts, ContinuousPlant::trace_labels(), rows)?)
}
