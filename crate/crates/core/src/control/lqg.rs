use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{ControlError, SfcController};
use crate::numerics::{self, Matrix};
use crate::statespace::{matrix_rows, StateSpace};

/// LQ state-feedback design on the first `r.len()` input columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LqrDesign {
    #[serde(with = "matrix_rows")]
    pub k: Matrix,
    #[serde(with = "matrix_rows")]
    pub p: Matrix,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KalmanDesign {
    #[serde(with = "matrix_rows")]
    pub kf: Matrix,
    #[serde(with = "matrix_rows")]
    pub p: Matrix,
    pub residual: f64,
}

fn check_continuous(model: &StateSpace) -> Result<(), ControlError> {
    if model.is_discrete() {
        return Err(ControlError::Config("controller design needs a continuous model".into()));
    }
    Ok(())
}

fn diag(values: &[f64]) -> Matrix {
    Matrix::from_diagonal(&DVector::from_column_slice(values))
}

fn care_error(stage: &'static str, a: &Matrix, source: numerics::NumericsError) -> ControlError {
    ControlError::Care {
        stage,
        order: a.nrows(),
        abscissa: numerics::spectral_abscissa(a).unwrap_or(f64::NAN),
        source,
    }
}

/// `K = R⁻¹ B_rᵀ P` for the cost `∫ yᵀ diag(q) y + rᵀ diag(r) r`.
pub fn design_lqr(model: &StateSpace, q: &[f64], r: &[f64]) -> Result<LqrDesign, ControlError> {
    check_continuous(model)?;
    if q.len() != model.outputs() || r.len() > model.inputs() || r.is_empty() {
        return Err(ControlError::Config(format!(
            "need {} output weights and at most {} input weights, got {} and {}",
            model.outputs(),
            model.inputs(),
            q.len(),
            r.len()
        )));
    }
    if q.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || r.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(ControlError::Config(format!(
            "weights must satisfy q >= 0 and r > 0, got q = {q:?}, r = {r:?}"
        )));
    }
    let b = model.b.columns(0, r.len()).into_owned();
    let qx = model.c.transpose() * diag(q) * &model.c;
    let rm = diag(r);
    let p = numerics::solve_care(&model.a, &b, &qx, &rm).map_err(|e| care_error("lqr", &model.a, e))?;
    let residual = numerics::care_residual(&model.a, &b, &qx, &rm, &p)?;
    let k = numerics::solve("design_lqr", &rm, &(b.transpose() * &p))?;
    Ok(LqrDesign { k, p, residual })
}

/// Steady Kalman gain `K_f = P_f Cᵀ V⁻¹` from the dual Riccati equation.
pub fn design_kalman(model: &StateSpace, w_proc: &Matrix, v_meas: &Matrix) -> Result<KalmanDesign, ControlError> {
    check_continuous(model)?;
    let (n, z) = (model.order(), model.outputs());
    if w_proc.shape() != (n, n) || v_meas.shape() != (z, z) {
        return Err(ControlError::Config(format!(
            "covariances must be {n}x{n} and {z}x{z}, got {:?} and {:?}",
            w_proc.shape(),
            v_meas.shape()
        )));
    }
    let at = model.a.transpose();
    let ct = model.c.transpose();
    let p = numerics::solve_care(&at, &ct, w_proc, v_meas).map_err(|e| care_error("kalman", &model.a, e))?;
    let residual = numerics::care_residual(&at, &ct, w_proc, v_meas, &p)?;
    let kf = numerics::solve("design_kalman", v_meas, &(&model.c * &p))?.transpose();
    Ok(KalmanDesign { kf, p, residual })
}

/// Process noise entering through the disturbance columns,
/// `B_w B_wᵀ σ² + ε I`.
pub fn disturbance_noise(model: &StateSpace, first_disturbance: usize, sigma: f64, regularization: f64) -> Matrix {
    let n = model.order();
    let w = model.inputs() - first_disturbance;
    let bw = model.b.columns(first_disturbance, w);
    bw * bw.transpose() * (sigma * sigma) + Matrix::identity(n, n) * regularization
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LqgConfig {
    /// Weights on `[Δf_i, Δf_r, ΔV_dc, ∫Δf_i, ∫Δf_r, ∫ΔV_dc]`.
    pub q: Vec<f64>,
    /// Weights on the four reference channels.
    pub r: Vec<f64>,
    /// Standard deviation of the disturbance-driven process noise.
    pub sigma_w: f64,
    /// Measurement noise variance, `V = v_meas I`.
    pub v_meas: f64,
    /// Added to the process noise so that every mode is excited.
    pub w_regularization: f64,
    /// Symmetric limit on each reference channel; `None` leaves them free.
    pub saturation: Option<f64>,
}

impl Default for LqgConfig {
    fn default() -> Self {
        Self {
            q: vec![1000.0, 1000.0, 10.0, 100.0, 100.0, 1.0],
            r: vec![5.0; 4],
            sigma_w: 0.1,
            v_meas: 1e-6,
            w_regularization: 1e-12,
            saturation: None,
        }
    }
}

/// Designed gains and closed-loop diagnostics, exportable as JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LqgDesign {
    pub config: LqgConfig,
    pub lqr: LqrDesign,
    pub kalman: KalmanDesign,
    pub regulator_abscissa: f64,
    pub estimator_abscissa: f64,
    pub lqr_residual_bound: f64,
    pub kalman_residual_bound: f64,
}

/// Output-feedback LQG regulator running at a fixed sample time.
#[derive(Debug, Clone)]
pub struct LqgController {
    pub model: StateSpace,
    pub design: LqgDesign,
    pub sample_time: f64,
    /// Estimator map `x̂⁺ = Φ x̂ + Γ [r; y]`.
    phi: Matrix,
    gamma: Matrix,
    x_hat: DVector<f64>,
}

impl LqgController {
    /// Designs K and K_f on `model`, whose first four inputs are the
    /// references and the remaining ones the disturbances.
    pub fn design(model: &StateSpace, cfg: &LqgConfig, sample_time: f64) -> Result<Self, ControlError> {
        if !(sample_time > 0.0) {
            return Err(ControlError::Config(format!("sample time must be positive, got {sample_time}")));
        }
        let refs = cfg.r.len();
        let lqr = design_lqr(model, &cfg.q, &cfg.r)?;
        if !(cfg.sigma_w >= 0.0 && cfg.v_meas > 0.0 && cfg.w_regularization >= 0.0) {
            return Err(ControlError::Config(format!(
                "need sigma_w >= 0, v_meas > 0, w_regularization >= 0 (got {}, {}, {})",
                cfg.sigma_w, cfg.v_meas, cfg.w_regularization
            )));
        }
        let w = disturbance_noise(model, refs, cfg.sigma_w, cfg.w_regularization);
        let v = Matrix::identity(model.outputs(), model.outputs()) * cfg.v_meas;
        let kalman = design_kalman(model, &w, &v)?;

        let br = model.b.columns(0, refs).into_owned();
        let reg = &model.a - &br * &lqr.k;
        let est = &model.a - &kalman.kf * &model.c;
        let regulator_abscissa = numerics::spectral_abscissa(&reg)?;
        let estimator_abscissa = numerics::spectral_abscissa(&est)?;
        for (which, abscissa) in [("regulator", regulator_abscissa), ("estimator", estimator_abscissa)] {
            if !(abscissa < 0.0) {
                return Err(ControlError::NotHurwitz { which, abscissa });
            }
        }

        let mut inputs = Matrix::zeros(model.order(), refs + model.outputs());
        inputs.columns_mut(0, refs).copy_from(&br);
        inputs.columns_mut(refs, model.outputs()).copy_from(&kalman.kf);
        let (phi, gamma_int) = numerics::zoh_integral(&est, sample_time)?;
        let gamma = gamma_int * inputs;

        let design = LqgDesign {
            config: cfg.clone(),
            lqr_residual_bound: 1e-7 * lqr.p.norm().max(1.0),
            kalman_residual_bound: 1e-7 * kalman.p.norm().max(1.0),
            lqr,
            kalman,
            regulator_abscissa,
            estimator_abscissa,
        };
        Ok(Self {
            x_hat: DVector::zeros(model.order()),
            model: model.clone(),
            design,
            sample_time,
            phi,
            gamma,
        })
    }

    pub fn k(&self) -> &Matrix {
        &self.design.lqr.k
    }

    pub fn kf(&self) -> &Matrix {
        &self.design.kalman.kf
    }

    pub fn estimate(&self) -> &DVector<f64> {
        &self.x_hat
    }

    /// Model outputs `C̃ x̂` of the current estimate.
    pub fn estimated_outputs(&self) -> DVector<f64> {
        &self.model.c * &self.x_hat
    }

    /// Regulator matrix `Ã − B̃_r K`.
    pub fn regulator_matrix(&self) -> Matrix {
        let refs = self.design.config.r.len();
        &self.model.a - self.model.b.columns(0, refs) * self.k()
    }

    /// Estimator matrix `Ã − K_f C̃`.
    pub fn estimator_matrix(&self) -> Matrix {
        &self.model.a - self.kf() * &self.model.c
    }

    /// Continuous interconnection of a plant `(A, B_r, C)` with this
    /// controller, states `[x; x̂]`.
    pub fn interconnection(&self, a: &Matrix, b_r: &Matrix, c: &Matrix) -> Matrix {
        let (n, m) = (a.nrows(), self.model.order());
        let refs = self.design.config.r.len();
        let br_hat = self.model.b.columns(0, refs);
        let mut out = Matrix::zeros(n + m, n + m);
        out.view_mut((0, 0), (n, n)).copy_from(a);
        out.view_mut((0, n), (n, m)).copy_from(&(-(b_r * self.k())));
        out.view_mut((n, 0), (m, n)).copy_from(&(self.kf() * c));
        let est = &self.model.a - br_hat * self.k() - self.kf() * &self.model.c;
        out.view_mut((n, n), (m, m)).copy_from(&est);
        out
    }

    /// Sampled interconnection with a plant whose one-period map is
    /// `x⁺ = Φ x + Γ_r r`, `y = C x`; states `[x; x̂]`.
    pub fn sampled_interconnection(&self, phi: &Matrix, gamma_r: &Matrix, c: &Matrix) -> Matrix {
        let (n, m) = (phi.nrows(), self.model.order());
        let refs = self.design.config.r.len();
        let ge_r = self.gamma.columns(0, refs);
        let ge_y = self.gamma.columns(refs, self.model.outputs());
        let mut out = Matrix::zeros(n + m, n + m);
        out.view_mut((0, 0), (n, n)).copy_from(phi);
        out.view_mut((0, n), (n, m)).copy_from(&(-(gamma_r * self.k())));
        out.view_mut((n, 0), (m, n)).copy_from(&(ge_y * c));
        out.view_mut((n, n), (m, m)).copy_from(&(&self.phi - ge_r * self.k()));
        out
    }

    fn clamp(&self, r: &mut [f64]) {
        if let Some(limit) = self.design.config.saturation {
            for v in r {
                *v = v.clamp(-limit, limit);
            }
        }
    }
}

impl SfcController for LqgController {
    fn sample_time(&self) -> f64 {
        self.sample_time
    }

    /// `r = −K x̂`, then `x̂` advances one sample with `r` and `y` held.
    fn step(&mut self, y: &[f64]) -> Result<Vec<f64>, ControlError> {
        if y.len() != self.model.outputs() || y.iter().any(|v| !v.is_finite()) {
            return Err(ControlError::Measurement(y.to_vec()));
        }
        let mut r: Vec<f64> = (-(self.k() * &self.x_hat)).iter().copied().collect();
        self.clamp(&mut r);
        let input = DVector::from_iterator(r.len() + y.len(), r.iter().chain(y).copied());
        self.x_hat = &self.phi * &self.x_hat + &self.gamma * input;
        Ok(r)
    }

    fn reset(&mut self) {
        self.x_hat.fill(0.0);
    }
}
