//! Constant-velocity Kalman filter over `[u, v, a, h, du, dv, da, dh]`,
//! where `a = w / h`. Time is measured in frames.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::BBox;

pub type StateVector = SVector<f64, 8>;
pub type StateCovariance = SMatrix<f64, 8, 8>;
type Measurement = SVector<f64, 4>;

/// Noise model. Position and size deviations scale with the current box
/// height; aspect-ratio deviations are absolute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanParams {
    pub std_weight_position: f64,
    pub std_weight_velocity: f64,
    pub std_aspect: f64,
    pub std_aspect_velocity: f64,
    /// Initial position/size deviation as a multiple of the process deviation.
    pub init_position_scale: f64,
    /// Initial velocity variance relative to initial position variance.
    pub init_velocity_variance_ratio: f64,
}

impl Default for KalmanParams {
    fn default() -> Self {
        KalmanParams {
            std_weight_position: 0.05,
            std_weight_velocity: 0.00625,
            std_aspect: 0.01,
            std_aspect_velocity: 1e-5,
            init_position_scale: 2.0,
            init_velocity_variance_ratio: 10.0,
        }
    }
}

impl KalmanParams {
    fn position_std(&self, h: f64) -> [f64; 4] {
        let p = self.std_weight_position * h;
        [p, p, self.std_aspect, p]
    }

    fn velocity_std(&self, h: f64) -> [f64; 4] {
        let q = self.std_weight_velocity * h;
        [q, q, self.std_aspect_velocity, q]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: StateVector,
    pub covariance: StateCovariance,
}

fn measure(b: &BBox) -> Measurement {
    Measurement::new(b.u, b.v, b.w / b.h, b.h)
}

/// Starts a track at `det` with zero velocity.
pub fn initiate(det: &BBox, params: &KalmanParams) -> KalmanState {
    let z = measure(det);
    let mut mean = StateVector::zeros();
    mean.fixed_rows_mut::<4>(0).copy_from(&z);

    let pos = params.position_std(det.h);
    let mut covariance = StateCovariance::zeros();
    for i in 0..4 {
        let var = (params.init_position_scale * pos[i]).powi(2);
        covariance[(i, i)] = var;
        covariance[(i + 4, i + 4)] = params.init_velocity_variance_ratio * var;
    }
    KalmanState { mean, covariance }
}

fn transition() -> StateCovariance {
    let mut f = StateCovariance::identity();
    for i in 0..4 {
        f[(i, i + 4)] = 1.0;
    }
    f
}

/// Advances the state one frame.
pub fn predict(state: &KalmanState, params: &KalmanParams) -> KalmanState {
    let h = state.mean[3];
    let pos = params.position_std(h);
    let vel = params.velocity_std(h);
    let mut q = StateCovariance::zeros();
    for i in 0..4 {
        q[(i, i)] = pos[i] * pos[i];
        q[(i + 4, i + 4)] = vel[i] * vel[i];
    }

    let f = transition();
    let mean = f * state.mean;
    let covariance = symmetrize(f * state.covariance * f.transpose() + q);
    KalmanState { mean, covariance }
}

/// Measurement update with `det` as the observation of `[u, v, a, h]`.
pub fn correct(state: &KalmanState, det: &BBox, params: &KalmanParams) -> KalmanState {
    let h = state.mean[3];
    let meas_std = params.position_std(h);
    let mut r = SMatrix::<f64, 4, 4>::zeros();
    for i in 0..4 {
        r[(i, i)] = meas_std[i] * meas_std[i];
    }

    let mut obs = SMatrix::<f64, 4, 8>::zeros();
    for i in 0..4 {
        obs[(i, i)] = 1.0;
    }

    let p = &state.covariance;
    let innovation_cov = obs * p * obs.transpose() + r;
    let pht = p * obs.transpose();
    // K = P H^T S^-1, solved through the Cholesky factor of S.
    let gain = match innovation_cov.cholesky() {
        Some(chol) => chol.solve(&pht.transpose()).transpose(),
        None => return state.clone(),
    };

    let innovation = measure(det) - obs * state.mean;
    let mean = state.mean + gain * innovation;

    // Joseph form keeps the covariance symmetric positive semidefinite.
    let i_kh = StateCovariance::identity() - gain * obs;
    let covariance = symmetrize(i_kh * p * i_kh.transpose() + gain * r * gain.transpose());
    KalmanState { mean, covariance }
}

pub fn state_to_box(state: &KalmanState) -> Result<BBox> {
    let (aspect, height) = (state.mean[2], state.mean[3]);
    if !(aspect > 0.0 && height > 0.0) {
        return Err(Error::DegenerateState { aspect, height });
    }
    BBox::new(state.mean[0], state.mean[1], aspect * height, height)
        .map_err(|_| Error::DegenerateState { aspect, height })
}

fn symmetrize(m: StateCovariance) -> StateCovariance {
    (m + m.transpose()) * 0.5
}
