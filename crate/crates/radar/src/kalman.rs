//! Constant-velocity Kalman filter on `[x, y, vx, vy]` with position
//! measurements.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum KalmanError {
    #[error("innovation covariance is not positive definite")]
    SingularCovariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KalmanState {
    pub mean: Vector4<f64>,
    pub cov: Matrix4<f64>,
}

/// Result of folding one measurement into a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub state: KalmanState,
    pub innovation: Vector2<f64>,
    pub innovation_cov: Matrix2<f64>,
    /// Gaussian density of the innovation, 1/m².
    pub likelihood: f64,
}

fn h() -> Matrix2x4<f64> {
    Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
}

impl KalmanState {
    /// Track started from a single position fix.
    pub fn initiate(z: [f64; 2], sigma_z: f64, sigma_v: f64) -> Self {
        let pos = sigma_z * sigma_z;
        let vel = sigma_v * sigma_v;
        Self {
            mean: Vector4::new(z[0], z[1], 0.0, 0.0),
            cov: Matrix4::from_diagonal(&Vector4::new(pos, pos, vel, vel)),
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.mean[0], self.mean[1]]
    }

    pub fn predict(&self, dt: f64, sigma_a: f64) -> Self {
        let mut f = Matrix4::identity();
        f[(0, 2)] = dt;
        f[(1, 3)] = dt;
        let (dt2, dt3, dt4) = (dt * dt, dt * dt * dt, dt * dt * dt * dt);
        let q = sigma_a * sigma_a;
        #[rustfmt::skip]
        let noise = Matrix4::new(
            dt4 / 4.0, 0.0,       dt3 / 2.0, 0.0,
            0.0,       dt4 / 4.0, 0.0,       dt3 / 2.0,
            dt3 / 2.0, 0.0,       dt2,       0.0,
            0.0,       dt3 / 2.0, 0.0,       dt2,
        ) * q;
        let cov = f * self.cov * f.transpose() + noise;
        Self {
            mean: f * self.mean,
            cov: (cov + cov.transpose()) * 0.5,
        }
    }

    /// Innovation and its covariance for measurement `z`.
    pub fn innovation(&self, z: [f64; 2], sigma_z: f64) -> (Vector2<f64>, Matrix2<f64>) {
        let h = h();
        let nu = Vector2::new(z[0], z[1]) - h * self.mean;
        let s = h * self.cov * h.transpose() + Matrix2::identity() * (sigma_z * sigma_z);
        (nu, s)
    }

    /// Squared Mahalanobis distance of `z` from the predicted measurement.
    pub fn distance2(&self, z: [f64; 2], sigma_z: f64) -> Result<f64, KalmanError> {
        let (nu, s) = self.innovation(z, sigma_z);
        let chol = s.cholesky().ok_or(KalmanError::SingularCovariance)?;
        Ok(nu.dot(&chol.solve(&nu)))
    }

    pub fn update(&self, z: [f64; 2], sigma_z: f64) -> Result<Update, KalmanError> {
        let h = h();
        let (nu, s) = self.innovation(z, sigma_z);
        let chol = s.cholesky().ok_or(KalmanError::SingularCovariance)?;
        let s_inv = chol.inverse();
        let gain = self.cov * h.transpose() * s_inv;
        let mean = self.mean + gain * nu;
        // Joseph form keeps the covariance symmetric positive definite
        let i_kh = Matrix4::identity() - gain * h;
        let r = Matrix2::identity() * (sigma_z * sigma_z);
        let cov = i_kh * self.cov * i_kh.transpose() + gain * r * gain.transpose();
        let d2 = nu.dot(&(s_inv * nu));
        let likelihood = (-0.5 * d2).exp() / (2.0 * std::f64::consts::PI * s.determinant().sqrt());
        Ok(Update {
            state: Self {
                mean,
                cov: (cov + cov.transpose()) * 0.5,
            },
            innovation: nu,
            innovation_cov: s,
            likelihood,
        })
    }

    /// Radius of the disc that contains the whole gate of threshold `gamma`.
    pub fn gate_radius(&self, sigma_z: f64, gamma: f64) -> f64 {
        let (_, s) = self.innovation([0.0, 0.0], sigma_z);
        let half_trace = 0.5 * (s[(0, 0)] + s[(1, 1)]);
        let det = s.determinant();
        let lambda_max = half_trace + (half_trace * half_trace - det).max(0.0).sqrt();
        (gamma * lambda_max).sqrt()
    }
}

/// Gate test: inside when d² ≤ γ (the boundary counts as inside).
pub fn gate(state: &KalmanState, z: [f64; 2], sigma_z: f64, gamma: f64) -> bool {
    state.distance2(z, sigma_z).is_ok_and(|d2| d2 <= gamma)
}
