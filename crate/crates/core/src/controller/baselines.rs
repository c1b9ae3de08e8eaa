use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::functions::geometric_error;
use super::projection::JointTorques;
use super::LocalState;
use crate::error::{ensure_finite, Error, Result};
use crate::geometry::{wrap_angle, JointConfig};

/// Joint-space PD: `τ = K_p (q_d − q) − K_d q̇`, gains per joint index.
pub fn joint_pd(
    q: &JointConfig,
    qdot: &(Vector3<f64>, Vector3<f64>),
    q_d: &JointConfig,
    kp: &[f64; 3],
    kd: &[f64; 3],
) -> JointTorques {
    let arm = |q: &[f64; 3], qd: &[f64; 3], rate: &Vector3<f64>| {
        Vector3::from_fn(|i, _| kp[i] * wrap_angle(qd[i] - q[i]) - kd[i] * rate[i])
    };
    JointTorques {
        left: arm(&q.left, &q_d.left, &qdot.0),
        right: arm(&q.right, &q_d.right, &qdot.1),
    }
}

/// Local-coordinate PD `K_𝒫 e − K_𝒟 ė` with the geometric angle error and
/// `ė = (cos(θ1d − θ1) θ̇1, cos(θ2d − θ2) θ̇2, Ṙ)`.
pub fn flat_pd(z_d: &Vector3<f64>, state: &LocalState, kp: &[f64; 3], kd: &[f64; 3]) -> Vector3<f64> {
    Vector3::from_fn(|i, _| {
        let (e, rate) = if i < 2 {
            (
                geometric_error(z_d[i], state.z[i]),
                (z_d[i] - state.z[i]).cos() * state.zdot[i],
            )
        } else {
            (z_d[i] - state.z[i], state.zdot[i])
        };
        kp[i] * e - kd[i] * rate
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DpdGains {
    pub k_i: [f64; 3],
    pub k_p: [f64; 3],
    pub k_d: [f64; 3],
}

impl Default for DpdGains {
    fn default() -> Self {
        Self {
            k_i: [2.0; 3],
            k_p: [30.0; 3],
            k_d: [10.0; 3],
        }
    }
}

/// Dual-loop PD: the outer loop moves an internal reference by
/// `ż_r = K_ℐ (z_d − z)`; the inner loop asks for the acceleration
/// `K_𝒫 (z_r − z) + K_𝒟 (ż_r − ż)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpdState {
    pub z_ref: Vector3<f64>,
    pub zdot_ref: Vector3<f64>,
}

impl DpdState {
    pub fn new(z0: Vector3<f64>) -> Self {
        Self {
            z_ref: z0,
            zdot_ref: Vector3::zeros(),
        }
    }

    /// Advances the outer loop and returns the inner-loop acceleration demand.
    pub fn step(&mut self, gains: &DpdGains, z_d: &Vector3<f64>, state: &LocalState, h: f64) -> Vector3<f64> {
        self.zdot_ref = Vector3::from_fn(|i, _| gains.k_i[i] * (z_d[i] - state.z[i]));
        self.z_ref += h * self.zdot_ref;
        Vector3::from_fn(|i, _| {
            gains.k_p[i] * (self.z_ref[i] - state.z[i]) + gains.k_d[i] * (self.zdot_ref[i] - state.zdot[i])
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MracGains {
    /// Double pole of the reference model.
    pub a_m: f64,
    /// Input gain of the reference model; `a_m²` gives unit DC gain.
    pub b_m: f64,
    pub gamma_z: f64,
    pub gamma_r: f64,
    /// Cutoff of the first-order filter on the target, rad/s.
    pub filter_cutoff: f64,
    /// Norm cap on the adapted gains of each channel.
    pub gain_cap: f64,
}

impl Default for MracGains {
    fn default() -> Self {
        Self {
            a_m: 6.0,
            b_m: 36.0,
            gamma_z: 50.0,
            gamma_r: 50.0,
            filter_cutoff: 10.0,
            gain_cap: 500.0,
        }
    }
}

impl MracGains {
    pub fn a_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(0.0, 1.0, -self.a_m * self.a_m, -2.0 * self.a_m)
    }

    /// Solution of `A_mᵀ P + P A_m = −I` for the double-pole model.
    pub fn lyapunov(&self) -> Matrix2<f64> {
        let a = self.a_m;
        let p11 = (a * a + 5.0) / (4.0 * a);
        let p12 = 1.0 / (2.0 * a * a);
        let p22 = (a * a + 1.0) / (4.0 * a * a * a);
        Matrix2::new(p11, p12, p12, p22)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a_m > 0.0
            && self.b_m > 0.0
            && self.gamma_z >= 0.0
            && self.gamma_r >= 0.0
            && self.filter_cutoff > 0.0
            && self.gain_cap > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("adaptive gains {self:?}")))
        }
    }
}

/// One channel of model-reference adaptive control with state `[z, ż]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MracChannel {
    pub x_m: Vector2<f64>,
    pub k_z: Vector2<f64>,
    pub k_r: f64,
    pub r_filt: f64,
    pub capped: bool,
}

impl MracChannel {
    /// Starts at the gains that make the nominal plant `z̈ = b τ` match the
    /// reference model.
    pub fn new(z0: f64, b_nominal: f64, gains: &MracGains) -> Self {
        let a = gains.a_m;
        Self {
            x_m: Vector2::new(z0, 0.0),
            k_z: Vector2::new(-a * a, -2.0 * a) / b_nominal,
            k_r: gains.b_m / b_nominal,
            r_filt: z0,
            capped: false,
        }
    }

    /// Returns the channel force for the current state, then advances the
    /// filter, reference model and adaptation by `h`.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        gains: &MracGains,
        p: &Matrix2<f64>,
        sign_b: f64,
        target: f64,
        z: f64,
        zdot: f64,
        h: f64,
    ) -> Result<f64> {
        let x = Vector2::new(z, zdot);
        let tau = self.k_z.dot(&x) + self.k_r * self.r_filt;
        let e = self.x_m - x;
        // eᵀ P B with B = [0, 1]ᵀ
        let s = (e[0] * p[(0, 1)] + e[1] * p[(1, 1)]) * sign_b;
        let k_z = self.k_z + h * gains.gamma_z * s * x;
        let k_r = self.k_r + h * gains.gamma_r * s * self.r_filt;
        let x_m = self.x_m + h * (gains.a_matrix() * self.x_m + Vector2::new(0.0, gains.b_m * self.r_filt));
        let r_filt = self.r_filt + h * gains.filter_cutoff * (target - self.r_filt);
        ensure_finite(
            &[tau, k_z[0], k_z[1], k_r, x_m[0], x_m[1], r_filt],
            "adaptive controller",
        )?;
        let norm = (k_z.norm_squared() + k_r * k_r).sqrt();
        if norm > gains.gain_cap {
            let scale = gains.gain_cap / norm;
            self.k_z = k_z * scale;
            self.k_r = k_r * scale;
            self.capped = true;
        } else {
            self.k_z = k_z;
            self.k_r = k_r;
        }
        self.x_m = x_m;
        self.r_filt = r_filt;
        Ok(tau)
    }
}
