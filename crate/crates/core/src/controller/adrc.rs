use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::functions::{fal, geometric_error};
use super::LocalState;
use crate::error::{Error, Result};

/// Gains of the nonlinear feedback `u = β1 fal(e) + β2 fal(ė)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdrcGains {
    pub beta1: f64,
    pub beta2: f64,
    pub sigma1: [f64; 3],
    pub sigma2: [f64; 3],
    pub delta1: [f64; 3],
    pub delta2: [f64; 3],
}

impl Default for AdrcGains {
    fn default() -> Self {
        Self {
            beta1: 25.0,
            beta2: 8.0,
            sigma1: [0.9; 3],
            sigma2: [0.6; 3],
            delta1: [0.01; 3],
            delta2: [0.01; 3],
        }
    }
}

impl AdrcGains {
    pub fn validate(&self) -> Result<()> {
        let shaping = |s: &[f64; 3], d: &[f64; 3]| s.iter().all(|&x| x > 0.0 && x <= 1.0) && d.iter().all(|&x| x > 0.0);
        if self.beta1 > 0.0
            && self.beta2 > 0.0
            && shaping(&self.sigma1, &self.delta1)
            && shaping(&self.sigma2, &self.delta2)
        {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("feedback gains {self:?}")))
        }
    }
}

/// Tracking error and its rate: geometric on the angle channels, linear on `R`.
pub fn tracking_error(z_d: &Vector3<f64>, zdot_d: &Vector3<f64>, state: &LocalState) -> (Vector3<f64>, Vector3<f64>) {
    let mut e = Vector3::zeros();
    let mut edot = Vector3::zeros();
    for i in 0..2 {
        e[i] = geometric_error(z_d[i], state.z[i]);
        edot[i] = (z_d[i] - state.z[i]).cos() * (zdot_d[i] - state.zdot[i]);
    }
    e[2] = z_d[2] - state.z[2];
    edot[2] = zdot_d[2] - state.zdot[2];
    (e, edot)
}

/// Generalized force `(u − ξ̂) / b_z` with `u = β1 fal(e) + β2 fal(ė)` per channel.
pub fn adrc_control(
    gains: &AdrcGains,
    b_z: &Vector3<f64>,
    z_d: &Vector3<f64>,
    zdot_d: &Vector3<f64>,
    state: &LocalState,
    xi_hat: &Vector3<f64>,
) -> Vector3<f64> {
    let (e, edot) = tracking_error(z_d, zdot_d, state);
    Vector3::from_fn(|i, _| {
        let u = gains.beta1 * fal(e[i], gains.sigma1[i], gains.delta1[i])
            + gains.beta2 * fal(edot[i], gains.sigma2[i], gains.delta2[i]);
        (u - xi_hat[i]) / b_z[i]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn at(z: Vector3<f64>) -> LocalState {
        LocalState {
            z,
            zdot: Vector3::zeros(),
        }
    }

    #[test]
    fn zero_error_zero_force() {
        let z = Vector3::new(0.2, -0.1, 0.4);
        let tau = adrc_control(
            &AdrcGains::default(),
            &Vector3::new(2.0, 3.0, 5.0),
            &z,
            &Vector3::zeros(),
            &at(z),
            &Vector3::zeros(),
        );
        assert_eq!(tau, Vector3::zeros());
    }

    #[test]
    fn pure_disturbance_rejection() {
        let z = Vector3::new(0.2, -0.1, 0.4);
        let tau = adrc_control(
            &AdrcGains::default(),
            &Vector3::new(2.0, 3.0, 5.0),
            &z,
            &Vector3::zeros(),
            &at(z),
            &Vector3::new(0.4, 0.0, 0.0),
        );
        assert_abs_diff_eq!(tau[0], -0.2, epsilon = 1e-15);
        assert_eq!((tau[1], tau[2]), (0.0, 0.0));
    }

    #[test]
    fn large_errors_get_sublinear_effort() {
        let gains = AdrcGains {
            sigma1: [0.5; 3],
            ..AdrcGains::default()
        };
        let b = Vector3::repeat(1.0);
        let u = |e: f64| {
            adrc_control(
                &gains,
                &b,
                &Vector3::new(0.0, 0.0, e),
                &Vector3::zeros(),
                &at(Vector3::zeros()),
                &Vector3::zeros(),
            )[2]
        };
        let (small, large) = (u(0.1), u(0.4));
        assert!(large > small);
        assert!(large < 4.0 * small);
    }

    #[test]
    fn error_rate_is_derivative_of_geometric_error() {
        let state = LocalState {
            z: Vector3::new(0.3, -0.4, 0.45),
            zdot: Vector3::new(0.7, -0.2, 0.1),
        };
        let z_d = Vector3::new(0.1, 0.2, 0.5);
        let zdot_d = Vector3::new(-0.3, 0.4, 0.0);
        let (e0, edot) = tracking_error(&z_d, &zdot_d, &state);
        let h = 1e-7;
        let moved = LocalState {
            z: state.z + h * state.zdot,
            zdot: state.zdot,
        };
        let (e1, _) = tracking_error(&(z_d + h * zdot_d), &zdot_d, &moved);
        assert_abs_diff_eq!((e1 - e0) / h, edot, epsilon = 1e-6);
    }
}
