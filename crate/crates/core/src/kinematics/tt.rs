use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use super::{BaseCommands, ModelParams};
use crate::error::{ensure_finite, Error, Result};
use crate::geometry::wrap_angle;

/// Steering angles closer than this to ±π/2 are rejected.
pub const STEER_EPS: f64 = 1e-3;

/// Truck-Trailer state; the cart heading is `θ0 + θ1`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TTState {
    pub x_c: f64,
    pub y_c: f64,
    pub theta0: f64,
    pub theta1: f64,
}

impl TTState {
    pub fn new(x_c: f64, y_c: f64, theta0: f64, theta1: f64) -> Self {
        Self {
            x_c,
            y_c,
            theta0: wrap_angle(theta0),
            theta1: wrap_angle(theta1),
        }
    }

    pub fn theta_c(&self) -> f64 {
        wrap_angle(self.theta0 + self.theta1)
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.x_c, self.y_c, self.theta0, self.theta1)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// Indices of angular components, re-wrapped after integration.
    pub const ANGLES: [usize; 2] = [2, 3];
}

/// Truck-Trailer input: cart speed and virtual steering angle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TTInput {
    pub v_c: f64,
    pub alpha: f64,
}

impl TTInput {
    pub fn new(v_c: f64, alpha: f64) -> Self {
        Self { v_c, alpha }
    }
}

fn check_steer(alpha: f64) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(Error::NonFinite("steering angle"));
    }
    if alpha.abs() >= FRAC_PI_2 - STEER_EPS {
        return Err(Error::SteerSingular(alpha));
    }
    Ok(alpha.tan())
}

/// Base forward speed `v0 = v_c cosθ1 (1 + (R/L1) tanα tanθ1)`.
pub fn tt_base_speed(state: &TTState, u: &TTInput, p: &ModelParams) -> Result<f64> {
    let t = check_steer(u.alpha)?;
    let (s1, c1) = state.theta1.sin_cos();
    Ok(u.v_c * (c1 + p.reach / p.l1 * t * s1))
}

/// Rates `(ẋ_c, ẏ_c, θ̇0, θ̇1)` of the Truck-Trailer model.
pub fn tt_derivative(state: &TTState, u: &TTInput, p: &ModelParams) -> Result<Vector4<f64>> {
    let t = check_steer(u.alpha)?;
    let (s0, c0) = state.theta0.sin_cos();
    let (s1, c1) = state.theta1.sin_cos();
    let k = p.reach / p.l1;
    let v0 = u.v_c * (c1 + k * t * s1);
    let theta0_dot = u.v_c * (s1 - k * c1 * t) / p.l2;
    let theta1_dot = u.v_c * t / p.l1 - theta0_dot;
    let d = Vector4::new(v0 * c0, v0 * s0, theta0_dot, theta1_dot);
    ensure_finite(d.as_slice(), "tt_derivative")?;
    Ok(d)
}

/// Whole-body commands realising a Truck-Trailer input with θ2 frozen.
pub fn tt_base_commands(state: &TTState, u: &TTInput, p: &ModelParams) -> Result<BaseCommands> {
    let d = tt_derivative(state, u, p)?;
    Ok(BaseCommands {
        v0: tt_base_speed(state, u, p)?,
        omega0: d[2],
        omega1: d[3],
        omega2: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params() -> ModelParams {
        ModelParams {
            reach: 0.3,
            l1: 0.4,
            l2: 0.6,
            ..ModelParams::default()
        }
    }

    #[test]
    fn straight_roll() {
        let s = TTState::new(0.0, 0.0, 0.7, 0.0);
        let d = tt_derivative(&s, &TTInput::new(0.5, 0.0), &params()).unwrap();
        assert_abs_diff_eq!(
            d,
            Vector4::new(0.5 * 0.7f64.cos(), 0.5 * 0.7f64.sin(), 0.0, 0.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn zero_speed_is_stationary() {
        let s = TTState::new(1.0, -2.0, 0.3, -0.4);
        let d = tt_derivative(&s, &TTInput::new(0.0, 0.6), &params()).unwrap();
        assert_eq!(d, Vector4::zeros());
    }

    #[test]
    fn term_by_term_values() {
        // Independent evaluation of the four rates with θ0=0, θ1=0.2,
        // α=0.1, v_c=0.5, R=0.3, L1=0.4, L2=0.6 (python, double precision).
        let s = TTState::new(0.0, 0.0, 0.0, 0.2);
        let u = TTInput::new(0.5, 0.1);
        let d = tt_derivative(&s, &u, &params()).unwrap();
        assert_abs_diff_eq!(d[0], 0.4975083222301552, epsilon = 1e-14);
        assert_abs_diff_eq!(d[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[2], 0.10409861396904437, epsilon = 1e-14);
        assert_abs_diff_eq!(d[3], 0.02131972613776882, epsilon = 1e-14);
        assert_abs_diff_eq!(tt_base_speed(&s, &u, &params()).unwrap(), d[0], epsilon = 1e-15);
    }

    #[test]
    fn steering_singularity_is_rejected() {
        let s = TTState::default();
        let r = tt_derivative(&s, &TTInput::new(0.5, FRAC_PI_2), &params());
        assert!(matches!(r, Err(Error::SteerSingular(_))));
        let r = tt_derivative(&s, &TTInput::new(0.5, -FRAC_PI_2 + 1e-4), &params());
        assert!(matches!(r, Err(Error::SteerSingular(_))));
    }

    #[test]
    fn hitch_restores_without_steering() {
        for th in [-0.3, -0.05, 0.05, 0.3] {
            let d = tt_derivative(&TTState::new(0.0, 0.0, 0.0, th), &TTInput::new(0.4, 0.0), &params()).unwrap();
            assert_eq!(d[3].signum(), -th.signum());
            assert_abs_diff_eq!(d[2], 0.4 * th.sin() / 0.6, epsilon = 1e-15);
        }
    }

    #[test]
    fn base_commands_freeze_theta2() {
        let s = TTState::new(0.0, 0.0, 0.1, 0.2);
        let c = tt_base_commands(&s, &TTInput::new(0.3, -0.2), &params()).unwrap();
        assert_eq!(c.omega2, 0.0);
    }
}
