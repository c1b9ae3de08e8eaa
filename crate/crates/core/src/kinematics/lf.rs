use nalgebra::{Vector2, Vector5};
use serde::{Deserialize, Serialize};

use super::{BaseCommands, ModelParams, UnicycleCmd, OFFSET_EPS};
use crate::error::{ensure_finite, Error, Result};
use crate::geometry::wrap_angle;

/// Leader-Follower state; the base heading is `θ_c − θ1 − θ2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LFState {
    pub x_c: f64,
    pub y_c: f64,
    pub theta_c: f64,
    pub theta1: f64,
    pub theta2: f64,
}

impl LFState {
    pub fn new(x_c: f64, y_c: f64, theta_c: f64, theta1: f64, theta2: f64) -> Self {
        Self {
            x_c,
            y_c,
            theta_c: wrap_angle(theta_c),
            theta1: wrap_angle(theta1),
            theta2: wrap_angle(theta2),
        }
    }

    pub fn theta0(&self) -> f64 {
        wrap_angle(self.theta_c - self.theta1 - self.theta2)
    }

    pub fn to_vector(&self) -> Vector5<f64> {
        Vector5::new(self.x_c, self.y_c, self.theta_c, self.theta1, self.theta2)
    }

    pub fn from_vector(v: &Vector5<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }

    pub const ANGLES: [usize; 3] = [2, 3, 4];
}

/// `w⁺ = [cosθ2, r_L sinθ2]` and `w⁻ = [sinθ2, −r_L cosθ2]`.
pub fn hitch_vectors(theta2: f64, r_l: f64) -> (Vector2<f64>, Vector2<f64>) {
    let (s, c) = theta2.sin_cos();
    (Vector2::new(c, r_l * s), Vector2::new(s, -r_l * c))
}

fn check_offsets(p: &ModelParams) -> Result<()> {
    if p.reach <= OFFSET_EPS {
        return Err(Error::DegenerateOffset(p.reach));
    }
    if p.r_f <= OFFSET_EPS {
        return Err(Error::DegenerateOffset(p.r_f));
    }
    Ok(())
}

/// Base and arm rates that let the follower trail a cart moving with `mu_c`.
pub fn lf_base_commands(state: &LFState, mu_c: &UnicycleCmd, p: &ModelParams) -> Result<BaseCommands> {
    check_offsets(p)?;
    let (wp, wm) = hitch_vectors(state.theta2, p.r_l);
    let mu = mu_c.as_vector();
    let along = wp.dot(&mu);
    let across = wm.dot(&mu);
    let (s1, c1) = state.theta1.sin_cos();
    let v0 = along * c1;
    let omega0 = along * s1 / p.r_f;
    let omega2 = -across / p.reach;
    let cmds = BaseCommands {
        v0,
        omega0,
        omega1: mu_c.omega - omega0 - omega2,
        omega2,
    };
    ensure_finite(&[v0, omega0, omega2], "lf_base_commands")?;
    Ok(cmds)
}

/// Base commands with arm rates that keep the physical chain rigid for any
/// `ω_c`: `θ̇1 = w⁻·μ_c / R − ω0` and `θ̇2 = ω_c − w⁻·μ_c / R`. The base part is
/// identical to [`lf_base_commands`]; both coincide when `ω_c = 0`.
pub fn lf_chain_commands(state: &LFState, mu_c: &UnicycleCmd, p: &ModelParams) -> Result<BaseCommands> {
    let b = lf_base_commands(state, mu_c, p)?;
    let hitch_rate = -b.omega2;
    Ok(BaseCommands {
        omega1: hitch_rate - b.omega0,
        omega2: mu_c.omega - hitch_rate,
        ..b
    })
}

/// Rates `(ẋ_c, ẏ_c, θ̇_c, θ̇1, θ̇2)` of the Leader-Follower model.
pub fn lf_derivative(state: &LFState, mu_c: &UnicycleCmd, p: &ModelParams) -> Result<Vector5<f64>> {
    let b = lf_base_commands(state, mu_c, p)?;
    let (s, c) = state.theta_c.sin_cos();
    Ok(Vector5::new(mu_c.v * c, mu_c.v * s, mu_c.omega, b.omega1, b.omega2))
}
