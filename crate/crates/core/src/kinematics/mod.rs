//! Transition models: offset-point unicycle, Truck-Trailer, Leader-Follower,
//! and fixed-step integrators.

mod integrate;
mod lf;
mod params;
mod tt;
mod unicycle;

use serde::{Deserialize, Serialize};

pub use integrate::{integrate_euler, integrate_rk4};
pub use lf::{hitch_vectors, lf_base_commands, lf_chain_commands, lf_derivative, LFState};
pub use params::ModelParams;
pub use tt::{tt_base_commands, tt_base_speed, tt_derivative, TTInput, TTState, STEER_EPS};
pub use unicycle::{
    offset_matrix, offset_point_velocity, unicycle_derivative, unicycle_from_offset, UnicycleCmd, OFFSET_EPS,
};

/// Whole-body rates: base `(v0, ω0)` and virtual-arm joint rates `(ω1, ω2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BaseCommands {
    pub v0: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub omega2: f64,
}

impl BaseCommands {
    pub fn base(&self) -> UnicycleCmd {
        UnicycleCmd::new(self.v0, self.omega0)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.v0, self.omega0, self.omega1, self.omega2]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            v0: a[0],
            omega0: a[1],
            omega1: a[2],
            omega2: a[3],
        }
    }
}
