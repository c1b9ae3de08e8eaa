use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::functions::fhan;

/// Tracking differentiator: a rate-limited reference model per channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdState {
    pub z1: Vector3<f64>,
    pub z2: Vector3<f64>,
    pub r: Vector3<f64>,
    pub v_max: Vector3<f64>,
    /// Filter step used inside `fhan`.
    pub h: f64,
}

impl TdState {
    pub fn new(z0: Vector3<f64>, r: Vector3<f64>, v_max: Vector3<f64>, h: f64) -> Self {
        Self {
            z1: z0,
            z2: Vector3::zeros(),
            r,
            v_max,
            h,
        }
    }

    /// One step toward `target`: `z1 += h z2`, `z2 += h fhan(z1 − z, z2, r, h)`,
    /// then `|z2| ≤ v_max`.
    pub fn step(&mut self, target: &Vector3<f64>, h: f64) {
        for i in 0..3 {
            let acc = fhan(self.z1[i] - target[i], self.z2[i], self.r[i], self.h);
            self.z1[i] += h * self.z2[i];
            self.z2[i] = (self.z2[i] + h * acc).clamp(-self.v_max[i], self.v_max[i]);
        }
    }
}
