use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ArmGeometry;

/// Geometric constants of the transition models plus per-channel input bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Virtual Link1 length (reach), meters.
    pub reach: f64,
    /// Virtual Link2 length, meters.
    pub cart_link: f64,
    /// Half of the virtual truck length.
    pub l1: f64,
    /// Virtual trailer length.
    pub l2: f64,
    /// Offset of the leader's back point from the cart center.
    pub r_l: f64,
    /// Offset of the follower's front point from the base center.
    pub r_f: f64,
    pub u_min: Vec<f64>,
    pub u_max: Vec<f64>,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            reach: 0.4,
            cart_link: 0.4,
            l1: 0.4,
            l2: 0.6,
            r_l: 0.4,
            r_f: 0.2,
            u_min: vec![-0.5, -1.0],
            u_max: vec![0.5, 1.0],
        }
    }
}

impl ModelParams {
    /// Parameters consistent with an arm geometry: the leader offset matches
    /// Link2 and the follower offset matches the arm-base offset, so the LF
    /// hitch coincides with the virtual arm.
    pub fn from_geometry(geom: &ArmGeometry, reach: f64) -> Self {
        Self {
            reach,
            cart_link: geom.cart_link,
            r_l: geom.cart_link,
            r_f: geom.joint1_offset,
            ..Self::default()
        }
    }

    pub fn with_bounds(mut self, u_min: Vec<f64>, u_max: Vec<f64>) -> Self {
        self.u_min = u_min;
        self.u_max = u_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("reach", self.reach),
            ("cart_link", self.cart_link),
            ("l1", self.l1),
            ("l2", self.l2),
            ("r_l", self.r_l),
            ("r_f", self.r_f),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.u_min.len() != self.u_max.len() {
            return Err(Error::InvalidParameter(format!(
                "bound length mismatch: {} vs {}",
                self.u_min.len(),
                self.u_max.len()
            )));
        }
        for (i, (lo, hi)) in self.u_min.iter().zip(&self.u_max).enumerate() {
            if !(lo < hi) {
                return Err(Error::Infeasible(format!(
                    "channel {i}: u_min {lo} is not below u_max {hi}"
                )));
            }
        }
        Ok(())
    }
}
