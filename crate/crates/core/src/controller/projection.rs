use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{real_jacobians, virtual_jacobians, ArmGeometry, JointConfig, LocalCoords};

/// Largest Jacobian condition number accepted by the projections.
pub const MAX_CONDITION: f64 = 1e6;

/// Joint torques of both arms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointTorques {
    pub left: Vector3<f64>,
    pub right: Vector3<f64>,
}

impl JointTorques {
    pub fn add(&self, other: &JointTorques) -> JointTorques {
        JointTorques {
            left: self.left + other.left,
            right: self.right + other.right,
        }
    }
}

fn condition(m: &Matrix3<f64>) -> f64 {
    let sv = m.singular_values();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        sv.max() / min
    }
}

fn checked_inverse_transpose(m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let c = condition(m);
    if !(c < MAX_CONDITION) {
        return Err(Error::SingularJacobian(c));
    }
    m.transpose()
        .try_inverse()
        .ok_or(Error::SingularJacobian(f64::INFINITY))
}

/// Real-arm and virtual-arm Jacobians for the grasp `psi` held at joints `q`.
pub struct GraspJacobians {
    pub real: (Matrix3<f64>, Matrix3<f64>),
    pub virt: (Matrix3<f64>, Matrix3<f64>),
}

impl GraspJacobians {
    pub fn new(psi: &LocalCoords, q: &JointConfig, geom: &ArmGeometry) -> Self {
        Self {
            real: real_jacobians(q, geom),
            virt: virtual_jacobians(psi),
        }
    }

    /// Splits a generalized force on `(θ1, θ2, R)` into joint torques,
    /// a share `eta` going to the left arm.
    pub fn project(&self, tau_theta: &Vector3<f64>, eta: f64) -> Result<JointTorques> {
        let left = self.real.0.transpose() * checked_inverse_transpose(&self.virt.0)? * tau_theta;
        let right = self.real.1.transpose() * checked_inverse_transpose(&self.virt.1)? * tau_theta;
        Ok(JointTorques {
            left: eta * left,
            right: (1.0 - eta) * right,
        })
    }

    /// Generalized force on `(θ1, θ2, R)` produced by the given joint
    /// torques, by virtual work through each arm.
    pub fn generalized_force(&self, tau: &JointTorques) -> Result<Vector3<f64>> {
        let l = self.virt.0.transpose() * checked_inverse_transpose(&self.real.0)? * tau.left;
        let r = self.virt.1.transpose() * checked_inverse_transpose(&self.real.1)? * tau.right;
        Ok(l + r)
    }

    /// Joint rates of both arms for local-coordinate rates `zdot`.
    pub fn joint_rates(&self, zdot: &Vector3<f64>) -> Result<(Vector3<f64>, Vector3<f64>)> {
        let inv = |j: &Matrix3<f64>| checked_inverse_transpose(j).map(|m| m.transpose());
        Ok((
            inv(&self.real.0)? * self.virt.0 * zdot,
            inv(&self.real.1)? * self.virt.1 * zdot,
        ))
    }
}

/// Projects `tau_theta` onto the arms: `τ_l = η J_lᵀ 𝒥_l⁻ᵀ τ`, `τ_r = (1−η) J_rᵀ 𝒥_r⁻ᵀ τ`.
pub fn force_projection(
    tau_theta: &Vector3<f64>,
    psi: &LocalCoords,
    q: &JointConfig,
    eta: f64,
    geom: &ArmGeometry,
) -> Result<JointTorques> {
    GraspJacobians::new(psi, q, geom).project(tau_theta, eta)
}

/// Sums the joint PD and compensation torques and saturates each joint at
/// `limit`. The flag reports whether any joint was clipped.
pub fn command_torque(pd: &JointTorques, com: &JointTorques, limit: &[f64; 3]) -> (JointTorques, bool) {
    let sum = pd.add(com);
    let mut clipped = false;
    let mut clamp = |v: Vector3<f64>| {
        Vector3::from_fn(|i, _| {
            let c = v[i].clamp(-limit[i], limit[i]);
            clipped |= c != v[i];
            c
        })
    };
    let out = JointTorques {
        left: clamp(sum.left),
        right: clamp(sum.right),
    };
    (out, clipped)
}
