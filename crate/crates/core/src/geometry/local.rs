//! Virtual two-link arm ("local coordinates") describing how the dual-arm
//! grasp places the cart relative to the mobile base.
//!
//! Joint1 sits at the arm base, which is `joint1_offset` ahead of the base
//! center. Link1 of length `reach` ends at Joint2, the midpoint between the
//! grippers. Link2 of length `cart_link` ends at the cart center. The handle
//! is perpendicular to Link2 and the grippers are `grip_span` apart.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use super::se2::{heading, heading_perp, wrap_angle, Pose2, Transform2};
use crate::error::{Error, Result};

/// Consistency tolerance for gripper targets, meters / radians.
pub const GRASP_TOL: f64 = 1e-6;

/// Local coordinates `[θ1, θ2, R, L]` of the virtual arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalCoords {
    pub theta1: f64,
    pub theta2: f64,
    /// Link1 length `R`, meters.
    pub reach: f64,
    /// Distance `L` between the grippers, meters.
    pub grip_span: f64,
}

impl LocalCoords {
    pub fn new(theta1: f64, theta2: f64, reach: f64, grip_span: f64) -> Self {
        Self {
            theta1: wrap_angle(theta1),
            theta2: wrap_angle(theta2),
            reach,
            grip_span,
        }
    }

    pub fn centered(reach: f64, grip_span: f64) -> Self {
        Self::new(0.0, 0.0, reach, grip_span)
    }

    /// Handle orientation `θ1 + θ2` relative to the base.
    pub fn deflection(&self) -> f64 {
        self.theta1 + self.theta2
    }
}

/// Workspace box for the local coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalLimits {
    /// Strict bound on |θ1| and |θ2|.
    pub theta_max: f64,
    pub reach_min: f64,
    pub reach_max: f64,
}

impl Default for LocalLimits {
    fn default() -> Self {
        Self {
            theta_max: FRAC_PI_2,
            reach_min: 0.2,
            reach_max: 0.6,
        }
    }
}

impl LocalLimits {
    pub fn check(&self, psi: &LocalCoords) -> Result<()> {
        if psi.theta1.abs() >= self.theta_max || psi.theta2.abs() >= self.theta_max {
            return Err(Error::WorkspaceViolation(format!(
                "|θ1|={:.4}, |θ2|={:.4} must stay below {:.4}",
                psi.theta1.abs(),
                psi.theta2.abs(),
                self.theta_max
            )));
        }
        if psi.reach < self.reach_min || psi.reach > self.reach_max {
            return Err(Error::WorkspaceViolation(format!(
                "R={:.4} outside [{:.3}, {:.3}]",
                psi.reach, self.reach_min, self.reach_max
            )));
        }
        Ok(())
    }
}

/// Mounting pose of a real arm's shoulder in the arm-base frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mount {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Mount {
    pub fn transform(&self) -> Transform2 {
        Transform2::new(self.yaw, self.x, self.y)
    }
}

/// Physical layout of the two planar 3-DoF arms and the grasp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmGeometry {
    /// Link lengths `[l1, l2, l3]` shared by both arms, meters.
    pub links: [f64; 3],
    pub left_mount: Mount,
    pub right_mount: Mount,
    /// Distance from the base center forward to Joint1, meters.
    pub joint1_offset: f64,
    /// Link2 length `L_c`: gripper midpoint to cart center, meters.
    pub cart_link: f64,
    /// Symmetric joint limit |q| ≤ joint_limit, radians.
    pub joint_limit: f64,
    pub limits: LocalLimits,
}

impl Default for ArmGeometry {
    fn default() -> Self {
        Self {
            links: [0.35, 0.35, 0.15],
            left_mount: Mount {
                x: 0.0,
                y: 0.2,
                yaw: 0.0,
            },
            right_mount: Mount {
                x: 0.0,
                y: -0.2,
                yaw: 0.0,
            },
            joint1_offset: 0.2,
            cart_link: 0.4,
            joint_limit: std::f64::consts::PI,
            limits: LocalLimits::default(),
        }
    }
}

impl ArmGeometry {
    pub fn validate(&self, grip_span: f64) -> Result<()> {
        if self.links.iter().any(|&l| !(l > 0.0)) || !(self.cart_link > 0.0) {
            return Err(Error::InvalidParameter("link lengths must be positive".into()));
        }
        if self.joint1_offset < 0.0 {
            return Err(Error::InvalidParameter("joint1_offset must be non-negative".into()));
        }
        if !(grip_span > 0.0) {
            return Err(Error::InvalidParameter("grip span must be positive".into()));
        }
        let lim = &self.limits;
        if !(lim.reach_min >= 0.0 && lim.reach_min < lim.reach_max && lim.theta_max > 0.0) {
            return Err(Error::InvalidParameter("local limits are not ordered".into()));
        }
        let total: f64 = self.links.iter().sum();
        if total + 1e-12 < lim.reach_max + grip_span / 2.0 {
            return Err(Error::InvalidParameter(format!(
                "arm reach {total:.3} m is shorter than R_max + L/2 = {:.3} m",
                lim.reach_max + grip_span / 2.0
            )));
        }
        Ok(())
    }

    /// Base frame → arm-base (Joint1) frame.
    pub fn joint1_transform(&self) -> Transform2 {
        Transform2::translation(self.joint1_offset, 0.0)
    }
}

/// Arm-base frame → cart frame for the given local coordinates.
pub fn cart_in_arm_frame(psi: &LocalCoords, geom: &ArmGeometry) -> Transform2 {
    let def = psi.deflection();
    let p = psi.reach * heading(psi.theta1) + geom.cart_link * heading(def);
    Transform2::new(def, p.x, p.y)
}

/// World pose of the cart given the base pose and the local coordinates.
pub fn cart_pose_from_base(s0: &Pose2, psi: &LocalCoords, geom: &ArmGeometry) -> Pose2 {
    s0.to_transform()
        .compose(&geom.joint1_transform())
        .compose(&cart_in_arm_frame(psi, geom))
        .to_pose()
}

/// Inverse of [`cart_pose_from_base`]: base pose that puts the cart at `sc`.
pub fn base_pose_from_cart(sc: &Pose2, psi: &LocalCoords, geom: &ArmGeometry) -> Pose2 {
    let base_to_cart = geom.joint1_transform().compose(&cart_in_arm_frame(psi, geom));
    sc.to_transform().compose(&base_to_cart.inverse()).to_pose()
}

/// The mapping `g`: local coordinates → (left, right) gripper targets in the arm-base frame.
pub fn arm_targets_from_local(psi: &LocalCoords) -> (Transform2, Transform2) {
    let def = psi.deflection();
    let mid = psi.reach * heading(psi.theta1);
    let half = 0.5 * psi.grip_span * heading_perp(def);
    let l = mid + half;
    let r = mid - half;
    (Transform2::new(def, l.x, l.y), Transform2::new(def, r.x, r.y))
}

/// The inverse mapping `g⁻¹`. The grip span is recovered from the targets.
pub fn local_from_arm_targets(tl: &Transform2, tr: &Transform2) -> Result<LocalCoords> {
    let dtheta = wrap_angle(tl.angle() - tr.angle());
    if dtheta.abs() > GRASP_TOL {
        return Err(Error::InconsistentGrasp(format!(
            "gripper orientations differ by {dtheta:.3e} rad"
        )));
    }
    let def = tl.angle();
    let pl = tl.translation_vector();
    let pr = tr.translation_vector();
    let sep = pl - pr;
    let span = sep.dot(&heading_perp(def));
    let skew = sep.dot(&heading(def));
    if skew.abs() > GRASP_TOL || span <= 0.0 {
        return Err(Error::InconsistentGrasp(format!(
            "handle axis not perpendicular to gripper heading (along {skew:.3e}, across {span:.3e})"
        )));
    }
    let mid: Vector2<f64> = 0.5 * (pl + pr);
    let reach = mid.norm();
    let theta1 = if reach > 0.0 { mid.y.atan2(mid.x) } else { 0.0 };
    Ok(LocalCoords::new(theta1, wrap_angle(def - theta1), reach, span))
}

/// [`local_from_arm_targets`] plus a check that the handle length equals `grip_span`.
pub fn local_from_arm_targets_checked(tl: &Transform2, tr: &Transform2, grip_span: f64) -> Result<LocalCoords> {
    let psi = local_from_arm_targets(tl, tr)?;
    let dist = (tl.translation_vector() - tr.translation_vector()).norm();
    if (dist - grip_span).abs() > GRASP_TOL {
        return Err(Error::InconsistentGrasp(format!(
            "gripper distance {dist:.6} m differs from handle length {grip_span:.6} m"
        )));
    }
    Ok(psi)
}

/// Jacobians of the left/right gripper poses `(x, y, φ)` with respect to
/// `(θ1, θ2, R)` in the virtual arm.
pub fn virtual_jacobians(psi: &LocalCoords) -> (Matrix3<f64>, Matrix3<f64>) {
    let def = psi.deflection();
    let half = 0.5 * psi.grip_span;
    let d_mid_t1 = psi.reach * heading_perp(psi.theta1);
    let d_mid_r = heading(psi.theta1);
    // derivative of the ±half·perp(def) handle offset w.r.t. def
    let d_half = -half * heading(def);
    let build = |sign: f64| {
        let c1 = d_mid_t1 + sign * d_half;
        let c2 = sign * d_half;
        Matrix3::new(c1.x, c2.x, d_mid_r.x, c1.y, c2.y, d_mid_r.y, 1.0, 1.0, 0.0)
    };
    (build(1.0), build(-1.0))
}
