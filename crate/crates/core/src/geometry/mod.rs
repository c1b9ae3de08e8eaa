//! SE(2) geometry, the virtual-arm local coordinates, and the real-arm
//! kinematics that connect them.

mod arm;
mod local;
mod se2;

pub use arm::{
    arm_fk, arm_ik, arm_jacobian, joints_from_local, local_from_joints, real_jacobians, scara_fk, scara_ik, ArmIk,
    ArmSide, ElbowBranch, ElbowBranches, JointConfig, NEAR_SINGULAR_EPS,
};
pub use local::{
    arm_targets_from_local, base_pose_from_cart, cart_in_arm_frame, cart_pose_from_base, local_from_arm_targets,
    local_from_arm_targets_checked, virtual_jacobians, ArmGeometry, LocalCoords, LocalLimits, Mount, GRASP_TOL,
};
pub use se2::{heading, heading_perp, wrap_angle, Pose2, Transform2};
