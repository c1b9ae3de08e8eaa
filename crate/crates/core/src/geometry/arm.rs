//! Planar 3-DoF (SCARA-like) arm kinematics and the composite mapping
//! between joint space and local coordinates.

use nalgebra::{Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use super::local::{arm_targets_from_local, local_from_arm_targets, ArmGeometry, LocalCoords, Mount};
use super::se2::{heading, heading_perp, wrap_angle, Transform2};
use crate::error::{Error, Result};

/// Distance from the annulus boundary below which an IK solution is flagged near-singular.
pub const NEAR_SINGULAR_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmSide {
    Left,
    Right,
}

impl ArmSide {
    fn name(self) -> &'static str {
        match self {
            ArmSide::Left => "left",
            ArmSide::Right => "right",
        }
    }
}

/// Which of the two elbow solutions of the 2R position sub-chain to pick,
/// expressed as the sign of the elbow joint angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElbowBranch {
    Positive,
    Negative,
}

impl ElbowBranch {
    /// Elbows pointing away from the handle: left elbow left (q2 < 0),
    /// right elbow right (q2 > 0).
    pub fn elbow_out(side: ArmSide) -> Self {
        match side {
            ArmSide::Left => ElbowBranch::Negative,
            ArmSide::Right => ElbowBranch::Positive,
        }
    }

    pub fn of(q2: f64) -> Self {
        if q2 < 0.0 {
            ElbowBranch::Negative
        } else {
            ElbowBranch::Positive
        }
    }

    fn sign(self) -> f64 {
        match self {
            ElbowBranch::Positive => 1.0,
            ElbowBranch::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElbowBranches {
    pub left: ElbowBranch,
    pub right: ElbowBranch,
}

impl Default for ElbowBranches {
    fn default() -> Self {
        Self {
            left: ElbowBranch::elbow_out(ArmSide::Left),
            right: ElbowBranch::elbow_out(ArmSide::Right),
        }
    }
}

/// Joint angles of both arms, radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointConfig {
    pub left: [f64; 3],
    pub right: [f64; 3],
}

impl JointConfig {
    pub fn arm(&self, side: ArmSide) -> [f64; 3] {
        match side {
            ArmSide::Left => self.left,
            ArmSide::Right => self.right,
        }
    }

    pub fn within_limits(&self, limit: f64) -> bool {
        self.left.iter().chain(self.right.iter()).all(|q| q.abs() <= limit)
    }
}

fn mount(geom: &ArmGeometry, side: ArmSide) -> &Mount {
    match side {
        ArmSide::Left => &geom.left_mount,
        ArmSide::Right => &geom.right_mount,
    }
}

/// Forward kinematics of one arm; the result is in the arm-base frame.
pub fn arm_fk(q: &[f64; 3], geom: &ArmGeometry, side: ArmSide) -> Transform2 {
    let m = mount(geom, side);
    let [l1, l2, l3] = geom.links;
    let a1 = m.yaw + q[0];
    let a2 = a1 + q[1];
    let a3 = a2 + q[2];
    let p = Vector2::new(m.x, m.y) + l1 * heading(a1) + l2 * heading(a2) + l3 * heading(a3);
    Transform2::new(a3, p.x, p.y)
}

/// Forward kinematics of both arms.
pub fn scara_fk(q: &JointConfig, geom: &ArmGeometry) -> (Transform2, Transform2) {
    (
        arm_fk(&q.left, geom, ArmSide::Left),
        arm_fk(&q.right, geom, ArmSide::Right),
    )
}

/// Closed-form IK solution for one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmIk {
    pub q: [f64; 3],
    /// The wrist lies within [`NEAR_SINGULAR_EPS`] of the reachable annulus boundary.
    pub near_singular: bool,
}

pub fn arm_ik(target: &Transform2, geom: &ArmGeometry, side: ArmSide, branch: ElbowBranch) -> Result<ArmIk> {
    let local = mount(geom, side).transform().inverse().compose(target);
    let [l1, l2, l3] = geom.links;
    let phi = local.angle();
    let wrist = local.translation_vector() - l3 * heading(phi);
    let dist = wrist.norm();
    let outer = l1 + l2;
    let inner = (l1 - l2).abs();
    if dist > outer + 1e-12 || dist < inner - 1e-12 {
        return Err(Error::Unreachable {
            arm: side.name(),
            distance: dist,
        });
    }
    let cos_q2 = ((dist * dist - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
    let q2 = branch.sign() * cos_q2.acos();
    let q1 = wrap_angle(wrist.y.atan2(wrist.x) - (l2 * q2.sin()).atan2(l1 + l2 * q2.cos()));
    let q3 = wrap_angle(phi - q1 - q2);
    let near_singular = outer - dist < NEAR_SINGULAR_EPS || (inner > 0.0 && dist - inner < NEAR_SINGULAR_EPS);
    Ok(ArmIk {
        q: [q1, q2, q3],
        near_singular,
    })
}

/// IK for both arms. The flag reports whether either arm is near-singular.
pub fn scara_ik(
    targets: (&Transform2, &Transform2),
    geom: &ArmGeometry,
    branches: ElbowBranches,
) -> Result<(JointConfig, bool)> {
    let l = arm_ik(targets.0, geom, ArmSide::Left, branches.left)?;
    let r = arm_ik(targets.1, geom, ArmSide::Right, branches.right)?;
    Ok((
        JointConfig { left: l.q, right: r.q },
        l.near_singular || r.near_singular,
    ))
}

/// Geometric Jacobian of one arm's gripper pose `(x, y, φ)` w.r.t. its joints.
pub fn arm_jacobian(q: &[f64; 3], geom: &ArmGeometry, side: ArmSide) -> Matrix3<f64> {
    let m = mount(geom, side);
    let [l1, l2, l3] = geom.links;
    let a1 = m.yaw + q[0];
    let a2 = a1 + q[1];
    let a3 = a2 + q[2];
    // each column is the sum of the perpendicular link vectors downstream of that joint
    let s3 = l3 * heading_perp(a3);
    let s2 = s3 + l2 * heading_perp(a2);
    let s1 = s2 + l1 * heading_perp(a1);
    Matrix3::new(s1.x, s2.x, s3.x, s1.y, s2.y, s3.y, 1.0, 1.0, 1.0)
}

pub fn real_jacobians(q: &JointConfig, geom: &ArmGeometry) -> (Matrix3<f64>, Matrix3<f64>) {
    (
        arm_jacobian(&q.left, geom, ArmSide::Left),
        arm_jacobian(&q.right, geom, ArmSide::Right),
    )
}

/// `Ψ_s`: joint configuration → local coordinates.
pub fn local_from_joints(q: &JointConfig, geom: &ArmGeometry) -> Result<LocalCoords> {
    let (tl, tr) = scara_fk(q, geom);
    local_from_arm_targets(&tl, &tr)
}

/// `Ψ_s⁻¹`: local coordinates → joint configuration.
pub fn joints_from_local(psi: &LocalCoords, geom: &ArmGeometry, branches: ElbowBranches) -> Result<JointConfig> {
    let (tl, tr) = arm_targets_from_local(psi);
    scara_ik((&tl, &tr), geom, branches).map(|(q, _)| q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn pose_vector(t: &Transform2) -> nalgebra::Vector3<f64> {
        let p = t.translation_vector();
        nalgebra::Vector3::new(p.x, p.y, t.angle())
    }

    fn geom() -> ArmGeometry {
        ArmGeometry::default()
    }

    #[test]
    fn zero_configuration_extends_along_mount_axis() {
        let g = geom();
        let t = arm_fk(&[0.0; 3], &g, ArmSide::Left);
        assert_abs_diff_eq!(t.translation_vector(), Vector2::new(0.85, 0.2), epsilon = 1e-15);
        assert_eq!(t.angle(), 0.0);
    }

    #[test]
    fn shoulder_quarter_turn_rotates_whole_arm() {
        let g = geom();
        let t = arm_fk(&[FRAC_PI_2, 0.0, 0.0], &g, ArmSide::Right);
        assert_abs_diff_eq!(t.translation_vector(), Vector2::new(0.0, -0.2 + 0.85), epsilon = 1e-15);
        assert_abs_diff_eq!(t.angle(), FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn fk_matches_link_chain_composition() {
        let g = geom();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let q = [
                rng.random_range(-PI..PI),
                rng.random_range(-PI..PI),
                rng.random_range(-PI..PI),
            ];
            let chain = g.left_mount.transform().matrix()
                * Transform2::rotation(q[0]).matrix()
                * Transform2::translation(g.links[0], 0.0).matrix()
                * Transform2::rotation(q[1]).matrix()
                * Transform2::translation(g.links[1], 0.0).matrix()
                * Transform2::rotation(q[2]).matrix()
                * Transform2::translation(g.links[2], 0.0).matrix();
            let fk = arm_fk(&q, &g, ArmSide::Left);
            assert!((fk.matrix() - chain).abs().max() < 1e-13);
        }
    }

    #[test]
    fn full_reach_gives_straight_elbow() {
        let g = geom();
        let target = Transform2::new(0.0, 0.85, 0.2);
        let ik = arm_ik(&target, &g, ArmSide::Left, ElbowBranch::Negative).unwrap();
        assert_abs_diff_eq!(ik.q[1], 0.0, epsilon = 1e-6);
        assert!(ik.near_singular);
    }

    #[test]
    fn two_link_solution_matches_law_of_cosines() {
        let mut g = geom();
        g.links = [0.4, 0.3, 0.1];
        // wrist placed at (0.4, 0.3) relative to the shoulder, gripper facing +x
        let target = Transform2::new(0.0, 0.5, 0.3 + 0.2);
        let ik = arm_ik(&target, &g, ArmSide::Left, ElbowBranch::Positive).unwrap();
        // |w|² = 0.25 → cos q2 = (0.25 - 0.16 - 0.09)/(2·0.4·0.3) = 0
        assert_abs_diff_eq!(ik.q[1], FRAC_PI_2, epsilon = 1e-12);
        // q1 = atan2(0.3, 0.4) - atan2(0.3, 0.4)
        assert_abs_diff_eq!(ik.q[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ik.q[2], -FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn unreachable_targets_are_rejected() {
        let g = geom();
        let far = Transform2::new(0.0, 2.0, 0.2);
        assert!(matches!(
            arm_ik(&far, &g, ArmSide::Left, ElbowBranch::Negative),
            Err(Error::Unreachable { arm: "left", .. })
        ));
    }

    #[test]
    fn fk_ik_round_trip_with_matching_branch() {
        let g = geom();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let q = [
                rng.random_range(-3.0..3.0),
                rng.random_range(0.05..3.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 },
                rng.random_range(-3.0..3.0),
            ];
            let t = arm_fk(&q, &g, ArmSide::Right);
            let ik = arm_ik(&t, &g, ArmSide::Right, ElbowBranch::of(q[1])).unwrap();
            for k in 0..3 {
                assert!(wrap_angle(ik.q[k] - q[k]).abs() < 1e-9, "{q:?} vs {:?}", ik.q);
            }
        }
    }

    #[test]
    fn straight_arm_jacobian_is_textbook_form() {
        let g = geom();
        let [l1, l2, l3] = g.links;
        let j = arm_jacobian(&[0.0; 3], &g, ArmSide::Left);
        // fully stretched along x: J = [[0,0,0],[l1+l2+l3, l2+l3, l3],[1,1,1]]
        let expect = Matrix3::new(0.0, 0.0, 0.0, l1 + l2 + l3, l2 + l3, l3, 1.0, 1.0, 1.0);
        assert_abs_diff_eq!(j, expect, epsilon = 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn real_jacobians_match_finite_differences(
            q1 in -3.0f64..3.0, q2 in -3.0f64..3.0, q3 in -3.0f64..3.0,
        ) {
            let g = geom();
            let q = [q1, q2, q3];
            for side in [ArmSide::Left, ArmSide::Right] {
                let j = arm_jacobian(&q, &g, side);
                prop_assert!((j.row(2).sum() - 3.0).abs() < 1e-15);
                let h = 1e-6;
                for k in 0..3 {
                    let mut qp = q;
                    let mut qm = q;
                    qp[k] += h;
                    qm[k] -= h;
                    let tp = arm_fk(&qp, &g, side);
                    let tm = arm_fk(&qm, &g, side);
                    let mut col = (pose_vector(&tp) - pose_vector(&tm)) / (2.0 * h);
                    col[2] = wrap_angle(tp.angle() - tm.angle()) / (2.0 * h);
                    prop_assert!((j.column(k) - col).abs().max() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn local_joint_mapping_is_bijective() {
        let g = geom();
        let lim = g.limits;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut checked = 0;
        for _ in 0..10_000 {
            let psi = LocalCoords::new(
                rng.random_range(-1.2..1.2),
                rng.random_range(-1.2..1.2),
                rng.random_range(lim.reach_min..lim.reach_max),
                0.5,
            );
            let q = match joints_from_local(&psi, &g, ElbowBranches::default()) {
                Ok(q) => q,
                Err(Error::Unreachable { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let back = local_from_joints(&q, &g).unwrap();
            assert!((back.theta1 - psi.theta1).abs() < 1e-9);
            assert!((back.theta2 - psi.theta2).abs() < 1e-9);
            assert!((back.reach - psi.reach).abs() < 1e-9);
            assert!((back.grip_span - psi.grip_span).abs() < 1e-9);
            checked += 1;
        }
        assert!(checked > 9_000, "only {checked} reachable samples");
    }
}
