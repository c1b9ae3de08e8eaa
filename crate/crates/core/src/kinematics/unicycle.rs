use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose2;

/// Offsets at or below this distance cannot be inverted.
pub const OFFSET_EPS: f64 = 1e-6;

/// Differential-drive command: forward speed and yaw rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UnicycleCmd {
    pub v: f64,
    pub omega: f64,
}

impl UnicycleCmd {
    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    pub fn as_vector(&self) -> Vector2<f64> {
        Vector2::new(self.v, self.omega)
    }
}

/// `Λ(θ, r)` mapping `(v, ω)` to the velocity of the point `r` ahead of the center.
pub fn offset_matrix(theta: f64, r: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -r * s, s, r * c)
}

/// Velocity of the point offset by `r` along the heading.
pub fn offset_point_velocity(pose: &Pose2, cmd: &UnicycleCmd, r: f64) -> Vector2<f64> {
    offset_matrix(pose.theta, r) * cmd.as_vector()
}

/// Unique `(v, ω)` that moves the offset point with velocity `pdot`.
pub fn unicycle_from_offset(pose: &Pose2, pdot: &Vector2<f64>, r: f64) -> Result<UnicycleCmd> {
    if r <= OFFSET_EPS {
        return Err(Error::DegenerateOffset(r));
    }
    let (s, c) = pose.theta.sin_cos();
    Ok(UnicycleCmd {
        v: c * pdot.x + s * pdot.y,
        omega: (-s * pdot.x + c * pdot.y) / r,
    })
}

/// Nonholonomic unicycle rates `(ẋ, ẏ, θ̇)`.
pub fn unicycle_derivative(pose: &Vector3<f64>, cmd: &UnicycleCmd) -> Vector3<f64> {
    Vector3::new(cmd.v * pose.z.cos(), cmd.v * pose.z.sin(), cmd.omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn forward_speed_moves_offset_point_forward() {
        let p = offset_point_velocity(&Pose2::default(), &UnicycleCmd::new(1.0, 0.0), 1.0);
        assert_abs_diff_eq!(p, Vector2::new(1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn yaw_rate_moves_offset_point_sideways() {
        let p = offset_point_velocity(&Pose2::default(), &UnicycleCmd::new(0.0, 1.0), 1.0);
        assert_abs_diff_eq!(p, Vector2::new(0.0, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn heading_up_with_both_inputs() {
        // Λ(π/2, 2) [1, 0.5]ᵀ = [0·1 - 2·1·0.5, 1·1 + 2·0·0.5]
        let p = offset_point_velocity(&Pose2::new(0.0, 0.0, FRAC_PI_2), &UnicycleCmd::new(1.0, 0.5), 2.0);
        assert_abs_diff_eq!(p, Vector2::new(-1.0, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn inverse_of_pure_lateral_velocity() {
        let cmd = unicycle_from_offset(&Pose2::default(), &Vector2::new(0.0, 1.0), 1.0).unwrap();
        assert_abs_diff_eq!(cmd.v, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cmd.omega, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn inverse_at_quarter_heading() {
        let cmd = unicycle_from_offset(&Pose2::new(0.0, 0.0, FRAC_PI_4), &Vector2::new(1.0, 0.0), 0.5).unwrap();
        assert_abs_diff_eq!(cmd.v, FRAC_PI_4.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(cmd.omega, -2.0 * FRAC_PI_4.sin(), epsilon = 1e-15);
    }

    #[test]
    fn degenerate_offset_is_rejected() {
        assert_eq!(
            unicycle_from_offset(&Pose2::default(), &Vector2::new(1.0, 0.0), 1e-7),
            Err(Error::DegenerateOffset(1e-7))
        );
    }

    #[test]
    fn round_trip_is_identity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let pose = Pose2::new(0.0, 0.0, rng.random_range(-4.0..4.0));
            let r = rng.random_range(0.05..2.0);
            let pdot = Vector2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let cmd = unicycle_from_offset(&pose, &pdot, r).unwrap();
            let back = offset_point_velocity(&pose, &cmd, r);
            assert!((back - pdot).abs().max() < 1e-12);
        }
    }
}
