use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle into (-π, π].
#[inline]
pub fn wrap_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Unit heading vector `[cos θ, sin θ]`.
#[inline]
pub fn heading(theta: f64) -> Vector2<f64> {
    Vector2::new(theta.cos(), theta.sin())
}

/// Heading rotated by +90°, `[-sin θ, cos θ]`.
#[inline]
pub fn heading_perp(theta: f64) -> Vector2<f64> {
    Vector2::new(-theta.sin(), theta.cos())
}

/// A planar pose: x forward, y left, θ counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn to_transform(&self) -> Transform2 {
        Transform2::new(self.theta, self.x, self.y)
    }

    /// `self ∘ other`, i.e. `other` expressed in the frame of `self`.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        self.to_transform().compose(&other.to_transform()).to_pose()
    }

    pub fn inverse(&self) -> Pose2 {
        self.to_transform().inverse().to_pose()
    }

    /// Error `target - self` resolved in the target's frame: (along, lateral, heading).
    pub fn error_in_frame_of(&self, target: &Pose2) -> (f64, f64, f64) {
        let d = self.position() - target.position();
        let (s, c) = target.theta.sin_cos();
        let along = c * d.x + s * d.y;
        let lateral = -s * d.x + c * d.y;
        (along, lateral, wrap_angle(self.theta - target.theta))
    }

    pub fn distance(&self, other: &Pose2) -> f64 {
        (self.position() - other.position()).norm()
    }
}

/// Rigid SE(2) transform stored as rotation angle plus translation.
///
/// Keeping the angle instead of the raw matrix makes orthonormality exact;
/// [`Transform2::matrix`] produces the 3×3 homogeneous form on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform2 {
    angle: f64,
    translation: [f64; 2],
}

impl Default for Transform2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform2 {
    pub fn new(angle: f64, x: f64, y: f64) -> Self {
        Self {
            angle: wrap_angle(angle),
            translation: [x, y],
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn rotation(angle: f64) -> Self {
        Self::new(angle, 0.0, 0.0)
    }

    pub fn translation(x: f64, y: f64) -> Self {
        Self::new(0.0, x, y)
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn translation_vector(&self) -> Vector2<f64> {
        Vector2::new(self.translation[0], self.translation[1])
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        let (s, c) = self.angle.sin_cos();
        Matrix3::new(c, -s, self.translation[0], s, c, self.translation[1], 0.0, 0.0, 1.0)
    }

    /// Builds a transform from a homogeneous matrix, rejecting anything that
    /// is not a proper rigid motion to within `tol`.
    pub fn from_matrix(m: &Matrix3<f64>, tol: f64) -> Result<Self> {
        let rot = m.fixed_view::<2, 2>(0, 0);
        let orth = (rot.transpose() * rot - nalgebra::Matrix2::identity()).abs().max();
        let det = rot.determinant();
        let bottom = (m[(2, 0)].abs() + m[(2, 1)].abs() + (m[(2, 2)] - 1.0).abs()).max(0.0);
        if orth > tol || (det - 1.0).abs() > tol || bottom > tol {
            return Err(Error::InvalidParameter(format!(
                "not an SE(2) matrix (orthonormality residual {orth:.2e}, det {det:.6})"
            )));
        }
        Ok(Self::new(m[(1, 0)].atan2(m[(0, 0)]), m[(0, 2)], m[(1, 2)]))
    }

    pub fn compose(&self, other: &Transform2) -> Transform2 {
        let t = self.apply(&other.translation_vector());
        Transform2::new(self.angle + other.angle, t.x, t.y)
    }

    pub fn inverse(&self) -> Transform2 {
        let (s, c) = self.angle.sin_cos();
        let [x, y] = self.translation;
        Transform2::new(-self.angle, -(c * x + s * y), s * x - c * y)
    }

    /// Maps a point from the local frame into the parent frame.
    pub fn apply(&self, p: &Vector2<f64>) -> Vector2<f64> {
        let (s, c) = self.angle.sin_cos();
        Vector2::new(
            c * p.x - s * p.y + self.translation[0],
            s * p.x + c * p.y + self.translation[1],
        )
    }

    pub fn to_pose(&self) -> Pose2 {
        Pose2::new(self.translation[0], self.translation[1], self.angle)
    }

    pub fn approx_eq(&self, other: &Transform2, tol: f64) -> bool {
        (self.matrix() - other.matrix()).abs().max() <= tol
    }
}
