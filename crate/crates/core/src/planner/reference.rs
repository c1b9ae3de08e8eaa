use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Pose2};
use crate::kinematics::UnicycleCmd;

/// Desired cart pose for one stage, with an optional cart-velocity hint.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub pose: Pose2,
    pub feedforward: Option<UnicycleCmd>,
}

impl ReferencePoint {
    pub fn new(pose: Pose2) -> Self {
        Self {
            pose,
            feedforward: None,
        }
    }
}

/// A time-stamped reference sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPose {
    pub t: f64,
    pub pose: Pose2,
}

/// Linear interpolation in position and shortest-arc interpolation in heading.
pub fn interpolate_pose(a: &Pose2, b: &Pose2, s: f64) -> Pose2 {
    Pose2::new(
        a.x + s * (b.x - a.x),
        a.y + s * (b.y - a.y),
        a.theta + s * wrap_angle(b.theta - a.theta),
    )
}

/// Samples a trajectory at time `t` (held at the ends).
pub fn sample_trajectory(samples: &[TimedPose], t: f64) -> Pose2 {
    match samples {
        [] => Pose2::default(),
        [only] => only.pose,
        _ => {
            if t <= samples[0].t {
                return samples[0].pose;
            }
            let last = samples[samples.len() - 1];
            if t >= last.t {
                return last.pose;
            }
            let i = samples.partition_point(|s| s.t <= t).max(1) - 1;
            let (a, b) = (samples[i], samples[i + 1]);
            let span = b.t - a.t;
            let s = if span > 0.0 { (t - a.t) / span } else { 1.0 };
            interpolate_pose(&a.pose, &b.pose, s)
        }
    }
}

/// `n` stage references at `t + k·dt`, `k = 1..=n`, with finite-difference
/// feedforward expressed in the cart frame.
pub fn window_from_trajectory(samples: &[TimedPose], t: f64, dt: f64, n: usize) -> Vec<ReferencePoint> {
    (1..=n)
        .map(|k| {
            let tk = t + k as f64 * dt;
            let a = sample_trajectory(samples, tk - dt);
            let b = sample_trajectory(samples, tk);
            let (s, c) = a.theta.sin_cos();
            let v = (c * (b.x - a.x) + s * (b.y - a.y)) / dt;
            let omega = wrap_angle(b.theta - a.theta) / dt;
            ReferencePoint {
                pose: b,
                feedforward: Some(UnicycleCmd::new(v, omega)),
            }
        })
        .collect()
}

/// Constant-target window for a static pose.
pub fn static_window(goal: &Pose2, n: usize) -> Vec<ReferencePoint> {
    vec![ReferencePoint::new(*goal); n]
}

/// Walks a sparse waypoint list, advancing once the cart is within
/// `advance_radius` of the active waypoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointTracker {
    pub waypoints: Vec<Pose2>,
    pub active: usize,
    pub advance_radius: f64,
    /// Nominal path speed used to space the stage references, m/s.
    pub speed: f64,
}

impl WaypointTracker {
    pub fn new(waypoints: Vec<Pose2>, speed: f64) -> Self {
        Self {
            waypoints,
            active: 0,
            advance_radius: 0.15,
            speed,
        }
    }

    pub fn finished(&self) -> bool {
        self.active + 1 >= self.waypoints.len()
    }

    /// Advances the active waypoint and returns `n` references spaced
    /// `speed·dt` apart along the remaining polyline.
    pub fn window(&mut self, current: &Pose2, dt: f64, n: usize) -> Vec<ReferencePoint> {
        if self.waypoints.is_empty() {
            return static_window(current, n);
        }
        while !self.finished() && current.distance(&self.waypoints[self.active]) < self.advance_radius {
            self.active += 1;
        }
        let mut path = vec![*current];
        path.extend_from_slice(&self.waypoints[self.active..]);
        let step = self.speed * dt;
        let mut out = Vec::with_capacity(n);
        let (mut seg, mut along) = (0usize, 0.0f64);
        for _ in 0..n {
            let mut remaining = step;
            while seg + 1 < path.len() {
                let len = path[seg].distance(&path[seg + 1]);
                if along + remaining <= len {
                    along += remaining;
                    break;
                }
                remaining -= len - along;
                seg += 1;
                along = 0.0;
            }
            let pose = if seg + 1 < path.len() {
                let len = path[seg].distance(&path[seg + 1]);
                let s = if len > 0.0 { along / len } else { 1.0 };
                interpolate_pose(&path[seg], &path[seg + 1], s)
            } else {
                path[path.len() - 1]
            };
            out.push(ReferencePoint::new(pose));
        }
        out
    }
}
