use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose2;
use crate::planner::TimedPose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryKind {
    SharpSine,
    TrapezoidalWave,
    NoisyLine,
    ArcWithJump,
    SCurve,
}

impl TrajectoryKind {
    pub const ALL: [TrajectoryKind; 5] = [
        TrajectoryKind::SharpSine,
        TrajectoryKind::TrapezoidalWave,
        TrajectoryKind::NoisyLine,
        TrajectoryKind::ArcWithJump,
        TrajectoryKind::SCurve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrajectoryKind::SharpSine => "sharp-sine",
            TrajectoryKind::TrapezoidalWave => "trapezoidal-wave",
            TrajectoryKind::NoisyLine => "noisy-line",
            TrajectoryKind::ArcWithJump => "arc-with-jump",
            TrajectoryKind::SCurve => "s-curve",
        }
    }
}

impl fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrajectoryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

/// Shape parameters shared by all trajectory kinds; each kind reads the
/// fields it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryParams {
    pub duration: f64,
    /// Sample spacing, s.
    pub dt: f64,
    /// Forward speed, m/s.
    pub speed: f64,
    /// Lateral amplitude, m.
    pub amplitude: f64,
    /// Spatial period, m.
    pub wavelength: f64,
    /// Arc radius, m.
    pub radius: f64,
    /// Lateral jump of the arc, m.
    pub jump: f64,
    /// Standard deviation of the line noise, m and rad.
    pub noise: f64,
    pub seed: u64,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self {
            duration: 30.0,
            dt: 0.1,
            speed: 0.3,
            amplitude: 0.5,
            wavelength: 3.0,
            radius: 2.0,
            jump: 0.4,
            noise: 0.05,
            seed: 0,
        }
    }
}

impl TrajectoryParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.duration > 0.0
            && self.dt > 0.0
            && self.speed > 0.0
            && self.wavelength > 0.0
            && self.radius > 0.0
            && self.noise >= 0.0
            && self.amplitude.is_finite()
            && self.jump.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("trajectory parameters {self:?}")))
        }
    }
}

/// Lateral profile of the trapezoidal wave: ramp up over a quarter period,
/// hold, drop back at mid-period.
fn trapezoid(x: f64, a: f64, lambda: f64) -> (f64, f64) {
    let phase = x.rem_euclid(lambda) / lambda;
    if phase < 0.25 {
        (a * phase * 4.0, 4.0 * a / lambda)
    } else if phase < 0.5 {
        (a, 0.0)
    } else {
        (0.0, 0.0)
    }
}

/// Time-stamped cart poses starting at the origin with heading 0. Graph
/// shapes `y(x)` advance at `speed` along x with the tangent heading.
pub fn generate_reference_trajectory(kind: TrajectoryKind, params: &TrajectoryParams) -> Result<Vec<TimedPose>> {
    params.validate()?;
    let p = params;
    let n = (p.duration / p.dt).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let noise = Normal::new(0.0, p.noise).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let k = TAU / p.wavelength;
    let graph = |y: f64, slope: f64, x: f64| Pose2::new(x, y, slope.atan());
    let samples = (0..=n)
        .map(|i| {
            let t = i as f64 * p.dt;
            let x = p.speed * t;
            let pose = match kind {
                TrajectoryKind::SharpSine => graph(p.amplitude * (k * x).sin(), p.amplitude * k * (k * x).cos(), x),
                TrajectoryKind::TrapezoidalWave => {
                    let (y, s) = trapezoid(x, p.amplitude, p.wavelength);
                    graph(y, s, x)
                }
                TrajectoryKind::NoisyLine => {
                    let (dy, dth) = if i == 0 {
                        (0.0, 0.0)
                    } else {
                        (noise.sample(&mut rng), noise.sample(&mut rng))
                    };
                    Pose2::new(x, dy, dth)
                }
                TrajectoryKind::ArcWithJump => {
                    let th = x / p.radius;
                    let offset = if t >= p.duration / 2.0 { p.jump } else { 0.0 };
                    // jump outward, to the right of the heading
                    let r = p.radius + offset;
                    Pose2::new(r * th.sin(), p.radius - r * th.cos(), th)
                }
                TrajectoryKind::SCurve => {
                    let w = p.wavelength / 6.0;
                    let mid = p.speed * p.duration / 2.0;
                    let u = ((x - mid) / w).tanh();
                    let y = p.amplitude * (u - (-mid / w).tanh());
                    graph(y, p.amplitude * (1.0 - u * u) / w, x)
                }
            };
            TimedPose { t, pose }
        })
        .collect();
    Ok(samples)
}
