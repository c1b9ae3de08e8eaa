use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::controller::LocalState;
use crate::error::{Error, Result};

/// Nominal cart mass, kg.
pub const CART_MASS: f64 = 30.0;
/// Rolling-resistance coefficient of the payload model.
pub const ROLLING_COEFF: f64 = 0.05;
pub const GRAVITY: f64 = 9.81;
/// Velocity scale of the smoothed sign used for Coulomb-type terms.
pub const COULOMB_SMOOTHING: f64 = 0.01;

/// Channel of the local coordinates `(θ1, θ2, R)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Theta1,
    Theta2,
    Reach,
}

impl Channel {
    pub fn index(self) -> usize {
        match self {
            Channel::Theta1 => 0,
            Channel::Theta2 => 1,
            Channel::Reach => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisturbanceTerm {
    Constant {
        channel: Channel,
        magnitude: f64,
    },
    /// Payload mass: rolling resistance on every channel plus inertia scaling.
    Payload {
        mass: f64,
        #[serde(default = "default_lever")]
        lever: f64,
    },
    /// Rectangular force pulse of `force` newtons at `lever` meters.
    Impulse {
        channel: Channel,
        force: f64,
        lever: f64,
        start: f64,
        duration: f64,
    },
    /// Gaussian noise low-pass filtered at `bandwidth` rad/s, stationary
    /// standard deviation `sigma`.
    Noise {
        channel: Channel,
        sigma: f64,
        seed: u64,
        #[serde(default = "default_bandwidth")]
        bandwidth: f64,
    },
}

fn default_lever() -> f64 {
    0.4
}

fn default_bandwidth() -> f64 {
    20.0
}

/// Smooth sign used by the resistive terms.
#[inline]
pub fn smooth_sign(v: f64) -> f64 {
    (v / COULOMB_SMOOTHING).tanh()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DisturbanceSpec {
    pub terms: Vec<DisturbanceTerm>,
}

impl DisturbanceSpec {
    pub fn new(terms: Vec<DisturbanceTerm>) -> Self {
        Self { terms }
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            let ok = match t {
                DisturbanceTerm::Constant { magnitude, .. } => magnitude.is_finite(),
                DisturbanceTerm::Payload { mass, lever } => *mass >= 0.0 && *lever > 0.0,
                DisturbanceTerm::Impulse {
                    duration,
                    lever,
                    force,
                    start,
                    ..
                } => *duration > 0.0 && *lever > 0.0 && force.is_finite() && start.is_finite(),
                DisturbanceTerm::Noise { sigma, bandwidth, .. } => *sigma >= 0.0 && *bandwidth > 0.0,
            };
            if !ok {
                return Err(Error::InvalidParameter(format!("disturbance term {t:?}")));
            }
        }
        Ok(())
    }

    pub fn payload_mass(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| match t {
                DisturbanceTerm::Payload { mass, .. } => *mass,
                _ => 0.0,
            })
            .sum()
    }

    /// Effective inertia multiplier `1 + m_p / m_cart`.
    pub fn inertia_scale(&self) -> f64 {
        1.0 + self.payload_mass() / CART_MASS
    }

    /// Deterministic part of the disturbance at time `t`; noise terms are
    /// sampled by [`NoiseBank`].
    pub fn eval(&self, t: f64, state: &LocalState) -> Vector3<f64> {
        let mut xi = Vector3::zeros();
        for term in &self.terms {
            match term {
                DisturbanceTerm::Constant { channel, magnitude } => xi[channel.index()] += magnitude,
                DisturbanceTerm::Payload { mass, lever } => {
                    let level = ROLLING_COEFF * mass * GRAVITY * lever;
                    for i in 0..3 {
                        xi[i] -= level * smooth_sign(state.zdot[i]);
                    }
                }
                DisturbanceTerm::Impulse {
                    channel,
                    force,
                    lever,
                    start,
                    duration,
                } => {
                    if t >= *start && t < start + duration {
                        // torque over the nominal cart inertia about the lever
                        xi[channel.index()] += force * lever / (CART_MASS * lever * lever);
                    }
                }
                DisturbanceTerm::Noise { .. } => {}
            }
        }
        xi
    }
}

/// Filtered-noise generators, one per noise term, in declaration order.
#[derive(Debug, Clone)]
pub struct NoiseBank {
    sources: Vec<(usize, f64, f64, ChaCha8Rng, f64)>,
}

impl NoiseBank {
    pub fn new(spec: &DisturbanceSpec) -> Self {
        let sources = spec
            .terms
            .iter()
            .filter_map(|t| match t {
                DisturbanceTerm::Noise {
                    channel,
                    sigma,
                    seed,
                    bandwidth,
                } => Some((
                    channel.index(),
                    *sigma,
                    *bandwidth,
                    ChaCha8Rng::seed_from_u64(*seed),
                    0.0,
                )),
                _ => None,
            })
            .collect();
        Self { sources }
    }

    /// Advances each filter by `dt` and returns the summed noise per channel.
    pub fn sample(&mut self, dt: f64) -> Vector3<f64> {
        let mut out = Vector3::zeros();
        for (ch, sigma, bw, rng, state) in &mut self.sources {
            // exact discretization of dx = −bw x dt + σ √(2 bw) dW
            let a = (-*bw * dt).exp();
            let w: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
            *state = a * *state + *sigma * (1.0 - a * a).sqrt() * w;
            out[*ch] += *state;
        }
        out
    }
}
