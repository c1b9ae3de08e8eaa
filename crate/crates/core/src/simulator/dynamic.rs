use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::disturbance::{smooth_sign, DisturbanceSpec, NoiseBank};
use crate::controller::LocalState;
use crate::error::{ensure_finite, Error, Result};
use crate::geometry::{LocalCoords, LocalLimits};

/// Parameters of the local-coordinate dynamics
/// `ρ z̈ = b ⊙ τ − c ⊙ ż − f_c ⊙ sgn(ż) + ξ(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicPlantConfig {
    /// True input gains on `(θ1, θ2, R)`.
    pub b_true: [f64; 3],
    /// Viscous damping.
    pub damping: [f64; 3],
    /// Coulomb friction level.
    pub coulomb: [f64; 3],
    pub disturbances: DisturbanceSpec,
    pub workspace: LocalLimits,
}

impl Default for DynamicPlantConfig {
    fn default() -> Self {
        Self {
            b_true: [2.0, 3.0, 5.0],
            damping: [0.5, 0.5, 2.0],
            coulomb: [0.2, 0.2, 0.5],
            disturbances: DisturbanceSpec::default(),
            workspace: LocalLimits::default(),
        }
    }
}

impl DynamicPlantConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.b_true.iter().all(|b| b.is_finite() && *b != 0.0)
            && self
                .damping
                .iter()
                .chain(&self.coulomb)
                .all(|c| *c >= 0.0 && c.is_finite());
        if !ok {
            return Err(Error::InvalidParameter(
                "plant gains must be finite, damping non-negative".into(),
            ));
        }
        self.disturbances.validate()
    }
}

/// Second-order local-coordinate plant integrated with semi-implicit Euler.
#[derive(Debug, Clone)]
pub struct DynamicLocalPlant {
    config: DynamicPlantConfig,
    state: LocalState,
    noise: NoiseBank,
    time: f64,
    rho: f64,
    last_disturbance: Vector3<f64>,
}

impl DynamicLocalPlant {
    pub fn new(config: DynamicPlantConfig, initial: LocalState) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            noise: NoiseBank::new(&config.disturbances),
            rho: config.disturbances.inertia_scale(),
            config,
            state: initial,
            time: 0.0,
            last_disturbance: Vector3::zeros(),
        })
    }

    pub fn state(&self) -> &LocalState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// External disturbance `ξ` applied during the last step.
    pub fn last_disturbance(&self) -> Vector3<f64> {
        self.last_disturbance
    }

    pub fn local_coords(&self, grip_span: f64) -> LocalCoords {
        let z = &self.state.z;
        LocalCoords::new(z[0], z[1], z[2], grip_span)
    }

    /// Advances by `dt` under the generalized force `tau`. Leaving the
    /// workspace returns [`Error::WorkspaceViolation`] after the update.
    pub fn step(&mut self, tau: &Vector3<f64>, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt {dt} must be positive")));
        }
        let c = &self.config;
        let s = &self.state;
        let xi = c.disturbances.eval(self.time, s) + self.noise.sample(dt);
        let acc = Vector3::from_fn(|i, _| {
            (c.b_true[i] * tau[i] - c.damping[i] * s.zdot[i] - c.coulomb[i] * smooth_sign(s.zdot[i]) + xi[i]) / self.rho
        });
        let zdot = s.zdot + dt * acc;
        let z = s.z + dt * zdot;
        ensure_finite(&[z[0], z[1], z[2], zdot[0], zdot[1], zdot[2]], "local plant")?;
        self.state = LocalState { z, zdot };
        self.time += dt;
        self.last_disturbance = xi;
        self.config.workspace.check(&self.local_coords(1.0))
    }
}
