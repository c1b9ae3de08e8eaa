use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::trajectory::{TrajectoryKind, TrajectoryParams};
use crate::controller::{ControllerConfig, ControllerKind};
use crate::error::{Error, Result};
use crate::geometry::{cart_pose_from_base, ArmGeometry, LocalCoords, Pose2};
use crate::planner::{PlannerProblem, PlannerVariant, WholeBodyState};
use crate::simulator::{DisturbanceTerm, DynamicPlantConfig, KinematicPlantConfig};

/// Initial base pose and local coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialState {
    /// Base pose `(x, y, θ)`.
    pub base: [f64; 3],
    /// Local coordinates `(θ1, θ2, R)`.
    pub local: [f64; 3],
    pub grip_span: f64,
}

impl Default for InitialState {
    fn default() -> Self {
        Self {
            base: [0.0; 3],
            local: [0.0, 0.0, 0.4],
            grip_span: 0.5,
        }
    }
}

impl InitialState {
    pub fn whole_body(&self) -> WholeBodyState {
        let [x, y, th] = self.base;
        let [t1, t2, r] = self.local;
        WholeBodyState {
            base: Pose2::new(x, y, th),
            psi: LocalCoords::new(t1, t2, r, self.grip_span),
        }
    }

    pub fn cart_pose(&self, geom: &ArmGeometry) -> Pose2 {
        let s = self.whole_body();
        cart_pose_from_base(&s.base, &s.psi, geom)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantBlock {
    pub geometry: ArmGeometry,
    pub kinematic: KinematicPlantConfig,
    /// Arm dynamics; used whenever a controller is configured.
    pub dynamic: DynamicPlantConfig,
}

/// A local-coordinate target switched on at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalStep {
    pub t: f64,
    pub z: [f64; 3],
}

fn default_speed() -> f64 {
    0.3
}

fn default_settle() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceBlock {
    /// Cart goal pose `(x, y, θ)` in the world frame.
    StaticPose { goal: [f64; 3] },
    /// Cart waypoints in the world frame, walked at `speed`.
    Waypoints {
        points: Vec<[f64; 3]>,
        #[serde(default = "default_speed")]
        speed: f64,
    },
    /// Analytic trajectory laid out from the initial cart pose.
    Trajectory {
        shape: TrajectoryKind,
        #[serde(default)]
        params: TrajectoryParams,
    },
    /// Piecewise-constant local-coordinate targets, starting from the
    /// initial local coordinates. Steady errors are averaged over the last
    /// `settle` seconds of each hold.
    LocalSteps {
        #[serde(default)]
        steps: Vec<LocalStep>,
        #[serde(default = "default_settle")]
        settle: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuccessThresholds {
    /// Final cart position error, m.
    pub position: f64,
    /// Final cart heading error, degrees.
    pub heading_deg: f64,
    /// Largest tracking error before a trajectory run counts as diverged, m.
    pub divergence: f64,
    /// Steady local error on θ1, rad.
    pub local: f64,
}

impl Default for SuccessThresholds {
    fn default() -> Self {
        Self {
            position: 0.1,
            heading_deg: 10.0,
            divergence: 1.0,
            local: 0.05,
        }
    }
}

fn default_log_every() -> usize {
    1
}

/// A self-contained closed-loop experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Simulated time, s.
    pub duration: f64,
    /// Write one log row every this many steps.
    #[serde(default = "default_log_every")]
    pub log_every: usize,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub plant: PlantBlock,
    pub planner: Option<PlannerProblem>,
    pub controller: Option<ControllerConfig>,
    pub reference: ReferenceBlock,
    #[serde(default)]
    pub success: SuccessThresholds,
}

impl ScenarioSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: ScenarioSpec = toml::from_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidParameter(e.to_string()))
    }

    pub fn load(path: &Path) -> std::result::Result<Self, LoadError> {
        let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| LoadError::Parse(format!("{}: {e}", path.display())))
    }

    /// Same scenario driven by another planner variant.
    pub fn with_planner_variant(mut self, variant: PlannerVariant) -> Self {
        if let Some(p) = &mut self.planner {
            p.variant = variant;
            self.name = format!("{}-{}", self.name, variant.name());
        }
        self
    }

    /// Reseeds every random element: trajectory noise and disturbance noise.
    /// Noise terms get distinct streams derived from `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        if let ReferenceBlock::Trajectory { params, .. } = &mut self.reference {
            params.seed = seed;
        }
        let mut k = 0u64;
        for term in &mut self.plant.dynamic.disturbances.terms {
            if let DisturbanceTerm::Noise { seed: s, .. } = term {
                *s = seed.wrapping_add(k);
                k += 1;
            }
        }
        self
    }

    /// Replaces any payload with one of `mass` kg (none for zero).
    pub fn with_payload(mut self, mass: f64) -> Self {
        let terms = &mut self.plant.dynamic.disturbances.terms;
        let lever = terms
            .iter()
            .find_map(|t| match t {
                DisturbanceTerm::Payload { lever, .. } => Some(*lever),
                _ => None,
            })
            .unwrap_or(0.4);
        terms.retain(|t| !matches!(t, DisturbanceTerm::Payload { .. }));
        if mass != 0.0 {
            terms.push(DisturbanceTerm::Payload { mass, lever });
        }
        self
    }

    /// Same scenario driven by another controller, keeping its other settings.
    pub fn with_controller_kind(mut self, kind: ControllerKind) -> Self {
        if let Some(c) = &mut self.controller {
            c.kind = kind;
            self.name = format!("{}-{}", self.name, kind.name());
        }
        self
    }

    pub fn initial_local(&self) -> Vector3<f64> {
        Vector3::from(self.initial.local)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("scenario name `{}` must be a plain file stem", self.name));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration {} must be positive", self.duration));
        }
        if self.log_every == 0 {
            return bad("log_every must be at least 1".into());
        }
        self.plant.geometry.validate(self.initial.grip_span)?;
        self.plant.kinematic.validate()?;
        self.plant.dynamic.validate()?;
        self.plant.kinematic.workspace.check(&self.initial.whole_body().psi)?;
        if let Some(p) = &self.planner {
            p.validate()?;
        }
        if let Some(c) = &self.controller {
            c.validate()?;
        }
        match (&self.planner, &self.controller, &self.reference) {
            (None, None, _) => bad("a scenario needs a planner, a controller or both".into()),
            (Some(_), _, ReferenceBlock::LocalSteps { .. }) => {
                bad("local_steps references drive a controller without planner".into())
            }
            (None, Some(_), r) if !matches!(r, ReferenceBlock::LocalSteps { .. }) => {
                bad("a controller without planner needs a local_steps reference".into())
            }
            (_, _, ReferenceBlock::Waypoints { points, speed }) if points.is_empty() || !(*speed > 0.0) => {
                bad("waypoints need at least one point and a positive speed".into())
            }
            (_, _, ReferenceBlock::Trajectory { params, .. }) => params.validate(),
            (_, _, ReferenceBlock::LocalSteps { steps, settle }) => {
                if !(*settle > 0.0) || steps.windows(2).any(|w| w[1].t < w[0].t) {
                    bad("local steps must be time-ordered with a positive settle window".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Failure to load a scenario file.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {0}")]
    Io(String),
    #[error("invalid scenario {0}")]
    Parse(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "hold"
duration = 2.0

[controller]
kind = "gob"

[reference]
kind = "local_steps"
steps = [{ t = 0.5, z = [0.2, 0.0, 0.4] }]
"#;

    #[test]
    fn minimal_file_parses_with_defaults() {
        let s = ScenarioSpec::from_toml_str(MINIMAL).unwrap();
        assert_eq!(s.initial, InitialState::default());
        assert_eq!(s.log_every, 1);
        assert!(s.planner.is_none());
        assert_eq!(s.controller.unwrap().eta, 0.5);
    }

    #[test]
    fn round_trips_through_toml() {
        let s = ScenarioSpec::from_toml_str(MINIMAL).unwrap();
        let again = ScenarioSpec::from_toml_str(&s.to_toml_string().unwrap()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = MINIMAL.replace("kind = \"gob\"", "kind = \"gob\"\netta = 0.3");
        let err = ScenarioSpec::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("etta"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn overrides_touch_only_their_fields() {
        let mut s = ScenarioSpec::from_toml_str(MINIMAL).unwrap();
        s.plant.dynamic.disturbances.terms = vec![
            DisturbanceTerm::Noise {
                channel: crate::simulator::Channel::Theta1,
                sigma: 0.1,
                seed: 0,
                bandwidth: 20.0,
            },
            DisturbanceTerm::Payload { mass: 5.1, lever: 0.3 },
        ];
        let r = s.clone().with_seed(9);
        assert_eq!(r.seed, 9);
        assert!(matches!(
            r.plant.dynamic.disturbances.terms[0],
            DisturbanceTerm::Noise { seed: 9, .. }
        ));
        assert_eq!(
            r.plant.dynamic.disturbances.terms[1],
            s.plant.dynamic.disturbances.terms[1]
        );
        let p = s.clone().with_payload(22.2);
        assert_eq!(p.plant.dynamic.disturbances.payload_mass(), 22.2);
        assert!(p
            .plant
            .dynamic
            .disturbances
            .terms
            .contains(&DisturbanceTerm::Payload { mass: 22.2, lever: 0.3 }));
        assert_eq!(s.clone().with_payload(0.0).plant.dynamic.disturbances.terms.len(), 1);
        let c = s.with_controller_kind(ControllerKind::Mrac);
        assert_eq!(c.controller.unwrap().kind, ControllerKind::Mrac);
        assert_eq!(c.name, "hold-mrac");
    }

    #[test]
    fn inconsistent_blocks_are_rejected() {
        let text = MINIMAL.replace("[controller]\nkind = \"gob\"\n", "");
        assert!(ScenarioSpec::from_toml_str(&text).is_err());
        let text = MINIMAL.replace("duration = 2.0", "duration = -1.0");
        assert!(ScenarioSpec::from_toml_str(&text).is_err());
        let text = format!("{MINIMAL}\n[planner]\nvariant = \"lf\"\n");
        assert!(ScenarioSpec::from_toml_str(&text).is_err());
    }
}
