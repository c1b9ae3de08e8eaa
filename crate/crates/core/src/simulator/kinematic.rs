use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cart_pose_from_base, ArmGeometry, LocalCoords, LocalLimits, Pose2};
use crate::kinematics::{integrate_rk4, unicycle_derivative, BaseCommands};
use crate::planner::{CommandLimits, WholeBodyState};

/// Actuator model of the kinematic plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KinematicPlantConfig {
    /// First-order time constants of `(v0, ω0, ω1, ω2)`, seconds; zero means
    /// the command is applied instantly.
    pub lags: [f64; 4],
    pub limits: CommandLimits,
    pub workspace: LocalLimits,
}

impl Default for KinematicPlantConfig {
    fn default() -> Self {
        Self {
            lags: [0.0; 4],
            limits: CommandLimits::default(),
            workspace: LocalLimits::default(),
        }
    }
}

impl KinematicPlantConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lags.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter(format!("lags {:?}", self.lags)));
        }
        let l = &self.limits;
        if [l.v_max, l.omega_max, l.arm_rate_max].iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameter("command limits must be positive".into()));
        }
        Ok(())
    }
}

/// Whole-body kinematic plant: unicycle base plus virtual-arm angles driven
/// by rate commands through optional lags and saturation.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicPlant {
    config: KinematicPlantConfig,
    geom: ArmGeometry,
    state: WholeBodyState,
    /// Rates actually applied after lag and saturation.
    applied: BaseCommands,
}

impl KinematicPlant {
    pub fn new(config: KinematicPlantConfig, geom: ArmGeometry, initial: WholeBodyState) -> Result<Self> {
        config.validate()?;
        config.workspace.check(&initial.psi)?;
        Ok(Self {
            config,
            geom,
            state: initial,
            applied: BaseCommands::default(),
        })
    }

    pub fn state(&self) -> &WholeBodyState {
        &self.state
    }

    pub fn applied(&self) -> &BaseCommands {
        &self.applied
    }

    pub fn cart_pose(&self) -> Pose2 {
        cart_pose_from_base(&self.state.base, &self.state.psi, &self.geom)
    }

    /// Overrides the arm state, e.g. with the output of a dynamic arm model.
    pub fn set_local(&mut self, psi: LocalCoords) {
        self.state.psi = psi;
    }

    /// Advances by `dt` with `cmd` held constant. The base is integrated with
    /// RK4, the arm angles exactly. Leaving the workspace returns
    /// [`Error::WorkspaceViolation`] after the state has been updated.
    pub fn step(&mut self, cmd: &BaseCommands, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt {dt} must be positive")));
        }
        let target = cmd.to_array();
        let mut now = self.applied.to_array();
        for i in 0..4 {
            let tau = self.config.lags[i];
            now[i] = if tau > 0.0 {
                now[i] + (1.0 - (-dt / tau).exp()) * (target[i] - now[i])
            } else {
                target[i]
            };
        }
        let l = &self.config.limits;
        let bounds = [l.v_max, l.omega_max, l.arm_rate_max, l.arm_rate_max];
        for (v, b) in now.iter_mut().zip(bounds) {
            *v = v.clamp(-b, b);
        }
        self.applied = BaseCommands::from_array(now);
        let b = &self.state.base;
        let x = integrate_rk4(
            |x, u| Ok(unicycle_derivative(x, u)),
            &Vector3::new(b.x, b.y, b.theta),
            &self.applied.base(),
            dt,
            &[2],
        )?;
        self.state.base = Pose2::new(x[0], x[1], x[2]);
        let psi = &self.state.psi;
        self.state.psi = LocalCoords::new(
            psi.theta1 + self.applied.omega1 * dt,
            psi.theta2 + self.applied.omega2 * dt,
            psi.reach,
            psi.grip_span,
        );
        self.config.workspace.check(&self.state.psi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{lf_base_commands, lf_chain_commands, lf_derivative, LFState, ModelParams, UnicycleCmd};
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector5;

    fn start(theta1: f64, theta2: f64) -> WholeBodyState {
        WholeBodyState {
            base: Pose2::default(),
            psi: LocalCoords::new(theta1, theta2, 0.4, 0.5),
        }
    }

    fn plant(cfg: KinematicPlantConfig, s: WholeBodyState) -> KinematicPlant {
        KinematicPlant::new(cfg, ArmGeometry::default(), s).unwrap()
    }

    fn lf_state(p: &KinematicPlant) -> LFState {
        let c = p.cart_pose();
        LFState::new(c.x, c.y, c.theta, p.state().psi.theta1, p.state().psi.theta2)
    }

    #[test]
    fn straight_drive_moves_base_and_cart_together() {
        let mut p = plant(KinematicPlantConfig::default(), start(0.0, 0.0));
        let cmd = BaseCommands {
            v0: 0.4,
            ..Default::default()
        };
        for _ in 0..1000 {
            p.step(&cmd, 1e-3).unwrap();
        }
        assert_abs_diff_eq!(p.state().base.x, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(p.cart_pose().x, 1.4, epsilon = 1e-12);
    }

    #[test]
    fn commands_are_saturated() {
        let mut p = plant(KinematicPlantConfig::default(), start(0.0, 0.0));
        p.step(
            &BaseCommands {
                v0: 3.0,
                omega0: -5.0,
                omega1: 0.1,
                omega2: 9.0,
            },
            1e-3,
        )
        .unwrap();
        assert_eq!(p.applied().to_array(), [0.5, -1.0, 0.1, 1.5]);
    }

    #[test]
    fn lag_reaches_63_percent_after_one_time_constant() {
        let cfg = KinematicPlantConfig {
            lags: [0.2, 0.0, 0.0, 0.0],
            ..Default::default()
        };
        let mut p = plant(cfg, start(0.0, 0.0));
        let cmd = BaseCommands {
            v0: 0.4,
            ..Default::default()
        };
        for _ in 0..200 {
            p.step(&cmd, 1e-3).unwrap();
        }
        assert_abs_diff_eq!(p.applied().v0, 0.4 * (1.0 - (-1.0f64).exp()), epsilon = 1e-9);
    }

    #[test]
    fn workspace_violation_is_reported() {
        let mut p = plant(KinematicPlantConfig::default(), start(1.5, 0.0));
        let cmd = BaseCommands {
            omega1: 1.0,
            ..Default::default()
        };
        let mut hit = None;
        for k in 0..200 {
            if let Err(e) = p.step(&cmd, 1e-3) {
                hit = Some((k, e));
                break;
            }
        }
        let (k, e) = hit.expect("violation");
        assert!(matches!(e, Error::WorkspaceViolation(_)));
        assert!((70..72).contains(&k), "step {k}");
    }

    #[test]
    fn chain_commands_keep_cart_on_commanded_path() {
        let geom = ArmGeometry::default();
        let params = ModelParams::from_geometry(&geom, 0.4);
        let mut p = plant(KinematicPlantConfig::default(), start(0.3, -0.2));
        let mu = UnicycleCmd::new(0.3, 0.4);
        let c0 = p.cart_pose();
        let dt = 1e-3;
        for _ in 0..2000 {
            let cmd = lf_chain_commands(&lf_state(&p), &mu, &params).unwrap();
            p.step(&cmd, dt).unwrap();
        }
        // cart follows the unicycle arc of radius v/ω
        let t = 2.0;
        let (v, w) = (mu.v, mu.omega);
        let expect = Pose2::new(
            c0.x + v / w * ((c0.theta + w * t).sin() - c0.theta.sin()),
            c0.y - v / w * ((c0.theta + w * t).cos() - c0.theta.cos()),
            c0.theta + w * t,
        );
        let c = p.cart_pose();
        assert!(c.distance(&expect) < 1e-3, "{c:?} vs {expect:?}");
        assert_abs_diff_eq!(c.theta, expect.theta, epsilon = 1e-3);
    }

    fn one_step_error(dt: f64) -> f64 {
        let geom = ArmGeometry::default();
        let params = ModelParams::from_geometry(&geom, 0.4);
        let mu = UnicycleCmd::new(0.3, 0.0);
        let mut p = plant(KinematicPlantConfig::default(), start(0.3, -0.2));
        let s0 = lf_state(&p);
        let model = integrate_rk4(
            |x: &Vector5<f64>, u: &UnicycleCmd| lf_derivative(&LFState::from_vector(x), u, &params),
            &s0.to_vector(),
            &mu,
            dt,
            &LFState::ANGLES,
        )
        .unwrap();
        let cmd = lf_base_commands(&s0, &mu, &params).unwrap();
        p.step(&cmd, dt).unwrap();
        (lf_state(&p).to_vector() - model).norm()
    }

    #[test]
    fn plant_rollout_matches_leader_follower_model_to_second_order() {
        let (e1, e2) = (one_step_error(0.02), one_step_error(0.01));
        assert!(e1 < 1e-3, "{e1}");
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }
}
