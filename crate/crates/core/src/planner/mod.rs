//! Receding-horizon planners over the four transition models.
//!
//! Every variant is transcribed by single shooting with forward-Euler steps
//! and solved by a Gauss-Newton SQP whose subproblem is a box-constrained QP.
//! Bounds on derived quantities (base rates of the TT and LF models, arm
//! workspace) enter as exterior penalties; arm rates are clamped afterwards.

mod models;
mod qp;
mod reference;
mod sqp;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DVector, Vector2};
use serde::{Deserialize, Serialize};

pub use models::wb_transition;
pub use reference::{
    interpolate_pose, sample_trajectory, static_window, window_from_trajectory, ReferencePoint, TimedPose,
    WaypointTracker,
};
pub use sqp::{SolveStats, SolverSettings};

use crate::error::{Error, Result};
use crate::geometry::{cart_pose_from_base, wrap_angle, ArmGeometry, LocalCoords, Pose2};
use crate::kinematics::{BaseCommands, ModelParams};
use models::{lf_commands, tt_commands, LfModel, Model, NmpcModel, TtModel, WbModel};
use sqp::Ocp;

/// Which transition model the planner optimises over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerVariant {
    /// Base only; arms frozen, cart rigidly attached.
    Nmpc,
    /// Whole-body chain with base and arm rates as inputs.
    Wb,
    /// Truck-Trailer with θ2 frozen.
    Tt,
    /// Leader-Follower.
    Lf,
}

impl PlannerVariant {
    pub const ALL: [PlannerVariant; 4] = [Self::Nmpc, Self::Wb, Self::Tt, Self::Lf];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Nmpc => "nmpc",
            Self::Wb => "wb",
            Self::Tt => "tt",
            Self::Lf => "lf",
        }
    }
}

impl fmt::Display for PlannerVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nmpc" => Ok(Self::Nmpc),
            "wb" | "wb-mpc" => Ok(Self::Wb),
            "tt" | "tt-mpc" => Ok(Self::Tt),
            "lf" | "lf-mpc" => Ok(Self::Lf),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

/// Hardware limits on emitted whole-body commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommandLimits {
    pub v_max: f64,
    pub omega_max: f64,
    pub arm_rate_max: f64,
    /// Steering bound of the TT model, radians.
    pub alpha_max: f64,
}

impl Default for CommandLimits {
    fn default() -> Self {
        Self {
            v_max: 0.5,
            omega_max: 1.0,
            arm_rate_max: 1.5,
            alpha_max: 0.8,
        }
    }
}

impl CommandLimits {
    fn clamp(&self, c: &BaseCommands) -> (BaseCommands, bool) {
        let out = BaseCommands {
            v0: c.v0.clamp(-self.v_max, self.v_max),
            omega0: c.omega0.clamp(-self.omega_max, self.omega_max),
            omega1: c.omega1.clamp(-self.arm_rate_max, self.arm_rate_max),
            omega2: c.omega2.clamp(-self.arm_rate_max, self.arm_rate_max),
        };
        let moved = out
            .to_array()
            .iter()
            .zip(c.to_array())
            .any(|(a, b)| (a - b).abs() > 1e-10);
        (out, moved)
    }
}

/// One MPC variant with its horizon, weights and bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerProblem {
    pub variant: PlannerVariant,
    pub horizon: usize,
    pub dt: f64,
    /// Stage weights on `(x_c, y_c, θ_c, θ1, θ2)`; variants use the prefix
    /// they need.
    pub q: Vec<f64>,
    /// Terminal weights; defaults to `5·q`.
    pub q_terminal: Option<Vec<f64>>,
    /// Input weights; variants use the prefix they need.
    pub r: Vec<f64>,
    /// Model-input bounds; defaults derive from `limits`.
    pub u_min: Option<Vec<f64>>,
    pub u_max: Option<Vec<f64>>,
    pub limits: CommandLimits,
    /// Soft workspace bound on |θ1|, |θ2|, radians.
    pub theta_limit: f64,
    pub solver: SolverSettings,
}

impl Default for PlannerProblem {
    fn default() -> Self {
        Self {
            variant: PlannerVariant::Lf,
            horizon: 20,
            dt: 0.1,
            q: vec![10.0, 10.0, 2.0, 0.5, 0.5],
            q_terminal: None,
            r: vec![0.1, 0.1, 0.05, 0.05],
            u_min: None,
            u_max: None,
            limits: CommandLimits::default(),
            theta_limit: 1.2,
            solver: SolverSettings::default(),
        }
    }
}

impl PlannerProblem {
    pub fn new(variant: PlannerVariant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    /// Settings for static pose targets: a 10 s horizon at coarse steps,
    /// light heading weight and near-free arm angles so that multi-point
    /// maneuvers are not dominated by transient heading or arm costs.
    pub fn static_pose(variant: PlannerVariant) -> Self {
        Self {
            variant,
            dt: 0.5,
            q: vec![10.0, 10.0, 1.0, 0.02, 0.02],
            theta_limit: 1.45,
            ..Self::default()
        }
    }

    fn nu(&self) -> usize {
        match self.variant {
            PlannerVariant::Wb => 4,
            _ => 2,
        }
    }

    /// Input bounds of the variant's model.
    pub fn input_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let l = &self.limits;
        let hi = match self.variant {
            PlannerVariant::Nmpc | PlannerVariant::Lf => vec![l.v_max, l.omega_max],
            PlannerVariant::Wb => vec![l.v_max, l.omega_max, l.arm_rate_max, l.arm_rate_max],
            PlannerVariant::Tt => vec![l.v_max, l.alpha_max],
        };
        let lo = hi.iter().map(|v| -v).collect();
        (self.u_min.clone().unwrap_or(lo), self.u_max.clone().unwrap_or(hi))
    }

    fn stage_weights(&self) -> Vec<f64> {
        let q = &self.q;
        match self.variant {
            PlannerVariant::Nmpc => q[..3].to_vec(),
            PlannerVariant::Tt => q[..4].to_vec(),
            _ => q[..5].to_vec(),
        }
    }

    fn terminal_weights(&self) -> Vec<f64> {
        let full = self
            .q_terminal
            .clone()
            .unwrap_or_else(|| self.q.iter().map(|v| 5.0 * v).collect());
        match self.variant {
            PlannerVariant::Nmpc => full[..3].to_vec(),
            PlannerVariant::Tt => full[..4].to_vec(),
            _ => full[..5].to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::InvalidParameter(format!("horizon {} < 2", self.horizon)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt {} must be > 0", self.dt)));
        }
        if self.q.len() < 5 || self.r.len() < self.nu() {
            return Err(Error::InvalidParameter("q needs 5 entries and r one per input".into()));
        }
        if let Some(qn) = &self.q_terminal {
            if qn.len() < 5 || qn.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::InvalidParameter("q_terminal must be 5 positive weights".into()));
            }
        }
        if self.q.iter().chain(&self.r).any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameter("weights must be positive".into()));
        }
        let (lo, hi) = self.input_bounds();
        if lo.len() != self.nu() || hi.len() != self.nu() {
            return Err(Error::InvalidParameter(format!(
                "{} expects {} input bounds",
                self.variant,
                self.nu()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::Infeasible("input bounds are not ordered".into()));
        }
        if self.variant == PlannerVariant::Tt
            && lo
                .iter()
                .chain(&hi)
                .skip(1)
                .step_by(2)
                .any(|a| a.abs() >= std::f64::consts::FRAC_PI_2)
        {
            return Err(Error::Infeasible("steering bounds reach ±π/2".into()));
        }
        Ok(())
    }
}

/// Planner input: the measured base pose and local coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WholeBodyState {
    pub base: Pose2,
    pub psi: LocalCoords,
}

/// Output of one planning tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOutput {
    /// Whole-body command to apply now.
    pub commands: BaseCommands,
    /// First model input, in the variant's own input space.
    pub model_input: Vec<f64>,
    /// Predicted model states `x_0..x_N`.
    pub trajectory: Vec<Vec<f64>>,
    /// Whether the whole-body command needed clamping beyond numerical dust.
    pub clamped: bool,
    pub stats: SolveStats,
}

/// A stateful planner instance: one per scenario.
#[derive(Debug, Clone)]
pub struct Planner {
    problem: PlannerProblem,
    geom: ArmGeometry,
    warm: Option<Vec<f64>>,
}

enum AnyModel {
    Nmpc(NmpcModel),
    Wb(WbModel),
    Tt(TtModel),
    Lf(LfModel),
}

impl AnyModel {
    fn as_dyn(&self) -> &dyn Model {
        match self {
            Self::Nmpc(m) => m,
            Self::Wb(m) => m,
            Self::Tt(m) => m,
            Self::Lf(m) => m,
        }
    }
}

impl Planner {
    pub fn new(problem: PlannerProblem, geom: ArmGeometry) -> Result<Self> {
        problem.validate()?;
        Ok(Self {
            problem,
            geom,
            warm: None,
        })
    }

    pub fn problem(&self) -> &PlannerProblem {
        &self.problem
    }

    pub fn variant(&self) -> PlannerVariant {
        self.problem.variant
    }

    /// Drops the stored warm start.
    pub fn reset(&mut self) {
        self.warm = None;
    }

    pub fn warm_start(&self) -> Option<&[f64]> {
        self.warm.as_deref()
    }

    fn params(&self, psi: &LocalCoords) -> ModelParams {
        ModelParams::from_geometry(&self.geom, psi.reach)
    }

    fn build(&self, state: &WholeBodyState) -> (AnyModel, Vec<f64>) {
        let p = &self.problem;
        let psi = state.psi;
        let cart = cart_pose_from_base(&state.base, &psi, &self.geom);
        let full = vec![cart.x, cart.y, cart.theta, psi.theta1, psi.theta2];
        match p.variant {
            PlannerVariant::Nmpc => {
                let rel = state.base.inverse().compose(&cart);
                (
                    AnyModel::Nmpc(NmpcModel {
                        offset: Vector2::new(rel.x, rel.y),
                        yaw: rel.theta,
                    }),
                    full[..3].to_vec(),
                )
            }
            PlannerVariant::Wb => (
                AnyModel::Wb(WbModel {
                    joint1_offset: self.geom.joint1_offset,
                    reach: psi.reach,
                    cart_link: self.geom.cart_link,
                    theta_limit: p.theta_limit,
                }),
                full,
            ),
            PlannerVariant::Tt => (
                AnyModel::Tt(TtModel {
                    params: self.params(&psi),
                    v_max: p.limits.v_max,
                    omega_max: p.limits.omega_max,
                    arm_rate_max: p.limits.arm_rate_max,
                    theta_limit: p.theta_limit,
                }),
                vec![cart.x, cart.y, state.base.theta, psi.theta1],
            ),
            PlannerVariant::Lf => (
                AnyModel::Lf(LfModel {
                    params: self.params(&psi),
                    v_max: p.limits.v_max,
                    omega_max: p.limits.omega_max,
                    arm_rate_max: p.limits.arm_rate_max,
                    theta_limit: p.theta_limit,
                }),
                full,
            ),
        }
    }

    /// Solves the OCP from `state` against `refs` (`refs[k]` targets
    /// `x_{k+1}`), optionally seeded with a full input sequence.
    pub fn solve_nlp(
        &self,
        state: &WholeBodyState,
        refs: &[ReferencePoint],
        warm_start: Option<&[f64]>,
    ) -> Result<(PlanOutput, Vec<f64>)> {
        let p = &self.problem;
        let n = p.horizon;
        if refs.len() < n {
            return Err(Error::InvalidParameter(format!(
                "need {n} references, got {}",
                refs.len()
            )));
        }
        let (any, x0) = self.build(state);
        let model = any.as_dyn();
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("planner initial state"));
        }
        let mut prev = model.heading(&x0);
        let poses: Vec<Pose2> = refs[..n]
            .iter()
            .map(|r| {
                let th = prev + wrap_angle(r.pose.theta - prev);
                prev = th;
                Pose2 {
                    x: r.pose.x,
                    y: r.pose.y,
                    theta: th,
                }
            })
            .collect();
        let (lo, hi) = p.input_bounds();
        let ocp = Ocp {
            model,
            x0: x0.clone(),
            refs: poses,
            q: p.stage_weights(),
            q_terminal: p.terminal_weights(),
            r: p.r[..model.nu()].to_vec(),
            dt: p.dt,
            lo,
            hi,
            penalty: p.solver.penalty,
        };
        let nu = model.nu();
        let init = match warm_start {
            Some(w) if w.len() == n * nu => DVector::from_column_slice(w),
            _ => self.initial_guess(refs, nu),
        };
        let res = sqp::solve(&ocp, init, &p.solver)?;
        let mut u0 = res.u.as_slice()[..nu].to_vec();
        model.clamp_input(&mut u0);
        let raw = match p.variant {
            PlannerVariant::Nmpc => BaseCommands::from_array([u0[0], u0[1], 0.0, 0.0]),
            PlannerVariant::Wb => BaseCommands::from_array([u0[0], u0[1], u0[2], u0[3]]),
            PlannerVariant::Tt => tt_commands(&x0, &u0, &self.params(&state.psi))?,
            PlannerVariant::Lf => lf_commands(&x0, &u0, &self.params(&state.psi))?,
        };
        let (commands, clamped) = p.limits.clamp(&raw);
        let output = PlanOutput {
            commands,
            model_input: u0,
            trajectory: res.states.iter().map(|s| s.as_slice().to_vec()).collect(),
            clamped,
            stats: res.stats,
        };
        Ok((output, res.u.as_slice().to_vec()))
    }

    fn initial_guess(&self, refs: &[ReferencePoint], nu: usize) -> DVector<f64> {
        let n = self.problem.horizon;
        let mut u = DVector::zeros(n * nu);
        if self.problem.variant == PlannerVariant::Lf {
            for k in 0..n {
                if let Some(ff) = refs[k].feedforward {
                    u[k * nu] = ff.v;
                    u[k * nu + 1] = ff.omega;
                }
            }
        }
        u
    }

    /// One receding-horizon step: solve with the shifted previous solution
    /// as warm start, emit the first command, keep the rest.
    pub fn plan_tick(&mut self, state: &WholeBodyState, refs: &[ReferencePoint]) -> Result<PlanOutput> {
        let warm = self.warm.take();
        let (out, u) = self.solve_nlp(state, refs, warm.as_deref())?;
        let nu = self.problem.nu();
        let mut shifted = u[nu..].to_vec();
        shifted.extend_from_slice(&u[u.len() - nu..]);
        self.warm = Some(shifted);
        Ok(out)
    }
}
