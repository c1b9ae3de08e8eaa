//! Arm torque generation in local coordinates `z = (θ1, θ2, R)`.
//!
//! Every variant ends in the same pipeline: a joint PD toward the
//! variant's internal reference pose plus a generalized force on `z`
//! projected onto both arms, saturated per joint.

pub mod adrc;
pub mod baselines;
pub mod functions;
pub mod observer;
pub mod projection;
pub mod td;

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub use adrc::{adrc_control, tracking_error, AdrcGains};
pub use baselines::{flat_pd, joint_pd, DpdGains, DpdState, MracChannel, MracGains};
pub use functions::{fal, fhan, geometric_error};
pub use observer::{EsoState, GobGains, GobState};
pub use projection::{command_torque, force_projection, GraspJacobians, JointTorques};
pub use td::TdState;

use crate::error::{Error, Result};
use crate::geometry::{joints_from_local, ArmGeometry, ArmSide, ElbowBranch, ElbowBranches, JointConfig, LocalCoords};

/// Local coordinates and their rates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalState {
    pub z: Vector3<f64>,
    pub zdot: Vector3<f64>,
}

impl LocalState {
    pub fn at(z: Vector3<f64>) -> Self {
        Self {
            z,
            zdot: Vector3::zeros(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Pd,
    Pdf,
    Dpd,
    Mrac,
    Gob,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 5] = [
        ControllerKind::Pd,
        ControllerKind::Pdf,
        ControllerKind::Dpd,
        ControllerKind::Mrac,
        ControllerKind::Gob,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Pd => "pd",
            ControllerKind::Pdf => "pdf",
            ControllerKind::Dpd => "dpd",
            ControllerKind::Mrac => "mrac",
            ControllerKind::Gob => "gob",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

/// All controller parameters; each variant reads its own blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlGains {
    /// Nominal input gains `b_z` on `(θ1, θ2, R)`.
    pub b_z: [f64; 3],
    pub adrc: AdrcGains,
    pub observer: GobGains,
    /// Bandwidth of the linear observer on `R`, rad/s.
    pub eso_bandwidth: f64,
    pub td_r: [f64; 3],
    pub td_v_max: [f64; 3],
    pub td_h: f64,
    /// Low-gain joint PD used under every compensating variant.
    pub joint_kp: [f64; 3],
    pub joint_kd: [f64; 3],
    /// Joint PD of the plain PD variant.
    pub pd_kp: [f64; 3],
    pub pd_kd: [f64; 3],
    /// Local-coordinate PD of the PD+F variant.
    pub flat_kp: [f64; 3],
    pub flat_kd: [f64; 3],
    pub dpd: DpdGains,
    pub mrac: MracGains,
}

impl Default for ControlGains {
    fn default() -> Self {
        Self {
            b_z: [2.0, 3.0, 5.0],
            adrc: AdrcGains::default(),
            observer: GobGains::default(),
            eso_bandwidth: 20.0,
            td_r: [100.0; 3],
            td_v_max: [2.0, 2.0, 0.5],
            td_h: 0.05,
            joint_kp: [0.9; 3],
            joint_kd: [0.5; 3],
            pd_kp: [0.9; 3],
            pd_kd: [0.5; 3],
            flat_kp: [10.0; 3],
            flat_kd: [3.0; 3],
            dpd: DpdGains::default(),
            mrac: MracGains::default(),
        }
    }
}

impl ControlGains {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: &[f64]| v.iter().all(|&x| x > 0.0 && x.is_finite());
        let nonneg = |v: &[f64]| v.iter().all(|&x| x >= 0.0 && x.is_finite());
        if !pos(&self.b_z) {
            return Err(Error::InvalidParameter("b_z must be positive".into()));
        }
        if !(self.eso_bandwidth > 0.0 && pos(&self.td_r) && pos(&self.td_v_max) && self.td_h > 0.0) {
            return Err(Error::InvalidParameter(
                "observer and differentiator settings must be positive".into(),
            ));
        }
        let pd_blocks = [
            &self.joint_kp,
            &self.joint_kd,
            &self.pd_kp,
            &self.pd_kd,
            &self.flat_kp,
            &self.flat_kd,
            &self.dpd.k_i,
            &self.dpd.k_p,
            &self.dpd.k_d,
        ];
        if !pd_blocks.iter().all(|b| nonneg(&b[..])) {
            return Err(Error::InvalidParameter("PD gains must be non-negative".into()));
        }
        self.adrc.validate()?;
        self.observer.validate()?;
        self.mrac.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    pub gains: ControlGains,
    /// Share of the compensation carried by the left arm.
    pub eta: f64,
    /// Per-joint torque limits (shoulder, elbow, wrist), N·m.
    pub torque_limit: [f64; 3],
    /// Handle length between the grippers, m.
    pub grip_span: f64,
    /// Arm that produces no torque at all.
    pub failed_arm: Option<ArmSide>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            kind: ControllerKind::Gob,
            gains: ControlGains::default(),
            eta: 0.5,
            torque_limit: [40.0, 40.0, 20.0],
            grip_span: 0.5,
            failed_arm: None,
        }
    }
}

impl ControllerConfig {
    pub fn new(kind: ControllerKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParameter(format!("eta {} outside [0, 1]", self.eta)));
        }
        if !self.torque_limit.iter().all(|&t| t > 0.0) || !(self.grip_span > 0.0) {
            return Err(Error::InvalidParameter(
                "torque limits and grip span must be positive".into(),
            ));
        }
        self.gains.validate()
    }
}

/// Result of one controller step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlOutput {
    /// Saturated joint torques sent to the arms.
    pub joints: JointTorques,
    /// Generalized force on `z` those torques produce.
    pub applied: Vector3<f64>,
    /// Compensation force before projection.
    pub compensation: Vector3<f64>,
    pub xi_hat: Vector3<f64>,
    /// Internal reference pose the joint PD tracks.
    pub reference: Vector3<f64>,
    pub saturated: bool,
    pub adaptation_capped: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
enum Internal {
    Pd,
    Pdf,
    Dpd(DpdState),
    Mrac([MracChannel; 3]),
    Gob {
        td: TdState,
        gob: [GobState; 2],
        eso: EsoState,
    },
}

/// A stateful arm controller of one [`ControllerKind`].
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    config: ControllerConfig,
    geom: ArmGeometry,
    branches: ElbowBranches,
    internal: Internal,
    last_applied: Vector3<f64>,
}

impl Controller {
    pub fn new(config: ControllerConfig, geom: ArmGeometry, initial: &LocalState) -> Result<Self> {
        config.validate()?;
        let g = &config.gains;
        let b = Vector3::from(g.b_z);
        let z0 = initial.z;
        let internal = match config.kind {
            ControllerKind::Pd => Internal::Pd,
            ControllerKind::Pdf => Internal::Pdf,
            ControllerKind::Dpd => Internal::Dpd(DpdState::new(z0)),
            ControllerKind::Mrac => Internal::Mrac(std::array::from_fn(|i| MracChannel::new(z0[i], b[i], &g.mrac))),
            ControllerKind::Gob => Internal::Gob {
                td: TdState::new(z0, Vector3::from(g.td_r), Vector3::from(g.td_v_max), g.td_h),
                gob: [
                    GobState::new(z0[0], b[0], g.observer),
                    GobState::new(z0[1], b[1], g.observer),
                ],
                eso: EsoState::new(z0[2], b[2], g.eso_bandwidth),
            },
        };
        Ok(Self {
            config,
            geom,
            branches: ElbowBranches::default(),
            internal,
            last_applied: Vector3::zeros(),
        })
    }

    pub fn kind(&self) -> ControllerKind {
        self.config.kind
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    fn psi(&self, z: &Vector3<f64>) -> LocalCoords {
        LocalCoords::new(z[0], z[1], z[2], self.config.grip_span)
    }

    fn joints(&self, z: &Vector3<f64>) -> Result<JointConfig> {
        joints_from_local(&self.psi(z), &self.geom, self.branches)
    }

    /// Computes the arm torques for target `z_d` from the measured state and
    /// advances the internal filters and observers by `h`.
    pub fn step(&mut self, z_d: &Vector3<f64>, meas: &LocalState, h: f64) -> Result<ControlOutput> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("step {h} must be positive")));
        }
        let g = self.config.gains.clone();
        let b = Vector3::from(g.b_z);
        let u_prev = self.last_applied;
        let mut xi_hat = Vector3::zeros();
        let mut capped = false;
        let (compensation, reference, kp, kd) = match &mut self.internal {
            Internal::Pd => (Vector3::zeros(), *z_d, g.pd_kp, g.pd_kd),
            Internal::Pdf => (flat_pd(z_d, meas, &g.flat_kp, &g.flat_kd), *z_d, g.joint_kp, g.joint_kd),
            Internal::Dpd(dpd) => {
                let acc = dpd.step(&g.dpd, z_d, meas, h);
                (acc.component_div(&b), dpd.z_ref, g.joint_kp, g.joint_kd)
            }
            Internal::Mrac(channels) => {
                let p = g.mrac.lyapunov();
                let mut tau = Vector3::zeros();
                let mut r = Vector3::zeros();
                for (i, ch) in channels.iter_mut().enumerate() {
                    r[i] = ch.r_filt;
                    tau[i] = ch.step(&g.mrac, &p, 1.0, z_d[i], meas.z[i], meas.zdot[i], h)?;
                    capped |= ch.capped;
                }
                (tau, r, g.joint_kp, g.joint_kd)
            }
            Internal::Gob { td, gob, eso } => {
                for i in 0..2 {
                    gob[i].step(meas.z[i], u_prev[i], h)?;
                    xi_hat[i] = gob[i].xi_hat;
                }
                eso.step(meas.z[2], u_prev[2], h)?;
                xi_hat[2] = eso.z3;
                td.step(z_d, h);
                let tau = adrc_control(&g.adrc, &b, &td.z1, &td.z2, meas, &xi_hat);
                (tau, td.z1, g.joint_kp, g.joint_kd)
            }
        };
        let psi = self.psi(&meas.z);
        let q = self.joints(&meas.z)?;
        self.branches = ElbowBranches {
            left: ElbowBranch::of(q.left[1]),
            right: ElbowBranch::of(q.right[1]),
        };
        let q_d = self.joints(&reference)?;
        let jac = GraspJacobians::new(&psi, &q, &self.geom);
        let qdot = jac.joint_rates(&meas.zdot)?;
        let pd = joint_pd(&q, &qdot, &q_d, &kp, &kd);
        let com = jac.project(&compensation, self.config.eta)?;
        let (mut joints, saturated) = command_torque(&pd, &com, &self.config.torque_limit);
        match self.config.failed_arm {
            Some(ArmSide::Left) => joints.left = Vector3::zeros(),
            Some(ArmSide::Right) => joints.right = Vector3::zeros(),
            None => {}
        }
        let applied = jac.generalized_force(&joints)?;
        self.last_applied = applied;
        Ok(ControlOutput {
            joints,
            applied,
            compensation,
            xi_hat,
            reference,
            saturated,
            adaptation_capped: capped,
        })
    }
}
