use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenario::{InitialState, LocalStep, PlantBlock, ReferenceBlock, ScenarioSpec, SuccessThresholds};
use super::trajectory::{TrajectoryKind, TrajectoryParams};
use crate::controller::{ControllerConfig, ControllerKind};
use crate::error::{Error, Result};
use crate::geometry::{ArmSide, Pose2};
use crate::planner::{PlannerProblem, PlannerVariant};
use crate::simulator::{Channel, DisturbanceSpec, DisturbanceTerm};

/// Payload masses of the controller comparison, kg.
pub const PAYLOAD_MASSES: [f64; 3] = [0.0, 5.1, 22.2];
/// θ1 step-and-hold targets of the controller comparison: `(t, θ1)`.
pub const PAYLOAD_STEPS: [(f64, f64); 3] = [(1.0, 0.4), (6.0, -0.4), (11.0, 0.0)];

fn base_spec(name: String, seed: u64, duration: f64, reference: ReferenceBlock) -> ScenarioSpec {
    ScenarioSpec {
        name,
        seed,
        duration,
        log_every: 1,
        initial: InitialState::default(),
        plant: PlantBlock::default(),
        planner: None,
        controller: None,
        reference,
        success: SuccessThresholds::default(),
    }
}

fn signed(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let m = rng.random_range(lo..hi);
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

/// Random cart goals relative to the initial cart pose: forward offset in
/// [-0.5, 1.5] m, lateral offset in ±[0.3, 1.0] m, heading change in
/// ±[π/4, π]. Runs use the LF planner with the static pose preset.
pub fn generate_static_pose_suite(seed: u64, n: usize) -> Vec<ScenarioSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = InitialState::default();
    let c0 = initial.cart_pose(&PlantBlock::default().geometry);
    (0..n)
        .map(|i| {
            let dx = rng.random_range(-0.5..1.5);
            let dy = signed(&mut rng, 0.3, 1.0);
            let dth = signed(&mut rng, FRAC_PI_4, PI);
            let goal = c0.compose(&Pose2::new(dx, dy, dth));
            let mut spec = base_spec(
                format!("pose-{i:02}"),
                seed,
                40.0,
                ReferenceBlock::StaticPose {
                    goal: [goal.x, goal.y, goal.theta],
                },
            );
            spec.planner = Some(PlannerProblem::static_pose(PlannerVariant::Lf));
            spec
        })
        .collect()
}

/// One LF run per trajectory kind.
pub fn generate_trajectory_suite(seed: u64) -> Vec<ScenarioSpec> {
    TrajectoryKind::ALL
        .into_iter()
        .map(|shape| {
            let params = TrajectoryParams {
                seed,
                ..Default::default()
            };
            let mut spec = base_spec(
                shape.name().to_string(),
                seed,
                params.duration + 5.0,
                ReferenceBlock::Trajectory { shape, params },
            );
            spec.planner = Some(PlannerProblem::new(PlannerVariant::Lf));
            spec
        })
        .collect()
}

fn payload(mass: f64) -> DisturbanceSpec {
    let terms = if mass == 0.0 {
        Vec::new()
    } else {
        vec![DisturbanceTerm::Payload { mass, lever: 0.4 }]
    };
    DisturbanceSpec::new(terms)
}

fn payload_base(seed: u64, masses: &[f64]) -> Vec<ScenarioSpec> {
    let z0 = InitialState::default().local;
    let steps: Vec<LocalStep> = PAYLOAD_STEPS
        .iter()
        .map(|&(t, th1)| LocalStep {
            t,
            z: [th1, z0[1], z0[2]],
        })
        .collect();
    masses
        .iter()
        .map(|&mass| {
            let mut spec = base_spec(
                format!("payload-{mass}kg"),
                seed,
                15.0,
                ReferenceBlock::LocalSteps {
                    steps: steps.clone(),
                    settle: 1.0,
                },
            );
            spec.plant.dynamic.disturbances = payload(mass);
            spec.controller = Some(ControllerConfig::default());
            spec
        })
        .collect()
}

fn impact_base(seed: u64) -> ScenarioSpec {
    let mut spec = base_spec(
        "impact".into(),
        seed,
        8.0,
        ReferenceBlock::LocalSteps {
            steps: Vec::new(),
            settle: 1.0,
        },
    );
    spec.initial.local[0] = 0.3;
    spec.plant.dynamic.disturbances = DisturbanceSpec::new(vec![DisturbanceTerm::Impulse {
        channel: Channel::Theta1,
        force: 200.0,
        lever: 0.4,
        start: 2.0,
        duration: 0.1,
    }]);
    spec.controller = Some(ControllerConfig::default());
    spec
}

/// Ten waypoints on a gentle zigzag ahead of the initial cart pose.
pub fn arm_failure_waypoints() -> Vec<[f64; 3]> {
    let c0 = InitialState::default().cart_pose(&PlantBlock::default().geometry);
    (1..=10)
        .map(|i| {
            let phase = i as f64 * PI / 3.0;
            let slope = 0.3 * (PI / 3.0) / 0.6 * phase.cos();
            let w = c0.compose(&Pose2::new(0.6 * i as f64, 0.3 * phase.sin(), slope.atan()));
            [w.x, w.y, w.theta]
        })
        .collect()
}

/// Waypoint following while the right arm is disabled: the left arm
/// carries all compensation at half torque.
fn arm_failure_base(seed: u64, masses: &[f64]) -> Vec<ScenarioSpec> {
    let points = arm_failure_waypoints();
    masses
        .iter()
        .map(|&mass| {
            let mut spec = base_spec(
                format!("arm-failure-{mass}kg"),
                seed,
                30.0,
                ReferenceBlock::Waypoints {
                    points: points.clone(),
                    speed: 0.3,
                },
            );
            spec.plant.dynamic.disturbances = payload(mass);
            spec.planner = Some(PlannerProblem::new(PlannerVariant::Lf));
            let mut c = ControllerConfig::default();
            c.eta = 1.0;
            c.failed_arm = Some(ArmSide::Right);
            c.torque_limit = c.torque_limit.map(|t| t / 2.0);
            spec.controller = Some(c);
            spec.log_every = 10;
            spec
        })
        .collect()
}

fn over_planners(base: Vec<ScenarioSpec>, planners: &[PlannerVariant]) -> Vec<ScenarioSpec> {
    planners
        .iter()
        .flat_map(|&v| base.iter().cloned().map(move |s| s.with_planner_variant(v)))
        .collect()
}

fn over_controllers(base: Vec<ScenarioSpec>, controllers: &[ControllerKind]) -> Vec<ScenarioSpec> {
    base.into_iter()
        .flat_map(|s| {
            controllers.iter().map(move |&k| {
                let mut s = s.clone();
                s.controller.get_or_insert_with(ControllerConfig::default);
                s.with_controller_kind(k)
            })
        })
        .collect()
}

fn over_payloads(base: Vec<ScenarioSpec>, masses: &[f64]) -> Vec<ScenarioSpec> {
    base.into_iter()
        .flat_map(|s| {
            masses.iter().map(move |&m| {
                let mut s = s.clone().with_payload(m);
                s.name = format!("{}-{m}kg", s.name);
                s
            })
        })
        .collect()
}

/// Expands loaded scenarios over the selected variants and applies the
/// duration override. Planner lists only affect scenarios with a planner.
pub fn expand_scenarios(specs: Vec<ScenarioSpec>, opts: &SuiteOptions) -> Vec<ScenarioSpec> {
    let mut out = Vec::new();
    for spec in specs {
        let mut group = vec![spec];
        if let Some(p) = &opts.planners {
            if group[0].planner.is_some() {
                group = over_planners(group, p);
            }
        }
        if let Some(c) = &opts.controllers {
            group = over_controllers(group, c);
        }
        if let Some(m) = &opts.payloads {
            group = over_payloads(group, m);
        }
        out.extend(group);
    }
    if let Some(d) = opts.duration {
        for s in &mut out {
            s.duration = d;
        }
    }
    out
}

/// Every controller against every payload on a θ1 step-and-hold profile.
pub fn generate_control_payload_suite(seed: u64) -> Vec<ScenarioSpec> {
    Suite::ControlPayload.build(&SuiteOptions::seeded(seed))
}

/// Every controller holding θ1 = 0.3 through a 200 N, 0.1 s push at 2 s.
pub fn generate_impact_suite(seed: u64) -> Vec<ScenarioSpec> {
    Suite::Impact.build(&SuiteOptions::seeded(seed))
}

/// LF with every controller, with and without payload, right arm disabled.
pub fn generate_arm_failure_suite(seed: u64) -> Vec<ScenarioSpec> {
    Suite::ArmFailure.build(&SuiteOptions::seeded(seed))
}

/// Selection applied when a suite is built. `None` keeps the suite's
/// default set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteOptions {
    pub seed: u64,
    pub planners: Option<Vec<PlannerVariant>>,
    /// Controllers; on planner suites this adds arm control to every run.
    pub controllers: Option<Vec<ControllerKind>>,
    /// Payload masses, kg.
    pub payloads: Option<Vec<f64>>,
    pub duration: Option<f64>,
}

impl SuiteOptions {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Named batch of scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    StaticPoses,
    Trajectories,
    ControlPayload,
    Impact,
    ArmFailure,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::StaticPoses,
        Suite::Trajectories,
        Suite::ControlPayload,
        Suite::Impact,
        Suite::ArmFailure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::StaticPoses => "static-poses",
            Suite::Trajectories => "trajectories",
            Suite::ControlPayload => "control-payload",
            Suite::Impact => "impact",
            Suite::ArmFailure => "arm-failure",
        }
    }

    /// Scenarios of the suite with default selections.
    pub fn scenarios(self, seed: u64) -> Vec<ScenarioSpec> {
        self.build(&SuiteOptions::seeded(seed))
    }

    pub fn build(self, opts: &SuiteOptions) -> Vec<ScenarioSpec> {
        let seed = opts.seed;
        let all_planners = PlannerVariant::ALL.to_vec();
        let all_controllers = ControllerKind::ALL.to_vec();
        let planners = opts.planners.as_ref();
        let controllers = opts.controllers.as_ref();
        let masses = opts.payloads.as_deref();
        let mut specs = match self {
            Suite::StaticPoses | Suite::Trajectories => {
                let base = if self == Suite::StaticPoses {
                    generate_static_pose_suite(seed, 20)
                } else {
                    generate_trajectory_suite(seed)
                };
                let mut specs = over_planners(base, planners.unwrap_or(&all_planners));
                if let Some(c) = controllers {
                    specs = over_controllers(specs, c);
                }
                match masses {
                    Some(m) if controllers.is_some() => over_payloads(specs, m),
                    _ => specs,
                }
            }
            Suite::ControlPayload => over_controllers(
                payload_base(seed, masses.unwrap_or(&PAYLOAD_MASSES)),
                controllers.unwrap_or(&all_controllers),
            ),
            Suite::Impact => {
                let base = match masses {
                    Some(m) => over_payloads(vec![impact_base(seed)], m),
                    None => vec![impact_base(seed)],
                };
                over_controllers(base, controllers.unwrap_or(&all_controllers))
            }
            Suite::ArmFailure => {
                let base = arm_failure_base(seed, masses.unwrap_or(&[0.0, 22.2]));
                let base = match planners {
                    Some(p) => over_planners(base, p),
                    None => base,
                };
                over_controllers(base, controllers.unwrap_or(&all_controllers))
            }
        };
        if let Some(d) = opts.duration {
            for s in &mut specs {
                s.duration = d;
            }
        }
        specs
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}
