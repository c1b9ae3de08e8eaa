use nalgebra::Vector3;
use rayon::prelude::*;

use super::log::LogRow;
use super::metrics::{ImpactMetrics, MetricsReport, RunFlags, SolveSummary};
use super::scenario::{LocalStep, ReferenceBlock, ScenarioSpec};
use super::trajectory::generate_reference_trajectory;
use crate::controller::{ControlOutput, Controller, LocalState};
use crate::error::{Error, Result};
use crate::geometry::{cart_pose_from_base, wrap_angle, ArmGeometry, LocalCoords, Pose2};
use crate::kinematics::BaseCommands;
use crate::planner::{
    interpolate_pose, sample_trajectory, static_window, window_from_trajectory, Planner, ReferencePoint, TimedPose,
    WaypointTracker,
};
use crate::simulator::{Channel, DisturbanceTerm, DynamicLocalPlant, KinematicPlant};

/// Simulator and controller step, s.
pub const SIM_STEP: f64 = 1e-3;
/// Planner period, s.
pub const PLANNER_PERIOD: f64 = 0.1;
const STEPS_PER_TICK: usize = 100;
/// Band on |e_θ1| that ends an impact recovery, rad.
pub const RECOVERY_BAND: f64 = 0.02;

enum Reference {
    Static(Pose2),
    Waypoints { tracker: WaypointTracker, path: Vec<Pose2> },
    Trajectory(Vec<TimedPose>),
    Local { steps: Vec<LocalStep>, settle: f64 },
}

/// Closest point of a polyline, with interpolated heading.
fn nearest_on_path(path: &[Pose2], p: &Pose2) -> Pose2 {
    if path.len() == 1 {
        return path[0];
    }
    let mut best = (f64::INFINITY, path[0]);
    for w in path.windows(2) {
        let d = w[1].position() - w[0].position();
        let len2 = d.norm_squared();
        let s = if len2 > 0.0 {
            ((p.position() - w[0].position()).dot(&d) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = interpolate_pose(&w[0], &w[1], s);
        let dist = q.distance(p);
        if dist < best.0 {
            best = (dist, q);
        }
    }
    best.1
}

impl Reference {
    fn build(spec: &ScenarioSpec, geom: &ArmGeometry) -> Result<Self> {
        let cart0 = spec.initial.cart_pose(geom);
        let pose = |a: &[f64; 3]| Pose2::new(a[0], a[1], a[2]);
        Ok(match &spec.reference {
            ReferenceBlock::StaticPose { goal } => Reference::Static(pose(goal)),
            ReferenceBlock::Waypoints { points, speed } => {
                let pts: Vec<Pose2> = points.iter().map(pose).collect();
                let mut path = vec![cart0];
                path.extend_from_slice(&pts);
                Reference::Waypoints {
                    tracker: WaypointTracker::new(pts, *speed),
                    path,
                }
            }
            ReferenceBlock::Trajectory { shape, params } => {
                let local = generate_reference_trajectory(*shape, params)?;
                Reference::Trajectory(
                    local
                        .into_iter()
                        .map(|s| TimedPose {
                            t: s.t,
                            pose: cart0.compose(&s.pose),
                        })
                        .collect(),
                )
            }
            ReferenceBlock::LocalSteps { steps, settle } => Reference::Local {
                steps: steps.clone(),
                settle: *settle,
            },
        })
    }

    fn window(&mut self, t: f64, cart: &Pose2, dt: f64, n: usize) -> Vec<ReferencePoint> {
        match self {
            Reference::Static(goal) => static_window(goal, n),
            Reference::Waypoints { tracker, .. } => tracker.window(cart, dt, n),
            Reference::Trajectory(traj) => window_from_trajectory(traj, t, dt, n),
            Reference::Local { .. } => static_window(cart, n),
        }
    }

    /// Pose the cart is compared with at time `t`.
    fn compare_pose(&self, t: f64, cart: &Pose2) -> Pose2 {
        match self {
            Reference::Static(goal) => *goal,
            Reference::Waypoints { path, .. } => nearest_on_path(path, cart),
            Reference::Trajectory(traj) => sample_trajectory(traj, t),
            Reference::Local { .. } => *cart,
        }
    }

    /// Pose the final cart error is measured against.
    fn final_pose(&self, t: f64, cart: &Pose2) -> Pose2 {
        match self {
            Reference::Waypoints { path, .. } => path[path.len() - 1],
            _ => self.compare_pose(t, cart),
        }
    }
}

fn local_target(steps: &[LocalStep], z0: &Vector3<f64>, t: f64) -> Vector3<f64> {
    steps
        .iter()
        .rev()
        .find(|s| s.t <= t)
        .map(|s| Vector3::from(s.z))
        .unwrap_or(*z0)
}

fn local_error(z_d: &Vector3<f64>, z: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(wrap_angle(z_d[0] - z[0]), wrap_angle(z_d[1] - z[1]), z_d[2] - z[2])
}

struct Recorder {
    log_every: usize,
    rows: Vec<LogRow>,
    errors: Vec<f64>,
    local_sq: Vector3<f64>,
    local_n: usize,
    theta1_err: Vec<(f64, f64)>,
    prev_cart: Pose2,
    steps: usize,
}

struct StepRecord<'a> {
    t: f64,
    dt: f64,
    cart: Pose2,
    compare: Pose2,
    psi: LocalCoords,
    cmd: BaseCommands,
    control: Option<&'a ControlOutput>,
    local_err: Option<Vector3<f64>>,
    error: f64,
}

impl Recorder {
    fn new(log_every: usize, cart0: Pose2) -> Self {
        Self {
            log_every,
            rows: Vec::new(),
            errors: Vec::new(),
            local_sq: Vector3::zeros(),
            local_n: 0,
            theta1_err: Vec::new(),
            prev_cart: cart0,
            steps: 0,
        }
    }

    fn record(&mut self, r: StepRecord<'_>) {
        let (ex, ey, eth) = r.cart.error_in_frame_of(&r.compare);
        let d = r.cart.position() - self.prev_cart.position();
        let (s, c) = r.cart.theta.sin_cos();
        let v_c = (c * d.x + s * d.y) / r.dt;
        let omega_c = wrap_angle(r.cart.theta - self.prev_cart.theta) / r.dt;
        self.prev_cart = r.cart;
        if let Some(e) = r.local_err {
            self.local_sq += e.component_mul(&e);
            self.local_n += 1;
            self.theta1_err.push((r.t, e[0]));
        }
        self.errors.push(r.error);
        if self.steps.is_multiple_of(self.log_every) {
            let (xi, tau) = r
                .control
                .map(|o| (o.xi_hat, o.applied))
                .unwrap_or((Vector3::zeros(), Vector3::zeros()));
            self.rows.push(LogRow {
                t: r.t,
                x_c: r.cart.x,
                y_c: r.cart.y,
                theta_c: r.cart.theta,
                theta1: r.psi.theta1,
                theta2: r.psi.theta2,
                v_c,
                omega_c,
                v0: r.cmd.v0,
                omega0: r.cmd.omega0,
                e_x: ex,
                e_y: ey,
                e_theta: eth,
                xi_hat_theta1: xi[0],
                xi_hat_theta2: xi[1],
                xi_hat_r: xi[2],
                tau_theta1: tau[0],
                tau_theta2: tau[1],
                tau_r: tau[2],
            });
        }
        self.steps += 1;
    }
}

#[derive(Default)]
struct SolveAccumulator {
    summary: SolveSummary,
    iterations: usize,
    time: f64,
}

impl SolveAccumulator {
    fn add(&mut self, out: &crate::planner::PlanOutput) {
        let s = &mut self.summary;
        s.ticks += 1;
        s.nonconverged += usize::from(!out.stats.converged);
        s.clamped += usize::from(out.clamped);
        s.max_time_ms = s.max_time_ms.max(out.stats.wall_time * 1e3);
        self.iterations += out.stats.iterations;
        self.time += out.stats.wall_time;
    }

    fn finish(self) -> SolveSummary {
        let n = self.summary.ticks.max(1) as f64;
        SolveSummary {
            mean_iterations: self.iterations as f64 / n,
            mean_time_ms: self.time * 1e3 / n,
            ..self.summary
        }
    }
}

fn note_error(flags: &mut RunFlags, e: Error) {
    if matches!(e, Error::WorkspaceViolation(_)) {
        flags.workspace_violation = true;
    }
    flags.error = Some(e.to_string());
}

fn impact_metrics(spec: &ScenarioSpec, series: &[(f64, f64)]) -> Option<ImpactMetrics> {
    let (start, duration) = spec.plant.dynamic.disturbances.terms.iter().find_map(|t| match t {
        DisturbanceTerm::Impulse {
            channel: Channel::Theta1,
            start,
            duration,
            ..
        } => Some((*start, *duration)),
        _ => None,
    })?;
    let end = start + duration;
    let after: Vec<(f64, f64)> = series.iter().copied().filter(|(t, _)| *t >= start).collect();
    let (i_peak, &(_, e_peak)) = after
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.abs().total_cmp(&b.1 .1.abs()))?;
    let side = e_peak.signum();
    let overshoot = after[i_peak..].iter().map(|(_, e)| -side * e).fold(0.0, f64::max);
    let last_out = series.iter().rev().find(|(t, e)| *t >= end && e.abs() >= RECOVERY_BAND);
    let recovery_time = match last_out {
        None => Some(0.0),
        Some((t, _)) if *t < series.last()?.0 => Some(t + SIM_STEP - end),
        Some(_) => None,
    };
    Some(ImpactMetrics {
        window: [start, end],
        peak: e_peak.abs(),
        overshoot,
        recovery_time,
    })
}

fn steady_errors(steps: &[LocalStep], settle: f64, duration: f64, series_sq: &[(f64, Vector3<f64>)]) -> [f64; 3] {
    // holds end at each later switch and at the end of the run
    let mut holds: Vec<f64> = steps.iter().skip(1).map(|s| s.t).collect();
    holds.push(duration);
    let mut sum = Vector3::zeros();
    let mut n = 0usize;
    for (t, e) in series_sq {
        if holds.iter().any(|h| *t > h - settle && *t <= *h) {
            sum += e.abs();
            n += 1;
        }
    }
    let mean = sum / n.max(1) as f64;
    [mean[0], mean[1], mean[2]]
}

/// Runs one scenario in closed loop. Errors inside the loop stop the run and
/// are reported in the flags; they never propagate.
pub fn run_scenario(spec: &ScenarioSpec) -> (Vec<LogRow>, MetricsReport) {
    let mut report = MetricsReport {
        name: spec.name.clone(),
        planner: spec.planner.as_ref().map(|p| p.variant.name().to_string()),
        controller: spec.controller.as_ref().map(|c| c.kind.name().to_string()),
        ..Default::default()
    };
    match simulate(spec, &mut report) {
        Ok(log) => (log, report),
        Err(e) => {
            note_error(&mut report.flags, e);
            report.success = false;
            (Vec::new(), report)
        }
    }
}

fn simulate(spec: &ScenarioSpec, report: &mut MetricsReport) -> Result<Vec<LogRow>> {
    spec.validate()?;
    let geom = spec.plant.geometry;
    let init = spec.initial.whole_body();
    let grip = spec.initial.grip_span;
    let z0 = spec.initial_local();
    let mut reference = Reference::build(spec, &geom)?;
    let mut kin = KinematicPlant::new(spec.plant.kinematic, geom, init)?;
    let mut planner = spec.planner.clone().map(|p| Planner::new(p, geom)).transpose()?;
    let mut control = match &spec.controller {
        Some(c) => Some((
            Controller::new(c.clone(), geom, &LocalState::at(z0))?,
            DynamicLocalPlant::new(spec.plant.dynamic.clone(), LocalState::at(z0))?,
        )),
        None => None,
    };
    let mut rec = Recorder::new(spec.log_every, kin.cart_pose());
    let mut solve = SolveAccumulator::default();
    let mut flags = RunFlags::default();
    let mut local_abs: Vec<(f64, Vector3<f64>)> = Vec::new();
    let psi_of = |z: &Vector3<f64>| LocalCoords::new(z[0], z[1], z[2], grip);

    let outcome: Result<()> = (|| {
        match (&mut planner, &mut control) {
            (Some(planner), None) => {
                let n = planner.problem().horizon;
                let dt = planner.problem().dt;
                let ticks = (spec.duration / PLANNER_PERIOD).round() as usize;
                for k in 0..ticks {
                    let t = k as f64 * PLANNER_PERIOD;
                    let cart = kin.cart_pose();
                    let refs = reference.window(t, &cart, dt, n);
                    let out = planner.plan_tick(kin.state(), &refs)?;
                    solve.add(&out);
                    for _ in 0..STEPS_PER_TICK {
                        kin.step(&out.commands, SIM_STEP)?;
                    }
                    let t1 = t + PLANNER_PERIOD;
                    let cart = kin.cart_pose();
                    let compare = reference.compare_pose(t1, &cart);
                    rec.record(StepRecord {
                        t: t1,
                        dt: PLANNER_PERIOD,
                        cart,
                        compare,
                        psi: kin.state().psi,
                        cmd: *kin.applied(),
                        control: None,
                        local_err: None,
                        error: cart.distance(&compare),
                    });
                }
            }
            (planner, Some((ctl, dynamics))) => {
                // The planner closes its loop on the ideal kinematic model;
                // the controller tracks the planned local coordinates on the
                // arm dynamics.
                let steps = (spec.duration / SIM_STEP).round() as usize;
                let mut cmd = BaseCommands::default();
                for k in 0..steps {
                    let t = k as f64 * SIM_STEP;
                    let z_target = match (planner.as_mut(), &reference) {
                        (Some(planner), _) => {
                            if k % STEPS_PER_TICK == 0 {
                                let p = planner.problem();
                                let refs = reference.window(t, &kin.cart_pose(), p.dt, p.horizon);
                                let out = planner.plan_tick(kin.state(), &refs)?;
                                solve.add(&out);
                                cmd = out.commands;
                            }
                            let psi = &kin.state().psi;
                            Vector3::new(psi.theta1, psi.theta2, psi.reach)
                        }
                        (None, Reference::Local { steps, .. }) => local_target(steps, &z0, t),
                        (None, _) => z0,
                    };
                    let out = ctl.step(&z_target, dynamics.state(), SIM_STEP)?;
                    flags.saturated_steps += usize::from(out.saturated);
                    flags.adaptation_capped |= out.adaptation_capped;
                    dynamics.step(&out.applied, SIM_STEP)?;
                    if planner.is_some() {
                        kin.step(&cmd, SIM_STEP)?;
                    }
                    let psi = psi_of(&dynamics.state().z);
                    let t1 = t + SIM_STEP;
                    let cart = cart_pose_from_base(&kin.state().base, &psi, &geom);
                    let e_local = local_error(&z_target, &dynamics.state().z);
                    local_abs.push((t1, e_local));
                    let (compare, error) = if planner.is_some() {
                        let c = reference.compare_pose(t1, &cart);
                        (c, cart.distance(&c))
                    } else {
                        let c = cart_pose_from_base(&kin.state().base, &psi_of(&z_target), &geom);
                        (c, e_local[0].abs())
                    };
                    rec.record(StepRecord {
                        t: t1,
                        dt: SIM_STEP,
                        cart,
                        compare,
                        psi,
                        cmd: *kin.applied(),
                        control: Some(&out),
                        local_err: Some(e_local),
                        error,
                    });
                }
            }
            (None, None) => unreachable!("validated scenario has a planner or a controller"),
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        note_error(&mut flags, e);
    }

    let t_end = rec.steps as f64 * if control.is_some() { SIM_STEP } else { PLANNER_PERIOD };
    let cart = rec.prev_cart;
    let target = reference.final_pose(t_end, &cart);
    let target = if let Reference::Local { steps, .. } = &reference {
        cart_pose_from_base(&kin.state().base, &psi_of(&local_target(steps, &z0, t_end)), &geom)
    } else {
        target
    };
    let (ex, ey, eth) = cart.error_in_frame_of(&target);
    report.e_x_mm = ex * 1e3;
    report.e_y_mm = ey * 1e3;
    report.e_theta_deg = eth.to_degrees();
    let n = rec.errors.len().max(1) as f64;
    report.rmse = (rec.errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    report.max_error = rec.errors.iter().copied().fold(0.0, f64::max);
    let ln = rec.local_n.max(1) as f64;
    report.local_rmse = [
        (rec.local_sq[0] / ln).sqrt(),
        (rec.local_sq[1] / ln).sqrt(),
        (rec.local_sq[2] / ln).sqrt(),
    ];
    if let Reference::Local { steps, settle } = &reference {
        report.local_steady = steady_errors(steps, *settle, spec.duration, &local_abs);
    }
    report.impact = if control.is_some() {
        impact_metrics(spec, &rec.theta1_err)
    } else {
        None
    };
    let th = &spec.success;
    let clean = flags.error.is_none();
    report.success = clean
        && match &reference {
            Reference::Static(_) | Reference::Waypoints { .. } => {
                ex.hypot(ey) < th.position && eth.to_degrees().abs() < th.heading_deg
            }
            Reference::Trajectory(_) => report.max_error < th.divergence,
            Reference::Local { .. } => report.local_steady[0] < th.local,
        };
    report.steps = rec.steps;
    report.error_series = rec.errors;
    report.solve = solve.finish();
    report.flags = flags;
    Ok(rec.rows)
}

/// Runs scenarios on `jobs` worker threads, preserving input order.
pub fn run_suite(specs: &[ScenarioSpec], jobs: usize) -> Vec<(Vec<LogRow>, MetricsReport)> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build();
    match pool {
        Ok(pool) => pool.install(|| specs.par_iter().map(run_scenario).collect()),
        Err(_) => specs.iter().map(run_scenario).collect(),
    }
}
