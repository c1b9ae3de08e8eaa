use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::models::Model;
use super::qp::solve_box_qp;
use crate::error::{Error, Result};
use crate::geometry::Pose2;

/// Iteration controls for the SQP loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Stop once the projected-gradient residual falls below this.
    pub kkt_tolerance: f64,
    /// Optional wall-clock budget per solve, seconds. `None` keeps the solve
    /// fully deterministic.
    pub time_budget: Option<f64>,
    /// Weight of the exterior penalty on soft bounds.
    pub penalty: f64,
    /// Number of negative-curvature escapes allowed per solve.
    pub max_escapes: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 40,
            kkt_tolerance: 1e-6,
            time_budget: None,
            penalty: 2000.0,
            max_escapes: 2,
        }
    }
}

/// Per-solve statistics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub cost: f64,
    pub kkt_residual: f64,
    pub converged: bool,
    pub timed_out: bool,
    pub escapes: usize,
    /// Accepted merit values, starting with the initial guess.
    pub cost_history: Vec<f64>,
    /// Measured solve time, seconds. Informational only.
    pub wall_time: f64,
}

/// Discrete optimal control problem transcribed by single shooting.
pub(crate) struct Ocp<'a> {
    pub model: &'a dyn Model,
    pub x0: Vec<f64>,
    pub refs: Vec<Pose2>,
    pub q: Vec<f64>,
    pub q_terminal: Vec<f64>,
    pub r: Vec<f64>,
    pub dt: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub penalty: f64,
}

pub(crate) struct Evaluation {
    pub cost: f64,
    pub residual: DVector<f64>,
    pub jacobian: Option<DMatrix<f64>>,
    pub states: Vec<DVector<f64>>,
}

impl Ocp<'_> {
    pub fn horizon(&self) -> usize {
        self.refs.len()
    }

    fn nvar(&self) -> usize {
        self.horizon() * self.model.nu()
    }

    pub fn lower(&self) -> DVector<f64> {
        DVector::from_fn(self.nvar(), |i, _| self.lo[i % self.model.nu()])
    }

    pub fn upper(&self) -> DVector<f64> {
        DVector::from_fn(self.nvar(), |i, _| self.hi[i % self.model.nu()])
    }

    pub fn evaluate(&self, u: &DVector<f64>, with_jacobian: bool) -> Result<Evaluation> {
        let (nx, nu, n) = (self.model.nx(), self.model.nu(), self.horizon());
        let nvar = n * nu;
        let mut rows: Vec<f64> = Vec::new();
        let mut jrows: Vec<DVector<f64>> = Vec::new();
        let mut x = DVector::from_column_slice(&self.x0);
        let mut sens = DMatrix::<f64>::zeros(nx, nvar);
        let mut states = vec![x.clone()];
        let w_pen = self.penalty.sqrt();

        for k in 0..n {
            let uk = &u.as_slice()[k * nu..(k + 1) * nu];
            let lin = self.model.rate(x.as_slice(), uk)?;

            for b in self.model.soft_bounds(x.as_slice(), uk) {
                let excess = b.value.abs() - b.limit;
                if excess > 0.0 {
                    rows.push(w_pen * excess);
                    if with_jacobian {
                        let s = w_pen * b.value.signum();
                        let mut row = sens.transpose() * &b.dx * s;
                        for j in 0..nu {
                            row[k * nu + j] += s * b.du[j];
                        }
                        jrows.push(row);
                    }
                }
            }
            for j in 0..nu {
                let w = self.r[j].sqrt();
                rows.push(w * uk[j]);
                if with_jacobian {
                    let mut row = DVector::zeros(nvar);
                    row[k * nu + j] = w;
                    jrows.push(row);
                }
            }

            let next = &x + &lin.f * self.dt;
            if with_jacobian {
                let mut s_next = &sens + (&lin.fx * &sens) * self.dt;
                for j in 0..nu {
                    let col = lin.fu.column(j) * self.dt;
                    let mut target = s_next.column_mut(k * nu + j);
                    target += col;
                }
                sens = s_next;
            }
            x = next;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("planner rollout"));
            }
            states.push(x.clone());

            let weights = if k + 1 == n { &self.q_terminal } else { &self.q };
            let (e, je) = self.model.error(x.as_slice(), &self.refs[k]);
            for i in 0..e.len() {
                let w = weights[i].sqrt();
                rows.push(w * e[i]);
                if with_jacobian {
                    jrows.push((je.row(i) * &sens).transpose() * w);
                }
            }
        }

        let residual = DVector::from_vec(rows);
        let jacobian = with_jacobian.then(|| DMatrix::from_fn(jrows.len(), nvar, |r, c| jrows[r][c]));
        Ok(Evaluation {
            cost: residual.norm_squared(),
            residual,
            jacobian,
            states,
        })
    }

    pub fn gradient(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let ev = self.evaluate(u, true)?;
        Ok(ev.jacobian.expect("requested").transpose() * ev.residual * 2.0)
    }
}

fn projected_residual(u: &DVector<f64>, g: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> f64 {
    (0..u.len())
        .map(|i| (u[i] - (u[i] - g[i]).clamp(lo[i], hi[i])).abs())
        .fold(0.0, f64::max)
}

pub(crate) struct SolveResult {
    pub u: DVector<f64>,
    pub states: Vec<DVector<f64>>,
    pub stats: SolveStats,
}

/// Gauss-Newton SQP with box-QP steps and an Armijo line search on the cost.
pub(crate) fn solve(ocp: &Ocp<'_>, init: DVector<f64>, settings: &SolverSettings) -> Result<SolveResult> {
    let start = Instant::now();
    let lo = ocp.lower();
    let hi = ocp.upper();
    if (0..lo.len()).any(|i| !(lo[i] <= hi[i])) {
        return Err(Error::Infeasible("input bounds are not ordered".into()));
    }
    let mut u = DVector::from_fn(init.len(), |i, _| init[i].clamp(lo[i], hi[i]));
    let mut ev = ocp.evaluate(&u, true)?;
    let mut stats = SolveStats {
        cost_history: vec![ev.cost],
        ..SolveStats::default()
    };
    let nvar = u.len();

    loop {
        let jac = ev.jacobian.take().expect("jacobian requested");
        let grad = jac.transpose() * &ev.residual * 2.0;
        stats.kkt_residual = projected_residual(&u, &grad, &lo, &hi);
        if stats.kkt_residual < settings.kkt_tolerance {
            match escape_direction(ocp, &u, &grad, &lo, &hi, settings, &stats)? {
                Some(next) => {
                    stats.escapes += 1;
                    u = next;
                    ev = ocp.evaluate(&u, true)?;
                    stats.cost_history.push(ev.cost);
                    continue;
                }
                None => {
                    stats.converged = true;
                    break;
                }
            }
        }
        if stats.iterations >= settings.max_iterations {
            break;
        }
        if let Some(budget) = settings.time_budget {
            if start.elapsed().as_secs_f64() > budget {
                stats.timed_out = true;
                break;
            }
        }
        stats.iterations += 1;

        let mut h = jac.transpose() * &jac * 2.0;
        let reg = 1e-8 * (1.0 + h.diagonal().amax());
        for i in 0..nvar {
            h[(i, i)] += reg;
        }
        let step = solve_box_qp(&h, &grad, &(&lo - &u), &(&hi - &u))?;
        let slope = grad.dot(&step);
        if slope >= 0.0 {
            stats.converged = stats.kkt_residual < 1e3 * settings.kkt_tolerance;
            break;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial = &u + &step * alpha;
            if let Ok(t) = ocp.evaluate(&trial, false) {
                if t.cost <= ev.cost + 1e-4 * alpha * slope {
                    accepted = Some(trial);
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some(next) = accepted else {
            stats.converged = stats.kkt_residual < 1e3 * settings.kkt_tolerance;
            break;
        };
        let previous = ev.cost;
        u = next;
        ev = ocp.evaluate(&u, true)?;
        stats.cost_history.push(ev.cost);
        if previous - ev.cost <= 1e-12 * (1.0 + previous) {
            stats.converged = true;
            let jac = ev.jacobian.as_ref().expect("jacobian requested");
            let grad = jac.transpose() * &ev.residual * 2.0;
            stats.kkt_residual = projected_residual(&u, &grad, &lo, &hi);
            break;
        }
    }

    stats.cost = ev.cost;
    stats.wall_time = start.elapsed().as_secs_f64();
    Ok(SolveResult {
        u,
        states: ev.states,
        stats,
    })
}

/// At a first-order stationary point, look for a direction of negative
/// curvature of the exact cost among the variables not pinned at bounds and
/// return the best improving point along it.
fn escape_direction(
    ocp: &Ocp<'_>,
    u: &DVector<f64>,
    grad: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    settings: &SolverSettings,
    stats: &SolveStats,
) -> Result<Option<DVector<f64>>> {
    if stats.escapes >= settings.max_escapes {
        return Ok(None);
    }
    let free: Vec<usize> = (0..u.len())
        .filter(|&i| {
            let pinned_lo = u[i] - lo[i] < 1e-9 && grad[i] > 0.0;
            let pinned_hi = hi[i] - u[i] < 1e-9 && grad[i] < 0.0;
            !(pinned_lo || pinned_hi)
        })
        .collect();
    if free.is_empty() {
        return Ok(None);
    }
    let eps = 1e-5;
    let m = free.len();
    let mut hess = DMatrix::<f64>::zeros(m, m);
    for (a, &i) in free.iter().enumerate() {
        let mut up = u.clone();
        let mut dn = u.clone();
        up[i] += eps;
        dn[i] -= eps;
        let gp = ocp.gradient(&up)?;
        let gm = ocp.gradient(&dn)?;
        for (b, &j) in free.iter().enumerate() {
            hess[(b, a)] = (gp[j] - gm[j]) / (2.0 * eps);
        }
    }
    let hess = (&hess + hess.transpose()) * 0.5;
    let eig = hess.symmetric_eigen();
    let (imin, lmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let scale = 1.0 + eig.eigenvalues.amax();
    if lmin > -1e-6 * scale {
        return Ok(None);
    }
    let v = eig.eigenvectors.column(imin);
    let mut dir = DVector::<f64>::zeros(u.len());
    for (a, &i) in free.iter().enumerate() {
        dir[i] = v[a];
    }
    let base = ocp.evaluate(u, false)?.cost;
    let mut best: Option<(f64, DVector<f64>)> = None;
    for sign in [1.0, -1.0] {
        let d = &dir * sign;
        let mut reach = f64::INFINITY;
        for i in 0..u.len() {
            if d[i] > 1e-12 {
                reach = reach.min((hi[i] - u[i]) / d[i]);
            } else if d[i] < -1e-12 {
                reach = reach.min((lo[i] - u[i]) / d[i]);
            }
        }
        let mut alpha = reach.min(10.0);
        for _ in 0..30 {
            let trial = u + &d * alpha;
            if let Ok(t) = ocp.evaluate(&trial, false) {
                if t.cost < base + 0.25 * lmin * alpha * alpha {
                    if best.as_ref().is_none_or(|(c, _)| t.cost < *c) {
                        best = Some((t.cost, trial));
                    }
                    break;
                }
            }
            alpha *= 0.5;
        }
    }
    Ok(best.map(|(_, u)| u))
}
