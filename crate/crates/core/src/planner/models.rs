use nalgebra::{DMatrix, DVector, Vector2, Vector5};

use crate::error::Result;
use crate::geometry::{heading, heading_perp, Pose2};
use crate::kinematics::{
    hitch_vectors, lf_chain_commands, tt_base_commands, BaseCommands, LFState, ModelParams, TTInput, TTState,
    UnicycleCmd, STEER_EPS,
};

/// Rate `f(x, u)` with its Jacobians.
#[derive(Debug, Clone)]
pub(crate) struct Linearization {
    pub f: DVector<f64>,
    pub fx: DMatrix<f64>,
    pub fu: DMatrix<f64>,
}

/// Scalar quantity `g(x, u)` that should satisfy `|g| ≤ limit`.
#[derive(Debug, Clone)]
pub(crate) struct SoftBound {
    pub value: f64,
    pub limit: f64,
    pub dx: DVector<f64>,
    pub du: DVector<f64>,
}

/// A transition model as seen by the shooting solver.
pub(crate) trait Model {
    fn nx(&self) -> usize;
    fn nu(&self) -> usize;
    fn rate(&self, x: &[f64], u: &[f64]) -> Result<Linearization>;
    /// Tracking residual against a stage reference and its state Jacobian.
    fn error(&self, x: &[f64], reference: &Pose2) -> (DVector<f64>, DMatrix<f64>);
    fn soft_bounds(&self, _x: &[f64], _u: &[f64]) -> Vec<SoftBound> {
        Vec::new()
    }
    /// Heading the references are unwrapped against.
    fn heading(&self, x: &[f64]) -> f64;
    fn clamp_input(&self, _u: &mut [f64]) {}
}

fn pose_error(x: &[f64], r: &Pose2, extra: &[usize], nx: usize) -> (DVector<f64>, DMatrix<f64>) {
    let ne = 3 + extra.len();
    let mut e = DVector::zeros(ne);
    let mut j = DMatrix::zeros(ne, nx);
    e[0] = x[0] - r.x;
    e[1] = x[1] - r.y;
    e[2] = x[2] - r.theta;
    for i in 0..3 {
        j[(i, i)] = 1.0;
    }
    for (k, &i) in extra.iter().enumerate() {
        e[3 + k] = x[i];
        j[(3 + k, i)] = 1.0;
    }
    (e, j)
}

fn set2(m: &mut DMatrix<f64>, col: usize, v: Vector2<f64>) {
    m[(0, col)] = v.x;
    m[(1, col)] = v.y;
}

/// Base-only model: the arms are frozen so the cart is a rigid extension of
/// the base. `offset` is the cart center in the base frame, `yaw` the fixed
/// heading difference `θ_c − θ_0`.
#[derive(Debug, Clone)]
pub(crate) struct NmpcModel {
    pub offset: Vector2<f64>,
    pub yaw: f64,
}

impl Model for NmpcModel {
    fn nx(&self) -> usize {
        3
    }
    fn nu(&self) -> usize {
        2
    }

    fn rate(&self, x: &[f64], u: &[f64]) -> Result<Linearization> {
        let th0 = x[2] - self.yaw;
        let (h, hp) = (heading(th0), heading_perp(th0));
        let (dx, dy) = (self.offset.x, self.offset.y);
        let pd = (u[0] - u[1] * dy) * h + u[1] * dx * hp;
        let mut fx = DMatrix::zeros(3, 3);
        fx[(0, 2)] = -pd.y;
        fx[(1, 2)] = pd.x;
        let mut fu = DMatrix::zeros(3, 2);
        set2(&mut fu, 0, h);
        set2(&mut fu, 1, -dy * h + dx * hp);
        fu[(2, 1)] = 1.0;
        Ok(Linearization {
            f: DVector::from_column_slice(&[pd.x, pd.y, u[1]]),
            fx,
            fu,
        })
    }

    fn error(&self, x: &[f64], r: &Pose2) -> (DVector<f64>, DMatrix<f64>) {
        pose_error(x, r, &[], 3)
    }

    fn heading(&self, x: &[f64]) -> f64 {
        x[2]
    }
}

/// Exact rate of the whole-body chain: base unicycle, Joint1 at `joint1_offset`
/// ahead of the base, Link1 of length `reach`, Link2 of length `cart_link`.
#[derive(Debug, Clone)]
pub(crate) struct WbModel {
    pub joint1_offset: f64,
    pub reach: f64,
    pub cart_link: f64,
    pub theta_limit: f64,
}

impl WbModel {
    fn parts(&self, x: &[f64], u: &[f64]) -> [Vector2<f64>; 6] {
        let (phi0, phi1, phic) = (x[2] - x[3] - x[4], x[2] - x[4], x[2]);
        let (a, r, l) = (self.joint1_offset, self.reach, self.cart_link);
        let w1 = u[1] + u[2];
        let wc = w1 + u[3];
        let a0 = u[0] * heading(phi0) + u[1] * a * heading_perp(phi0);
        let a1 = w1 * r * heading_perp(phi1);
        let a2 = wc * l * heading_perp(phic);
        let d0 = u[0] * heading_perp(phi0) - u[1] * a * heading(phi0);
        let d1 = -w1 * r * heading(phi1);
        let d2 = -wc * l * heading(phic);
        [a0, a1, a2, d0, d1, d2]
    }
}

impl Model for WbModel {
    fn nx(&self) -> usize {
        5
    }
    fn nu(&self) -> usize {
        4
    }

    fn rate(&self, x: &[f64], u: &[f64]) -> Result<Linearization> {
        let [a0, a1, a2, d0, d1, d2] = self.parts(x, u);
        let pd = a0 + a1 + a2;
        let (phi0, phi1, phic) = (x[2] - x[3] - x[4], x[2] - x[4], x[2]);
        let mut fx = DMatrix::zeros(5, 5);
        set2(&mut fx, 2, d0 + d1 + d2);
        set2(&mut fx, 3, -d0);
        set2(&mut fx, 4, -d0 - d1);
        let lc = self.cart_link * heading_perp(phic);
        let l1 = self.reach * heading_perp(phi1) + lc;
        let mut fu = DMatrix::zeros(5, 4);
        set2(&mut fu, 0, heading(phi0));
        set2(&mut fu, 1, self.joint1_offset * heading_perp(phi0) + l1);
        set2(&mut fu, 2, l1);
        set2(&mut fu, 3, lc);
        fu[(2, 1)] = 1.0;
        fu[(2, 2)] = 1.0;
        fu[(2, 3)] = 1.0;
        fu[(3, 2)] = 1.0;
        fu[(4, 3)] = 1.0;
        Ok(Linearization {
            f: DVector::from_column_slice(&[pd.x, pd.y, u[1] + u[2] + u[3], u[2], u[3]]),
            fx,
            fu,
        })
    }

    fn error(&self, x: &[f64], r: &Pose2) -> (DVector<f64>, DMatrix<f64>) {
        pose_error(x, r, &[3, 4], 5)
    }

    fn soft_bounds(&self, x: &[f64], _u: &[f64]) -> Vec<SoftBound> {
        workspace_bounds(x, &[3, 4], self.theta_limit, 4)
    }

    fn heading(&self, x: &[f64]) -> f64 {
        x[2]
    }
}

fn workspace_bounds(x: &[f64], idx: &[usize], limit: f64, nu: usize) -> Vec<SoftBound> {
    idx.iter()
        .map(|&i| {
            let mut dx = DVector::zeros(x.len());
            dx[i] = 1.0;
            SoftBound {
                value: x[i],
                limit,
                dx,
                du: DVector::zeros(nu),
            }
        })
        .collect()
}

fn rate_bound(lin: &Linearization, row: usize, limit: f64) -> SoftBound {
    SoftBound {
        value: lin.f[row],
        limit,
        dx: lin.fx.row(row).transpose(),
        du: lin.fu.row(row).transpose(),
    }
}

/// Whole-body rate of the chain (`ẋ_c, ẏ_c, θ̇_c, θ̇1, θ̇2`) for base and arm
/// commands, with the reach held fixed.
pub fn wb_transition(
    x: &Vector5<f64>,
    u: &BaseCommands,
    joint1_offset: f64,
    reach: f64,
    cart_link: f64,
) -> Vector5<f64> {
    let m = WbModel {
        joint1_offset,
        reach,
        cart_link,
        theta_limit: f64::INFINITY,
    };
    let r = m.rate(x.as_slice(), &u.to_array()).expect("whole-body rate is total");
    Vector5::from_column_slice(r.f.as_slice())
}

/// Truck-Trailer model with state `(x_c, y_c, θ0, θ1)` and input `(v_c, α)`.
#[derive(Debug, Clone)]
pub(crate) struct TtModel {
    pub params: ModelParams,
    pub v_max: f64,
    pub omega_max: f64,
    pub arm_rate_max: f64,
    pub theta_limit: f64,
}

impl Model for TtModel {
    fn nx(&self) -> usize {
        4
    }
    fn nu(&self) -> usize {
        2
    }

    fn rate(&self, x: &[f64], u: &[f64]) -> Result<Linearization> {
        let p = &self.params;
        let (v, alpha) = (u[0], u[1]);
        let t = alpha.tan();
        let sec2 = 1.0 + t * t;
        let k = p.reach / p.l1;
        let (s0, c0) = x[2].sin_cos();
        let (s1, c1) = x[3].sin_cos();
        let g = c1 + k * t * s1;
        let g_th1 = -s1 + k * t * c1;
        let g_a = k * s1 * sec2;
        let q = s1 - k * c1 * t;
        let xd = v * g * c0;
        let yd = v * g * s0;
        let th0d = v * q / p.l2;
        let th1d = v * t / p.l1 - th0d;
        let mut fx = DMatrix::zeros(4, 4);
        fx[(0, 2)] = -yd;
        fx[(1, 2)] = xd;
        fx[(0, 3)] = v * c0 * g_th1;
        fx[(1, 3)] = v * s0 * g_th1;
        fx[(2, 3)] = v * g / p.l2;
        fx[(3, 3)] = -v * g / p.l2;
        let mut fu = DMatrix::zeros(4, 2);
        fu[(0, 0)] = g * c0;
        fu[(1, 0)] = g * s0;
        fu[(2, 0)] = q / p.l2;
        fu[(3, 0)] = t / p.l1 - q / p.l2;
        fu[(0, 1)] = v * c0 * g_a;
        fu[(1, 1)] = v * s0 * g_a;
        let th0_a = -v * k * c1 * sec2 / p.l2;
        fu[(2, 1)] = th0_a;
        fu[(3, 1)] = v * sec2 / p.l1 - th0_a;
        Ok(Linearization {
            f: DVector::from_column_slice(&[xd, yd, th0d, th1d]),
            fx,
            fu,
        })
    }

    fn error(&self, x: &[f64], r: &Pose2) -> (DVector<f64>, DMatrix<f64>) {
        let mut e = DVector::zeros(4);
        let mut j = DMatrix::zeros(4, 4);
        e[0] = x[0] - r.x;
        e[1] = x[1] - r.y;
        e[2] = x[2] + x[3] - r.theta;
        e[3] = x[3];
        j[(0, 0)] = 1.0;
        j[(1, 1)] = 1.0;
        j[(2, 2)] = 1.0;
        j[(2, 3)] = 1.0;
        j[(3, 3)] = 1.0;
        (e, j)
    }

    fn soft_bounds(&self, x: &[f64], u: &[f64]) -> Vec<SoftBound> {
        let p = &self.params;
        let lin = self.rate(x, u).expect("tt rate");
        let (v, t) = (u[0], u[1].tan());
        let sec2 = 1.0 + t * t;
        let k = p.reach / p.l1;
        let (s1, c1) = x[3].sin_cos();
        let g = c1 + k * t * s1;
        let mut v0_dx = DVector::zeros(4);
        v0_dx[3] = v * (-s1 + k * t * c1);
        let v0_du = DVector::from_column_slice(&[g, v * k * s1 * sec2]);
        let mut out = vec![
            SoftBound {
                value: v * g,
                limit: self.v_max,
                dx: v0_dx,
                du: v0_du,
            },
            rate_bound(&lin, 2, self.omega_max),
            rate_bound(&lin, 3, self.arm_rate_max),
        ];
        out.extend(workspace_bounds(x, &[3], self.theta_limit, 2));
        out
    }

    fn heading(&self, x: &[f64]) -> f64 {
        x[2] + x[3]
    }

    fn clamp_input(&self, u: &mut [f64]) {
        let lim = std::f64::consts::FRAC_PI_2 - 2.0 * STEER_EPS;
        u[1] = u[1].clamp(-lim, lim);
    }
}

/// Leader-Follower model with state `(x_c, y_c, θ_c, θ1, θ2)` and input `μ_c`.
/// Base rates follow the LF hitch construction; arm rates are the ones that
/// keep the physical chain consistent with the commanded cart motion.
#[derive(Debug, Clone)]
pub(crate) struct LfModel {
    pub params: ModelParams,
    pub v_max: f64,
    pub omega_max: f64,
    pub arm_rate_max: f64,
    pub theta_limit: f64,
}

impl LfModel {
    fn hitch(&self, x: &[f64], u: &[f64]) -> (f64, f64, f64, f64, f64, f64) {
        let (wp, wm) = hitch_vectors(x[4], self.params.r_l);
        let mu = Vector2::new(u[0], u[1]);
        (wp.dot(&mu), wm.dot(&mu), wp.x, wp.y, wm.x, wm.y)
    }
}

impl Model for LfModel {
    fn nx(&self) -> usize {
        5
    }
    fn nu(&self) -> usize {
        2
    }

    fn rate(&self, x: &[f64], u: &[f64]) -> Result<Linearization> {
        let p = &self.params;
        let state = LFState {
            x_c: x[0],
            y_c: x[1],
            theta_c: x[2],
            theta1: x[3],
            theta2: x[4],
        };
        let b = lf_chain_commands(&state, &UnicycleCmd::new(u[0], u[1]), p)?;
        let (pp, mm, pv, pw, mv, mw) = self.hitch(x, u);
        let (s1, c1) = x[3].sin_cos();
        let (sc, cc) = x[2].sin_cos();
        let (rf, r) = (p.r_f, p.reach);
        let mut fx = DMatrix::zeros(5, 5);
        fx[(0, 2)] = -u[0] * sc;
        fx[(1, 2)] = u[0] * cc;
        fx[(3, 3)] = -pp * c1 / rf;
        fx[(3, 4)] = mm * s1 / rf + pp / r;
        fx[(4, 4)] = -pp / r;
        let mut fu = DMatrix::zeros(5, 2);
        fu[(0, 0)] = cc;
        fu[(1, 0)] = sc;
        fu[(2, 1)] = 1.0;
        fu[(3, 0)] = -pv * s1 / rf + mv / r;
        fu[(3, 1)] = mw / r - pw * s1 / rf;
        fu[(4, 0)] = -mv / r;
        fu[(4, 1)] = 1.0 - mw / r;
        Ok(Linearization {
            f: DVector::from_column_slice(&[u[0] * cc, u[0] * sc, u[1], b.omega1, b.omega2]),
            fx,
            fu,
        })
    }

    fn error(&self, x: &[f64], r: &Pose2) -> (DVector<f64>, DMatrix<f64>) {
        pose_error(x, r, &[3, 4], 5)
    }

    fn soft_bounds(&self, x: &[f64], u: &[f64]) -> Vec<SoftBound> {
        let (pp, mm, pv, pw, _, _) = self.hitch(x, u);
        let (s1, c1) = x[3].sin_cos();
        let rf = self.params.r_f;
        let mut v0_dx = DVector::zeros(5);
        v0_dx[3] = -pp * s1;
        v0_dx[4] = -mm * c1;
        let mut w0_dx = DVector::zeros(5);
        w0_dx[3] = pp * c1 / rf;
        w0_dx[4] = -mm * s1 / rf;
        let mut out = vec![
            SoftBound {
                value: pp * c1,
                limit: self.v_max,
                dx: v0_dx,
                du: DVector::from_column_slice(&[pv * c1, pw * c1]),
            },
            SoftBound {
                value: pp * s1 / rf,
                limit: self.omega_max,
                dx: w0_dx,
                du: DVector::from_column_slice(&[pv * s1 / rf, pw * s1 / rf]),
            },
        ];
        let lin = self.rate(x, u).expect("lf rate");
        out.push(rate_bound(&lin, 3, self.arm_rate_max));
        out.push(rate_bound(&lin, 4, self.arm_rate_max));
        out.extend(workspace_bounds(x, &[3, 4], self.theta_limit, 2));
        out
    }

    fn heading(&self, x: &[f64]) -> f64 {
        x[2]
    }
}

/// Whole-body commands for the first model input of a variant.
pub(crate) fn tt_commands(x: &[f64], u: &[f64], p: &ModelParams) -> Result<BaseCommands> {
    tt_base_commands(
        &TTState {
            x_c: x[0],
            y_c: x[1],
            theta0: x[2],
            theta1: x[3],
        },
        &TTInput::new(u[0], u[1]),
        p,
    )
}

pub(crate) fn lf_commands(x: &[f64], u: &[f64], p: &ModelParams) -> Result<BaseCommands> {
    lf_chain_commands(
        &LFState {
            x_c: x[0],
            y_c: x[1],
            theta_c: x[2],
            theta1: x[3],
            theta2: x[4],
        },
        &UnicycleCmd::new(u[0], u[1]),
        p,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{lf_derivative, tt_derivative};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_check(m: &dyn Model, x: &[f64], u: &[f64]) {
        let lin = m.rate(x, u).unwrap();
        let h = 1e-6;
        for i in 0..m.nx() {
            let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
            xp[i] += h;
            xm[i] -= h;
            let d = (m.rate(&xp, u).unwrap().f - m.rate(&xm, u).unwrap().f) / (2.0 * h);
            for r in 0..m.nx() {
                assert!(
                    (d[r] - lin.fx[(r, i)]).abs() < 1e-5,
                    "fx[{r},{i}] {} vs {}",
                    d[r],
                    lin.fx[(r, i)]
                );
            }
        }
        for j in 0..m.nu() {
            let (mut up, mut um) = (u.to_vec(), u.to_vec());
            up[j] += h;
            um[j] -= h;
            let d = (m.rate(x, &up).unwrap().f - m.rate(x, &um).unwrap().f) / (2.0 * h);
            for r in 0..m.nx() {
                assert!(
                    (d[r] - lin.fu[(r, j)]).abs() < 1e-5,
                    "fu[{r},{j}] {} vs {}",
                    d[r],
                    lin.fu[(r, j)]
                );
            }
        }
        let bounds = m.soft_bounds(x, u);
        for (b_idx, b) in bounds.iter().enumerate() {
            for i in 0..m.nx() {
                let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
                xp[i] += h;
                xm[i] -= h;
                let d = (m.soft_bounds(&xp, u)[b_idx].value - m.soft_bounds(&xm, u)[b_idx].value) / (2.0 * h);
                assert!((d - b.dx[i]).abs() < 1e-5, "bound {b_idx} dx[{i}]");
            }
            for j in 0..m.nu() {
                let (mut up, mut um) = (u.to_vec(), u.to_vec());
                up[j] += h;
                um[j] -= h;
                let d = (m.soft_bounds(x, &up)[b_idx].value - m.soft_bounds(x, &um)[b_idx].value) / (2.0 * h);
                assert!((d - b.du[j]).abs() < 1e-5, "bound {b_idx} du[{j}]");
            }
        }
    }

    fn sample(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(lo..hi)).collect()
    }

    fn lf() -> LfModel {
        LfModel {
            params: ModelParams::default(),
            v_max: 0.5,
            omega_max: 1.0,
            arm_rate_max: 1.5,
            theta_limit: 1.2,
        }
    }

    fn tt() -> TtModel {
        TtModel {
            params: ModelParams::default(),
            v_max: 0.5,
            omega_max: 1.0,
            arm_rate_max: 1.5,
            theta_limit: 1.2,
        }
    }

    fn wb() -> WbModel {
        WbModel {
            joint1_offset: 0.2,
            reach: 0.4,
            cart_link: 0.4,
            theta_limit: 1.2,
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let nmpc = NmpcModel {
            offset: Vector2::new(0.9, 0.1),
            yaw: 0.3,
        };
        for _ in 0..100 {
            fd_check(&nmpc, &sample(&mut rng, 3, -1.5, 1.5), &sample(&mut rng, 2, -1.0, 1.0));
            fd_check(&wb(), &sample(&mut rng, 5, -1.2, 1.2), &sample(&mut rng, 4, -1.0, 1.0));
            fd_check(&tt(), &sample(&mut rng, 4, -1.2, 1.2), &sample(&mut rng, 2, -0.8, 0.8));
            fd_check(&lf(), &sample(&mut rng, 5, -1.2, 1.2), &sample(&mut rng, 2, -1.0, 1.0));
        }
    }

    #[test]
    fn model_rates_match_kinematics() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let x = sample(&mut rng, 5, -1.0, 1.0);
            let u = sample(&mut rng, 2, -1.0, 1.0);
            let s = LFState::new(x[0], x[1], x[2], x[3], x[4]);
            let mu = UnicycleCmd::new(u[0], u[1]);
            let b = lf_chain_commands(&s, &mu, &ModelParams::default()).unwrap();
            let f = lf().rate(&x, &u).unwrap().f;
            let expected = [u[0] * x[2].cos(), u[0] * x[2].sin(), u[1], b.omega1, b.omega2];
            assert!((f - DVector::from_column_slice(&expected)).abs().max() < 1e-14);
            let reference = lf_derivative(&s, &UnicycleCmd::new(u[0], 0.0), &ModelParams::default()).unwrap();
            let f0 = lf().rate(&x, &[u[0], 0.0]).unwrap().f;
            assert!((Vector5::from_column_slice(f0.as_slice()) - reference).abs().max() < 1e-14);

            let x = sample(&mut rng, 4, -1.0, 1.0);
            let s = TTState::new(x[0], x[1], x[2], x[3]);
            let d = tt_derivative(&s, &TTInput::new(u[0], 0.5 * u[1]), &ModelParams::default()).unwrap();
            let f = tt().rate(&x, &[u[0], 0.5 * u[1]]).unwrap().f;
            assert!((f - DVector::from_column_slice(d.as_slice())).abs().max() < 1e-14);
        }
    }

    #[test]
    fn frozen_arms_move_cart_rigidly() {
        // ω1 = ω2 = 0 with the chain straight: the cart is a point 1.0 m
        // ahead of the base and turns with it.
        let x = Vector5::new(1.0, 0.0, 0.0, 0.0, 0.0);
        let d = wb_transition(&x, &BaseCommands::from_array([0.3, 0.5, 0.0, 0.0]), 0.2, 0.4, 0.4);
        assert_abs_diff_eq!(d, Vector5::new(0.3, 0.5, 0.5, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn joint1_rate_pivots_cart_about_arm_base() {
        // Base still, ω1 = 1: the cart center rotates about Joint1 at radius
        // R + L_c, so its velocity is perpendicular to the Joint1-cart line.
        let x = Vector5::new(1.0, 0.0, 0.6, 0.4, 0.2);
        let d = wb_transition(&x, &BaseCommands::from_array([0.0, 0.0, 1.0, 0.0]), 0.2, 0.4, 0.4);
        let joint2 = 0.4 * heading(0.4);
        let cart = joint2 + 0.4 * heading(0.6);
        let expected = Vector2::new(-cart.y, cart.x);
        assert_abs_diff_eq!(Vector2::new(d[0], d[1]), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(d[2], 1.0);
        assert_abs_diff_eq!(d[3], 1.0);
    }

    #[test]
    fn lf_commands_reproduce_lf_rate_in_whole_body_chain() {
        let p = ModelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let x = sample(&mut rng, 5, -1.0, 1.0);
            let u = [rng.random_range(-0.5..0.5), rng.random_range(-1.0..1.0)];
            let b = lf_commands(&x, &u, &p).unwrap();
            let xv = Vector5::from_column_slice(&x);
            let wb = wb_transition(&xv, &b, p.r_f, p.reach, p.cart_link);
            let lf = lf().rate(&x, &u).unwrap().f;
            assert!((wb - Vector5::from_column_slice(lf.as_slice())).abs().max() < 1e-12);
        }
    }
}
