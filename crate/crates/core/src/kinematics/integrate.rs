use nalgebra::SVector;

use crate::error::{Error, Result};
use crate::geometry::wrap_angle;

fn checked<const N: usize>(v: SVector<f64, N>) -> Result<SVector<f64, N>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::NonFinite("state derivative"))
    }
}

/// One classical RK4 step with the input held constant; components listed in
/// `angles` are wrapped afterwards.
pub fn integrate_rk4<const N: usize, U, F>(
    f: F,
    x: &SVector<f64, N>,
    u: &U,
    dt: f64,
    angles: &[usize],
) -> Result<SVector<f64, N>>
where
    F: Fn(&SVector<f64, N>, &U) -> Result<SVector<f64, N>>,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    let k1 = checked(f(x, u)?)?;
    let k2 = checked(f(&(x + k1 * (0.5 * dt)), u)?)?;
    let k3 = checked(f(&(x + k2 * (0.5 * dt)), u)?)?;
    let k4 = checked(f(&(x + k3 * dt), u)?)?;
    let mut next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    for &i in angles {
        next[i] = wrap_angle(next[i]);
    }
    Ok(next)
}

/// Forward Euler step `x + f(x, u) dt`, used inside the planner transcription.
pub fn integrate_euler<const N: usize, U, F>(
    f: F,
    x: &SVector<f64, N>,
    u: &U,
    dt: f64,
    angles: &[usize],
) -> Result<SVector<f64, N>>
where
    F: Fn(&SVector<f64, N>, &U) -> Result<SVector<f64, N>>,
{
    let mut next = x + checked(f(x, u)?)? * dt;
    for &i in angles {
        next[i] = wrap_angle(next[i]);
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{lf_derivative, unicycle_derivative, LFState, ModelParams, UnicycleCmd};
    use approx::assert_abs_diff_eq;
    use nalgebra::{Vector3, Vector5};

    fn unicycle(x: &Vector3<f64>, u: &UnicycleCmd) -> Result<Vector3<f64>> {
        Ok(unicycle_derivative(x, u))
    }

    #[test]
    fn zero_input_leaves_state_unchanged() {
        let x = Vector3::new(1.0, -2.0, 0.5);
        let y = integrate_rk4(unicycle, &x, &UnicycleCmd::default(), 0.1, &[2]).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn pure_rotation_is_exact() {
        let mut x = Vector3::zeros();
        let u = UnicycleCmd::new(0.0, 0.3);
        for _ in 0..10 {
            x = integrate_rk4(unicycle, &x, &u, 0.1, &[2]).unwrap();
        }
        assert_abs_diff_eq!(x[2], 0.3, epsilon = 1e-14);
    }

    #[test]
    fn wraps_angles() {
        let x = Vector3::new(0.0, 0.0, 3.1);
        let y = integrate_rk4(unicycle, &x, &UnicycleCmd::new(0.0, 1.0), 0.1, &[2]).unwrap();
        assert!(y[2] < 0.0);
    }

    #[test]
    fn non_finite_derivatives_are_reported() {
        let bad = |_: &Vector3<f64>, _: &()| Ok(Vector3::new(f64::NAN, 0.0, 0.0));
        assert_eq!(
            integrate_rk4(bad, &Vector3::zeros(), &(), 0.1, &[]),
            Err(Error::NonFinite("state derivative"))
        );
        assert!(integrate_rk4(unicycle, &Vector3::zeros(), &UnicycleCmd::default(), 0.0, &[]).is_err());
    }

    fn lf_rollout(dt: f64, t_end: f64) -> Vector5<f64> {
        let p = ModelParams::default();
        let u = UnicycleCmd::new(0.5, 0.0);
        let mut x = LFState::new(0.0, 0.0, 0.2, 0.6, -0.5).to_vector();
        let steps = (t_end / dt).round() as usize;
        for _ in 0..steps {
            x = integrate_rk4(|x, u| lf_derivative(&LFState::from_vector(x), u, &p), &x, &u, dt, &[]).unwrap();
        }
        x
    }

    #[test]
    fn richardson_ratio_is_fourth_order() {
        let reference = lf_rollout(0.0025, 4.0);
        let e1 = (lf_rollout(0.04, 4.0) - reference).norm();
        let e2 = (lf_rollout(0.02, 4.0) - reference).norm();
        let ratio = e1 / e2;
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }
}
