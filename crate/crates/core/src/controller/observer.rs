use nalgebra::UnitComplex;
use serde::{Deserialize, Serialize};

use super::functions::{fal, geometric_error};
use crate::error::{ensure_finite, Error, Result};

/// Gains and shaping of the geometric observer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GobGains {
    pub l: [f64; 3],
    pub sigma: [f64; 3],
    pub delta: [f64; 3],
    pub xi_min: f64,
    pub xi_max: f64,
}

impl Default for GobGains {
    fn default() -> Self {
        Self {
            l: [30.0, 300.0, 1000.0],
            sigma: [0.9, 0.7, 0.5],
            delta: [0.01; 3],
            xi_min: -10.0,
            xi_max: 10.0,
        }
    }
}

impl GobGains {
    pub fn validate(&self) -> Result<()> {
        let ok = self.l.iter().all(|&l| l > 0.0)
            && self.sigma.iter().all(|&s| s > 0.0 && s <= 1.0)
            && self.delta.iter().all(|&d| d > 0.0)
            && self.xi_min <= self.xi_max;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("observer gains {self:?}")))
        }
    }
}

/// Disturbance observer for one angular channel, with the attitude
/// estimate kept on SO(2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GobState {
    pub r_hat: UnitComplex<f64>,
    pub omega_hat: f64,
    pub d_hat: f64,
    pub xi_hat: f64,
    pub b: f64,
    pub gains: GobGains,
}

impl GobState {
    pub fn new(theta: f64, b: f64, gains: GobGains) -> Self {
        Self {
            r_hat: UnitComplex::new(theta),
            omega_hat: 0.0,
            d_hat: 0.0,
            xi_hat: 0.0,
            b,
            gains,
        }
    }

    pub fn theta_hat(&self) -> f64 {
        self.r_hat.angle()
    }

    /// Advances the observer by `h` given the measured angle and the applied
    /// channel input `u`.
    pub fn step(&mut self, theta: f64, u: f64, h: f64) -> Result<()> {
        let g = &self.gains;
        let e = geometric_error(theta, self.theta_hat());
        let rate = self.omega_hat + g.l[0] * fal(e, g.sigma[0], g.delta[0]);
        let omega_dot = self.b * u + g.l[1] * fal(e, g.sigma[1], g.delta[1]) + self.d_hat;
        let d_dot = g.l[2] * fal(e, g.sigma[2], g.delta[2]);
        let r_hat = self.r_hat * UnitComplex::new(h * rate);
        let omega_hat = self.omega_hat + h * omega_dot;
        let d_hat = self.d_hat + h * d_dot;
        ensure_finite(&[r_hat.re, r_hat.im, omega_hat, d_hat], "geometric observer")?;
        self.r_hat = r_hat;
        self.r_hat.renormalize();
        self.omega_hat = omega_hat;
        self.d_hat = d_hat;
        self.xi_hat = d_hat.clamp(g.xi_min, g.xi_max);
        Ok(())
    }
}

/// Third-order linear extended state observer with bandwidth `omega_o`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsoState {
    pub z1: f64,
    pub z2: f64,
    /// Disturbance estimate.
    pub z3: f64,
    pub omega_o: f64,
    pub b: f64,
}

impl EsoState {
    pub fn new(y0: f64, b: f64, omega_o: f64) -> Self {
        Self {
            z1: y0,
            z2: 0.0,
            z3: 0.0,
            omega_o,
            b,
        }
    }

    pub fn gains(&self) -> [f64; 3] {
        let w = self.omega_o;
        [3.0 * w, 3.0 * w * w, w * w * w]
    }

    pub fn step(&mut self, y: f64, u: f64, h: f64) -> Result<()> {
        let [b1, b2, b3] = self.gains();
        let e = y - self.z1;
        let z1 = self.z1 + h * (self.z2 + b1 * e);
        let z2 = self.z2 + h * (self.z3 + self.b * u + b2 * e);
        let z3 = self.z3 + h * b3 * e;
        ensure_finite(&[z1, z2, z3], "extended state observer")?;
        (self.z1, self.z2, self.z3) = (z1, z2, z3);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Exact zero-order-hold double integrator `ÿ = b u + ξ(t)`.
    fn plant_step(y: &mut f64, v: &mut f64, acc: f64, h: f64) {
        *y += h * *v + 0.5 * h * h * acc;
        *v += h * acc;
    }

    #[test]
    fn gob_equilibrium_is_kept() {
        let mut g = GobState::new(0.4, 2.0, GobGains::default());
        for _ in 0..1000 {
            g.step(0.4, 0.0, 1e-3).unwrap();
        }
        assert_abs_diff_eq!(g.theta_hat(), 0.4, epsilon = 1e-15);
        assert_eq!((g.omega_hat, g.d_hat, g.xi_hat), (0.0, 0.0, 0.0));
    }

    #[test]
    fn gob_estimates_constant_disturbance() {
        let (mut y, mut v) = (0.2, 0.0);
        let mut g = GobState::new(0.2, 2.0, GobGains::default());
        let h = 1e-3;
        for _ in 0..2000 {
            g.step(y, 0.0, h).unwrap();
            plant_step(&mut y, &mut v, 0.5, h);
        }
        assert!((g.xi_hat - 0.5).abs() < 0.01, "xi_hat {}", g.xi_hat);
        assert!((g.r_hat.re.powi(2) + g.r_hat.im.powi(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gob_clip_pins_estimate() {
        let gains = GobGains {
            xi_min: -0.2,
            xi_max: 0.2,
            ..GobGains::default()
        };
        let (mut y, mut v) = (0.0, 0.0);
        let mut g = GobState::new(0.0, 2.0, gains);
        for _ in 0..3000 {
            g.step(y, 0.0, 1e-3).unwrap();
            plant_step(&mut y, &mut v, 0.5, 1e-3);
            assert!(g.xi_hat >= -0.2 && g.xi_hat <= 0.2);
        }
        assert_eq!(g.xi_hat, 0.2);
        assert!(g.d_hat > 0.4);
    }

    #[test]
    fn gob_with_linear_shaping_has_zero_steady_error() {
        let gains = GobGains {
            sigma: [1.0; 3],
            delta: [10.0; 3],
            l: [30.0, 300.0, 1000.0],
            ..GobGains::default()
        };
        let (mut y, mut v) = (0.0, 0.0);
        let mut g = GobState::new(0.0, 1.0, gains);
        for k in 0..20_000 {
            let u = 0.1 * (k as f64 * 1e-3).sin();
            g.step(y, u, 1e-3).unwrap();
            plant_step(&mut y, &mut v, u - 0.3, 1e-3);
        }
        assert_abs_diff_eq!(g.xi_hat, -0.3, epsilon = 1e-3);
    }

    #[test]
    fn eso_zero_is_fixed_point() {
        let mut e = EsoState::new(0.0, 5.0, 20.0);
        e.step(0.0, 0.0, 1e-3).unwrap();
        assert_eq!((e.z1, e.z2, e.z3), (0.0, 0.0, 0.0));
        assert_eq!(e.gains(), [60.0, 1200.0, 8000.0]);
    }

    #[test]
    fn eso_constant_disturbance_has_zero_steady_error() {
        let (mut y, mut v) = (0.4, 0.0);
        let mut e = EsoState::new(0.4, 5.0, 20.0);
        let h = 1e-3;
        for k in 0..10_000 {
            let u = 0.05 * (2.0 * k as f64 * h).cos() - 0.1;
            e.step(y, u, h).unwrap();
            plant_step(&mut y, &mut v, 5.0 * u + 0.7, h);
        }
        assert!((e.z3 - 0.7).abs() / 0.7 < 1e-3, "z3 {}", e.z3);
    }

    #[test]
    fn eso_ramp_lag_scales_with_bandwidth() {
        let lag = |w: f64| {
            let (mut y, mut v) = (0.0, 0.0);
            let mut e = EsoState::new(0.0, 1.0, w);
            let h = 1e-4;
            let slope = 2.0;
            for k in 0..100_000 {
                e.step(y, 0.0, h).unwrap();
                plant_step(&mut y, &mut v, slope * k as f64 * h, h);
            }
            (y - e.z1, slope * 10.0 - e.z3)
        };
        // final value of ω³/(s+ω)³ and s/(s+ω)³ against a ramp:
        // disturbance lag 3·slope/ω_o, output error slope/ω_o³
        for w in [10.0, 20.0] {
            let (out, dist) = lag(w);
            assert_abs_diff_eq!(dist, 3.0 * 2.0 / w, epsilon = 0.01);
            assert_abs_diff_eq!(out, 2.0 / (w * w * w), epsilon = 1e-4);
        }
    }
}
