use nalgebra::Matrix2;

/// Power-law error shaping: linear with slope `δ^(σ-1)` inside `|e| < δ`,
/// `|e|^σ sign(e)` outside.
#[inline]
pub fn fal(e: f64, sigma: f64, delta: f64) -> f64 {
    if e.abs() < delta {
        e / delta.powf(1.0 - sigma)
    } else {
        e.abs().powf(sigma) * e.signum()
    }
}

/// Han's time-optimal synthesis function with gain `r` and step `h`.
#[inline]
pub fn fhan(x1: f64, x2: f64, r: f64, h: f64) -> f64 {
    let d = r * h;
    let d0 = h * d;
    let y = x1 + h * x2;
    let a0 = (d * d + 8.0 * r * y.abs()).sqrt();
    let a = if y.abs() > d0 {
        x2 + 0.5 * (a0 - d) * y.signum()
    } else {
        x2 + y / h
    };
    if a.abs() > d {
        -r * a.signum()
    } else {
        -r * a / d
    }
}

fn so2(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Attitude error on SO(2): `½ (R̂ᵀR − RᵀR̂)^∨`, equal to `sin(θ − θ̂)`.
pub fn geometric_error(theta: f64, theta_hat: f64) -> f64 {
    let r = so2(theta);
    let r_hat = so2(theta_hat);
    let skew = 0.5 * (r_hat.transpose() * r - r.transpose() * r_hat);
    skew[(1, 0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

    #[test]
    fn fal_examples() {
        assert_eq!(fal(0.0, 0.5, 0.01), 0.0);
        assert_abs_diff_eq!(fal(0.01 - 1e-15, 0.5, 0.01), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(fal(0.01, 0.5, 0.01), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(fal(-4.0, 0.5, 0.01), -2.0, epsilon = 1e-15);
    }

    #[test]
    fn fhan_equilibrium_and_bound() {
        assert_eq!(fhan(0.0, 0.0, 100.0, 0.01), 0.0);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100_000 {
            let x1 = rng.random_range(-50.0..50.0);
            let x2 = rng.random_range(-50.0..50.0);
            let r = rng.random_range(0.1..500.0);
            let h = rng.random_range(1e-4..0.1);
            assert!(fhan(x1, x2, r, h).abs() <= r * (1.0 + 1e-12));
        }
    }

    #[test]
    fn geometric_error_examples() {
        assert_eq!(geometric_error(0.3, 0.3), 0.0);
        assert_abs_diff_eq!(geometric_error(FRAC_PI_2, 0.0), 1.0, epsilon = 1e-15);
        // R̂ = I, R = rot(π/6): ½(R − Rᵀ) has lower-left entry sin(π/6)
        assert_abs_diff_eq!(geometric_error(FRAC_PI_6, 0.0), 0.5, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn fal_is_odd_and_monotone(
            e in -10.0f64..10.0, de in 0.0f64..1.0,
            sigma in 0.05f64..=1.0, delta in 1e-4f64..1.0,
        ) {
            prop_assert_eq!(fal(-e, sigma, delta), -fal(e, sigma, delta));
            prop_assert!(fal(e + de, sigma, delta) >= fal(e, sigma, delta) - 1e-12);
        }

        #[test]
        fn fal_is_continuous_at_delta(sigma in 0.05f64..=1.0, delta in 1e-4f64..1.0) {
            let inside = delta / delta.powf(1.0 - sigma);
            let outside = delta.powf(sigma);
            prop_assert!((inside - outside).abs() < 1e-12);
            let eps = 1e-9 * delta;
            prop_assert!((fal(delta - eps, sigma, delta) - fal(delta + eps, sigma, delta)).abs() < 1e-6);
        }

        #[test]
        fn fhan_is_odd_and_saturated(x1 in -20.0f64..20.0, x2 in -20.0f64..20.0, r in 0.1f64..1000.0, h in 1e-4f64..0.1) {
            let f = fhan(x1, x2, r, h);
            prop_assert!(f.abs() <= r * (1.0 + 1e-12));
            prop_assert!((fhan(-x1, -x2, r, h) + f).abs() <= 1e-9 * r);
        }

        #[test]
        fn geometric_error_is_sine(a in -2.0 * PI..2.0 * PI, b in -2.0 * PI..2.0 * PI) {
            prop_assert!((geometric_error(a, b) - (a - b).sin()).abs() < 1e-12);
            prop_assert!(geometric_error(a, b).abs() <= 1.0);
        }
    }
}
