//! Marginal density, its derivatives and the survival function of `X_1`,
//! by inversion of the characteristic function.
//!
//! All four quantities reduce to damped oscillatory integrals
//!
//! ```text
//! I_k = integral_0^inf theta^k exp(-scale theta^alpha)
//!                      trig(theta x - b theta^alpha) d theta
//! ```
//!
//! with `b = scale * skew_tan`, namely `f = I_0(cos)/pi`,
//! `f' = -I_1(sin)/pi`, `f'' = -I_2(cos)/pi` and
//! `P(X_1 > x) = 1/2 - I_-1(sin)/pi`. The integrand is split at a point
//! where less than one oscillation has happened: the head (which contains
//! the `theta^(alpha-1)` cusp for alpha < 1 and the `1/theta` factor of the
//! survival kernel) goes to tanh-sinh, the rest is walked in panels of
//! roughly half an oscillation period, each integrated by adaptive
//! Gauss-Kronrod. Negative x is handled by mirroring the jump intensities.

use std::f64::consts::PI;

use thiserror::Error;

use crate::params::StableParams;
use crate::quad::{adaptive_gk, tanh_sinh};

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("input must be finite, got {0}")]
    NonFiniteInput(f64),
    #[error("derivative order {0} not supported (only 1 and 2)")]
    UnsupportedDerivative(u32),
    #[error("quadrature did not reach the target accuracy at x={x} (error estimate {err:.3e})")]
    QuadratureFailure { x: f64, err: f64 },
}

/// Absolute error above which a point evaluation is rejected...
const ABS_FAIL: f64 = 1e-7;
/// ...unless the value is large enough that this relative error is met.
const REL_FAIL: f64 = 1e-6;

#[derive(Clone, Copy)]
enum Trig {
    Cos,
    Sin,
}

/// `integral_0^inf theta^k damp * trig(phase) d theta` with the split
/// described in the module docs, plus the achieved error bound. `x` must
/// be nonnegative.
fn inv_integral(p: &StableParams, x: f64, k: i32, trig: Trig) -> Result<(f64, f64), DensityError> {
    let alpha = p.alpha;
    let gamma = p.scale;
    let b = gamma * p.skew_tan;

    let integrand = move |theta: f64| -> f64 {
        let ta = theta.powf(alpha);
        let phase = theta * x - b * ta;
        let osc = match trig {
            Trig::Cos => phase.cos(),
            Trig::Sin => phase.sin(),
        };
        theta.powi(k) * (-gamma * ta).exp() * osc
    };

    // Beyond this point the damping factor is below exp(-50).
    let cap = (50.0 / gamma).powf(1.0 / alpha);
    // Within the head, |theta x| < 1 and |b theta^alpha| < pi: at most one
    // oscillation, so tanh-sinh converges fast and absorbs the cusp at 0.
    let head_end = cap
        .min(1.0 / (1.0 + x))
        .min((PI / (1.0 + b.abs())).powf(1.0 / alpha));

    let (head, head_err) = tanh_sinh(&integrand, 0.0, head_end, 1e-13, 1e-12);
    let mut total = head;
    let mut err = head_err;

    let mut theta = head_end;
    let mut panels = 0usize;
    while theta < cap {
        let freq = x + b.abs() * alpha * theta.powf(alpha - 1.0);
        let width = if freq > 0.0 { PI / freq } else { f64::INFINITY };
        let hi = (theta + width.max(cap * 1e-4)).min(cap);
        let r = adaptive_gk(&integrand, theta, hi, 1e-13, 1e-13, 8);
        total += r.value;
        err += r.abs_err;
        theta = hi;
        panels += 1;
        if panels > 400_000 {
            return Err(DensityError::QuadratureFailure { x, err });
        }
    }

    // Truncation bound: incomplete-gamma estimate of the discarded tail
    // (valid for k >= -1, where the u-substituted exponent is nonnegative).
    err += 3.0 * cap.powi(k + 1) * (-50.0f64).exp() / (50.0 * alpha);

    if err > ABS_FAIL && err > REL_FAIL * total.abs() {
        return Err(DensityError::QuadratureFailure { x, err });
    }
    // A value indistinguishable from zero is zero (keeps densities
    // nonnegative where the true value underflows the quadrature noise).
    if total.abs() <= err {
        total = 0.0;
    }
    Ok((total, err))
}

fn check_finite(x: f64) -> Result<(), DensityError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(DensityError::NonFiniteInput(x))
    }
}

/// Density of `X_1` at any real `x`.
pub fn density_f(p: &StableParams, x: f64) -> Result<f64, DensityError> {
    Ok(density_f_with_err(p, x)?.0)
}

/// Density of `X_1` together with the quadrature's achieved absolute error
/// bound.
pub fn density_f_with_err(p: &StableParams, x: f64) -> Result<(f64, f64), DensityError> {
    check_finite(x)?;
    if x < 0.0 {
        return density_f_with_err(&p.mirrored(), -x);
    }
    let (v, err) = inv_integral(p, x, 0, Trig::Cos)?;
    Ok(((v / PI).max(0.0), err / PI))
}

/// k-th derivative of the density of `X_1`, k in {1, 2}.
pub fn density_f_derivative(p: &StableParams, x: f64, k: u32) -> Result<f64, DensityError> {
    check_finite(x)?;
    if x < 0.0 {
        // f(x) = f_mirror(-x), so odd orders flip sign.
        let v = density_f_derivative(&p.mirrored(), -x, k)?;
        return Ok(if k % 2 == 1 { -v } else { v });
    }
    match k {
        1 => Ok(-inv_integral(p, x, 1, Trig::Sin)?.0 / PI),
        2 => Ok(-inv_integral(p, x, 2, Trig::Cos)?.0 / PI),
        other => Err(DensityError::UnsupportedDerivative(other)),
    }
}

/// `P(X_1 > x)` for any real `x`. At `x = 0` this equals the positivity
/// parameter `rho`.
pub fn survival_x1(p: &StableParams, x: f64) -> Result<f64, DensityError> {
    check_finite(x)?;
    if x < 0.0 {
        return Ok(1.0 - survival_x1(&p.mirrored(), -x)?);
    }
    let v = 0.5 - inv_integral(p, x, -1, Trig::Sin)?.0 / PI;
    Ok(v.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_params;
    use approx::assert_relative_eq;

    fn cauchy() -> StableParams {
        validate_params(1.0, 1.0 / PI, 1.0 / PI).unwrap()
    }

    #[test]
    fn cauchy_closed_form_values() {
        let p = cauchy();
        assert_relative_eq!(density_f(&p, 0.0).unwrap(), 1.0 / PI, max_relative = 1e-10);
        assert_relative_eq!(
            density_f(&p, 1.0).unwrap(),
            1.0 / (2.0 * PI),
            max_relative = 1e-10
        );
        assert_relative_eq!(
            density_f_derivative(&p, 1.0, 1).unwrap(),
            -1.0 / (2.0 * PI),
            max_relative = 1e-9
        );
        assert_relative_eq!(
            density_f_derivative(&p, 1.0, 2).unwrap(),
            1.0 / (2.0 * PI),
            max_relative = 1e-9
        );
        assert_relative_eq!(survival_x1(&p, 1.0).unwrap(), 0.25, max_relative = 1e-10);
        assert_relative_eq!(
            survival_x1(&p, 2.0).unwrap(),
            0.5 - 2.0f64.atan() / PI,
            max_relative = 1e-10
        );
        assert_relative_eq!(survival_x1(&p, -1.0).unwrap(), 0.75, max_relative = 1e-10);
    }

    #[test]
    fn survival_at_zero_recovers_positivity_parameter() {
        for &(alpha, cp, cm) in &[
            (1.5, 1.0, 0.3),
            (0.7, 1.0, 2.0),
            (1.2, 0.0, 1.0),
            (1.9, 2.0, 0.5),
            (0.4, 0.6, 1.7),
        ] {
            let p = validate_params(alpha, cp, cm).unwrap();
            assert_relative_eq!(survival_x1(&p, 0.0).unwrap(), p.rho, max_relative = 1e-9);
        }
    }

    #[test]
    fn survival_slope_matches_density() {
        for &(alpha, cp, cm) in &[(1.5, 1.0, 0.3), (0.8, 0.5, 1.0)] {
            let p = validate_params(alpha, cp, cm).unwrap();
            for &x in &[0.3, 1.7] {
                let h = 1e-4;
                let slope = (survival_x1(&p, x - h).unwrap() - survival_x1(&p, x + h).unwrap())
                    / (2.0 * h);
                assert_relative_eq!(slope, density_f(&p, x).unwrap(), max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = validate_params(1.3, 1.0, 0.4).unwrap();
        let h = 1e-4;
        for &x in &[0.5, 2.0] {
            let d1 = (density_f(&p, x + h).unwrap() - density_f(&p, x - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(
                d1,
                density_f_derivative(&p, x, 1).unwrap(),
                max_relative = 1e-6
            );
            let d2 = (density_f_derivative(&p, x + h, 1).unwrap()
                - density_f_derivative(&p, x - h, 1).unwrap())
                / (2.0 * h);
            assert_relative_eq!(
                d2,
                density_f_derivative(&p, x, 2).unwrap(),
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn right_tail_approaches_jump_intensity() {
        // x^(alpha+1) f(x) -> c_plus as x -> infinity.
        let p = validate_params(1.5, 1.0, 0.3).unwrap();
        let x = 50.0f64;
        let scaled = density_f(&p, x).unwrap() * x.powf(p.alpha + 1.0);
        assert_relative_eq!(scaled, p.c_plus, max_relative = 0.02);

        // Without positive jumps the right tail is lighter than any power.
        let neg = validate_params(1.75, 0.0, 1.0).unwrap();
        assert!(density_f(&neg, 20.0).unwrap() < 1e-10);
    }

    #[test]
    fn symmetric_density_is_even() {
        let p = validate_params(1.5, 1.0, 1.0).unwrap();
        for &x in &[0.4, 1.1, 3.0] {
            assert_relative_eq!(
                density_f(&p, x).unwrap(),
                density_f(&p, -x).unwrap(),
                max_relative = 1e-12
            );
            assert_relative_eq!(
                density_f_derivative(&p, x, 1).unwrap(),
                -density_f_derivative(&p, -x, 1).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let p = cauchy();
        assert!(matches!(
            density_f(&p, f64::NAN),
            Err(DensityError::NonFiniteInput(_))
        ));
        assert!(matches!(
            density_f(&p, f64::INFINITY),
            Err(DensityError::NonFiniteInput(_))
        ));
        assert!(matches!(
            density_f_derivative(&p, 1.0, 3),
            Err(DensityError::UnsupportedDerivative(3))
        ));
        assert!(matches!(
            density_f_derivative(&p, 1.0, 0),
            Err(DensityError::UnsupportedDerivative(0))
        ));
    }
}
