//! Characteristic exponent of the strictly stable law.
//!
//! With jump density `c_plus x^-(alpha+1)` on x > 0 and
//! `c_minus |x|^-(alpha+1)` on x < 0, the exponent in
//! `E exp(i theta X_1) = exp(psi(theta))` is
//!
//! ```text
//! psi(theta) = -scale * |theta|^alpha * (1 - i * skew_tan * sgn(theta))
//! ```
//!
//! where `scale` and `skew_tan` are precomputed in [`StableParams`].
//! [`char_exponent_numeric`] evaluates the defining jump-measure integral
//! directly (series near zero, oscillatory panels plus an integration-by-parts
//! tail on the rest) and exists to cross-check the closed form; it is three
//! orders of magnitude slower and should not be used in inner loops.

use num_complex::Complex64;

use crate::params::StableParams;
use crate::quad::gauss_legendre;

/// Complex scalar used throughout; both parts are finite for finite input.
pub type ComplexValue = Complex64;

/// Closed-form characteristic exponent `psi(theta)`.
pub fn char_exponent(p: &StableParams, theta: f64) -> ComplexValue {
    if theta == 0.0 {
        return ComplexValue::new(0.0, 0.0);
    }
    let mag = p.scale * theta.abs().powf(p.alpha);
    ComplexValue::new(-mag, mag * p.skew_tan * theta.signum())
}

/// Characteristic function `E exp(i theta X_1)`.
pub fn char_function(p: &StableParams, theta: f64) -> ComplexValue {
    char_exponent(p, theta).exp()
}

/// `integral_1^infinity exp(iu) u^-s du` for s > 1.
///
/// Summed over whole oscillation periods so panel errors stay tiny, then
/// closed with a three-term integration-by-parts expansion at the cutoff;
/// the truncated term is O(X^-(s+3)) relative to X^-s.
fn tail_oscillatory(s: f64) -> Complex64 {
    const PANELS: usize = 1600;
    let period = 2.0 * std::f64::consts::PI;
    let rule = gauss_legendre(16);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut left = 1.0f64;
    for _ in 0..PANELS {
        let right = left + period;
        let c = 0.5 * (left + right);
        let h = 0.5 * period;
        for (&t, &w) in rule.0.iter().zip(rule.1.iter()) {
            let u = c + h * t;
            acc += w * h * Complex64::new(0.0, u).exp() * u.powf(-s);
        }
        left = right;
    }
    let x = left;
    let phase = Complex64::new(0.0, x).exp();
    let tail = phase
        * Complex64::new(
            s * x.powf(-s - 1.0),
            x.powf(-s) - s * (s + 1.0) * x.powf(-s - 2.0),
        );
    acc + tail
}

/// `integral_0^infinity (exp(iu) - 1 [- iu]) u^-(alpha+1) du`, compensating
/// the `iu` term exactly when alpha > 1.
fn base_integral(alpha: f64) -> Complex64 {
    let k_min = if alpha > 1.0 { 2 } else { 1 };
    // Power series of exp(iu) integrated term by term on [0, 1].
    let mut series = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0); // i^k / k!
    for k in 1..=40 {
        term *= Complex64::new(0.0, 1.0) / k as f64;
        if k >= k_min {
            series += term / (k as f64 - alpha);
        }
    }
    let mut rest = tail_oscillatory(alpha + 1.0) - Complex64::new(1.0 / alpha, 0.0);
    if alpha > 1.0 {
        rest -= Complex64::new(0.0, 1.0 / (alpha - 1.0));
    }
    series + rest
}

/// Characteristic exponent evaluated from the jump measure itself.
///
/// Uses no trigonometric identities for the stable law, so agreement with
/// [`char_exponent`] checks the derived `scale`, `skew_tan` pair end to end.
/// Alpha = 1 is handled in its symmetric form (the only one accepted by
/// parameter validation).
pub fn char_exponent_numeric(p: &StableParams, theta: f64) -> ComplexValue {
    if theta == 0.0 {
        return ComplexValue::new(0.0, 0.0);
    }
    let t = theta.abs();
    let value = if p.alpha == 1.0 {
        // Symmetric case: odd parts of the integrand cancel, leaving
        // 2 c theta * integral_0^inf (cos u - 1) u^-2 du.
        let mut series = 0.0;
        let mut fact = 1.0f64; // (2m)!
        let mut sign = 1.0f64;
        for m in 1..=20 {
            fact *= ((2 * m - 1) * (2 * m)) as f64;
            sign = -sign;
            series += sign / (fact * (2 * m - 1) as f64);
        }
        let j = series + tail_oscillatory(2.0).re - 1.0;
        Complex64::new(2.0 * p.c_plus * t * j, 0.0)
    } else {
        let base = base_integral(p.alpha);
        t.powf(p.alpha) * (p.c_plus * base + p.c_minus * base.conj())
    };
    if theta > 0.0 {
        value
    } else {
        value.conj()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_params;
    use approx::assert_relative_eq;

    #[test]
    fn cauchy_unit_scale_pinned() {
        let p = validate_params(1.0, 1.0 / std::f64::consts::PI, 1.0 / std::f64::consts::PI)
            .unwrap();
        let psi = char_exponent(&p, 1.0);
        assert_relative_eq!(psi.re, -1.0, epsilon = 1e-12);
        assert_relative_eq!(psi.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn conjugate_symmetry_and_homogeneity() {
        let p = validate_params(1.3, 2.0, 0.7).unwrap();
        for &theta in &[0.2, 1.0, 3.7] {
            let plus = char_exponent(&p, theta);
            let minus = char_exponent(&p, -theta);
            assert_relative_eq!(plus.re, minus.re, epsilon = 1e-14);
            assert_relative_eq!(plus.im, -minus.im, epsilon = 1e-14);

            let lam = 2.5f64;
            let scaled = char_exponent(&p, lam * theta);
            let expected = lam.powf(p.alpha) * plus;
            assert_relative_eq!(scaled.re, expected.re, max_relative = 1e-13);
            assert_relative_eq!(scaled.im, expected.im, max_relative = 1e-13);
        }
    }

    #[test]
    fn numeric_jump_integral_matches_closed_form() {
        let cases = [
            (0.5, 1.0, 0.4),
            (0.8, 0.3, 1.1),
            (1.0, 0.7, 0.7),
            (1.2, 1.0, 0.2),
            (1.5, 1.0, 1.0),
            (1.75, 0.0, 1.0),
            (1.9, 2.0, 0.5),
        ];
        for &(alpha, cp, cm) in &cases {
            let p = validate_params(alpha, cp, cm).unwrap();
            for &theta in &[0.3, 1.0, 2.7, -1.3] {
                let closed = char_exponent(&p, theta);
                let numeric = char_exponent_numeric(&p, theta);
                let tol = 1e-8 * closed.norm().max(1.0);
                assert!(
                    (closed - numeric).norm() <= tol,
                    "alpha={alpha} cp={cp} cm={cm} theta={theta}: closed={closed} numeric={numeric}"
                );
            }
        }
    }

    #[test]
    fn char_function_modulus_decays() {
        let p = validate_params(1.5, 1.0, 0.3).unwrap();
        let lo = char_function(&p, 0.5).norm();
        let hi = char_function(&p, 2.0).norm();
        assert!(hi < lo && lo < 1.0);
        assert_relative_eq!(char_function(&p, 0.0).re, 1.0, epsilon = 1e-15);
    }
}
