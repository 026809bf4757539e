//! Exact relations tying the densities together: the supremum density as a
//! weighted fractional integral of the meander density (two independent
//! quadrature routes), the first-passage density as a rescaling of the
//! supremum density, and the direct marginal shortcut available when the
//! process has no positive jumps.

mod density_fn;

pub use density_fn::{DensityFn, TailDefaults};

use thiserror::Error;

use crate::density::{density_f, DensityError};
use crate::params::StableParams;
use crate::quad::{adaptive_gk, exp_sinh, gauss_jacobi_on, gauss_legendre, tanh_sinh};
use crate::table::DensityTable;

#[derive(Debug, Error)]
pub enum IdentityError {
    #[error("quadrature failed to converge at x = {x:.4e} (error estimate {err:.2e})")]
    QuadratureFailure { x: f64, err: f64 },
    #[error("wrong regime: {0}")]
    WrongRegime(String),
    #[error("unusable table: {0}")]
    BadTable(String),
    #[error("bad input: {0}")]
    BadInput(f64),
    #[error(transparent)]
    Density(#[from] DensityError),
}

const REL_TOL: f64 = 1e-7;
const ABS_TOL: f64 = 1e-12;

/// Fractional-integral weight in front of both convolution routes.
fn sin_rho_pi_over_pi(p: &StableParams) -> f64 {
    (p.rho * std::f64::consts::PI).sin() / std::f64::consts::PI
}

/// Partition refinement: segments shrink geometrically toward an endpoint
/// whose singular weight they do not absorb. A segment [u, v] is split at
/// 2v-1 while wider than twice its distance to 1, and at 2u while wider
/// than twice its distance to 0.
fn refine_unit_partition(mut cuts: Vec<f64>) -> Vec<f64> {
    cuts.retain(|&s| s > 0.0 && s < 1.0);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut open = vec![0.0];
    open.extend(cuts);
    open.push(1.0);
    let mut changed = true;
    let mut rounds = 0;
    while changed && rounds < 80 {
        changed = false;
        rounds += 1;
        let mut next = Vec::with_capacity(open.len() + 8);
        for w in open.windows(2) {
            let (u, v) = (w[0], w[1]);
            next.push(u);
            if v < 1.0 && v - u > 2.0 * (1.0 - v) + 1e-15 {
                next.push(2.0 * v - 1.0);
                changed = true;
            } else if u > 0.0 && v - u > 2.0 * u + 1e-15 {
                next.push(2.0 * u);
                changed = true;
            }
        }
        next.push(1.0);
        next.sort_by(|a, b| a.partial_cmp(b).unwrap());
        next.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        open = next;
    }
    open
}

/// One resolution level of the beta-route composite rule.
fn beta_route_pass(
    ptilde: &DensityFn,
    p: &StableParams,
    x: f64,
    cuts: &[f64],
    n_gl: usize,
    n_gj: usize,
) -> f64 {
    let rho = p.rho;
    let eta = p.eta;
    let e_r = ptilde.right_exponent();
    let c_r = ptilde.right_coef();
    // On the pure-extension region near s = 0 the integrand is an exact
    // Jacobi weight s^q times a smooth factor.
    let q = rho - 1.0 - eta * (1.0 + e_r);
    let g = |s: f64| s.powf(-eta) * ptilde.eval_ln(x.ln() - eta * s.ln()).exp();
    let gl = gauss_legendre(n_gl);
    let mut total = 0.0;
    let last = cuts.len() - 1;
    for (i, w) in cuts.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        if i == 0 && i + 1 == last {
            // Single segment spanning (0,1): both weights absorbed, the
            // remaining factor is the extension's smooth part.
            let rule = gauss_jacobi_on(-rho, q, 0.0, 1.0, n_gj);
            let fac = c_r * x.powf(e_r);
            total += rule.w.iter().sum::<f64>() * fac;
        } else if i == 0 {
            let rule = gauss_jacobi_on(0.0, q, 0.0, hi, n_gj);
            let fac = c_r * x.powf(e_r);
            for (&s, &wt) in rule.s.iter().zip(rule.w.iter()) {
                total += wt * fac * (1.0 - s).powf(-rho);
            }
        } else if i + 1 == last {
            let rule = gauss_jacobi_on(-rho, 0.0, lo, 1.0, n_gj);
            for (&s, &wt) in rule.s.iter().zip(rule.w.iter()) {
                total += wt * s.powf(rho - 1.0) * g(s);
            }
        } else {
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            let mut seg = 0.0;
            for (&node, &wt) in gl.0.iter().zip(gl.1.iter()) {
                let s = mid + half * node;
                seg += wt * s.powf(rho - 1.0) * (1.0 - s).powf(-rho) * g(s);
            }
            total += seg * half;
        }
    }
    total
}

/// Supremum density from the meander density through the beta-weighted
/// route: a composite Gauss-Jacobi rule on the unit interval, cut at the
/// images of the meander table's knots so every panel sees a smooth
/// integrand. The error estimate comes from doubling every rule order.
pub fn m_from_ptilde_beta(
    ptilde: &DensityFn,
    p: &StableParams,
    x: f64,
) -> Result<f64, IdentityError> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(IdentityError::BadInput(x));
    }
    // Knot y maps to s = (x/y)^alpha; only knots above x land inside (0,1).
    let cuts: Vec<f64> = ptilde
        .knots()
        .iter()
        .filter(|&&y| y > x)
        .map(|&y| (x / y).powf(p.alpha))
        .collect();
    let cuts = refine_unit_partition(cuts);
    let coarse = beta_route_pass(ptilde, p, x, &cuts, 12, 24);
    let fine = beta_route_pass(ptilde, p, x, &cuts, 24, 48);
    let err = (fine - coarse).abs();
    if err > REL_TOL * fine.abs().max(1e-300) && err > ABS_TOL {
        return Err(IdentityError::QuadratureFailure { x, err });
    }
    Ok((sin_rho_pi_over_pi(p) * fine).max(0.0))
}

/// Supremum density from the meander density through the shifted-power
/// route: substituting u = y^alpha - x^alpha makes the endpoint singularity
/// explicit, and the u-axis is integrated with double-exponential rules at
/// the ends and adaptive panels across the knot images.
pub fn m_from_ptilde_z(
    ptilde: &DensityFn,
    p: &StableParams,
    x: f64,
) -> Result<f64, IdentityError> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(IdentityError::BadInput(x));
    }
    let alpha = p.alpha;
    let eta = p.eta;
    let rho = p.rho;
    let xa = x.powf(alpha);
    let integrand = |u: f64| -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let ya = xa + u;
        let ln_y = eta * ya.ln();
        ptilde.eval_ln(ln_y).exp() * u.powf(-rho) * ya.powf(eta - 1.0)
    };

    let y_max = *ptilde.knots().last().unwrap();
    let u_edge = y_max.powf(alpha) - xa;
    let mut total = 0.0;
    let mut err_sum = 0.0;
    if u_edge <= 0.0 {
        // Entirely in the meander tail extension: one double-exponential
        // pass covers both the u^{-rho} endpoint and the power tail.
        let (v, e) = exp_sinh(&integrand, 1e-13, 1e-10);
        total = v;
        err_sum = e;
    } else {
        // Knot images above x, refined geometrically toward u = 0 so no
        // panel spans more than its distance to the singular endpoint.
        let mut cuts: Vec<f64> = ptilde
            .knots()
            .iter()
            .filter(|&&y| y > x && y < y_max)
            .map(|&y| y.powf(alpha) - xa)
            .collect();
        cuts.push(u_edge);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * u_edge);
        let mut refined = vec![cuts[0]];
        for w in cuts.windows(2) {
            let (mut lo, hi) = (w[0], w[1]);
            while hi - lo > 2.0 * lo {
                lo *= 2.0;
                refined.push(lo);
            }
            refined.push(hi);
        }

        let (head, e_head) = tanh_sinh(&integrand, 0.0, refined[0], 1e-13, 1e-10);
        total += head;
        err_sum += e_head;
        for w in refined.windows(2) {
            let r = adaptive_gk(&integrand, w[0], w[1], 1e-13, 1e-11, 6);
            total += r.value;
            err_sum += r.abs_err;
        }
        let tail = |v: f64| integrand(u_edge + v);
        let (t, e_tail) = exp_sinh(&tail, 1e-13, 1e-10);
        total += t;
        err_sum += e_tail;
    }
    if err_sum > REL_TOL * total.abs().max(1e-300) && err_sum > ABS_TOL {
        return Err(IdentityError::QuadratureFailure { x, err: err_sum });
    }
    let value = alpha * x.powf(alpha * rho - 1.0) * sin_rho_pi_over_pi(p) * eta * total;
    Ok(value.max(0.0))
}

/// First-passage density at level x: h_x(t) = eta x t^{-eta-1} m(x t^{-eta}).
/// Evaluated in the log domain so extreme t neither overflows nor turns
/// into inf * 0.
pub fn passage_density(
    m: &DensityFn,
    p: &StableParams,
    x: f64,
    t: f64,
) -> Result<f64, IdentityError> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(IdentityError::BadInput(x));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(IdentityError::BadInput(t));
    }
    let ln_u = x.ln() - p.eta * t.ln();
    let ln_h = p.eta.ln() + x.ln() - (p.eta + 1.0) * t.ln() + m.eval_ln(ln_u);
    Ok(ln_h.exp())
}

/// Survival of the passage time: P(T_x > t) = P(sup at unit time <= x t^{-eta}),
/// read off the supremum table's cumulative with its edge extensions and
/// normalized to unit mass.
pub fn passage_survival(
    m_table: &DensityTable,
    p: &StableParams,
    x: f64,
    t: f64,
) -> Result<f64, IdentityError> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(IdentityError::BadInput(x));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(IdentityError::BadInput(t));
    }
    let m = DensityFn::from_table(m_table, None, None, TailDefaults::supremum(p))?;
    let u = (x.ln() - p.eta * t.ln()).exp();
    Ok((m.cdf(u) / m.mass()).clamp(0.0, 1.0))
}

/// With no positive jumps the supremum density collapses onto the marginal:
/// m(x) = alpha f(x). Guarded so it cannot be misapplied.
pub fn spectrally_negative_m(p: &StableParams, x: f64) -> Result<f64, IdentityError> {
    if p.c_plus > 0.0 {
        return Err(IdentityError::WrongRegime(format!(
            "positive jump intensity {} is nonzero; the collapse m = alpha f needs one-sided \
             negative jumps",
            p.c_plus
        )));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(IdentityError::BadInput(x));
    }
    Ok(p.alpha * density_f(p, x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_params;
    use crate::table::{Provenance, TableMeta};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn power_ptilde(c: f64, e: f64, lo: f64, hi: f64, n: usize) -> DensityFn {
        let grid: Vec<f64> = (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect();
        let values: Vec<f64> = grid.iter().map(|&x| c * x.powf(e)).collect();
        let table = DensityTable::new(
            grid,
            values,
            None,
            TableMeta::new(Provenance::Analytic, "power"),
        )
        .unwrap();
        DensityFn::from_table(
            &table,
            None,
            None,
            TailDefaults {
                left: 0.75,
                right: e,
            },
        )
        .unwrap()
    }

    /// Smooth meander-shaped test density with exact edge powers.
    fn blend_ptilde(p: &StableParams) -> DensityFn {
        let arho = p.alpha * p.rho;
        let grid: Vec<f64> = (0..160)
            .map(|i| 1e-2 * (1e5f64).powf(i as f64 / 159.0))
            .collect();
        let values: Vec<f64> = grid
            .iter()
            .map(|&x| {
                let w = (-x.powi(6)).exp();
                0.4 * x.powf(arho) * w + 0.5 * x.powf(-(p.alpha + 1.0)) * (1.0 - w)
            })
            .collect();
        let table = DensityTable::new(
            grid,
            values,
            None,
            TableMeta::new(Provenance::Analytic, "blend"),
        )
        .unwrap();
        DensityFn::from_table(&table, None, None, TailDefaults::meander(p)).unwrap()
    }

    #[test]
    fn pure_power_input_transfers_with_the_exact_factor() {
        // For ptilde = c x^{-(alpha+1)} the weighted fractional integral
        // evaluates in closed form to rho c x^{-(alpha+1)}.
        let p = validate_params(1.5, 1.0, 1.0).unwrap();
        let c = 0.5;
        let ptilde = power_ptilde(c, -2.5, 0.5, 200.0, 80);
        for &x in &[1.0f64, 2.5, 7.0, 40.0] {
            let expected = p.rho * c * x.powf(-2.5);
            let beta = m_from_ptilde_beta(&ptilde, &p, x).unwrap();
            assert_relative_eq!(beta, expected, max_relative = 1e-7);
            let z = m_from_ptilde_z(&ptilde, &p, x).unwrap();
            assert_relative_eq!(z, expected, max_relative = 1e-6);
        }
    }

    #[test]
    fn pure_power_transfer_holds_for_asymmetric_rho() {
        let p = validate_params(1.3, 1.0, 0.25).unwrap();
        assert!((p.rho - 0.5).abs() > 0.05, "want a genuinely asymmetric rho");
        let c = 0.5;
        let e = -(p.alpha + 1.0);
        let ptilde = power_ptilde(c, e, 0.5, 200.0, 80);
        for &x in &[1.0f64, 3.0, 20.0] {
            let expected = p.rho * c * x.powf(e);
            let beta = m_from_ptilde_beta(&ptilde, &p, x).unwrap();
            assert_relative_eq!(beta, expected, max_relative = 1e-7);
            let z = m_from_ptilde_z(&ptilde, &p, x).unwrap();
            assert_relative_eq!(z, expected, max_relative = 1e-6);
        }
    }

    #[test]
    fn both_quadrature_routes_agree_on_smooth_input() {
        let p = validate_params(1.5, 1.0, 1.0).unwrap();
        let ptilde = blend_ptilde(&p);
        for i in 0..50 {
            let x = 0.02 * (2.5e4f64).powf(i as f64 / 49.0);
            let beta = m_from_ptilde_beta(&ptilde, &p, x).unwrap();
            let z = m_from_ptilde_z(&ptilde, &p, x).unwrap();
            assert_relative_eq!(beta, z, max_relative = 1e-6);
        }
    }

    #[test]
    fn transferred_density_has_unit_order_mass_on_meander_input() {
        // The identity maps a normalized meander density to a normalized
        // supremum density; with a synthetic but well-normalized input the
        // output mass should come back near one.
        let p = validate_params(1.5, 1.0, 1.0).unwrap();
        let ptilde_raw = blend_ptilde(&p);
        let norm = ptilde_raw.normalized();
        let grid: Vec<f64> = (0..120)
            .map(|i| 1e-2 * (1e5f64).powf(i as f64 / 119.0))
            .collect();
        let values: Vec<f64> = grid
            .iter()
            .map(|&x| m_from_ptilde_beta(&norm, &p, x).unwrap())
            .collect();
        let table = DensityTable::new(
            grid,
            values,
            None,
            TableMeta::new(Provenance::Quadrature, "m-from-ptilde"),
        )
        .unwrap();
        let m = DensityFn::from_table(&table, None, None, TailDefaults::supremum(&p)).unwrap();
        assert_relative_eq!(m.mass(), 1.0, max_relative = 0.02);
    }

    #[test]
    fn passage_density_is_self_similar_to_machine_precision() {
        let p = validate_params(1.5, 1.0, 1.0).unwrap();
        let m = blend_ptilde(&p);
        let lambda = 3.7f64;
        for &(x, t) in &[(0.5, 0.2), (2.0, 1.0), (1.3, 8.0), (10.0, 0.05)] {
            let base = passage_density(&m, &p, x, t).unwrap();
            let scaled =
                passage_density(&m, &p, lambda.powf(p.eta) * x, lambda * t).unwrap() * lambda;
            assert_relative_eq!(scaled, base, max_relative = 1e-12);
        }
    }

    #[test]
    fn passage_survival_matches_minus_time_derivative_of_density() {
        let p = validate_params(1.5, 1.0, 1.0).unwrap();
        let m_fn = blend_ptilde(&p);
        let grid: Vec<f64> = (0..150)
            .map(|i| 1e-2 * (1e5f64).powf(i as f64 / 149.0))
            .collect();
        let values: Vec<f64> = grid.iter().map(|&x| m_fn.eval(x)).collect();
        let table = DensityTable::new(
            grid,
            values,
            None,
            TableMeta::new(Provenance::Analytic, "m"),
        )
        .unwrap();
        let normalized = DensityFn::from_table(&table, None, None, TailDefaults::supremum(&p))
            .unwrap()
            .normalized();

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let x = 0.3 * (30.0f64).powf(rng.random::<f64>());
            let t = 0.05 * (200.0f64).powf(rng.random::<f64>());
            let dt = 1e-4 * t;
            let s_plus = passage_survival(&table, &p, x, t + dt).unwrap();
            let s_minus = passage_survival(&table, &p, x, t - dt).unwrap();
            let fd = -(s_plus - s_minus) / (2.0 * dt);
            let h = passage_density(&normalized, &p, x, t).unwrap();
            if h > 1e-12 {
                assert_relative_eq!(fd, h, max_relative = 1e-4);
            } else {
                assert!(fd.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn passage_survival_has_the_right_limits() {
        let p = validate_params(1.5, 1.0, 1.0).unwrap();
        let m_fn = blend_ptilde(&p);
        let grid: Vec<f64> = (0..150)
            .map(|i| 1e-2 * (1e5f64).powf(i as f64 / 149.0))
            .collect();
        let values: Vec<f64> = grid.iter().map(|&x| m_fn.eval(x)).collect();
        let table = DensityTable::new(
            grid,
            values,
            None,
            TableMeta::new(Provenance::Analytic, "m"),
        )
        .unwrap();
        assert!(passage_survival(&table, &p, 2.0, 1e-8).unwrap() > 0.999);
        assert!(passage_survival(&table, &p, 2.0, 1e8).unwrap() < 1e-3);
        let mut prev = 1.0 + 1e-12;
        for i in 0..40 {
            let t = 1e-3 * (1e7f64).powf(i as f64 / 39.0);
            let s = passage_survival(&table, &p, 2.0, t).unwrap();
            assert!(s <= prev + 1e-12, "survival not monotone at t={t}");
            prev = s;
        }
    }

    #[test]
    fn spectrally_negative_collapse_is_alpha_times_marginal() {
        let p = validate_params(1.75, 0.0, 1.0).unwrap();
        for &x in &[0.2, 1.0, 4.0] {
            let m = spectrally_negative_m(&p, x).unwrap();
            let f = density_f(&p, x).unwrap();
            assert_relative_eq!(m, p.alpha * f, max_relative = 1e-12);
        }
        let two_sided = validate_params(1.5, 1.0, 1.0).unwrap();
        assert!(matches!(
            spectrally_negative_m(&two_sided, 1.0),
            Err(IdentityError::WrongRegime(_))
        ));
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let p = validate_params(1.5, 1.0, 1.0).unwrap();
        let ptilde = power_ptilde(0.5, -2.5, 0.5, 200.0, 80);
        assert!(matches!(
            m_from_ptilde_beta(&ptilde, &p, -1.0),
            Err(IdentityError::BadInput(_))
        ));
        assert!(matches!(
            m_from_ptilde_z(&ptilde, &p, f64::NAN),
            Err(IdentityError::BadInput(_))
        ));
        assert!(matches!(
            passage_density(&ptilde, &p, 1.0, 0.0),
            Err(IdentityError::BadInput(_))
        ));
    }
}
