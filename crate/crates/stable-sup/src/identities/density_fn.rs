//! A positive density as an evaluable function: log-log cubic spline
//! through the table knots, power-law extensions beyond the edges, and
//! cumulative integrals for distribution queries.

use crate::asymptotics::TailFit;
use crate::quad::gauss_legendre;
use crate::table::DensityTable;

use super::IdentityError;

/// Theory exponents used for the edge extensions when no acceptable fitted
/// slope is available.
#[derive(Debug, Clone, Copy)]
pub struct TailDefaults {
    pub left: f64,
    pub right: f64,
}

impl TailDefaults {
    /// Edge exponents of a meander-type density: x^{alpha rho} at zero,
    /// x^{-alpha-1} at infinity.
    pub fn meander(p: &crate::params::StableParams) -> Self {
        TailDefaults {
            left: p.alpha * p.rho,
            right: -(p.alpha + 1.0),
        }
    }

    /// Edge exponents of a supremum-type density: x^{alpha rho - 1} at
    /// zero, x^{-alpha-1} at infinity.
    pub fn supremum(p: &crate::params::StableParams) -> Self {
        TailDefaults {
            left: p.alpha * p.rho - 1.0,
            right: -(p.alpha + 1.0),
        }
    }
}

/// Accepts a fitted edge slope only when it is close to the theory default
/// and tight enough to trust; otherwise falls back to the default and
/// reports the fallback through the flag.
fn choose_exponent(fit: Option<&TailFit>, default: f64) -> (f64, bool) {
    match fit {
        Some(f)
            if (f.exponent - default).abs() <= 0.5
                && f.stderr_exponent <= 0.3
                && f.exponent.is_finite() =>
        {
            (f.exponent, false)
        }
        _ => (default, true),
    }
}

/// Density evaluator built from a table: natural cubic spline in
/// (ln x, ln y) between the first and last positive knots, power laws
/// `coef * x^exp` beyond them.
#[derive(Debug, Clone)]
pub struct DensityFn {
    ln_x: Vec<f64>,
    ln_y: Vec<f64>,
    d2: Vec<f64>,
    grid: Vec<f64>,
    left_exp: f64,
    left_coef: f64,
    right_exp: f64,
    right_coef: f64,
    left_flagged: bool,
    right_flagged: bool,
    /// Integral of the spline from the first knot to knot i.
    cum: Vec<f64>,
    /// Mass of the left extension over (0, first knot).
    left_mass: f64,
}

/// Natural cubic spline second derivatives via the standard tridiagonal
/// solve.
fn natural_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d2 = vec![0.0; n];
    let mut u = vec![0.0; n];
    for i in 1..n - 1 {
        let sig = (x[i] - x[i - 1]) / (x[i + 1] - x[i - 1]);
        let p = sig * d2[i - 1] + 2.0;
        d2[i] = (sig - 1.0) / p;
        let slope_hi = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        let slope_lo = (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
        u[i] = (6.0 * (slope_hi - slope_lo) / (x[i + 1] - x[i - 1]) - sig * u[i - 1]) / p;
    }
    d2[n - 1] = 0.0;
    for i in (0..n - 1).rev() {
        d2[i] = d2[i] * d2[i + 1] + u[i];
    }
    d2
}

impl DensityFn {
    /// Builds the evaluator. Non-positive table values are dropped from the
    /// spline; edge exponents come from the fits when acceptable and from
    /// `defaults` otherwise. The right exponent is clamped below -1.05 so
    /// the tail mass stays finite.
    pub fn from_table(
        table: &DensityTable,
        left_fit: Option<&TailFit>,
        right_fit: Option<&TailFit>,
        defaults: TailDefaults,
    ) -> Result<Self, IdentityError> {
        let mut grid = Vec::new();
        let mut ln_x = Vec::new();
        let mut ln_y = Vec::new();
        for (&x, &v) in table.grid.iter().zip(table.values.iter()) {
            if v > 0.0 {
                grid.push(x);
                ln_x.push(x.ln());
                ln_y.push(v.ln());
            }
        }
        if grid.len() < 4 {
            return Err(IdentityError::BadTable(format!(
                "only {} positive knots, need at least 4",
                grid.len()
            )));
        }
        let d2 = natural_second_derivatives(&ln_x, &ln_y);

        let (mut left_exp, mut left_flagged) = choose_exponent(left_fit, defaults.left);
        // A left slope at or below -1 would carry infinite mass near zero;
        // no admissible parameter set produces one, so treat it as noise.
        if left_exp <= -0.999 {
            left_exp = defaults.left;
            left_flagged = true;
        }
        let (mut right_exp, mut right_flagged) = choose_exponent(right_fit, defaults.right);
        if right_exp > -1.05 {
            right_exp = defaults.right.min(-1.05);
            right_flagged = true;
        }
        let left_coef = ln_y[0].exp() * grid[0].powf(-left_exp);
        let right_coef = ln_y.last().unwrap().exp() * grid.last().unwrap().powf(-right_exp);

        let mut fun = DensityFn {
            ln_x,
            ln_y,
            d2,
            grid,
            left_exp,
            left_coef,
            right_exp,
            right_coef,
            left_flagged,
            right_flagged,
            cum: Vec::new(),
            left_mass: 0.0,
        };
        fun.left_mass = left_coef * fun.grid[0].powf(left_exp + 1.0) / (left_exp + 1.0);
        let rule = gauss_legendre(16);
        let mut cum = Vec::with_capacity(fun.grid.len());
        cum.push(0.0);
        let mut acc = 0.0;
        for i in 1..fun.grid.len() {
            let (a, b) = (fun.grid[i - 1], fun.grid[i]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut seg = 0.0;
            for (&node, &w) in rule.0.iter().zip(rule.1.iter()) {
                seg += w * fun.eval(mid + half * node);
            }
            acc += seg * half;
            cum.push(acc);
        }
        fun.cum = cum;
        Ok(fun)
    }

    /// Convenience constructor that fits both edges from the table itself
    /// with the automatic window policy.
    pub fn from_table_auto(
        table: &DensityTable,
        defaults: TailDefaults,
    ) -> Result<Self, IdentityError> {
        use crate::asymptotics::{fit_power_law, FitData, Side, WindowPolicy};
        let left = fit_power_law(FitData::Table(table), Side::Zero, WindowPolicy::Auto).ok();
        let right = fit_power_law(FitData::Table(table), Side::Infinity, WindowPolicy::Auto).ok();
        Self::from_table(table, left.as_ref(), right.as_ref(), defaults)
    }

    /// Knots the spline interpolates (positive table points only).
    pub fn knots(&self) -> &[f64] {
        &self.grid
    }

    pub fn left_exponent(&self) -> f64 {
        self.left_exp
    }

    pub fn right_exponent(&self) -> f64 {
        self.right_exp
    }

    pub fn left_coef(&self) -> f64 {
        self.left_coef
    }

    pub fn right_coef(&self) -> f64 {
        self.right_coef
    }

    /// True when the corresponding edge fell back to its theory default.
    pub fn edge_flags(&self) -> (bool, bool) {
        (self.left_flagged, self.right_flagged)
    }

    /// Log-density at log-abscissa `t`; extensions are evaluated in closed
    /// form so the function is usable far outside the table.
    pub fn eval_ln(&self, t: f64) -> f64 {
        let first = self.ln_x[0];
        let last = *self.ln_x.last().unwrap();
        if t < first {
            return self.left_coef.ln() + self.left_exp * t;
        }
        if t > last {
            return self.right_coef.ln() + self.right_exp * t;
        }
        let hi = self.ln_x.partition_point(|&v| v < t).clamp(1, self.ln_x.len() - 1);
        let lo = hi - 1;
        let h = self.ln_x[hi] - self.ln_x[lo];
        let a = (self.ln_x[hi] - t) / h;
        let b = (t - self.ln_x[lo]) / h;
        a * self.ln_y[lo]
            + b * self.ln_y[hi]
            + ((a * a * a - a) * self.d2[lo] + (b * b * b - b) * self.d2[hi]) * h * h / 6.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 || !x.is_finite() {
            return 0.0;
        }
        self.eval_ln(x.ln()).exp()
    }

    /// Total mass: left extension + spline + right extension.
    pub fn mass(&self) -> f64 {
        let right_edge = *self.grid.last().unwrap();
        let right_mass = -self.right_coef * right_edge.powf(self.right_exp + 1.0)
            / (self.right_exp + 1.0);
        self.left_mass + self.cum.last().unwrap() + right_mass
    }

    /// Integral over (0, u].
    pub fn cdf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let first = self.grid[0];
        let last = *self.grid.last().unwrap();
        if u <= first {
            return self.left_coef * u.powf(self.left_exp + 1.0) / (self.left_exp + 1.0);
        }
        if u >= last {
            let tail = self.right_coef / (self.right_exp + 1.0)
                * (u.powf(self.right_exp + 1.0) - last.powf(self.right_exp + 1.0));
            return self.left_mass + self.cum.last().unwrap() + tail;
        }
        let hi = self.grid.partition_point(|&v| v < u).clamp(1, self.grid.len() - 1);
        let lo = hi - 1;
        let rule = gauss_legendre(8);
        let half = 0.5 * (u - self.grid[lo]);
        let mid = 0.5 * (u + self.grid[lo]);
        let mut seg = 0.0;
        for (&node, &w) in rule.0.iter().zip(rule.1.iter()) {
            seg += w * self.eval(mid + half * node);
        }
        self.left_mass + self.cum[lo] + seg * half
    }

    /// The same shape scaled to unit mass.
    pub fn normalized(&self) -> DensityFn {
        let mass = self.mass();
        let shift = mass.ln();
        let mut out = self.clone();
        for y in &mut out.ln_y {
            *y -= shift;
        }
        out.left_coef /= mass;
        out.right_coef /= mass;
        out.left_mass /= mass;
        for c in &mut out.cum {
            *c /= mass;
        }
        out
    }
}
