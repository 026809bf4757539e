//! Tabulated densities on a positive grid.
//!
//! Every pipeline stage that hands a density to another stage does so as a
//! [`DensityTable`]: strictly increasing grid, nonnegative finite values,
//! optional pointwise standard errors, and provenance metadata. Construction
//! validates the invariants once so downstream code can rely on them.

use thiserror::Error;

use crate::quad::trapezoid;

/// Trapezoid mass of a valid table may exceed 1 by at most this much
/// (discretization and Monte Carlo noise, never real excess mass).
pub const INTEGRATION_TOL: f64 = 0.05;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("grid must contain at least two points")]
    EmptyGrid,
    #[error("grid must be finite, positive and strictly increasing (index {0})")]
    BadGrid(usize),
    #[error("values length {values} does not match grid length {grid}")]
    LengthMismatch { grid: usize, values: usize },
    #[error("value at index {0} is negative or not finite")]
    BadValue(usize),
    #[error("error bar at index {0} is negative or not finite")]
    BadErrbar(usize),
    #[error("trapezoid mass {0:.6} exceeds 1 beyond tolerance")]
    MassExceedsOne(f64),
    #[error("table carries no self-similarity exponent; cannot rescale in time")]
    MissingEta,
    #[error("time must be positive and finite, got {0}")]
    BadTime(f64),
}

/// How the numbers in a table were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Quadrature,
    MonteCarlo,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Provenance::Analytic => "analytic",
            Provenance::Quadrature => "quadrature",
            Provenance::MonteCarlo => "monte-carlo",
        };
        f.write_str(s)
    }
}

/// Provenance plus the knobs later stages need to interpret the numbers.
#[derive(Debug, Clone)]
pub struct TableMeta {
    pub provenance: Provenance,
    /// Short human-readable description of the generating configuration.
    pub config: String,
    /// Self-similarity exponent 1/alpha when time rescaling applies.
    pub eta: Option<f64>,
    /// Smallest x the generating method resolves; fitting windows stay above.
    pub mesh_floor: Option<f64>,
    /// Fraction of the underlying sample at exactly zero, when the table is a
    /// conditional density that excludes that atom.
    pub zero_fraction: Option<f64>,
    /// Correlation length of neighbouring values in ln x when the generating
    /// method smooths (the kernel bandwidth for sample-based tables). Error
    /// propagation through fits needs it; None means values are independent.
    pub smoothing_ln: Option<f64>,
}

impl TableMeta {
    pub fn new(provenance: Provenance, config: impl Into<String>) -> Self {
        TableMeta {
            provenance,
            config: config.into(),
            eta: None,
            mesh_floor: None,
            zero_fraction: None,
            smoothing_ln: None,
        }
    }
}

/// A density sampled on a positive grid.
#[derive(Debug, Clone)]
pub struct DensityTable {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub errbars: Option<Vec<f64>>,
    pub meta: TableMeta,
}

impl DensityTable {
    /// Validates all invariants; the only way to build a table.
    pub fn new(
        grid: Vec<f64>,
        values: Vec<f64>,
        errbars: Option<Vec<f64>>,
        meta: TableMeta,
    ) -> Result<Self, TableError> {
        if grid.len() < 2 {
            return Err(TableError::EmptyGrid);
        }
        if values.len() != grid.len() {
            return Err(TableError::LengthMismatch {
                grid: grid.len(),
                values: values.len(),
            });
        }
        for (i, &x) in grid.iter().enumerate() {
            let ok = x.is_finite() && x > 0.0 && (i == 0 || x > grid[i - 1]);
            if !ok {
                return Err(TableError::BadGrid(i));
            }
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(TableError::BadValue(i));
            }
        }
        if let Some(eb) = &errbars {
            if eb.len() != grid.len() {
                return Err(TableError::LengthMismatch {
                    grid: grid.len(),
                    values: eb.len(),
                });
            }
            for (i, &e) in eb.iter().enumerate() {
                if !e.is_finite() || e < 0.0 {
                    return Err(TableError::BadErrbar(i));
                }
            }
        }
        let mass = trapezoid(&grid, &values);
        if mass > 1.0 + INTEGRATION_TOL {
            return Err(TableError::MassExceedsOne(mass));
        }
        Ok(DensityTable {
            grid,
            values,
            errbars,
            meta,
        })
    }

    /// Trapezoid mass over the tabulated range.
    pub fn mass(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Density of the process at time `t` from its density at time 1.
///
/// Self-similarity gives `f_t(x) = t^-eta f_1(t^-eta x)`, so the grid
/// stretches by `t^eta` while values and error bars shrink by `t^-eta`.
/// The table must carry `eta` in its metadata.
pub fn scale_density(table: &DensityTable, t: f64) -> Result<DensityTable, TableError> {
    let eta = table.meta.eta.ok_or(TableError::MissingEta)?;
    if !t.is_finite() || t <= 0.0 {
        return Err(TableError::BadTime(t));
    }
    let stretch = t.powf(eta);
    let grid = table.grid.iter().map(|&x| x * stretch).collect();
    let values = table.values.iter().map(|&v| v / stretch).collect();
    let errbars = table
        .errbars
        .as_ref()
        .map(|eb| eb.iter().map(|&e| e / stretch).collect());
    let mut meta = table.meta.clone();
    meta.config = format!("{} | rescaled to t={t}", meta.config);
    if let Some(mf) = meta.mesh_floor {
        meta.mesh_floor = Some(mf * stretch);
    }
    DensityTable::new(grid, values, errbars, meta)
}
