//! Log-domain kernel density estimation for positive-support samples.
//!
//! The Gaussian kernel acts on log x, which respects the support boundary
//! and keeps power-law edges straight instead of smearing them; the
//! density transforms back as `p(x) = g(log x)/x`. Per-point standard
//! errors use the kernel roughness `R_K = 1/(2 sqrt(pi))`.
//!
//! Sample policy by run kind:
//! * supremum: the atom at 0 is dropped and recorded as `zero_fraction`;
//!   the table is the density conditional on a positive supremum (mass 1);
//! * meander: all samples are positive by construction;
//! * endpoint: negative draws are dropped and the density is scaled by the
//!   kept fraction, so the table matches the unconditional density on x > 0.

use crate::mc::{BandwidthRule, MCError, MCRun, RunKind};
use crate::table::{DensityTable, Provenance, TableMeta};

const ROUGHNESS: f64 = 0.282_094_791_773_878_14; // 1/(2 sqrt(pi))
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Density table on `grid` from the samples of `run`.
pub fn estimate_density(run: &MCRun, grid: &[f64]) -> Result<DensityTable, MCError> {
    let total = run.samples.len();
    if total == 0 {
        return Err(MCError::InsufficientSamples(0));
    }
    let kept: Vec<f64> = run.samples.iter().copied().filter(|&s| s > 0.0).collect();
    let (norm, zero_fraction) = match run.kind {
        RunKind::Supremum => (1.0, Some(1.0 - kept.len() as f64 / total as f64)),
        RunKind::Meander => (1.0, None),
        RunKind::Endpoint => (kept.len() as f64 / total as f64, None),
    };
    let n = kept.len();
    if n < 32 {
        return Err(MCError::InsufficientSamples(n));
    }

    let mut y: Vec<f64> = kept.iter().map(|s| s.ln()).collect();
    y.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    let sigma = var.sqrt();
    if !(sigma > 1e-9) {
        // Degenerate spike: no scale to smooth over.
        return Err(MCError::InsufficientSamples(n));
    }
    let factor = match run.config.kde_bandwidth_rule {
        BandwidthRule::Silverman => 1.06,
        BandwidthRule::Scott => 1.0,
    };
    let h = factor * sigma * (n as f64).powf(-0.2);

    let mut values = Vec::with_capacity(grid.len());
    let mut errbars = Vec::with_capacity(grid.len());
    for &x in grid {
        let t = x.ln();
        let lo = y.partition_point(|&v| v < t - 8.0 * h);
        let hi = y.partition_point(|&v| v <= t + 8.0 * h);
        let mut acc = 0.0f64;
        for &yi in &y[lo..hi] {
            let z = (t - yi) / h;
            acc += (-0.5 * z * z).exp();
        }
        let g = acc * INV_SQRT_2PI / (n as f64 * h);
        values.push(norm * g / x);
        errbars.push(norm * (g * ROUGHNESS / (n as f64 * h)).sqrt() / x);
    }

    let usable = values
        .iter()
        .zip(errbars.iter())
        .any(|(&v, &e)| v > 0.0 && e <= 0.5 * v);
    if !usable {
        return Err(MCError::InsufficientSamples(n));
    }

    let mut meta = TableMeta::new(
        Provenance::MonteCarlo,
        format!(
            "log-kde kind={:?} level={} kept={} h={:.4} seed={}",
            run.kind, run.level, n, h, run.config.seed
        ),
    );
    meta.eta = Some(run.eta);
    meta.mesh_floor = (run.increment_scale > 0.0).then(|| 3.0 * run.increment_scale);
    meta.zero_fraction = zero_fraction;
    meta.smoothing_ln = Some(h);
    Ok(DensityTable::new(grid.to_vec(), values, Some(errbars), meta)?)
}
