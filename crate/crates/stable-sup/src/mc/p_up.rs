//! Density of the process conditioned to stay positive over a unit horizon,
//! from the meander density.
//!
//! The two laws are mutually absolutely continuous with weight
//! `x^(alpha (1-rho))` up to normalization, so the table transform is a
//! pointwise reweighting followed by renormalization. The weighted tail
//! decays like `x^(alpha(1-rho) - alpha - 1)`, which is integrable for any
//! admissible rho; a fitted tail slope at or above -1 therefore signals a
//! broken input table rather than a parameter regime.

use crate::params::StableParams;
use crate::quad::trapezoid;
use crate::table::{DensityTable, TableMeta};

use super::MCError;

/// Normalized table of `x -> x^(alpha(1-rho)) ptilde(x)`.
pub fn estimate_p_up(p: &StableParams, ptilde: &DensityTable) -> Result<DensityTable, MCError> {
    let w = p.alpha * (1.0 - p.rho);
    let weighted: Vec<f64> = ptilde
        .grid
        .iter()
        .zip(ptilde.values.iter())
        .map(|(&x, &v)| v * x.powf(w))
        .collect();
    let mass = trapezoid(&ptilde.grid, &weighted);
    if !mass.is_finite() || mass <= 0.0 {
        return Err(MCError::NonNormalizable(format!(
            "weighted mass {mass} is not a positive finite number"
        )));
    }
    // With at least a decade of tail in the table, check integrability of
    // the implied extension; short dummy grids skip this. The probe stays
    // on usable points (error bar at most a quarter of the value), like
    // every tail fit: past the last real samples a smoothed table carries
    // froth whose log-slope says nothing about the density.
    let usable = |i: usize| match &ptilde.errbars {
        Some(eb) => weighted[i] > 0.0 && eb[i] <= 0.25 * ptilde.values[i],
        None => weighted[i] > 0.0,
    };
    let hi = ptilde
        .grid
        .iter()
        .enumerate()
        .rev()
        .find(|&(i, _)| usable(i))
        .map(|(_, &x)| x)
        .unwrap_or(0.0);
    let lo_decade = hi / 10.0;
    if lo_decade > ptilde.grid[0] {
        let pts: Vec<(f64, f64)> = ptilde
            .grid
            .iter()
            .enumerate()
            .filter(|&(i, &x)| x >= lo_decade && x <= hi && usable(i))
            .map(|(i, &x)| (x.ln(), weighted[i].ln()))
            .collect();
        if pts.len() >= 4 {
            let slope = ols_slope(&pts);
            if slope >= -1.0 {
                return Err(MCError::NonNormalizable(format!(
                    "weighted tail slope {slope:.2} is not integrable"
                )));
            }
        }
    }

    let values: Vec<f64> = weighted.iter().map(|&v| v / mass).collect();
    let errbars = ptilde.errbars.as_ref().map(|eb| {
        eb.iter()
            .zip(ptilde.grid.iter())
            .map(|(&e, &x)| e * x.powf(w) / mass)
            .collect()
    });
    let mut meta = TableMeta::new(
        ptilde.meta.provenance,
        format!("stay-positive reweighting of: {}", ptilde.meta.config),
    );
    meta.eta = ptilde.meta.eta;
    meta.mesh_floor = ptilde.meta.mesh_floor;
    meta.smoothing_ln = ptilde.meta.smoothing_ln;
    Ok(DensityTable::new(
        ptilde.grid.clone(),
        values,
        errbars,
        meta,
    )?)
}

fn ols_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
