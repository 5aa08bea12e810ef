use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diff::GradientProgram;
use crate::oracles::OracleError;

/// Largest number of grid points evaluated by [`grid_global_min`].
pub const GRID_BUDGET: u128 = 100_000_000;

/// Values within this of the minimum count as ties.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMin {
    pub argmin: Vec<f64>,
    pub value: f64,
    pub points: u64,
}

struct Grid {
    lo: Vec<f64>,
    step: Vec<f64>,
    counts: Vec<u64>,
    total: u64,
}

impl Grid {
    fn new(bounds: &[(f64, f64)], resolution: f64) -> Result<Self, OracleError> {
        if bounds.is_empty() || bounds.len() > 3 {
            return Err(OracleError::Invalid(format!(
                "grid search supports 1 to 3 dimensions, got {}",
                bounds.len()
            )));
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(OracleError::Invalid(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        let mut counts = Vec::new();
        let mut step = Vec::new();
        let mut total: u128 = 1;
        for &(lo, hi) in bounds {
            if !(lo.is_finite() && hi.is_finite() && hi >= lo) {
                return Err(OracleError::Invalid(format!("bad bounds [{lo}, {hi}]")));
            }
            let intervals = ((hi - lo) / resolution).round().max(0.0);
            if intervals > GRID_BUDGET as f64 {
                return Err(OracleError::Budget {
                    requested: u128::MAX,
                    limit: GRID_BUDGET,
                });
            }
            let n = intervals as u64;
            counts.push(n + 1);
            step.push(if n == 0 { 0.0 } else { (hi - lo) / n as f64 });
            total = total.saturating_mul(n as u128 + 1);
        }
        if total > GRID_BUDGET {
            return Err(OracleError::Budget {
                requested: total,
                limit: GRID_BUDGET,
            });
        }
        Ok(Self {
            lo: bounds.iter().map(|b| b.0).collect(),
            step,
            counts,
            total: total as u64,
        })
    }

    /// Point for a flat index; the first coordinate varies slowest so
    /// increasing index is lexicographic order.
    fn point(&self, mut idx: u64) -> Vec<f64> {
        let mut out = vec![0.0; self.counts.len()];
        for d in (0..self.counts.len()).rev() {
            let i = idx % self.counts[d];
            idx /= self.counts[d];
            out[d] = self.lo[d] + i as f64 * self.step[d];
        }
        out
    }
}

/// Exhaustive minimum over the closed grid `lo + i·h` spanning each bound.
///
/// Points where evaluation fails count as `+∞`. Among points within
/// [`TIE_TOL`] of the minimum the lexicographically smallest is returned.
pub fn grid_global_min(
    objective: &GradientProgram<f64>,
    bounds: &[(f64, f64)],
    resolution: f64,
) -> Result<GridMin, OracleError> {
    if objective.dim() != bounds.len() {
        return Err(OracleError::Invalid(format!(
            "objective has dimension {}, bounds give {}",
            objective.dim(),
            bounds.len()
        )));
    }
    let grid = Grid::new(bounds, resolution)?;
    let eval = |i: u64| {
        objective
            .evaluate_slice(&grid.point(i))
            .ok()
            .filter(|v| !v.is_nan())
            .unwrap_or(f64::INFINITY)
    };
    let min = (0..grid.total)
        .into_par_iter()
        .map(eval)
        .reduce(|| f64::INFINITY, f64::min);
    let first = (0..grid.total)
        .into_par_iter()
        .find_first(|&i| eval(i) <= min + TIE_TOL)
        .unwrap_or(0);
    Ok(GridMin {
        argmin: grid.point(first),
        value: min,
        points: grid.total,
    })
}

/// Coarse grid, then a finer grid of half-width `resolution` around the
/// coarse argmin (clipped to the bounds).
pub fn grid_global_min_refined(
    objective: &GradientProgram<f64>,
    bounds: &[(f64, f64)],
    resolution: f64,
    refine: usize,
) -> Result<GridMin, OracleError> {
    let coarse = grid_global_min(objective, bounds, resolution)?;
    if refine <= 1 {
        return Ok(coarse);
    }
    let local: Vec<(f64, f64)> = coarse
        .argmin
        .iter()
        .zip(bounds)
        .map(|(&c, &(lo, hi))| ((c - resolution).max(lo), (c + resolution).min(hi)))
        .collect();
    let fine = grid_global_min(objective, &local, resolution / refine as f64)?;
    Ok(if fine.value < coarse.value {
        GridMin {
            points: coarse.points + fine.points,
            ..fine
        }
    } else {
        GridMin {
            points: coarse.points + fine.points,
            ..coarse
        }
    })
}
