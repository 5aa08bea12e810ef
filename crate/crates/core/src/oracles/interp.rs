use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::oracles::OracleError;

/// Singular values at or below `RANK_RTOL · σ_max` count as zero.
pub const RANK_RTOL: f64 = 1e-10;

/// Largest monomial feature count accepted by [`poly_interp`].
pub const FEATURE_BUDGET: u128 = 1_000_000;

/// One exponential feature direction `(b̂, ŵ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpDirection {
    pub bias: f64,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpInterp {
    /// `M[j, t] = exp(ε (ŵ_t · x̄_j + b̂_t))`
    pub matrix: DMatrix<f64>,
    pub rank: usize,
    pub rank_deficient: bool,
    pub coefficients: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyInterp {
    /// Exponent tuple for each coefficient, ordered by total degree.
    pub monomials: Vec<Vec<u32>>,
    pub coefficients: Vec<f64>,
    pub residual: f64,
    pub rank: usize,
}

pub(crate) fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_RTOL * top).count()
}

/// Minimum-norm least squares through the SVD with the library rank
/// threshold, after scaling every column to unit max-abs.
pub(crate) fn least_squares(m: &DMatrix<f64>, v: &DVector<f64>) -> (DVector<f64>, usize) {
    let mut scaled = m.clone();
    let mut scales = vec![1.0; m.ncols()];
    for (c, s) in scales.iter_mut().enumerate() {
        let mx = m.column(c).amax();
        if mx > 0.0 && mx.is_finite() {
            *s = mx;
            scaled.column_mut(c).scale_mut(1.0 / mx);
        }
    }
    let rank = numerical_rank(&scaled);
    let svd = scaled.svd(true, true);
    let top = svd.singular_values.max();
    let mut x = svd
        .solve(v, RANK_RTOL * top)
        .unwrap_or_else(|_| DVector::zeros(m.ncols()));
    for (c, s) in scales.iter().enumerate() {
        x[c] /= s;
    }
    (x, rank)
}

fn check_points(points: &[Vec<f64>], targets: &[f64]) -> Result<usize, OracleError> {
    if points.is_empty() {
        return Err(OracleError::Invalid("need at least one point".into()));
    }
    if targets.len() != points.len() {
        return Err(OracleError::Invalid(format!(
            "{} points but {} targets",
            points.len(),
            targets.len()
        )));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(OracleError::Invalid("points have mixed dimensions".into()));
    }
    Ok(d)
}

/// Build the exponential feature matrix and solve `M α ≈ v`.
pub fn exp_interp(
    points: &[Vec<f64>],
    directions: &[ExpDirection],
    eps: f64,
    targets: &[f64],
) -> Result<ExpInterp, OracleError> {
    let d = check_points(points, targets)?;
    if directions.is_empty() || directions.iter().any(|t| t.weights.len() != d) {
        return Err(OracleError::Invalid(
            "directions must be non-empty and match the point dimension".into(),
        ));
    }
    let matrix = DMatrix::from_fn(points.len(), directions.len(), |j, t| {
        let dir = &directions[t];
        let dot: f64 = dir.weights.iter().zip(&points[j]).map(|(w, x)| w * x).sum();
        (eps * (dot + dir.bias)).exp()
    });
    let v = DVector::from_column_slice(targets);
    let (alpha, rank) = least_squares(&matrix, &v);
    let residual = (&matrix * &alpha - &v).norm();
    Ok(ExpInterp {
        rank_deficient: rank < points.len(),
        rank,
        coefficients: alpha.iter().copied().collect(),
        residual,
        matrix,
    })
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// All exponent tuples of total degree `≤ degree` in `dim` variables.
fn monomials(dim: usize, degree: u32) -> Vec<Vec<u32>> {
    fn fill(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == dim {
            if left == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            fill(dim, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=degree {
        let mut level = Vec::new();
        fill(dim, total, &mut Vec::new(), &mut level);
        out.extend(level);
    }
    out
}

/// Least-squares fit with every monomial up to `degree`.
pub fn poly_interp(points: &[Vec<f64>], degree: u32, targets: &[f64]) -> Result<PolyInterp, OracleError> {
    let d = check_points(points, targets)?;
    let count = binomial(d as u128 + degree as u128, degree as u128);
    if count > FEATURE_BUDGET {
        return Err(OracleError::Budget {
            requested: count,
            limit: FEATURE_BUDGET,
        });
    }
    let monos = monomials(d, degree);
    let phi = DMatrix::from_fn(points.len(), monos.len(), |j, c| {
        monos[c]
            .iter()
            .zip(&points[j])
            .map(|(&e, &x)| x.powi(e as i32))
            .product::<f64>()
    });
    let v = DVector::from_column_slice(targets);
    let (u, rank) = least_squares(&phi, &v);
    let residual = (&phi * &u - &v).norm();
    Ok(PolyInterp {
        monomials: monos,
        coefficients: u.iter().copied().collect(),
        residual,
        rank,
    })
}
