use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::augment::{l2, AuxParams, Problem};
use crate::diff::GradientProgram;
use crate::oracles::{OracleError, OracleVerdict};

/// Slack allowed when comparing the centre against ball samples.
pub const LOCAL_MIN_SLACK: f64 = 1e-9;

/// Uniform sample from the ball of the given radius around `center`.
pub fn sample_ball<R: Rng + ?Sized>(center: &[f64], radius: f64, rng: &mut R) -> Vec<f64> {
    let d = center.len();
    let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = l2(&dir);
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    center
        .iter()
        .zip(&dir)
        .map(|(c, u)| if n > 0.0 { c + r * u / n } else { *c })
        .collect()
}

/// Sampling test of local minimality. Only refutes: passing means no
/// sampled point in the ball was lower than the centre.
pub fn verify_local_min(
    objective: &GradientProgram<f64>,
    point: &[f64],
    radius: f64,
    n_samples: usize,
    seed: u64,
) -> Result<OracleVerdict, OracleError> {
    if !(radius > 0.0) || n_samples == 0 {
        return Err(OracleError::Invalid(
            "radius must be positive and n_samples at least 1".into(),
        ));
    }
    let centre = objective
        .evaluate_slice(point)
        .map_err(|e| OracleError::Invalid(format!("objective at centre: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lowest = f64::INFINITY;
    let mut witness: Option<Vec<f64>> = None;
    for _ in 0..n_samples {
        let q = sample_ball(point, radius, &mut rng);
        let Ok(v) = objective.evaluate_slice(&q) else { continue };
        if v < lowest {
            lowest = v;
            if centre > v + LOCAL_MIN_SLACK {
                witness = Some(q);
            }
        }
    }
    let pass = witness.is_none();
    let mut verdict = OracleVerdict::new("local_min", pass)
        .residual("value", centre)
        .residual("lowest_sample", lowest)
        .residual("decrease", (centre - lowest).max(0.0))
        .note("sampling can refute local minimality but never prove it");
    if let Some(w) = witness {
        verdict = verdict.witness(w);
    }
    Ok(verdict)
}

/// Passes iff every per-sample loss gradient at `f(x_i; θ)` has norm at
/// most `1e-5`.
pub fn per_sample_gradient_check(problem: &Problem<f64>, theta: &[f64]) -> Result<OracleVerdict, OracleError> {
    let outs = problem
        .outputs(theta)
        .map_err(|e| OracleError::Invalid(e.to_string()))?;
    let mut worst: f64 = 0.0;
    let mut worst_i = 0;
    for (i, (q, y)) in outs.iter().zip(problem.data.targets()).enumerate() {
        let g = problem
            .criterion
            .loss_gradient(q, y)
            .map_err(|e| OracleError::Invalid(e.to_string()))?;
        let n = l2(&g);
        if n > worst {
            worst = n;
            worst_i = i;
        }
    }
    Ok(OracleVerdict::new("per_sample_gradient", worst <= 1e-5)
        .residual("max_grad", worst)
        .residual("worst_sample", worst_i as f64))
}

/// `∂L/∂θ = A r` split into the model part and the loss part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    /// `d_θ × (m·d_y)`: reduction factor times stacked transposed Jacobians.
    pub a: Vec<Vec<f64>>,
    /// Stacked per-sample loss gradients.
    pub r: Vec<f64>,
    pub ar_norm: f64,
    pub relative: f64,
}

impl Factorization {
    pub fn a_matrix(&self) -> DMatrix<f64> {
        let rows = self.a.len();
        let cols = self.a.first().map_or(0, Vec::len);
        DMatrix::from_fn(rows, cols, |i, j| self.a[i][j])
    }
}

/// Factor the `θ`-gradient at `θ`, with loss gradients evaluated at `f`
/// or at `f + g` when `aux` is given.
pub fn gradient_factorization(
    problem: &Problem<f64>,
    theta: &[f64],
    aux: Option<&AuxParams<f64>>,
) -> Result<Factorization, OracleError> {
    let m = problem.data.len();
    let dy = problem.output_dim();
    let dt = problem.theta_dim();
    let scale = problem.reduction.factor::<f64>(m);
    let mut a = DMatrix::zeros(dt, m * dy);
    let mut r = Vec::with_capacity(m * dy);
    for (i, (x, y)) in problem.data.inputs().iter().zip(problem.data.targets()).enumerate() {
        let jac = problem
            .model
            .parameter_jacobian(theta, x)
            .map_err(|e| OracleError::Invalid(e.to_string()))?;
        for (k, row) in jac.iter().enumerate() {
            for (t, v) in row.iter().enumerate() {
                a[(t, i * dy + k)] = scale * v;
            }
        }
        let mut q = problem
            .model
            .forward_checked(theta, x)
            .map_err(|e| OracleError::Invalid(e.to_string()))?;
        if let Some(aux) = aux {
            let g = aux.g_eval(x).map_err(|e| OracleError::Invalid(e.to_string()))?;
            q.iter_mut().zip(g).for_each(|(qk, gk)| *qk += gk);
        }
        r.extend(
            problem
                .criterion
                .loss_gradient(&q, y)
                .map_err(|e| OracleError::Invalid(e.to_string()))?,
        );
    }
    let rv = DVector::from_column_slice(&r);
    let ar_norm = (&a * &rv).norm();
    let relative = ar_norm / (a.norm() * rv.norm() + 1e-300);
    Ok(Factorization {
        a: (0..dt).map(|t| a.row(t).iter().copied().collect()).collect(),
        r,
        ar_norm,
        relative,
    })
}

/// Plain CSV dump of a matrix, one row per line, no header.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, w: W) -> csv::Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..m.nrows() {
        out.write_record(m.row(i).iter().map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}
