use crate::augment::{augmented_objective, l2, AuxParams, Problem};
use crate::diff::GradientProgram;
use crate::oracles::{OracleError, OracleVerdict};

/// Relative tolerance between reverse mode and central differences.
pub const GRAD_RTOL: f64 = 1e-4;
/// Absolute tolerance that covers near-zero components.
pub const GRAD_ATOL: f64 = 1e-7;

/// Central difference with a per-coordinate step `h·(1 + |p_i|)`.
pub fn central_difference(program: &GradientProgram<f64>, p: &[f64], h: f64) -> Result<Vec<f64>, OracleError> {
    let mut probe = p.to_vec();
    let mut out = Vec::with_capacity(p.len());
    let eval = |q: &[f64]| {
        program
            .evaluate_slice(q)
            .map_err(|e| OracleError::Invalid(format!("evaluation failed: {e}")))
    };
    for i in 0..p.len() {
        let step = h * (1.0 + p[i].abs());
        let orig = probe[i];
        probe[i] = orig + step;
        let up = eval(&probe)?;
        probe[i] = orig - step;
        let down = eval(&probe)?;
        probe[i] = orig;
        out.push((up - down) / ((orig + step) - (orig - step)));
    }
    Ok(out)
}

/// Compare the tape gradient with central differences at every point. A
/// component passes when its absolute error is below [`GRAD_ATOL`] or its
/// relative error below [`GRAD_RTOL`].
pub fn gradient_check(program: &GradientProgram<f64>, points: &[Vec<f64>]) -> Result<OracleVerdict, OracleError> {
    let mut worst_rel: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    let mut failing = 0usize;
    let mut witness = None;
    for p in points {
        let (_, g) = program
            .value_and_gradient(p)
            .map_err(|e| OracleError::Invalid(format!("gradient failed: {e}")))?;
        let fd = central_difference(program, p, 1e-6)?;
        let mut bad = false;
        for (x, y) in g.iter().zip(&fd) {
            let abs = (x - y).abs();
            let rel = abs / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
            worst_abs = worst_abs.max(abs);
            if abs >= GRAD_ATOL {
                worst_rel = worst_rel.max(rel);
                if rel >= GRAD_RTOL {
                    bad = true;
                }
            }
        }
        if bad {
            failing += 1;
            witness.get_or_insert_with(|| p.clone());
        }
    }
    let mut v = OracleVerdict::new(format!("gradient[{}]", program.label()), failing == 0)
        .residual("max_rel_error", worst_rel)
        .residual("max_abs_error", worst_abs)
        .residual("points", points.len() as f64)
        .residual("failing_points", failing as f64);
    if let Some(w) = witness {
        v = v.witness(w);
    }
    Ok(v)
}

/// At `(θ, a, b, W)`: the largest `|a_k|`, the norm of the `(a, b)`
/// gradient blocks, and the residual of `a_k ∂a_k − ∂b_k = 2λa_k²`. Passes
/// iff `max|a_k| ≤ 1e-4`.
pub fn stationary_a_check(
    problem: &Problem<f64>,
    theta: &[f64],
    aux: &AuxParams<f64>,
) -> Result<OracleVerdict, OracleError> {
    let obj = augmented_objective(problem, aux.lambda()).map_err(|e| OracleError::Invalid(e.to_string()))?;
    let mut p = theta.to_vec();
    p.extend(aux.packed());
    let (_, g) = obj
        .value_and_gradient(&p)
        .map_err(|e| OracleError::Invalid(e.to_string()))?;
    let layout = problem.augmented_layout();
    let ga = &g[layout.range("a").expect("a segment")];
    let gb = &g[layout.range("b").expect("b segment")];
    let lam = aux.lambda();
    let identity = aux
        .a()
        .iter()
        .zip(ga.iter().zip(gb))
        .map(|(a, (da, db))| (a * da - db - 2.0 * lam * a * a).abs())
        .fold(0.0, f64::max);
    let max_a = aux.a().iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let block: Vec<f64> = ga.iter().chain(gb).copied().collect();
    Ok(OracleVerdict::new("stationary_a", max_a <= 1e-4)
        .residual("max_abs_a", max_a)
        .residual("ab_grad_norm", l2(&block))
        .residual("full_grad_norm", l2(&g))
        .residual("identity_residual", identity))
}
