use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augment::{augmented_objective, l2, original_objective, AuxParams, Dataset, Problem, Reduction};
use crate::criteria::LossCriterion;
use crate::fixtures::FixtureError;
use crate::models::{GaussianCurve, ModelSpec};
use crate::oracles::{gradient_factorization, grid_global_min, OracleVerdict};

/// Exact critical point of the two-well curve inside its shallow well.
pub fn shallow_critical_point() -> f64 {
    GaussianCurve::bump()
        .critical_point(0.1, 0.3)
        .expect("the shallow well has a critical point in [0.1, 0.3]")
}

/// A problem together with a parameter that is stationary for `L` but
/// not globally optimal.
#[derive(Debug, Clone)]
pub struct BasinFixture {
    pub problem: Problem<f64>,
    pub theta: Vec<f64>,
}

impl BasinFixture {
    /// Shifted curve, one sample at `x = 0` with `y = -1`, cubic hinge.
    /// Every output Jacobian vanishes at `θ = (θc, 0)`.
    pub fn zero_jacobian() -> Self {
        let data = Dataset::new(vec![vec![0.0]], vec![vec![-1.0]]).expect("valid");
        let problem = Problem::new(
            ModelSpec::shifted_bump_curve(),
            LossCriterion::smoothed_hinge(3).expect("p = 3"),
            data,
            Reduction::Sum,
        )
        .expect("valid");
        Self {
            problem,
            theta: vec![shallow_critical_point(), 0.0],
        }
    }

    /// Sloped curve `curve(θ₀) + θ₁·x` on `x = ±1` with targets `t ∓ 1`,
    /// `t` the curve value at 0.8, squared loss. At `θ = (θc, 1)` the
    /// Jacobian is non-zero but the residual lies in its null space.
    pub fn sloped() -> Self {
        let t = GaussianCurve::bump().eval(0.8);
        let data = Dataset::new(vec![vec![-1.0], vec![1.0]], vec![vec![t - 1.0], vec![t + 1.0]]).expect("valid");
        let problem = Problem::new(
            ModelSpec::sloped_bump_curve(),
            LossCriterion::squared(1),
            data,
            Reduction::Mean,
        )
        .expect("valid");
        Self {
            problem,
            theta: vec![shallow_critical_point(), 1.0],
        }
    }

    pub fn loss(&self) -> f64 {
        original_objective(&self.problem)
            .evaluate_slice(&self.theta)
            .expect("finite")
    }

    /// Norm of the `θ` block of `∇L̃` at `(θ, aux)`.
    pub fn theta_gradient_norm(&self, aux: &AuxParams<f64>) -> Result<f64, FixtureError> {
        let obj = augmented_objective(&self.problem, aux.lambda()).map_err(|e| FixtureError::Invalid(e.to_string()))?;
        let mut p = self.theta.clone();
        p.extend(aux.packed());
        let (_, g) = obj
            .value_and_gradient(&p)
            .map_err(|e| FixtureError::Evaluation(e.to_string()))?;
        Ok(l2(&g[..self.theta.len()]))
    }

    fn random_aux(&self, rng: &mut ChaCha8Rng, lambda: f64) -> AuxParams<f64> {
        let dy = self.problem.output_dim();
        let dx = self.problem.input_dim();
        let mut draw = |n: usize| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        let (a, b, w) = (draw(dy), draw(dy), draw(dy * dx));
        AuxParams::new(a, b, w, dx, lambda).expect("dimensions match")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSpaceReport {
    pub zero_jacobian: OracleVerdict,
    pub sloped: OracleVerdict,
}

impl NullSpaceReport {
    pub fn pass(&self) -> bool {
        self.zero_jacobian.pass && self.sloped.pass
    }
}

/// `θ`-gradient of `L̃` at random added-neuron parameters; passes iff the
/// largest norm is at most `1e-10`.
pub fn zero_jacobian_check(n_aux: usize, seed: u64, lambda: f64) -> Result<OracleVerdict, FixtureError> {
    let fx = BasinFixture::zero_jacobian();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_aux {
        let aux = fx.random_aux(&mut rng, lambda);
        worst = worst.max(fx.theta_gradient_norm(&aux)?);
    }
    Ok(OracleVerdict::new("zero_jacobian", worst <= 1e-10)
        .residual("max_theta_grad", worst)
        .residual("loss", fx.loss())
        .residual("samples", n_aux as f64))
}

/// Passes iff `‖A r‖ ≤ 1e-10` at `f`, `A ≠ 0`, the grid minimum of `L` is
/// strictly lower than `L(θ)`, and `‖A r‖ > 1e-6` at every sampled `f + g`.
pub fn sloped_check(n_aux: usize, seed: u64, lambda: f64, resolution: f64) -> Result<OracleVerdict, FixtureError> {
    let fx = BasinFixture::sloped();
    let at_f =
        gradient_factorization(&fx.problem, &fx.theta, None).map_err(|e| FixtureError::Invalid(e.to_string()))?;
    let a_norm = at_f.a_matrix().norm();
    let loss = fx.loss();
    let grid = grid_global_min(&original_objective(&fx.problem), &[(0.0, 1.0), (0.0, 2.0)], resolution)
        .map_err(|e| FixtureError::Invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_perturbed = f64::INFINITY;
    for _ in 0..n_aux {
        let aux = fx.random_aux(&mut rng, lambda);
        let f = gradient_factorization(&fx.problem, &fx.theta, Some(&aux))
            .map_err(|e| FixtureError::Invalid(e.to_string()))?;
        min_perturbed = min_perturbed.min(f.ar_norm);
    }
    let pass = at_f.ar_norm <= 1e-10 && a_norm > 0.0 && grid.value < loss && min_perturbed > 1e-6;
    Ok(OracleVerdict::new("sloped_null_space", pass)
        .residual("ar_norm", at_f.ar_norm)
        .residual("a_norm", a_norm)
        .residual("r_norm", l2(&at_f.r))
        .residual("loss", loss)
        .residual("grid_min", grid.value)
        .residual("min_perturbed_ar_norm", min_perturbed)
        .witness(grid.argmin))
}

pub fn null_space_fixture(seed: u64) -> Result<NullSpaceReport, FixtureError> {
    Ok(NullSpaceReport {
        zero_jacobian: zero_jacobian_check(20, seed, 0.01)?,
        sloped: sloped_check(20, seed, 0.01, 1e-3)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_point_location() {
        let c = shallow_critical_point();
        assert!((c - 0.2).abs() < 0.01);
        assert!(GaussianCurve::bump().derivative(c).abs() < 1e-12);
    }

    #[test]
    fn zero_jacobian_fixture_is_suboptimal() {
        let fx = BasinFixture::zero_jacobian();
        assert!((fx.loss() - 8.0).abs() < 1e-3);
        let v = zero_jacobian_check(20, 3, 0.01).unwrap();
        assert!(v.pass, "{v:?}");
    }

    #[test]
    fn sloped_fixture() {
        let fx = BasinFixture::sloped();
        assert!(fx.loss() > 4.0);
        let v = sloped_check(20, 5, 0.01, 1e-2).unwrap();
        assert!(v.pass, "{v:?}");
        assert!(v.get("grid_min").unwrap() < 1e-3);
        assert!(v.get("r_norm").unwrap() > 1.0);
    }
}
