//! The standard training objective and its augmented counterpart.
//!
//! The augmented objective adds one exponential neuron per output unit,
//! `g(x)_k = a_k · exp(w_k · x + b_k)`, to the network output and penalises
//! `λ‖a‖²`. Packed parameter order is `theta | a | b | W` with `W` stored
//! column-major (`d_x × d_y`, column `k` is `w_k`).

mod data;

pub use data::{Dataset, Reduction, DUPLICATE_TOL};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::criteria::{CriterionError, LossCriterion};
use crate::diff::{GradientProgram, Layout, Objective};
use crate::models::{ModelError, ModelSpec};
use crate::oracles::OracleVerdict;
use crate::scalar::{guard_overflow, Real, Scalar};

/// Default regulariser weight.
pub const DEFAULT_LAMBDA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AugmentError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("lambda must be positive, got {0}")]
    InvalidLambda(f64),
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("dataset I/O: {0}")]
    Io(String),
    #[error(transparent)]
    Criterion(#[from] CriterionError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("exponent argument {argument} exceeds clamp {clamp}")]
    Overflow { argument: f64, clamp: f64 },
}

impl From<crate::scalar::Overflow> for AugmentError {
    fn from(o: crate::scalar::Overflow) -> Self {
        AugmentError::Overflow {
            argument: o.argument,
            clamp: o.clamp,
        }
    }
}

fn check_lambda<F: Real>(lambda: F) -> Result<(), AugmentError> {
    if lambda.is_finite() && lambda > F::zero() {
        Ok(())
    } else {
        Err(AugmentError::InvalidLambda(lambda.to_f64_lossy()))
    }
}

/// `w_k · x + b_k` for unit `k`, `W` column-major.
fn neuron_arg<S: Scalar>(b: &[S], w: &[S], x: &[S::Real], k: usize) -> S {
    let dx = x.len();
    w[k * dx..(k + 1) * dx]
        .iter()
        .zip(x)
        .fold(b[k], |acc, (&wj, &xj)| acc + wj * xj)
}

/// Added-neuron parameters `(a, b, W)` and the regulariser weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxParams<F> {
    a: Vec<F>,
    b: Vec<F>,
    w: Vec<F>,
    input_dim: usize,
    lambda: F,
}

impl<F: Real> AuxParams<F> {
    /// `w` is column-major with `input_dim` rows and `a.len()` columns.
    pub fn new(a: Vec<F>, b: Vec<F>, w: Vec<F>, input_dim: usize, lambda: F) -> Result<Self, AugmentError> {
        check_lambda(lambda)?;
        if b.len() != a.len() {
            return Err(AugmentError::Dimension {
                what: "b",
                expected: a.len(),
                found: b.len(),
            });
        }
        if w.len() != a.len() * input_dim {
            return Err(AugmentError::Dimension {
                what: "W",
                expected: a.len() * input_dim,
                found: w.len(),
            });
        }
        if a.iter().chain(&b).chain(&w).any(|v| !v.is_finite()) {
            return Err(AugmentError::InvalidData("aux parameters must be finite".into()));
        }
        Ok(Self {
            a,
            b,
            w,
            input_dim,
            lambda,
        })
    }

    pub fn zeros(input_dim: usize, output_dim: usize, lambda: F) -> Result<Self, AugmentError> {
        Self::new(
            vec![F::zero(); output_dim],
            vec![F::zero(); output_dim],
            vec![F::zero(); input_dim * output_dim],
            input_dim,
            lambda,
        )
    }

    /// Split an `a | b | W` vector.
    pub fn from_packed(p: &[F], input_dim: usize, output_dim: usize, lambda: F) -> Result<Self, AugmentError> {
        let n = output_dim * (2 + input_dim);
        if p.len() != n {
            return Err(AugmentError::Dimension {
                what: "packed aux",
                expected: n,
                found: p.len(),
            });
        }
        Self::new(
            p[..output_dim].to_vec(),
            p[output_dim..2 * output_dim].to_vec(),
            p[2 * output_dim..].to_vec(),
            input_dim,
            lambda,
        )
    }

    pub fn packed(&self) -> Vec<F> {
        let mut out = self.a.clone();
        out.extend_from_slice(&self.b);
        out.extend_from_slice(&self.w);
        out
    }

    pub fn a(&self) -> &[F] {
        &self.a
    }

    pub fn b(&self) -> &[F] {
        &self.b
    }

    /// Column-major `W`.
    pub fn w(&self) -> &[F] {
        &self.w
    }

    pub fn lambda(&self) -> F {
        self.lambda
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.a.len()
    }

    /// `g(x)`.
    pub fn g_eval(&self, x: &[F]) -> Result<Vec<F>, AugmentError> {
        if x.len() != self.input_dim {
            return Err(AugmentError::Dimension {
                what: "input",
                expected: self.input_dim,
                found: x.len(),
            });
        }
        Ok(guard_overflow(|| {
            (0..self.output_dim())
                .map(|k| self.a[k] * Scalar::exp(neuron_arg(&self.b, &self.w, x, k)))
                .collect()
        })?)
    }

    /// `‖a‖₂ + ‖b‖₂ + ‖W‖_F`.
    pub fn norm(&self) -> F {
        split_norm(&self.a, &self.b, &self.w)
    }

    pub fn regulariser(&self) -> F {
        self.lambda * self.a.iter().fold(F::zero(), |s, &v| s + v * v)
    }
}

pub(crate) fn l2<F: Real>(v: &[F]) -> F {
    v.iter().fold(F::zero(), |s, &x| s + x * x).sqrt()
}

/// `‖a‖₂ + ‖b‖₂ + ‖W‖_F` from raw segments.
pub fn split_norm<F: Real>(a: &[F], b: &[F], w: &[F]) -> F {
    l2(a) + l2(b) + l2(w)
}

/// Model, criterion, data and reduction: everything `L` depends on.
#[derive(Debug, Clone)]
pub struct Problem<F> {
    pub model: ModelSpec,
    pub criterion: LossCriterion,
    pub data: Arc<Dataset<F>>,
    pub reduction: Reduction,
}

impl<F: Real> Problem<F> {
    pub fn new(
        model: ModelSpec,
        criterion: LossCriterion,
        data: Dataset<F>,
        reduction: Reduction,
    ) -> Result<Self, AugmentError> {
        model.validate()?;
        if model.input_dim != data.input_dim() {
            return Err(AugmentError::Dimension {
                what: "model input",
                expected: data.input_dim(),
                found: model.input_dim,
            });
        }
        if model.output_dim != criterion.output_dim() {
            return Err(AugmentError::Dimension {
                what: "model output",
                expected: criterion.output_dim(),
                found: model.output_dim,
            });
        }
        for y in data.targets() {
            criterion.validate_target(y)?;
        }
        Ok(Self {
            model,
            criterion,
            data: Arc::new(data),
            reduction,
        })
    }

    /// Same problem on a subset of samples.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, AugmentError> {
        Ok(Self {
            model: self.model.clone(),
            criterion: self.criterion,
            data: Arc::new(self.data.subset(indices)?),
            reduction: self.reduction,
        })
    }

    pub fn theta_dim(&self) -> usize {
        self.model.param_count()
    }

    pub fn input_dim(&self) -> usize {
        self.model.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.model.output_dim
    }

    pub fn aux_dim(&self) -> usize {
        self.output_dim() * (2 + self.input_dim())
    }

    pub fn aux_layout(&self) -> Layout {
        Layout::builder()
            .segment("a", self.output_dim())
            .segment("b", self.output_dim())
            .segment("W", self.output_dim() * self.input_dim())
            .build()
    }

    pub fn augmented_layout(&self) -> Layout {
        Layout::builder()
            .segment("theta", self.theta_dim())
            .segment("a", self.output_dim())
            .segment("b", self.output_dim())
            .segment("W", self.output_dim() * self.input_dim())
            .build()
    }

    /// `L(θ)` on any scalar type.
    pub fn loss_expr<S: Scalar<Real = F>>(&self, theta: &[S]) -> S {
        let data = &self.data;
        let total = data
            .inputs()
            .iter()
            .zip(data.targets())
            .fold(S::cst(0.0), |acc, (x, y)| {
                acc + self.criterion.expr(&self.model.forward(theta, x), y)
            });
        total * self.reduction.factor::<F>(data.len())
    }

    /// `L̃(θ, a, b, W)` on any scalar type.
    pub fn augmented_expr<S: Scalar<Real = F>>(&self, theta: &[S], a: &[S], b: &[S], w: &[S], lambda: F) -> S {
        let data = &self.data;
        let total = data
            .inputs()
            .iter()
            .zip(data.targets())
            .fold(S::cst(0.0), |acc, (x, y)| {
                let mut q = self.model.forward(theta, x);
                for (k, qk) in q.iter_mut().enumerate() {
                    *qk = *qk + a[k] * neuron_arg(b, w, x, k).exp();
                }
                acc + self.criterion.expr(&q, y)
            });
        let reg = a.iter().fold(S::cst(0.0), |s, &ak| s + ak.square()) * lambda;
        total * self.reduction.factor::<F>(data.len()) + reg
    }

    /// Network outputs `f(x_i; θ)` for every sample.
    pub fn outputs(&self, theta: &[F]) -> Result<Vec<Vec<F>>, AugmentError> {
        self.data
            .inputs()
            .iter()
            .map(|x| Ok(self.model.forward_checked(theta, x)?))
            .collect()
    }
}

struct Original<F> {
    problem: Arc<Problem<F>>,
}

impl<F: Real> Objective<F> for Original<F> {
    fn dim(&self) -> usize {
        self.problem.theta_dim()
    }

    fn expr<S: Scalar<Real = F>>(&self, p: &[S]) -> S {
        self.problem.loss_expr(p)
    }
}

struct Augmented<F> {
    problem: Arc<Problem<F>>,
    lambda: F,
    frozen_theta: Option<Vec<F>>,
}

impl<F: Real> Objective<F> for Augmented<F> {
    fn dim(&self) -> usize {
        match self.frozen_theta {
            Some(_) => self.problem.aux_dim(),
            None => self.problem.theta_dim() + self.problem.aux_dim(),
        }
    }

    fn expr<S: Scalar<Real = F>>(&self, p: &[S]) -> S {
        let dy = self.problem.output_dim();
        let (theta, aux): (Vec<S>, &[S]) = match &self.frozen_theta {
            Some(t) => (t.iter().map(|&v| S::constant(v)).collect(), p),
            None => {
                let n = self.problem.theta_dim();
                (p[..n].to_vec(), &p[n..])
            }
        };
        let (a, rest) = aux.split_at(dy);
        let (b, w) = rest.split_at(dy);
        self.problem.augmented_expr(&theta, a, b, w, self.lambda)
    }
}

/// `L` over `theta`.
pub fn original_objective<F: Real>(problem: &Problem<F>) -> GradientProgram<F> {
    let layout = Layout::builder().segment("theta", problem.theta_dim()).build();
    GradientProgram::new(Original {
        problem: Arc::new(problem.clone()),
    })
    .with_layout(layout)
    .expect("layout matches")
    .labelled("original")
}

/// `L̃` over the packed `theta | a | b | W` vector.
pub fn augmented_objective<F: Real>(problem: &Problem<F>, lambda: F) -> Result<GradientProgram<F>, AugmentError> {
    check_lambda(lambda)?;
    Ok(GradientProgram::new(Augmented {
        problem: Arc::new(problem.clone()),
        lambda,
        frozen_theta: None,
    })
    .with_layout(problem.augmented_layout())
    .expect("layout matches")
    .labelled("augmented"))
}

/// `L̃` with `θ` held fixed, over `a | b | W`.
pub fn frozen_theta_objective<F: Real>(
    problem: &Problem<F>,
    theta: &[F],
    lambda: F,
) -> Result<GradientProgram<F>, AugmentError> {
    check_lambda(lambda)?;
    if theta.len() != problem.theta_dim() {
        return Err(AugmentError::Dimension {
            what: "theta",
            expected: problem.theta_dim(),
            found: theta.len(),
        });
    }
    Ok(GradientProgram::new(Augmented {
        problem: Arc::new(problem.clone()),
        lambda,
        frozen_theta: Some(theta.to_vec()),
    })
    .with_layout(problem.aux_layout())
    .expect("layout matches")
    .labelled("augmented-frozen-theta"))
}

/// Largest `‖g(x)‖` over probes, which is how far `f + g` strays from `f`.
///
/// Passes iff `‖a‖ ≤ 1e-8` and the deviation is at most `1e-6`. The
/// deviation is also checked against `‖a‖ · max exp(w_k·x + b_k)`.
pub fn vanish_check(aux: &AuxParams<f64>, probes: &[Vec<f64>]) -> OracleVerdict {
    let a_norm = l2(aux.a());
    let mut deviation: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut overflowed = false;
    for x in probes {
        match aux.g_eval(x) {
            Ok(g) => deviation = deviation.max(l2(&g)),
            Err(_) => overflowed = true,
        }
        for k in 0..aux.output_dim() {
            let arg = neuron_arg(aux.b(), aux.w(), x, k);
            scale = scale.max(arg.exp());
        }
    }
    let within_bound = deviation <= a_norm * scale * (1.0 + 1e-12) * (aux.output_dim() as f64).sqrt();
    let pass = !overflowed && a_norm <= 1e-8 && deviation <= 1e-6 && within_bound;
    let mut v = OracleVerdict::new("vanish", pass)
        .residual("deviation", deviation)
        .residual("a_norm", a_norm)
        .residual("bound", a_norm * scale);
    if overflowed {
        v = v.note("exponent overflow at some probe");
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Activation;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// One sample at x = 0.3, y = 1; parameters (0, 2) make f ≡ 2.
    fn one_sample_squared() -> Problem<f64> {
        let data = Dataset::new(vec![vec![0.3]], vec![vec![1.0]]).unwrap();
        Problem::new(ModelSpec::linear(1, 1), LossCriterion::squared(1), data, Reduction::Sum).unwrap()
    }

    #[test]
    fn g_examples() {
        let aux = AuxParams::new(vec![0.0], vec![3.0], vec![1.0], 1, 0.01).unwrap();
        assert_eq!(aux.g_eval(&[5.0]).unwrap(), vec![0.0]);
        let e2 = (-2.0f64).exp();
        let aux = AuxParams::new(vec![-e2], vec![2.0], vec![0.0], 1, 0.01).unwrap();
        assert!((aux.g_eval(&[123.0]).unwrap()[0] + 1.0).abs() < 1e-15);
        let aux = AuxParams::new(vec![1.0, 2.0], vec![0.0, 0.0], vec![0.0; 6], 3, 0.01).unwrap();
        assert_eq!(aux.g_eval(&[1.0, -4.0, 9.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn g_overflow_is_an_error() {
        let aux = AuxParams::new(vec![1.0], vec![400.0], vec![200.0], 1, 0.01).unwrap();
        assert!(matches!(aux.g_eval(&[1.0]), Err(AugmentError::Overflow { .. })));
    }

    #[test]
    fn lambda_must_be_positive() {
        assert!(matches!(
            AuxParams::<f64>::zeros(1, 1, 0.0),
            Err(AugmentError::InvalidLambda(_))
        ));
        let p = one_sample_squared();
        assert!(augmented_objective(&p, -1.0).is_err());
    }

    #[test]
    fn original_examples() {
        let p = one_sample_squared();
        let l = original_objective(&p);
        assert_eq!(l.evaluate_slice(&[0.0, 2.0]).unwrap(), 1.0);

        let data = Dataset::new(vec![vec![0.0], vec![1.0]], vec![vec![1.0], vec![-1.0]]).unwrap();
        let p = Problem::new(ModelSpec::linear(1, 1), LossCriterion::squared(1), data, Reduction::Sum).unwrap();
        assert_eq!(original_objective(&p).evaluate_slice(&[0.0, 0.0]).unwrap(), 2.0);
        let mean = Problem {
            reduction: Reduction::Mean,
            ..p
        };
        assert_eq!(original_objective(&mean).evaluate_slice(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn augmented_examples() {
        let p = one_sample_squared();
        let lt = augmented_objective(&p, 0.01).unwrap();
        let w = 0.7;
        let e2 = (-2.0f64).exp();
        let v = lt.evaluate_slice(&[0.0, 2.0, -e2, 2.0 - w * 0.3, w]).unwrap();
        assert!((v - 0.01 * (-4.0f64).exp()).abs() < 1e-15);
        assert!((v - 1.83156e-4).abs() < 1e-9);

        let data = Dataset::new(vec![vec![0.0], vec![1.0]], vec![vec![1.0], vec![-1.0]]).unwrap();
        let p = Problem::new(ModelSpec::linear(1, 1), LossCriterion::squared(1), data, Reduction::Sum).unwrap();
        let lt = augmented_objective(&p, 0.01).unwrap();
        let a = (-4.0f64).exp();
        let v = lt.evaluate_slice(&[0.0, 0.0, a, 4.0, -4.0]).unwrap();
        let closed = (a + 1.0).powi(2) + 0.01 * (-8.0f64).exp();
        assert!((v - closed).abs() < 1e-14);
        assert!((v - 1.0369700).abs() < 1e-6);
    }

    #[test]
    fn layouts() {
        let p = Problem::new(
            ModelSpec::mlp(vec![2, 3, 2], Activation::Tanh).unwrap(),
            LossCriterion::squared(2),
            Dataset::new(vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]).unwrap(),
            Reduction::Mean,
        )
        .unwrap();
        let lt = augmented_objective(&p, 0.01).unwrap();
        assert_eq!(lt.dim(), 17 + 2 + 2 + 4);
        assert_eq!(lt.layout().range("W"), Some(21..25));
        let frozen = frozen_theta_objective(&p, &[0.0; 17], 0.01).unwrap();
        assert_eq!(frozen.dim(), 8);
        assert!(frozen_theta_objective(&p, &[0.0], 0.01).is_err());
    }

    #[test]
    fn problem_dimension_checks() {
        let data = Dataset::new(vec![vec![0.0, 1.0]], vec![vec![1.0]]).unwrap();
        assert!(Problem::new(
            ModelSpec::linear(1, 1),
            LossCriterion::squared(1),
            data.clone(),
            Reduction::Mean
        )
        .is_err());
        assert!(Problem::new(
            ModelSpec::linear(2, 1),
            LossCriterion::squared(2),
            data.clone(),
            Reduction::Mean
        )
        .is_err());
        let ce = Dataset::new(vec![vec![0.0]], vec![vec![0.5, 0.6]]).unwrap();
        assert!(matches!(
            Problem::new(
                ModelSpec::linear(1, 2),
                LossCriterion::cross_entropy(2),
                ce,
                Reduction::Mean
            ),
            Err(AugmentError::Criterion(_))
        ));
    }

    #[test]
    fn vanish_examples() {
        let probes = vec![vec![0.0], vec![1.0], vec![-2.0]];
        let v = vanish_check(&AuxParams::zeros(1, 1, 0.01).unwrap(), &probes);
        assert!(v.pass);
        assert_eq!(v.get("deviation"), Some(0.0));
        let v = vanish_check(
            &AuxParams::new(vec![1e-12], vec![0.0], vec![0.0], 1, 0.01).unwrap(),
            &probes,
        );
        assert!(v.pass);
        assert!((v.get("deviation").unwrap() - 1e-12).abs() < 1e-24);
        let v = vanish_check(
            &AuxParams::new(vec![0.5], vec![0.0], vec![0.0], 1, 0.01).unwrap(),
            &probes,
        );
        assert!(!v.pass);
        assert_eq!(v.get("deviation"), Some(0.5));
    }

    fn mlp_problem(seed: u64) -> Problem<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Vec<f64>> = (0..4)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let ys: Vec<Vec<f64>> = (0..4).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
        Problem::new(
            ModelSpec::mlp(vec![2, 3, 1], Activation::Tanh).unwrap(),
            LossCriterion::squared(1),
            Dataset::new(xs, ys).unwrap(),
            Reduction::Mean,
        )
        .unwrap()
    }

    #[test]
    fn identity_at_zero_amplitude() {
        let p = mlp_problem(3);
        let l = original_objective(&p);
        let lt = augmented_objective(&p, 0.01).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let theta: Vec<f64> = (0..p.theta_dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut packed = theta.clone();
            packed.push(0.0);
            packed.push(rng.random_range(-5.0..5.0));
            packed.extend((0..2).map(|_| rng.random_range(-5.0..5.0)));
            let diff = lt.evaluate_slice(&packed).unwrap() - l.evaluate_slice(&theta).unwrap();
            assert!(diff.abs() <= 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn amplitude_bias_identity(seed in any::<u64>(), lambda in prop::sample::select(vec![1e-3, 1e-2, 1e-1])) {
            let p = mlp_problem(seed);
            let lt = augmented_objective(&p, lambda).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let packed: Vec<f64> = (0..lt.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let (_, g) = lt.value_and_gradient(&packed).unwrap();
            let (ia, ib) = (lt.layout().range("a").unwrap().start, lt.layout().range("b").unwrap().start);
            let a = packed[ia];
            let lhs = a * g[ia] - g[ib];
            prop_assert!((lhs - 2.0 * lambda * a * a).abs() <= 1e-9, "{lhs}");
        }

        #[test]
        fn g_is_homogeneous_in_amplitude(
            a in proptest::collection::vec(-2.0f64..2.0, 2),
            b in proptest::collection::vec(-2.0f64..2.0, 2),
            w in proptest::collection::vec(-2.0f64..2.0, 6),
            x in proptest::collection::vec(-2.0f64..2.0, 3),
            t in -3.0f64..3.0,
        ) {
            let g = AuxParams::new(a.clone(), b.clone(), w.clone(), 3, 0.01).unwrap().g_eval(&x).unwrap();
            let scaled: Vec<f64> = a.iter().map(|v| v * t).collect();
            let gt = AuxParams::new(scaled, b, w, 3, 0.01).unwrap().g_eval(&x).unwrap();
            for (u, v) in g.iter().zip(&gt) {
                prop_assert!((u * t - v).abs() <= 1e-12 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn divergence_path_is_monotone() {
        let p = one_sample_squared();
        let lt = augmented_objective(&p, 0.01).unwrap();
        let w = 0.5;
        let mut prev: Option<(f64, f64)> = None;
        for eps in [1.0, 0.5, 0.25, 0.1] {
            let a = -(-1.0 / eps).exp();
            let b = 1.0 / eps - w * 0.3;
            let v = lt.evaluate_slice(&[0.0, 2.0, a, b, w]).unwrap();
            let norm = split_norm(&[a], &[b], &[w]);
            if let Some((pv, pn)) = prev {
                assert!(v < pv && norm > pn);
            }
            prev = Some((v, norm));
        }
    }

    #[test]
    fn works_in_single_precision() {
        let data = Dataset::new(vec![vec![0.0f32]], vec![vec![1.0f32]]).unwrap();
        let p = Problem::new(
            ModelSpec::linear(1, 1),
            LossCriterion::squared(1),
            data,
            Reduction::Mean,
        )
        .unwrap();
        let lt = augmented_objective(&p, 0.01f32).unwrap();
        let v = lt.evaluate_slice(&[0.0, 2.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(v, 1.0f32);
    }
}
