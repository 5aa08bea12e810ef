//! Per-sample loss criteria `ℓ(q, y)`.
//!
//! Every criterion here is differentiable and convex in `q`. The sample
//! reduction (mean or sum) is not a loss property and lives with the
//! objectives in [`crate::augment`].

use serde::{Deserialize, Serialize};

use num_traits::Float;

use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CriterionError {
    #[error("dimension mismatch: criterion expects {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("invalid criterion: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "loss", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossKind {
    /// `‖q − y‖²`
    Squared,
    /// `(1 − yq)²`, scalar output only.
    SquaredMargin,
    /// `−Σ y_k log softmax(q)_k`
    CrossEntropy,
    /// `max(0, 1 − yq)^p` with integer `p ≥ 2`, scalar output only.
    SmoothedHinge { p: u32 },
}

/// Structural properties of a criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossProperties {
    /// Differentiable and convex in `q`.
    pub convex_differentiable: bool,
    /// Every stationary point of `q ↦ ℓ(q, y)` is a global minimum. For
    /// cross entropy this needs targets that softmax can attain (strictly
    /// positive probabilities); see [`LossCriterion::stationary_is_minimal_for`].
    pub stationary_is_minimal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossCriterion {
    kind: LossKind,
    output_dim: usize,
}

impl LossCriterion {
    pub fn new(kind: LossKind, output_dim: usize) -> Result<Self, CriterionError> {
        if output_dim == 0 {
            return Err(CriterionError::Invalid("output dimension must be positive".into()));
        }
        match kind {
            LossKind::SmoothedHinge { p } if p < 2 => {
                Err(CriterionError::Invalid(format!("smoothed hinge needs p >= 2, got {p}")))
            }
            LossKind::SmoothedHinge { .. } | LossKind::SquaredMargin if output_dim != 1 => Err(
                CriterionError::Invalid(format!("{kind:?} is defined for scalar outputs only")),
            ),
            _ => Ok(Self { kind, output_dim }),
        }
    }

    pub fn squared(output_dim: usize) -> Self {
        Self::new(LossKind::Squared, output_dim).expect("valid")
    }

    pub fn squared_margin() -> Self {
        Self::new(LossKind::SquaredMargin, 1).expect("valid")
    }

    pub fn cross_entropy(classes: usize) -> Self {
        Self::new(LossKind::CrossEntropy, classes).expect("valid")
    }

    pub fn smoothed_hinge(p: u32) -> Result<Self, CriterionError> {
        Self::new(LossKind::SmoothedHinge { p }, 1)
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn properties(&self) -> LossProperties {
        LossProperties {
            convex_differentiable: true,
            stationary_is_minimal: true,
        }
    }

    /// Whether the stationary-implies-minimal property holds for this target.
    pub fn stationary_is_minimal_for<F: Real>(&self, y: &[F]) -> bool {
        match self.kind {
            LossKind::CrossEntropy => y.iter().all(|&v| v > F::zero()),
            _ => true,
        }
    }

    pub fn validate_target<F: Real>(&self, y: &[F]) -> Result<(), CriterionError> {
        if y.len() != self.output_dim {
            return Err(CriterionError::Dimension {
                expected: self.output_dim,
                found: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(CriterionError::InvalidTarget("non-finite target".into()));
        }
        if self.kind == LossKind::CrossEntropy {
            if y.iter().any(|&v| v < F::zero()) {
                return Err(CriterionError::InvalidTarget(
                    "cross-entropy target has a negative entry".into(),
                ));
            }
            let total = y.iter().fold(F::zero(), |a, &b| a + b).to_f64_lossy();
            if (total - 1.0).abs() > 1e-9 {
                return Err(CriterionError::InvalidTarget(format!(
                    "cross-entropy target sums to {total}, expected 1"
                )));
            }
        }
        Ok(())
    }

    fn check<F: Real>(&self, q: &[F], y: &[F]) -> Result<(), CriterionError> {
        if q.len() != self.output_dim {
            return Err(CriterionError::Dimension {
                expected: self.output_dim,
                found: q.len(),
            });
        }
        self.validate_target(y)
    }

    /// Loss expression on any scalar type. Inputs are assumed validated.
    pub fn expr<S: Scalar>(&self, q: &[S], y: &[S::Real]) -> S {
        match self.kind {
            LossKind::Squared => q
                .iter()
                .zip(y)
                .fold(S::cst(0.0), |acc, (&qk, &yk)| acc + (qk - yk).square()),
            LossKind::SquaredMargin => (-(q[0] * y[0]) + S::cst(1.0)).square(),
            LossKind::CrossEntropy => {
                // log-sum-exp shifted by the (constant) max keeps exp in range
                let shift = q
                    .iter()
                    .map(|v| v.value())
                    .fold(<S::Real as Float>::neg_infinity(), Float::max);
                let lse = q.iter().fold(S::cst(0.0), |acc, &qk| acc + (qk - shift).exp()).ln() + shift;
                q.iter()
                    .zip(y)
                    .fold(S::cst(0.0), |acc, (&qk, &yk)| acc + (lse - qk) * yk)
            }
            LossKind::SmoothedHinge { p } => (-(q[0] * y[0]) + S::cst(1.0)).relu().powi(p as i32),
        }
    }

    pub fn loss_value<F: Real>(&self, q: &[F], y: &[F]) -> Result<F, CriterionError> {
        self.check(q, y)?;
        Ok(self.expr(q, y))
    }

    /// Closed-form gradient of `q ↦ ℓ(q, y)`.
    pub fn loss_gradient<F: Real>(&self, q: &[F], y: &[F]) -> Result<Vec<F>, CriterionError> {
        self.check(q, y)?;
        let two = F::lit(2.0);
        Ok(match self.kind {
            LossKind::Squared => q.iter().zip(y).map(|(&qk, &yk)| two * (qk - yk)).collect(),
            LossKind::SquaredMargin => vec![-two * y[0] * (F::one() - y[0] * q[0])],
            LossKind::CrossEntropy => {
                let shift = q.iter().fold(F::neg_infinity(), |a, &b| a.max(b));
                let exps: Vec<F> = q.iter().map(|&v| (v - shift).exp()).collect();
                let z = exps.iter().fold(F::zero(), |a, &b| a + b);
                let mass = y.iter().fold(F::zero(), |a, &b| a + b);
                exps.iter().zip(y).map(|(&e, &yk)| mass * e / z - yk).collect()
            }
            LossKind::SmoothedHinge { p } => {
                let margin = (F::one() - y[0] * q[0]).max(F::zero());
                let pf = F::lit(p as f64);
                vec![-pf * y[0] * margin.powi(p as i32 - 1)]
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::{GradientProgram, Objective};
    use proptest::prelude::*;

    struct LossAt {
        c: LossCriterion,
        y: Vec<f64>,
    }

    impl Objective<f64> for LossAt {
        fn dim(&self) -> usize {
            self.c.output_dim()
        }
        fn expr<S: Scalar<Real = f64>>(&self, q: &[S]) -> S {
            self.c.expr(q, &self.y)
        }
    }

    fn all_criteria() -> Vec<LossCriterion> {
        vec![
            LossCriterion::squared(1),
            LossCriterion::squared(3),
            LossCriterion::squared_margin(),
            LossCriterion::cross_entropy(3),
            LossCriterion::smoothed_hinge(2).unwrap(),
            LossCriterion::smoothed_hinge(3).unwrap(),
        ]
    }

    #[test]
    fn reference_values() {
        let sq = LossCriterion::squared(1);
        assert_eq!(sq.loss_value(&[2.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(sq.loss_gradient(&[2.0], &[1.0]).unwrap(), vec![2.0]);

        let hinge = LossCriterion::smoothed_hinge(3).unwrap();
        assert_eq!(hinge.loss_value(&[-1.0], &[1.0]).unwrap(), 8.0);
        assert_eq!(hinge.loss_gradient(&[-1.0], &[1.0]).unwrap(), vec![-12.0]);
        assert_eq!(hinge.loss_gradient(&[2.0], &[1.0]).unwrap(), vec![0.0]);

        let ce = LossCriterion::cross_entropy(2);
        let v = ce.loss_value(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn hinge_gradient_matches_finite_differences() {
        let c = LossCriterion::smoothed_hinge(3).unwrap();
        let prog = GradientProgram::new(LossAt { c, y: vec![1.0] });
        let fd = prog.finite_diff_slice(&[-1.0], 1e-6).unwrap();
        assert!((fd[0] + 12.0).abs() < 1e-6);
    }

    #[test]
    fn properties_and_construction() {
        let sq = LossCriterion::squared(2).properties();
        assert!(sq.convex_differentiable && sq.stationary_is_minimal);
        let h = LossCriterion::smoothed_hinge(3).unwrap().properties();
        assert!(h.convex_differentiable && h.stationary_is_minimal);
        assert!(LossCriterion::smoothed_hinge(1).is_err());
        assert!(LossCriterion::new(LossKind::SmoothedHinge { p: 3 }, 2).is_err());
        assert!(LossCriterion::new(LossKind::SquaredMargin, 2).is_err());
        let ce = LossCriterion::cross_entropy(2);
        assert!(!ce.stationary_is_minimal_for(&[1.0, 0.0]));
        assert!(ce.stationary_is_minimal_for(&[0.3, 0.7]));
    }

    #[test]
    fn errors() {
        let ce = LossCriterion::cross_entropy(2);
        assert!(matches!(
            ce.loss_value(&[0.0, 0.0], &[0.5, 0.6]),
            Err(CriterionError::InvalidTarget(_))
        ));
        assert!(matches!(
            ce.loss_value(&[0.0, 0.0], &[-0.5, 1.5]),
            Err(CriterionError::InvalidTarget(_))
        ));
        assert!(matches!(
            ce.loss_value(&[0.0], &[1.0, 0.0]),
            Err(CriterionError::Dimension { .. })
        ));
        assert!(matches!(
            LossCriterion::squared(2).loss_gradient(&[0.0, 1.0], &[1.0]),
            Err(CriterionError::Dimension { .. })
        ));
    }

    #[test]
    fn cross_entropy_stable_for_large_logits() {
        let ce = LossCriterion::cross_entropy(2);
        let v = ce.loss_value(&[1000.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((v - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn reverse_mode_matches_closed_form() {
        for c in all_criteria() {
            let d = c.output_dim();
            let y: Vec<f64> = match c.kind() {
                LossKind::CrossEntropy => vec![0.2, 0.5, 0.3],
                LossKind::Squared => (0..d).map(|k| 0.5 - k as f64).collect(),
                _ => vec![-1.0],
            };
            let prog = GradientProgram::new(LossAt { c, y: y.clone() });
            for q0 in [-1.7, -0.2, 0.4, 2.3] {
                let q: Vec<f64> = (0..d).map(|k| q0 + 0.3 * k as f64).collect();
                let (_, g) = prog.value_and_gradient(&q).unwrap();
                let closed = c.loss_gradient(&q, &y).unwrap();
                for (a, b) in g.iter().zip(&closed) {
                    assert!((a - b).abs() < 1e-12, "{c:?} at {q:?}: {a} vs {b}");
                }
            }
        }
    }

    fn target_for(c: &LossCriterion, raw: &[f64]) -> Vec<f64> {
        match c.kind() {
            LossKind::CrossEntropy => {
                let w: Vec<f64> = raw.iter().map(|v| v.abs() + 0.01).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|v| v / s).collect()
            }
            LossKind::Squared => raw[..c.output_dim()].to_vec(),
            _ => vec![if raw[0] >= 0.0 { 1.0 } else { -1.0 }],
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn convex_and_nonnegative(
            which in 0usize..6,
            q1 in proptest::collection::vec(-3.0f64..3.0, 3),
            q2 in proptest::collection::vec(-3.0f64..3.0, 3),
            raw in proptest::collection::vec(-2.0f64..2.0, 3),
            t in 0.0f64..=1.0,
        ) {
            let c = all_criteria()[which];
            let d = c.output_dim();
            let y = target_for(&c, &raw);
            let (a, b) = (&q1[..d], &q2[..d]);
            let mix: Vec<f64> = a.iter().zip(b).map(|(x, z)| t * x + (1.0 - t) * z).collect();
            let la = c.loss_value(a, &y).unwrap();
            let lb = c.loss_value(b, &y).unwrap();
            let lm = c.loss_value(&mix, &y).unwrap();
            prop_assert!(la >= 0.0 && lb >= 0.0 && lm >= 0.0);
            prop_assert!(lm <= t * la + (1.0 - t) * lb + 1e-10);
            // first-order convexity
            let g = c.loss_gradient(a, &y).unwrap();
            let lin: f64 = g.iter().zip(b.iter().zip(a)).map(|(gk, (bk, ak))| gk * (bk - ak)).sum();
            prop_assert!(lb >= la + lin - 1e-10);
        }
    }

    /// Stationary points found by random search are grid minima.
    #[test]
    fn stationary_points_are_global_minima() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let scalar_losses = [
            LossCriterion::squared(1),
            LossCriterion::squared_margin(),
            LossCriterion::smoothed_hinge(2).unwrap(),
            LossCriterion::smoothed_hinge(3).unwrap(),
        ];
        for c in scalar_losses {
            for y in [1.0, -1.0] {
                let grid_min = (0..=8000)
                    .map(|i| -4.0 + i as f64 * 1e-3)
                    .map(|q| c.loss_value(&[q], &[y]).unwrap())
                    .fold(f64::INFINITY, f64::min);
                let mut found = 0;
                for _ in 0..20_000 {
                    let q: f64 = rng.random_range(-4.0..4.0);
                    let g = c.loss_gradient(&[q], &[y]).unwrap()[0];
                    if g.abs() < 1e-12 {
                        found += 1;
                        let v = c.loss_value(&[q], &[y]).unwrap();
                        assert!((v - grid_min).abs() <= 1e-9, "{c:?} y={y} q={q}");
                    }
                }
                if matches!(c.kind(), LossKind::SmoothedHinge { .. }) {
                    assert!(found > 0, "hinge flat region should be hit");
                }
            }
        }
    }
}
