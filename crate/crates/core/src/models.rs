//! The wrapped network `f(x; θ)`.
//!
//! Two families: small fully-connected networks, and one-dimensional curves
//! built from Gaussian bumps that serve as hand-checkable loss landscapes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diff::Tape;
use crate::scalar::{guard_overflow, Real, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("exponent overflow in model evaluation")]
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    /// Subgradient 0 at the kink.
    Relu,
    Identity,
}

impl Activation {
    pub fn apply<S: Scalar>(self, z: S) -> S {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.relu(),
            Activation::Identity => z,
        }
    }
}

/// One Gaussian bump `weight · exp(−width · (t − center)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub weight: f64,
    pub center: f64,
    pub width: f64,
}

/// `t ↦ scale · (Σ_j bump_j(t) + offset)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianCurve {
    pub scale: f64,
    pub offset: f64,
    pub bumps: Vec<Bump>,
}

impl GaussianCurve {
    /// Two-well curve with a shallow well near 0.2 and a deep one near 0.8.
    pub fn bump() -> Self {
        Self {
            scale: 5.0,
            offset: 0.5,
            bumps: vec![
                Bump {
                    weight: -0.3,
                    center: 0.2,
                    width: 16.0,
                },
                Bump {
                    weight: -0.7,
                    center: 0.8,
                    width: 32.0,
                },
            ],
        }
    }

    pub fn eval<S: Scalar>(&self, t: S) -> S {
        let mut acc = S::cst(self.offset);
        for b in &self.bumps {
            let d = t - <S::Real as Real>::lit(b.center);
            acc = acc + (d.square() * <S::Real as Real>::lit(-b.width)).exp() * <S::Real as Real>::lit(b.weight);
        }
        acc * <S::Real as Real>::lit(self.scale)
    }

    /// Closed-form derivative in `t`.
    pub fn derivative(&self, t: f64) -> f64 {
        self.scale
            * self
                .bumps
                .iter()
                .map(|b| {
                    let d = t - b.center;
                    -2.0 * b.width * d * b.weight * (-b.width * d * d).exp()
                })
                .sum::<f64>()
    }

    /// Root of the derivative in `[lo, hi]` by bisection; the derivative must
    /// change sign across the bracket.
    pub fn critical_point(&self, lo: f64, hi: f64) -> Option<f64> {
        let (mut lo, mut hi) = (lo, hi);
        let (mut dlo, dhi) = (self.derivative(lo), self.derivative(hi));
        if dlo == 0.0 {
            return Some(lo);
        }
        if dhi == 0.0 {
            return Some(hi);
        }
        if dlo.signum() == dhi.signum() {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let dm = self.derivative(mid);
            if dm == 0.0 {
                return Some(mid);
            }
            if dm.signum() == dlo.signum() {
                lo = mid;
                dlo = dm;
            } else {
                hi = mid;
            }
        }
        Some(if self.derivative(lo).abs() <= self.derivative(hi).abs() {
            lo
        } else {
            hi
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelKind {
    /// `widths = [d_x, hidden.., d_y]`; activation on hidden layers only.
    /// Parameters per layer: weights row-major (out × in), then biases.
    Mlp { widths: Vec<usize>, activation: Activation },
    /// `f = curve(θ)`, input ignored.
    Curve { curve: GaussianCurve },
    /// `f = curve(θ₀ + θ₁·x₀)`: the input enters through an extra parameter.
    ShiftedCurve { curve: GaussianCurve },
    /// `f = curve(θ₀) + θ₁·x₀`.
    SlopedCurve { curve: GaussianCurve },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl ModelSpec {
    pub fn mlp(widths: Vec<usize>, activation: Activation) -> Result<Self, ModelError> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(ModelError::Invalid(format!(
                "mlp widths must list at least input and output sizes, all positive: {widths:?}"
            )));
        }
        Ok(Self {
            input_dim: widths[0],
            output_dim: *widths.last().unwrap(),
            kind: ModelKind::Mlp { widths, activation },
        })
    }

    /// Single linear layer `f = Wx + c`.
    pub fn linear(input_dim: usize, output_dim: usize) -> Self {
        Self::mlp(vec![input_dim, output_dim], Activation::Identity).expect("positive widths")
    }

    pub fn bump_curve() -> Self {
        Self {
            kind: ModelKind::Curve {
                curve: GaussianCurve::bump(),
            },
            input_dim: 1,
            output_dim: 1,
        }
    }

    pub fn shifted_bump_curve() -> Self {
        Self {
            kind: ModelKind::ShiftedCurve {
                curve: GaussianCurve::bump(),
            },
            input_dim: 1,
            output_dim: 1,
        }
    }

    pub fn sloped_bump_curve() -> Self {
        Self {
            kind: ModelKind::SlopedCurve {
                curve: GaussianCurve::bump(),
            },
            input_dim: 1,
            output_dim: 1,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match &self.kind {
            ModelKind::Mlp { widths, .. } => {
                if widths.len() < 2 || widths.contains(&0) {
                    return Err(ModelError::Invalid(format!("bad mlp widths {widths:?}")));
                }
                if widths[0] != self.input_dim || *widths.last().unwrap() != self.output_dim {
                    return Err(ModelError::Invalid(
                        "mlp widths disagree with declared input/output dims".into(),
                    ));
                }
            }
            _ => {
                if self.output_dim != 1 || self.input_dim == 0 {
                    return Err(ModelError::Invalid(
                        "curve models have scalar output and at least one input".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        match &self.kind {
            ModelKind::Mlp { widths, .. } => widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum(),
            ModelKind::Curve { .. } => 1,
            ModelKind::ShiftedCurve { .. } | ModelKind::SlopedCurve { .. } => 2,
        }
    }

    /// Network output on any scalar type; dimensions are not checked.
    pub fn forward<S: Scalar>(&self, theta: &[S], x: &[S::Real]) -> Vec<S> {
        match &self.kind {
            ModelKind::Mlp { widths, activation } => {
                let mut h: Vec<S> = x.iter().map(|&v| S::constant(v)).collect();
                let mut offset = 0;
                let layers = widths.len() - 1;
                for (l, w) in widths.windows(2).enumerate() {
                    let (fan_in, fan_out) = (w[0], w[1]);
                    let weights = &theta[offset..offset + fan_in * fan_out];
                    let bias = &theta[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
                    offset += fan_in * fan_out + fan_out;
                    h = (0..fan_out)
                        .map(|j| {
                            let row = &weights[j * fan_in..(j + 1) * fan_in];
                            let z = row.iter().zip(&h).fold(bias[j], |acc, (&wij, &hi)| acc + wij * hi);
                            if l + 1 < layers {
                                activation.apply(z)
                            } else {
                                z
                            }
                        })
                        .collect();
                }
                h
            }
            ModelKind::Curve { curve } => vec![curve.eval(theta[0])],
            ModelKind::ShiftedCurve { curve } => vec![curve.eval(theta[0] + theta[1] * x[0])],
            ModelKind::SlopedCurve { curve } => vec![curve.eval(theta[0]) + theta[1] * x[0]],
        }
    }

    fn check_dims<F>(&self, theta: &[F], x: &[F]) -> Result<(), ModelError> {
        if theta.len() != self.param_count() {
            return Err(ModelError::Dimension {
                what: "parameters",
                expected: self.param_count(),
                found: theta.len(),
            });
        }
        if x.len() != self.input_dim {
            return Err(ModelError::Dimension {
                what: "input",
                expected: self.input_dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward_checked<F: Real>(&self, theta: &[F], x: &[F]) -> Result<Vec<F>, ModelError> {
        self.check_dims(theta, x)?;
        guard_overflow(|| self.forward(theta, x)).map_err(|_| ModelError::Overflow)
    }

    /// `d_y × d_θ` matrix of output partials, as rows.
    pub fn parameter_jacobian<F: Real>(&self, theta: &[F], x: &[F]) -> Result<Vec<Vec<F>>, ModelError> {
        self.check_dims(theta, x)?;
        guard_overflow(|| {
            let tape = Tape::new();
            let vars = tape.inputs(theta);
            self.forward(&vars, x)
                .into_iter()
                .map(|out| {
                    let mut adj = tape.adjoints(out);
                    adj.truncate(theta.len());
                    adj
                })
                .collect()
        })
        .map_err(|_| ModelError::Overflow)
    }

    /// Random initial parameters. MLP weights are uniform in `[−r, r]` with
    /// `r = sqrt(6 / (fan_in + fan_out))` and biases start at zero; curve
    /// parameters are uniform in `[0, 1]`.
    pub fn init_params<F: Real, R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<F> {
        match &self.kind {
            ModelKind::Mlp { widths, .. } => {
                let mut out = Vec::with_capacity(self.param_count());
                for w in widths.windows(2) {
                    let r = (6.0 / (w[0] + w[1]) as f64).sqrt();
                    out.extend((0..w[0] * w[1]).map(|_| F::lit(rng.random_range(-r..=r))));
                    out.extend((0..w[1]).map(|_| F::zero()));
                }
                out
            }
            _ => (0..self.param_count())
                .map(|_| F::lit(rng.random_range(0.0..=1.0)))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::LossCriterion;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn bump_values() {
        let m = ModelSpec::bump_curve();
        let f02 = m.forward_checked(&[0.2f64], &[0.0]).unwrap()[0];
        let f08 = m.forward_checked(&[0.8f64], &[0.0]).unwrap()[0];
        assert!((f02 - 0.9999653).abs() < 1e-7, "{f02}");
        assert!((f08 + 1.0047266).abs() < 1e-7, "{f08}");
        // independent evaluation of the closed form
        let direct = |t: f64| {
            5.0 * (-0.3 * (-16.0 * (t - 0.2f64).powi(2)).exp() - 0.7 * (-32.0 * (t - 0.8f64).powi(2)).exp() + 0.5)
        };
        for t in [0.0, 0.13, 0.5, 0.91] {
            let v = m.forward_checked(&[t], &[0.0]).unwrap()[0];
            assert!((v - direct(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn bump_derivative_matches_fd() {
        let m = ModelSpec::bump_curve();
        let j = m.parameter_jacobian(&[0.5f64], &[0.0]).unwrap()[0][0];
        let h = 1e-6;
        let fd = (m.forward_checked(&[0.5 + h], &[0.0]).unwrap()[0]
            - m.forward_checked(&[0.5 - h], &[0.0]).unwrap()[0])
            / (2.0 * h);
        assert!(((j - fd) / fd).abs() < 1e-5);
        assert!((j - GaussianCurve::bump().derivative(0.5)).abs() < 1e-12);
    }

    #[test]
    fn critical_point_near_shallow_well() {
        let c = GaussianCurve::bump();
        let t = c.critical_point(0.1, 0.4).unwrap();
        assert!((t - 0.2).abs() < 1e-3);
        assert!(c.derivative(t).abs() < 1e-12);
        assert!(c.critical_point(0.0, 0.05).is_none());
    }

    #[test]
    fn zero_mlp_outputs_zero() {
        let m = ModelSpec::mlp(vec![3, 4, 2], Activation::Identity).unwrap();
        let theta = vec![0.0; m.param_count()];
        assert_eq!(m.forward_checked(&theta, &[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(m.param_count(), 3 * 4 + 4 + 4 * 2 + 2);
    }

    #[test]
    fn linear_jacobian_reproduces_inputs() {
        let m = ModelSpec::linear(2, 2);
        let theta = [0.3, -0.1, 0.7, 0.2, 0.0, 0.0];
        let x = [1.5, -2.0];
        let jac = m.parameter_jacobian(&theta, &x).unwrap();
        assert_eq!(jac[0], vec![1.5, -2.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(jac[1], vec![0.0, 0.0, 1.5, -2.0, 0.0, 1.0]);
    }

    #[test]
    fn duplicate_inputs_share_jacobians() {
        let m = ModelSpec::mlp(vec![2, 3, 1], Activation::Tanh).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let theta: Vec<f64> = m.init_params(&mut rng);
        let x = [0.4, -0.9];
        assert_eq!(
            m.parameter_jacobian(&theta, &x).unwrap(),
            m.parameter_jacobian(&theta, &x.clone()).unwrap()
        );
    }

    #[test]
    fn dimension_errors() {
        let m = ModelSpec::linear(2, 1);
        assert!(matches!(
            m.forward_checked(&[0.0; 2], &[0.0, 0.0]),
            Err(ModelError::Dimension { what: "parameters", .. })
        ));
        assert!(matches!(
            m.forward_checked(&[0.0; 3], &[0.0]),
            Err(ModelError::Dimension { what: "input", .. })
        ));
        assert!(ModelSpec::mlp(vec![3], Activation::Tanh).is_err());
    }

    #[test]
    fn shallow_basin_is_suboptimal() {
        let m = ModelSpec::bump_curve();
        let c = LossCriterion::smoothed_hinge(3).unwrap();
        let loss = |t: f64| {
            c.loss_value(&m.forward_checked(&[t], &[0.0]).unwrap(), &[-1.0])
                .unwrap()
        };
        let grid: Vec<(f64, f64)> = (0..=1000).map(|i| i as f64 * 1e-3).map(|t| (t, loss(t))).collect();
        let (t_left, v_left) = grid
            .iter()
            .filter(|(t, _)| *t <= 0.5)
            .copied()
            .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        let global = grid.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        assert!((t_left - 0.2).abs() < 0.02);
        assert!((v_left - 8.0).abs() < 1e-2, "{v_left}");
        assert_eq!(global, 0.0);
        assert!((loss(0.2) - 7.99958).abs() < 1e-5);
    }

    #[test]
    fn single_precision_forward() {
        let m = ModelSpec::bump_curve();
        let v = m.forward_checked(&[0.2f32], &[0.0]).unwrap()[0];
        assert!((v - 0.9999653).abs() < 1e-5);
    }

    fn models() -> Vec<ModelSpec> {
        vec![
            ModelSpec::mlp(vec![2, 3, 2], Activation::Tanh).unwrap(),
            ModelSpec::mlp(vec![2, 4, 1], Activation::Relu).unwrap(),
            ModelSpec::linear(3, 2),
            ModelSpec::bump_curve(),
            ModelSpec::shifted_bump_curve(),
            ModelSpec::sloped_bump_curve(),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn jacobian_matches_finite_differences(which in 0usize..6, seed in any::<u64>()) {
            let m = &models()[which];
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let theta: Vec<f64> = (0..m.param_count()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let x: Vec<f64> = (0..m.input_dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            let jac = m.parameter_jacobian(&theta, &x).unwrap();
            let h = 1e-6;
            for i in 0..theta.len() {
                let mut up = theta.clone();
                up[i] += h;
                let mut dn = theta.clone();
                dn[i] -= h;
                let fu = m.forward_checked(&up, &x).unwrap();
                let fd = m.forward_checked(&dn, &x).unwrap();
                for k in 0..m.output_dim {
                    let num = (fu[k] - fd[k]) / (2.0 * h);
                    let an = jac[k][i];
                    if an.abs() < 1e-3 {
                        prop_assert!((num - an).abs() < 1e-7, "{num} vs {an}");
                    } else {
                        prop_assert!(((num - an) / an).abs() < 1e-4, "{num} vs {an}");
                    }
                }
            }
        }
    }
}
