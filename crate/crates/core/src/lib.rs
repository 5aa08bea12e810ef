//! Training objectives with one added exponential neuron per output, and the
//! tools to study them: a reverse-mode tape, losses and small models, the
//! augmented objective, first-order optimisers with a norm monitor, oracles
//! that check optimality claims, and reproducible fixtures.
//!
//! Numeric code is generic over [`num_traits::Float`] through
//! [`scalar::Real`]; the aliases below fix the scalar to `f64`.
//!
//! ```
//! use auxlab::augment::{augmented_objective, Dataset, Problem, Reduction};
//! use auxlab::criteria::LossCriterion;
//! use auxlab::models::ModelSpec;
//!
//! let data = Dataset::new(vec![vec![0.0], vec![1.0]], vec![vec![1.0], vec![-1.0]]).unwrap();
//! let problem = Problem::new(ModelSpec::linear(1, 1), LossCriterion::squared(1), data, Reduction::Sum).unwrap();
//! let objective = augmented_objective(&problem, 0.01).unwrap();
//! // theta = (W, c), then a, b, W of the added neuron
//! let (value, grad) = objective.value_and_gradient(&[0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
//! assert_eq!(value, 2.0);
//! assert_eq!(grad.len(), 5);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod criteria;
pub mod diff;
pub mod fixtures;
pub mod models;
pub mod optimize;
pub mod oracles;
pub mod scalar;

pub type Program = diff::GradientProgram<f64>;
pub type Params = diff::ParamVector<f64>;
pub type Tape = diff::Tape<f64>;
pub type Var<'t> = diff::Var<'t, f64>;
pub type Aux = augment::AuxParams<f64>;
pub type DataSet = augment::Dataset<f64>;
pub type TrainingProblem = augment::Problem<f64>;
