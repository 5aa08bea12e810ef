use serde::{Deserialize, Serialize};

use crate::augment::{augmented_objective, frozen_theta_objective, original_objective, AugmentError, Problem};
use crate::diff::GradientProgram;

/// Objective whose sample set can be restricted to a mini-batch.
pub trait BatchSource: Sync {
    /// Objective over every sample; used for stopping and monitoring.
    fn full(&self) -> &GradientProgram<f64>;

    fn sample_count(&self) -> usize;

    /// Same objective on the given sample indices.
    fn batch(&self, indices: &[usize]) -> GradientProgram<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "objective", rename_all = "snake_case")]
pub enum ObjectiveKind {
    Original,
    Augmented { lambda: f64 },
    FrozenTheta { theta: Vec<f64>, lambda: f64 },
}

impl ObjectiveKind {
    pub fn build(&self, problem: &Problem<f64>) -> Result<GradientProgram<f64>, AugmentError> {
        match self {
            ObjectiveKind::Original => Ok(original_objective(problem)),
            ObjectiveKind::Augmented { lambda } => augmented_objective(problem, *lambda),
            ObjectiveKind::FrozenTheta { theta, lambda } => frozen_theta_objective(problem, theta, *lambda),
        }
    }
}

/// A [`Problem`] together with the objective built from it.
#[derive(Debug, Clone)]
pub struct ProblemSource {
    problem: Problem<f64>,
    kind: ObjectiveKind,
    full: GradientProgram<f64>,
}

impl ProblemSource {
    pub fn new(problem: Problem<f64>, kind: ObjectiveKind) -> Result<Self, AugmentError> {
        let full = kind.build(&problem)?;
        Ok(Self { problem, kind, full })
    }

    pub fn problem(&self) -> &Problem<f64> {
        &self.problem
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }
}

impl BatchSource for ProblemSource {
    fn full(&self) -> &GradientProgram<f64> {
        &self.full
    }

    fn sample_count(&self) -> usize {
        self.problem.data.len()
    }

    fn batch(&self, indices: &[usize]) -> GradientProgram<f64> {
        let sub = self
            .problem
            .subset(indices)
            .expect("batch indices come from the sample range");
        self.kind.build(&sub).expect("kind was valid for the full problem")
    }
}
