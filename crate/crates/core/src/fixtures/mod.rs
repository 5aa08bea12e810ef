//! Reproducible fixtures: closed-form examples, the two-well landscape and
//! the vanishing-Jacobian cases.

mod examples;
mod landscape;
mod nullspace;

pub use examples::*;
pub use landscape::*;
pub use nullspace::*;

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("invalid fixture input: {0}")]
    Invalid(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}
