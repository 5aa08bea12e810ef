//! Reverse-mode differentiation over a per-call operation list, plus a
//! central-difference oracle.

mod param;
mod program;
mod tape;

pub use param::{Layout, LayoutBuilder, ParamVector, Segment};
pub use program::{ErasedObjective, GradientProgram, Objective, Quadratic};
pub use tape::{Tape, Var};

use crate::scalar::Overflow;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("exponent argument {argument} exceeds clamp {clamp}")]
    Overflow { argument: f64, clamp: f64 },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),
}

impl From<Overflow> for DiffError {
    fn from(o: Overflow) -> Self {
        DiffError::Overflow {
            argument: o.argument,
            clamp: o.clamp,
        }
    }
}
