//! Scalar abstractions shared by every numeric routine in the crate.
//!
//! [`Real`] is the storage float (`f32` or `f64`). [`Scalar`] is what model,
//! loss and objective expressions are written against: it is implemented by
//! the plain float itself (fast value-only evaluation) and by the tape
//! variable [`Var`](crate::diff::Var) (reverse-mode gradients), so each
//! expression is written exactly once.
//!
//! Exponentials go through a configurable clamp. An argument above the clamp
//! does not silently produce `inf`; it raises a per-thread overflow flag that
//! [`guard_overflow`] turns into an error.

use std::cell::Cell;
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::diff::ErasedObjective;

/// Default largest admissible argument of `exp`.
pub const DEFAULT_EXP_CLAMP: f64 = 500.0;

static EXP_CLAMP_BITS: AtomicU64 = AtomicU64::new(0x407F_4000_0000_0000); // 500.0

thread_local! {
    static OVERFLOW: Cell<Option<f64>> = const { Cell::new(None) };
}

/// Current exponent clamp (process wide).
pub fn exp_clamp() -> f64 {
    f64::from_bits(EXP_CLAMP_BITS.load(Ordering::Relaxed))
}

/// Override the exponent clamp. Non-positive or non-finite values are ignored.
pub fn set_exp_clamp(clamp: f64) -> bool {
    if clamp.is_finite() && clamp > 0.0 {
        EXP_CLAMP_BITS.store(clamp.to_bits(), Ordering::Relaxed);
        true
    } else {
        false
    }
}

/// Exponent argument that exceeded the clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overflow {
    pub argument: f64,
    pub clamp: f64,
}

/// Run `f` and report whether any clamped exponential inside it overflowed.
///
/// Guards nest: an inner guard does not clear a flag raised before it started.
pub fn guard_overflow<T>(f: impl FnOnce() -> T) -> Result<T, Overflow> {
    let outer = OVERFLOW.with(|c| c.replace(None));
    let out = f();
    let inner = OVERFLOW.with(|c| c.replace(outer));
    match inner {
        Some(argument) => Err(Overflow {
            argument,
            clamp: exp_clamp(),
        }),
        None => Ok(out),
    }
}

pub(crate) fn clamped_exp<F: Real>(x: F) -> F {
    let arg = x.to_f64().unwrap_or(f64::NAN);
    if arg > exp_clamp() {
        OVERFLOW.with(|c| {
            if c.get().is_none() {
                c.set(Some(arg));
            }
        });
        F::infinity()
    } else {
        x.exp()
    }
}

/// Storage float type.
pub trait Real: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static {
    /// Convert an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Number-like type that model and loss expressions are generic over.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<<Self as Scalar>::Real, Output = Self>
    + Sub<<Self as Scalar>::Real, Output = Self>
    + Mul<<Self as Scalar>::Real, Output = Self>
{
    type Real: Real;

    fn constant(v: Self::Real) -> Self;

    fn value(self) -> Self::Real;

    /// Clamped exponential, see the module docs.
    fn exp(self) -> Self;

    fn ln(self) -> Self;

    fn tanh(self) -> Self;

    /// `max(0, x)`, with derivative 0 at the kink.
    fn relu(self) -> Self;

    fn powi(self, n: i32) -> Self;

    fn square(self) -> Self {
        self * self
    }

    /// Constant from an `f64` literal.
    fn cst(v: f64) -> Self {
        Self::constant(<Self::Real as Real>::lit(v))
    }

    /// Evaluate a type-erased objective on arguments of this scalar type.
    fn call_erased(objective: &dyn ErasedObjective<Self::Real>, args: &[Self]) -> Self;
}

impl<F: Real> Scalar for F {
    type Real = F;

    fn constant(v: F) -> Self {
        v
    }

    fn value(self) -> F {
        self
    }

    fn exp(self) -> Self {
        clamped_exp(self)
    }

    fn ln(self) -> Self {
        Float::ln(self)
    }

    fn tanh(self) -> Self {
        Float::tanh(self)
    }

    fn relu(self) -> Self {
        if self > F::zero() {
            self
        } else {
            F::zero()
        }
    }

    fn powi(self, n: i32) -> Self {
        Float::powi(self, n)
    }

    fn call_erased(objective: &dyn ErasedObjective<F>, args: &[Self]) -> Self {
        objective.eval_real(args)
    }
}

/// Sum a sequence of scalars, starting from zero.
pub fn sum<S: Scalar>(items: impl IntoIterator<Item = S>) -> S {
    items.into_iter().fold(S::cst(0.0), |acc, x| acc + x)
}
