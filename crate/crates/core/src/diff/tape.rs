use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::Float;

use crate::diff::ErasedObjective;
use crate::scalar::{clamped_exp, Real, Scalar};

#[derive(Clone, Copy)]
struct Node<F> {
    parents: [usize; 2],
    partials: [F; 2],
    arity: u8,
}

/// Operation list recorded during one evaluation.
///
/// A tape lives for exactly one gradient call: inputs are pushed first, the
/// expression records one node per elementary operation, and
/// [`Tape::adjoints`] sweeps the list backwards.
pub struct Tape<F> {
    nodes: RefCell<Vec<Node<F>>>,
}

impl<F: Real> Default for Tape<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Real> Tape<F> {
    pub fn new() -> Self {
        Self {
            nodes: RefCell::new(Vec::with_capacity(64)),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Register an independent variable.
    pub fn input(&self, value: F) -> Var<'_, F> {
        let index = self.push(Node {
            parents: [0, 0],
            partials: [F::zero(), F::zero()],
            arity: 0,
        });
        Var {
            tape: Some(self),
            index,
            value,
        }
    }

    pub fn inputs(&self, values: &[F]) -> Vec<Var<'_, F>> {
        values.iter().map(|&v| self.input(v)).collect()
    }

    fn push(&self, node: Node<F>) -> usize {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(node);
        nodes.len() - 1
    }

    /// Adjoints of every recorded node with respect to `output`.
    pub fn adjoints(&self, output: Var<'_, F>) -> Vec<F> {
        let nodes = self.nodes.borrow();
        let mut adj = vec![F::zero(); nodes.len()];
        let Some(tape) = output.tape else {
            return adj;
        };
        debug_assert!(std::ptr::eq(tape, self), "output recorded on another tape");
        adj[output.index] = F::one();
        for i in (0..=output.index).rev() {
            let a = adj[i];
            if a == F::zero() {
                continue;
            }
            let node = nodes[i];
            for k in 0..node.arity as usize {
                adj[node.parents[k]] = adj[node.parents[k]] + a * node.partials[k];
            }
        }
        adj
    }
}

/// A value on a [`Tape`], or a tape-free constant.
#[derive(Clone, Copy)]
pub struct Var<'t, F> {
    tape: Option<&'t Tape<F>>,
    index: usize,
    value: F,
}

impl<F: fmt::Debug> fmt::Debug for Var<'_, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tape {
            Some(_) => write!(f, "Var#{}({:?})", self.index, self.value),
            None => write!(f, "Const({:?})", self.value),
        }
    }
}

impl<'t, F: Real> Var<'t, F> {
    pub fn index(&self) -> Option<usize> {
        self.tape.map(|_| self.index)
    }

    pub fn is_constant(&self) -> bool {
        self.tape.is_none()
    }

    fn unary(self, value: F, partial: F) -> Self {
        match self.tape {
            None => Var::constant(value),
            Some(tape) => {
                let index = tape.push(Node {
                    parents: [self.index, 0],
                    partials: [partial, F::zero()],
                    arity: 1,
                });
                Var {
                    tape: Some(tape),
                    index,
                    value,
                }
            }
        }
    }

    fn binary(self, rhs: Self, value: F, d_lhs: F, d_rhs: F) -> Self {
        match (self.tape, rhs.tape) {
            (None, None) => Var::constant(value),
            (Some(_), None) => self.unary(value, d_lhs),
            (None, Some(_)) => rhs.unary(value, d_rhs),
            (Some(tape), Some(other)) => {
                debug_assert!(std::ptr::eq(tape, other), "mixing tapes");
                let index = tape.push(Node {
                    parents: [self.index, rhs.index],
                    partials: [d_lhs, d_rhs],
                    arity: 2,
                });
                Var {
                    tape: Some(tape),
                    index,
                    value,
                }
            }
        }
    }
}

impl<'t, F: Real> Add for Var<'t, F> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, self.value + rhs.value, F::one(), F::one())
    }
}

impl<'t, F: Real> Sub for Var<'t, F> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, self.value - rhs.value, F::one(), -F::one())
    }
}

impl<'t, F: Real> Mul for Var<'t, F> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, self.value * rhs.value, rhs.value, self.value)
    }
}

impl<'t, F: Real> Div for Var<'t, F> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        self.binary(rhs, q, F::one() / rhs.value, -q / rhs.value)
    }
}

impl<'t, F: Real> Neg for Var<'t, F> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(-self.value, -F::one())
    }
}

impl<'t, F: Real> Add<F> for Var<'t, F> {
    type Output = Self;
    fn add(self, rhs: F) -> Self {
        self.unary(self.value + rhs, F::one())
    }
}

impl<'t, F: Real> Sub<F> for Var<'t, F> {
    type Output = Self;
    fn sub(self, rhs: F) -> Self {
        self.unary(self.value - rhs, F::one())
    }
}

impl<'t, F: Real> Mul<F> for Var<'t, F> {
    type Output = Self;
    fn mul(self, rhs: F) -> Self {
        self.unary(self.value * rhs, rhs)
    }
}

impl<'t, F: Real> Scalar for Var<'t, F> {
    type Real = F;

    fn constant(value: F) -> Self {
        Var {
            tape: None,
            index: 0,
            value,
        }
    }

    fn value(self) -> F {
        self.value
    }

    fn exp(self) -> Self {
        let e = clamped_exp(self.value);
        self.unary(e, e)
    }

    fn ln(self) -> Self {
        self.unary(Float::ln(self.value), F::one() / self.value)
    }

    fn tanh(self) -> Self {
        let t = Float::tanh(self.value);
        self.unary(t, F::one() - t * t)
    }

    fn relu(self) -> Self {
        if self.value > F::zero() {
            self.unary(self.value, F::one())
        } else {
            self.unary(F::zero(), F::zero())
        }
    }

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return self.unary(F::one(), F::zero());
        }
        let d = F::lit(n as f64) * Float::powi(self.value, n - 1);
        self.unary(Float::powi(self.value, n), d)
    }

    fn call_erased(objective: &dyn ErasedObjective<F>, args: &[Self]) -> Self {
        objective.eval_var(args)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let tape = Tape::<f64>::new();
        let x = tape.input(3.0);
        let y = tape.input(4.0);
        let z = x * y + x.square();
        let adj = tape.adjoints(z);
        assert_eq!(z.value(), 21.0);
        assert_eq!(adj[0], 4.0 + 6.0);
        assert_eq!(adj[1], 3.0);
    }

    #[test]
    fn constants_stay_off_tape() {
        let tape = Tape::<f64>::new();
        let c = Var::<f64>::constant(2.0) * Var::constant(5.0);
        assert!(c.is_constant());
        assert!(tape.is_empty());
        let x = tape.input(1.5);
        let y = (x * 2.0 + 1.0) / Var::constant(2.0);
        assert_eq!(tape.adjoints(y)[0], 1.0);
    }

    #[test]
    fn relu_kink_has_zero_slope() {
        let tape = Tape::<f64>::new();
        let x = tape.input(0.0);
        let y = x.relu();
        assert_eq!(tape.adjoints(y)[0], 0.0);
    }

    #[test]
    fn works_in_single_precision() {
        let tape = Tape::<f32>::new();
        let x = tape.input(0.5f32);
        let y = x.tanh();
        let g = tape.adjoints(y)[0];
        assert!((g - (1.0 - 0.5f32.tanh().powi(2))).abs() < 1e-6);
    }
}
