use std::fmt;
use std::sync::Arc;

use crate::diff::{DiffError, Layout, ParamVector, Tape, Var};
use crate::scalar::{guard_overflow, Real, Scalar};

/// A scalar objective written once, generically over the scalar type.
///
/// Implementations must be deterministic: the same arguments always produce
/// the same value.
pub trait Objective<F: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn expr<S: Scalar<Real = F>>(&self, p: &[S]) -> S;
}

/// Object-safe view of an [`Objective`]; blanket-implemented.
pub trait ErasedObjective<F: Real>: Send + Sync {
    fn dim(&self) -> usize;
    fn eval_real(&self, p: &[F]) -> F;
    fn eval_var<'t>(&self, p: &[Var<'t, F>]) -> Var<'t, F>;
}

impl<F: Real, O: Objective<F>> ErasedObjective<F> for O {
    fn dim(&self) -> usize {
        Objective::dim(self)
    }

    fn eval_real(&self, p: &[F]) -> F {
        self.expr(p)
    }

    fn eval_var<'t>(&self, p: &[Var<'t, F>]) -> Var<'t, F> {
        self.expr(p)
    }
}

/// A differentiable scalar map over a flat parameter vector.
///
/// Cheap to clone and safe to share between threads; every call builds its
/// own tape.
#[derive(Clone)]
pub struct GradientProgram<F: Real> {
    inner: Arc<dyn ErasedObjective<F>>,
    layout: Layout,
    label: Arc<str>,
}

impl<F: Real> fmt::Debug for GradientProgram<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GradientProgram")
            .field("label", &self.label)
            .field("dim", &self.dim())
            .finish()
    }
}

impl<F: Real> GradientProgram<F> {
    pub fn new<O: Objective<F> + 'static>(objective: O) -> Self {
        let layout = Layout::flat(Objective::dim(&objective));
        Self {
            inner: Arc::new(objective),
            layout,
            label: Arc::from("objective"),
        }
    }

    pub fn with_layout(mut self, layout: Layout) -> Result<Self, DiffError> {
        if layout.dim() != self.dim() {
            return Err(DiffError::Dimension {
                expected: self.dim(),
                found: layout.dim(),
            });
        }
        self.layout = layout;
        Ok(self)
    }

    pub fn labelled(mut self, label: &str) -> Self {
        self.label = Arc::from(label);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    fn check_dim(&self, n: usize) -> Result<(), DiffError> {
        if n != self.dim() {
            return Err(DiffError::Dimension {
                expected: self.dim(),
                found: n,
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, p: &ParamVector<F>) -> Result<F, DiffError> {
        self.evaluate_slice(p.values())
    }

    /// Value only, without recording a tape.
    pub fn evaluate_slice(&self, p: &[F]) -> Result<F, DiffError> {
        self.check_dim(p.len())?;
        Ok(guard_overflow(|| self.inner.eval_real(p))?)
    }

    /// Exact reverse-mode gradient with the same layout as `p`.
    pub fn gradient(&self, p: &ParamVector<F>) -> Result<ParamVector<F>, DiffError> {
        let (_, grad) = self.value_and_gradient(p.values())?;
        ParamVector::with_layout(grad, p.layout().clone())
    }

    /// Value and exact reverse-mode gradient.
    pub fn value_and_gradient(&self, p: &[F]) -> Result<(F, Vec<F>), DiffError> {
        self.check_dim(p.len())?;
        let (value, grad) = guard_overflow(|| {
            let tape = Tape::new();
            let vars = tape.inputs(p);
            let out = self.inner.eval_var(&vars);
            let mut adj = tape.adjoints(out);
            adj.truncate(p.len());
            (out.value(), adj)
        })?;
        Ok((value, grad))
    }

    /// Central differences `(f(p + h e_i) - f(p - h e_i)) / 2h`.
    pub fn finite_diff_gradient(&self, p: &ParamVector<F>, h: F) -> Result<ParamVector<F>, DiffError> {
        if !(h > F::zero()) {
            return Err(DiffError::InvalidStep(h.to_f64_lossy()));
        }
        let fd = self.finite_diff_slice(p.values(), h)?;
        ParamVector::with_layout(fd, p.layout().clone())
    }

    pub fn finite_diff_slice(&self, p: &[F], h: F) -> Result<Vec<F>, DiffError> {
        self.check_dim(p.len())?;
        let two_h = h + h;
        let mut probe = p.to_vec();
        let mut out = Vec::with_capacity(p.len());
        for i in 0..p.len() {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = self.evaluate_slice(&probe)?;
            probe[i] = orig - h;
            let down = self.evaluate_slice(&probe)?;
            probe[i] = orig;
            out.push((up - down) / two_h);
        }
        Ok(out)
    }

    /// `Σ c_k · program_k`. All programs must share one dimension.
    pub fn linear_combination(terms: Vec<(F, GradientProgram<F>)>) -> Result<Self, DiffError> {
        let dim = terms.first().map_or(0, |(_, p)| p.dim());
        if let Some((_, bad)) = terms.iter().find(|(_, p)| p.dim() != dim) {
            return Err(DiffError::Dimension {
                expected: dim,
                found: bad.dim(),
            });
        }
        let layout = terms
            .first()
            .map_or_else(|| Layout::flat(0), |(_, p)| p.layout().clone());
        let combo = LinearCombination { dim, terms };
        GradientProgram::new(combo).with_layout(layout)
    }
}

impl<F: Real> Objective<F> for GradientProgram<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn expr<S: Scalar<Real = F>>(&self, p: &[S]) -> S {
        S::call_erased(&*self.inner, p)
    }
}

struct LinearCombination<F: Real> {
    dim: usize,
    terms: Vec<(F, GradientProgram<F>)>,
}

impl<F: Real> Objective<F> for LinearCombination<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn expr<S: Scalar<Real = F>>(&self, p: &[S]) -> S {
        self.terms
            .iter()
            .fold(S::cst(0.0), |acc, (c, prog)| acc + prog.expr(p) * *c)
    }
}

/// `Σ_i w_i (p_i - c_i)^2`, the reference convex objective.
#[derive(Debug, Clone)]
pub struct Quadratic<F> {
    pub center: Vec<F>,
    pub weights: Vec<F>,
}

impl<F: Real> Quadratic<F> {
    /// `‖p‖²` in `dim` dimensions.
    pub fn isotropic(dim: usize) -> Self {
        Self {
            center: vec![F::zero(); dim],
            weights: vec![F::one(); dim],
        }
    }

    pub fn program(self) -> GradientProgram<F> {
        GradientProgram::new(self).labelled("quadratic")
    }
}

impl<F: Real> Objective<F> for Quadratic<F> {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn expr<S: Scalar<Real = F>>(&self, p: &[S]) -> S {
        p.iter()
            .zip(&self.center)
            .zip(&self.weights)
            .fold(S::cst(0.0), |acc, ((&x, &c), &w)| acc + (x - c).square() * w)
    }
}
