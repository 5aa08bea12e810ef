//! First-order training with a divergence monitor on the added-neuron
//! parameters.

mod experiment;
mod io;
mod source;

pub use experiment::{
    multi_seed_experiment, paired_success, ExperimentSpec, ExperimentSummary, Histogram, PairedComparison, Variant,
    VariantSummary,
};
pub use io::{write_histogram_csv, write_runs_jsonl, write_trajectory_csv};
pub use source::{BatchSource, ObjectiveKind, ProblemSource};

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augment::{l2, AuxParams};
use crate::diff::{DiffError, GradientProgram, Layout, ParamVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimizeError {
    #[error("invalid optimizer config: {0}")]
    Config(String),
    #[error("initial point: {0}")]
    Init(#[from] DiffError),
}

fn default_delta() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum Method {
    Gd {
        lr: f64,
    },
    #[serde(rename = "adagrad")]
    AdaGrad {
        lr: f64,
        #[serde(default = "default_delta")]
        delta: f64,
    },
}

impl Method {
    pub fn lr(&self) -> f64 {
        match *self {
            Method::Gd { lr } | Method::AdaGrad { lr, .. } => lr,
        }
    }
}

fn default_sample_every() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub method: Method,
    /// `None` means full batch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    pub max_iter: usize,
    /// Stop once the gradient norm is at most this.
    pub grad_tol: f64,
    #[serde(default)]
    pub seed: u64,
    /// Trajectory sampling period.
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    /// Store the full parameter vector with each trajectory sample.
    #[serde(default)]
    pub record_params: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::Gd { lr: 0.1 },
            batch_size: None,
            max_iter: 10_000,
            grad_tol: 1e-8,
            seed: 0,
            sample_every: default_sample_every(),
            record_params: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let lr = self.method.lr();
        if !(lr.is_finite() && lr > 0.0) {
            return Err(OptimizeError::Config(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        if let Method::AdaGrad { delta, .. } = self.method {
            if !(delta.is_finite() && delta > 0.0) {
                return Err(OptimizeError::Config(format!(
                    "adagrad delta must be positive, got {delta}"
                )));
            }
        }
        if self.max_iter == 0 {
            return Err(OptimizeError::Config("max_iter must be at least 1".into()));
        }
        if self.batch_size == Some(0) {
            return Err(OptimizeError::Config("batch_size must be at least 1".into()));
        }
        if self.sample_every == 0 {
            return Err(OptimizeError::Config("sample_every must be at least 1".into()));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(OptimizeError::Config("grad_tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// How `W` enters the monitored norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixNorm {
    #[default]
    Frobenius,
    Spectral,
}

fn default_init_range() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum MonitorAction {
    /// Redraw `(a, b, W)` uniformly in `[−init_range, init_range]`, and `θ`
    /// too when `redraw_theta` is set. Halts once restarts run out.
    Restart {
        max_restarts: usize,
        #[serde(default = "default_init_range")]
        init_range: f64,
        #[serde(default)]
        redraw_theta: bool,
    },
    Halt,
    Off,
}

fn default_threshold() -> f64 {
    7.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorConfig {
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub norm: MatrixNorm,
    pub action: MonitorAction,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            threshold: default_threshold(),
            norm: MatrixNorm::Frobenius,
            action: MonitorAction::Off,
        }
    }
}

impl MonitorConfig {
    pub fn off() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(OptimizeError::Config(format!(
                "monitor threshold must be positive, got {}",
                self.threshold
            )));
        }
        if let MonitorAction::Restart { init_range, .. } = self.action {
            if !(init_range.is_finite() && init_range >= 0.0) {
                return Err(OptimizeError::Config("restart init_range must be non-negative".into()));
            }
        }
        Ok(())
    }
}

fn matrix_norm(w: &[f64], rows: usize, kind: MatrixNorm) -> f64 {
    match kind {
        MatrixNorm::Frobenius => l2(w),
        MatrixNorm::Spectral => {
            if w.is_empty() {
                return 0.0;
            }
            let m = DMatrix::from_column_slice(rows, w.len() / rows, w);
            m.singular_values().max()
        }
    }
}

/// `‖a‖₂ + ‖b‖₂ + ‖W‖` for the monitor.
pub fn aux_norm(aux: &AuxParams<f64>, kind: MatrixNorm) -> f64 {
    l2(aux.a()) + l2(aux.b()) + matrix_norm(aux.w(), aux.input_dim(), kind)
}

/// Monitor norm read from the `a`, `b`, `W` segments of a packed vector.
/// `None` when the layout has no such segments.
pub fn packed_aux_norm(values: &[f64], layout: &Layout, kind: MatrixNorm) -> Option<f64> {
    let a = layout.range("a")?;
    let b = layout.range("b")?;
    let w = layout.range("W")?;
    let rows = if a.is_empty() { 1 } else { w.len() / a.len() };
    Some(l2(&values[a]) + l2(&values[b]) + matrix_norm(&values[w], rows.max(1), kind))
}

pub fn monitor_check(aux: &AuxParams<f64>, mon: &MonitorConfig) -> bool {
    aux_norm(aux, mon.norm) >= mon.threshold
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Stationary,
    MaxIter,
    MonitorHalt,
    Overflow,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Stationary => "stationary",
            Termination::MaxIter => "max_iter",
            Termination::MonitorHalt => "monitor_halt",
            Termination::Overflow => "overflow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorEvent {
    pub iter: usize,
    pub aux_norm: f64,
    pub restarted: bool,
}

/// One optimisation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    pub seed: u64,
    pub termination: Termination,
    pub iterations: usize,
    pub restarts: usize,
    pub final_params: Vec<f64>,
    pub final_objective: f64,
    pub final_grad_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_aux_norm: Option<f64>,
    /// Standard objective at the final `θ`, filled in by experiments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_loss: Option<f64>,
    pub events: Vec<MonitorEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub trajectory: Vec<TrajectorySample>,
    /// Not serialised so output files stay reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Draws a fresh `θ` on restart.
pub type ThetaSampler<'a> = dyn Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync + 'a;

/// Full-batch minimisation of a fixed program.
pub fn minimize(
    objective: &GradientProgram<f64>,
    init: &ParamVector<f64>,
    opt: &OptimizerConfig,
    mon: &MonitorConfig,
) -> Result<RunRecord, OptimizeError> {
    minimize_with(&FixedProgram(objective), init, opt, mon, None)
}

struct FixedProgram<'a>(&'a GradientProgram<f64>);

impl BatchSource for FixedProgram<'_> {
    fn full(&self) -> &GradientProgram<f64> {
        self.0
    }
    fn sample_count(&self) -> usize {
        1
    }
    fn batch(&self, _: &[usize]) -> GradientProgram<f64> {
        self.0.clone()
    }
}

enum Step {
    Continue,
    Stop(Termination, Option<String>),
}

/// Minimisation with optional mini-batches and a `θ` sampler for restarts.
pub fn minimize_with(
    source: &dyn BatchSource,
    init: &ParamVector<f64>,
    opt: &OptimizerConfig,
    mon: &MonitorConfig,
    theta_sampler: Option<&ThetaSampler<'_>>,
) -> Result<RunRecord, OptimizeError> {
    opt.validate()?;
    mon.validate()?;
    let full = source.full();
    if init.dim() != full.dim() {
        return Err(DiffError::Dimension {
            expected: full.dim(),
            found: init.dim(),
        }
        .into());
    }
    let started = Instant::now();
    let layout = full.layout().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
    let m = source.sample_count();
    let batch = opt.batch_size.filter(|&b| b < m);
    let mut order: Vec<usize> = (0..m).collect();
    let mut cursor = m;

    let mut p = init.values().to_vec();
    let mut accum = vec![0.0; p.len()];
    let mut trajectory = Vec::new();
    let mut events = Vec::new();
    let mut restarts = 0;
    let mut last: Option<(f64, f64)> = None;
    let mut outcome = (Termination::MaxIter, None);
    let mut iterations = opt.max_iter;

    for it in 0..opt.max_iter {
        let norm_a = packed_aux_norm(&p, &layout, mon.norm);
        // full objective for monitoring and stopping
        let (value, grad) = match full.value_and_gradient(&p) {
            Ok(vg) => vg,
            Err(e) => {
                outcome = (Termination::Overflow, Some(e.to_string()));
                iterations = it;
                break;
            }
        };
        let gnorm = l2(&grad);
        if !(value.is_finite() && gnorm.is_finite()) {
            outcome = (Termination::Overflow, Some("non-finite objective or gradient".into()));
            iterations = it;
            break;
        }
        last = Some((value, gnorm));
        if it % opt.sample_every == 0 {
            trajectory.push(TrajectorySample {
                iter: it,
                objective: value,
                grad_norm: gnorm,
                aux_norm: norm_a,
                params: opt.record_params.then(|| p.clone()),
            });
        }
        if gnorm <= opt.grad_tol {
            outcome = (Termination::Stationary, None);
            iterations = it;
            break;
        }
        if let Some(n) = norm_a.filter(|&n| n >= mon.threshold) {
            match monitor_step(
                mon,
                n,
                it,
                &mut restarts,
                &mut events,
                &layout,
                &mut p,
                &mut rng,
                theta_sampler,
            ) {
                Step::Continue => {
                    accum.iter_mut().for_each(|g| *g = 0.0);
                    continue;
                }
                Step::Stop(t, msg) => {
                    outcome = (t, msg);
                    iterations = it;
                    break;
                }
            }
        }

        let step_grad = match batch {
            None => grad,
            Some(bs) => {
                if cursor + bs > m {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                let idx = &order[cursor..cursor + bs];
                cursor += bs;
                match source.batch(idx).value_and_gradient(&p) {
                    Ok((_, g)) => g,
                    Err(e) => {
                        outcome = (Termination::Overflow, Some(e.to_string()));
                        iterations = it;
                        break;
                    }
                }
            }
        };
        let next: Vec<f64> = match opt.method {
            Method::Gd { lr } => p.iter().zip(&step_grad).map(|(x, g)| x - lr * g).collect(),
            Method::AdaGrad { lr, delta } => {
                for (acc, g) in accum.iter_mut().zip(&step_grad) {
                    *acc += g * g;
                }
                p.iter()
                    .zip(&step_grad)
                    .zip(&accum)
                    .map(|((x, g), acc)| x - lr * g / (acc.sqrt() + delta))
                    .collect()
            }
        };
        if next.iter().any(|v| !v.is_finite()) {
            outcome = (
                Termination::Overflow,
                Some("step produced a non-finite parameter".into()),
            );
            iterations = it + 1;
            break;
        }
        p = next;
    }

    // settle the final point when the loop ran out
    if outcome.0 == Termination::MaxIter {
        match full.value_and_gradient(&p) {
            Ok((v, g)) if v.is_finite() => last = Some((v, l2(&g))),
            Ok(_) => outcome = (Termination::Overflow, Some("non-finite objective".into())),
            Err(e) => outcome = (Termination::Overflow, Some(e.to_string())),
        }
    }
    let (final_objective, final_grad_norm) = last.unwrap_or((f64::NAN, f64::NAN));
    let final_aux_norm = packed_aux_norm(&p, &layout, mon.norm);
    if outcome.0 != Termination::Overflow && trajectory.last().map(|s| s.iter) != Some(iterations) {
        trajectory.push(TrajectorySample {
            iter: iterations,
            objective: final_objective,
            grad_norm: final_grad_norm,
            aux_norm: final_aux_norm,
            params: opt.record_params.then(|| p.clone()),
        });
    }
    Ok(RunRecord {
        label: full.label().to_string(),
        seed: opt.seed,
        termination: outcome.0,
        iterations,
        restarts,
        final_params: p,
        final_objective,
        final_grad_norm,
        final_aux_norm,
        final_loss: None,
        events,
        message: outcome.1,
        trajectory,
        wall_time: started.elapsed(),
    })
}

#[allow(clippy::too_many_arguments)]
fn monitor_step(
    mon: &MonitorConfig,
    norm: f64,
    it: usize,
    restarts: &mut usize,
    events: &mut Vec<MonitorEvent>,
    layout: &Layout,
    p: &mut [f64],
    rng: &mut ChaCha8Rng,
    theta_sampler: Option<&ThetaSampler<'_>>,
) -> Step {
    match mon.action {
        MonitorAction::Off => Step::Continue,
        MonitorAction::Halt => {
            events.push(MonitorEvent {
                iter: it,
                aux_norm: norm,
                restarted: false,
            });
            Step::Stop(Termination::MonitorHalt, None)
        }
        MonitorAction::Restart {
            max_restarts,
            init_range,
            redraw_theta,
        } => {
            if *restarts >= max_restarts {
                events.push(MonitorEvent {
                    iter: it,
                    aux_norm: norm,
                    restarted: false,
                });
                return Step::Stop(Termination::MonitorHalt, Some("restart budget exhausted".into()));
            }
            *restarts += 1;
            events.push(MonitorEvent {
                iter: it,
                aux_norm: norm,
                restarted: true,
            });
            for name in ["a", "b", "W"] {
                if let Some(r) = layout.range(name) {
                    for v in &mut p[r] {
                        *v = if init_range > 0.0 {
                            rng.random_range(-init_range..=init_range)
                        } else {
                            0.0
                        };
                    }
                }
            }
            if redraw_theta {
                if let (Some(r), Some(sample)) = (layout.range("theta"), theta_sampler) {
                    let fresh = sample(rng);
                    if fresh.len() == r.len() {
                        p[r].copy_from_slice(&fresh);
                    }
                }
            }
            Step::Continue
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::Quadratic;

    fn quad() -> GradientProgram<f64> {
        Quadratic::<f64>::isotropic(2).program()
    }

    #[test]
    fn gd_on_quadratic_is_stationary() {
        let opt = OptimizerConfig {
            method: Method::Gd { lr: 0.1 },
            ..Default::default()
        };
        let init = ParamVector::new(vec![1.0, 1.0]).unwrap();
        let rec = minimize(&quad(), &init, &opt, &MonitorConfig::off()).unwrap();
        assert_eq!(rec.termination, Termination::Stationary);
        assert!(rec.final_objective <= 1e-10);
        assert!(rec.final_params.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn gd_contracts_monotonically() {
        let opt = OptimizerConfig {
            method: Method::Gd { lr: 0.3 },
            sample_every: 1,
            ..Default::default()
        };
        let init = ParamVector::new(vec![-2.0, 0.7]).unwrap();
        let rec = minimize(&quad(), &init, &opt, &MonitorConfig::off()).unwrap();
        for w in rec.trajectory.windows(2) {
            assert!(w[1].objective < w[0].objective || w[1].objective == 0.0);
        }
    }

    #[test]
    fn adagrad_converges() {
        let opt = OptimizerConfig {
            method: Method::AdaGrad { lr: 0.5, delta: 1e-8 },
            max_iter: 50_000,
            grad_tol: 1e-6,
            ..Default::default()
        };
        let init = ParamVector::new(vec![1.0, -3.0]).unwrap();
        let rec = minimize(&quad(), &init, &opt, &MonitorConfig::off()).unwrap();
        assert_eq!(rec.termination, Termination::Stationary);
    }

    #[test]
    fn config_validation() {
        let bad = OptimizerConfig {
            method: Method::Gd { lr: 0.0 },
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig {
            max_iter: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let mon = MonitorConfig {
            threshold: -1.0,
            ..Default::default()
        };
        assert!(mon.validate().is_err());
        let init = ParamVector::new(vec![1.0]).unwrap();
        assert!(minimize(&quad(), &init, &OptimizerConfig::default(), &MonitorConfig::off()).is_err());
    }

    #[test]
    fn monitor_examples() {
        let mon = MonitorConfig {
            threshold: 7.0,
            norm: MatrixNorm::Frobenius,
            action: MonitorAction::Halt,
        };
        assert!(!monitor_check(&AuxParams::zeros(1, 1, 0.01).unwrap(), &mon));
        let aux = AuxParams::new(vec![0.0], vec![7.5], vec![0.0], 1, 0.01).unwrap();
        assert!(monitor_check(&aux, &mon));
        let aux = AuxParams::new(vec![1.0], vec![3.0], vec![2.9], 1, 0.01).unwrap();
        assert!(!monitor_check(&aux, &mon));
        assert!((aux_norm(&aux, MatrixNorm::Frobenius) - 6.9).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_differs_from_frobenius() {
        // W = I₂ (d_x = d_y = 2)
        let aux = AuxParams::new(vec![0.0; 2], vec![0.0; 2], vec![1.0, 0.0, 0.0, 1.0], 2, 0.01).unwrap();
        assert!((aux_norm(&aux, MatrixNorm::Frobenius) - 2f64.sqrt()).abs() < 1e-12);
        assert!((aux_norm(&aux, MatrixNorm::Spectral) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_configs_give_identical_records() {
        let opt = OptimizerConfig {
            method: Method::Gd { lr: 0.05 },
            seed: 9,
            ..Default::default()
        };
        let init = ParamVector::new(vec![0.4, -0.8]).unwrap();
        let a = minimize(&quad(), &init, &opt, &MonitorConfig::off()).unwrap();
        let b = minimize(&quad(), &init, &opt, &MonitorConfig::off()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
