use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{original_objective, Problem};
use crate::diff::ParamVector;
use crate::optimize::{
    minimize_with, MonitorConfig, ObjectiveKind, OptimizeError, OptimizerConfig, ProblemSource, RunRecord, Termination,
    ThetaSampler,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Original,
    Augmented,
    AugmentedMonitor,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Original, Variant::Augmented, Variant::AugmentedMonitor];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Augmented => "augmented",
            Variant::AugmentedMonitor => "augmented_monitor",
        }
    }
}

/// Seeded comparison of training variants on one problem.
///
/// Seed `i` uses `base_seed + i` for every variant: `θ` is drawn first from
/// that stream, so all variants start from the same `θ`.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub problem: Problem<f64>,
    pub lambda: f64,
    pub optimizer: OptimizerConfig,
    /// Applied to the `AugmentedMonitor` variant only.
    pub monitor: MonitorConfig,
    pub n_seeds: usize,
    pub base_seed: u64,
    pub variants: Vec<Variant>,
    /// Initial `(a, b, W)` is uniform in `[−r, r]`.
    pub aux_init_range: f64,
    /// A run succeeds when its final standard loss is at most this.
    pub success_threshold: f64,
    pub histogram_bins: usize,
    /// Hold `θ` fixed and train only `(a, b, W)`; the original variant is
    /// then rejected.
    pub frozen_theta: Option<Vec<f64>>,
}

impl ExperimentSpec {
    pub fn new(problem: Problem<f64>, lambda: f64, optimizer: OptimizerConfig, monitor: MonitorConfig) -> Self {
        Self {
            problem,
            lambda,
            optimizer,
            monitor,
            n_seeds: 10,
            base_seed: 0,
            variants: Variant::ALL.to_vec(),
            aux_init_range: 0.1,
            success_threshold: 0.1,
            histogram_bins: 20,
            frozen_theta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: Variant,
    pub runs: usize,
    pub failures: usize,
    pub success_fraction: f64,
    pub mean_final_loss: f64,
    pub median_final_loss: f64,
    pub min_final_loss: f64,
    pub max_final_loss: f64,
    pub total_restarts: usize,
    pub terminations: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: BTreeMap<String, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub n_seeds: usize,
    pub base_seed: u64,
    pub success_threshold: f64,
    pub variants: Vec<VariantSummary>,
    pub histogram: Histogram,
    pub metadata: BTreeMap<String, String>,
    /// Variant-major, then seed order.
    #[serde(skip)]
    pub runs: Vec<RunRecord>,
}

impl ExperimentSummary {
    pub fn runs_for(&self, v: Variant) -> impl Iterator<Item = &RunRecord> {
        let label = v.as_str();
        self.runs.iter().filter(move |r| r.label == label)
    }
}

fn run_one(spec: &ExperimentSpec, variant: Variant, index: usize) -> Result<RunRecord, OptimizeError> {
    let seed = spec.base_seed.wrapping_add(index as u64);
    let model = &spec.problem.model;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta: Vec<f64> = model.init_params(&mut rng);
    let r = spec.aux_init_range;
    let aux: Vec<f64> = (0..spec.problem.aux_dim())
        .map(|_| if r > 0.0 { rng.random_range(-r..=r) } else { 0.0 })
        .collect();

    let augmented = match &spec.frozen_theta {
        Some(t) => ObjectiveKind::FrozenTheta {
            theta: t.clone(),
            lambda: spec.lambda,
        },
        None => ObjectiveKind::Augmented { lambda: spec.lambda },
    };
    let (kind, monitor) = match variant {
        Variant::Original => (ObjectiveKind::Original, MonitorConfig::off()),
        Variant::Augmented => (augmented, MonitorConfig::off()),
        Variant::AugmentedMonitor => (augmented, spec.monitor),
    };
    let source = ProblemSource::new(spec.problem.clone(), kind).map_err(|e| OptimizeError::Config(e.to_string()))?;
    let mut init = if spec.frozen_theta.is_some() { Vec::new() } else { theta };
    if variant != Variant::Original {
        init.extend(aux);
    }
    let init = ParamVector::with_layout(init, crate::optimize::BatchSource::full(&source).layout().clone())?;
    let opt = OptimizerConfig {
        seed,
        ..spec.optimizer.clone()
    };
    let sampler = |rng: &mut ChaCha8Rng| model.init_params::<f64, _>(rng);
    let sampler: Option<&ThetaSampler<'_>> = if spec.frozen_theta.is_some() {
        None
    } else {
        Some(&sampler)
    };
    let mut rec = minimize_with(&source, &init, &opt, &monitor, sampler)?;
    rec.label = variant.as_str().to_string();
    let final_theta = match &spec.frozen_theta {
        Some(t) => t.as_slice(),
        None => &rec.final_params[..spec.problem.theta_dim()],
    };
    rec.final_loss = original_objective(&spec.problem).evaluate_slice(final_theta).ok();
    Ok(rec)
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Run every variant on every seed (in parallel, on the current rayon pool)
/// and summarise the final standard losses.
pub fn multi_seed_experiment(spec: &ExperimentSpec) -> Result<ExperimentSummary, OptimizeError> {
    if spec.n_seeds == 0 {
        return Err(OptimizeError::Config("n_seeds must be at least 1".into()));
    }
    if spec.histogram_bins == 0 {
        return Err(OptimizeError::Config("histogram_bins must be at least 1".into()));
    }
    spec.optimizer.validate()?;
    spec.monitor.validate()?;
    if let Some(t) = &spec.frozen_theta {
        if spec.variants.contains(&Variant::Original) {
            return Err(OptimizeError::Config(
                "a frozen theta leaves the original variant nothing to train".into(),
            ));
        }
        if t.len() != spec.problem.theta_dim() {
            return Err(OptimizeError::Config(format!(
                "frozen theta has {} entries, the model has {}",
                t.len(),
                spec.problem.theta_dim()
            )));
        }
    }
    let jobs: Vec<(Variant, usize)> = spec
        .variants
        .iter()
        .flat_map(|&v| (0..spec.n_seeds).map(move |i| (v, i)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(v, i)| run_one(spec, v, i))
        .collect::<Result<Vec<_>, _>>()?;

    let finite_losses: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.final_loss)
        .filter(|v| v.is_finite())
        .collect();
    let lo = finite_losses.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite_losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() && hi > lo {
        (lo, hi)
    } else if lo.is_finite() {
        (lo, lo + 1.0)
    } else {
        (0.0, 1.0)
    };
    let nb = spec.histogram_bins;
    let edges: Vec<f64> = (0..=nb).map(|i| lo + (hi - lo) * i as f64 / nb as f64).collect();

    let mut variants = Vec::new();
    let mut counts = BTreeMap::new();
    for &v in &spec.variants {
        let rs: Vec<&RunRecord> = runs.iter().filter(|r| r.label == v.as_str()).collect();
        let mut losses: Vec<f64> = rs
            .iter()
            .filter_map(|r| r.final_loss)
            .filter(|x| x.is_finite())
            .collect();
        losses.sort_by(f64::total_cmp);
        let mut hist = vec![0usize; nb];
        for &l in &losses {
            let bin = (((l - lo) / (hi - lo)) * nb as f64).floor() as usize;
            hist[bin.min(nb - 1)] += 1;
        }
        counts.insert(v.as_str().to_string(), hist);
        let mut terminations = BTreeMap::new();
        for r in &rs {
            *terminations.entry(r.termination.as_str().to_string()).or_insert(0) += 1;
        }
        let success = losses.iter().filter(|&&l| l <= spec.success_threshold).count();
        variants.push(VariantSummary {
            variant: v,
            runs: rs.len(),
            failures: rs.iter().filter(|r| r.termination == Termination::Overflow).count(),
            success_fraction: success as f64 / rs.len().max(1) as f64,
            mean_final_loss: losses.iter().sum::<f64>() / losses.len().max(1) as f64,
            median_final_loss: median(&losses),
            min_final_loss: losses.first().copied().unwrap_or(f64::NAN),
            max_final_loss: losses.last().copied().unwrap_or(f64::NAN),
            total_restarts: rs.iter().map(|r| r.restarts).sum(),
            terminations,
        });
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("lambda".into(), spec.lambda.to_string());
    metadata.insert("method".into(), format!("{:?}", spec.optimizer.method));
    metadata.insert("max_iter".into(), spec.optimizer.max_iter.to_string());
    metadata.insert(
        "aux_init".into(),
        format!("uniform[-{r}, {r}]", r = spec.aux_init_range),
    );
    metadata.insert(
        "theta_init".into(),
        "mlp: uniform glorot weights, zero biases; curves: uniform[0, 1]".into(),
    );
    metadata.insert("monitor".into(), format!("{:?}", spec.monitor));
    if let Some(t) = &spec.frozen_theta {
        metadata.insert("frozen_theta".into(), format!("{t:?}"));
    }

    Ok(ExperimentSummary {
        n_seeds: spec.n_seeds,
        base_seed: spec.base_seed,
        success_threshold: spec.success_threshold,
        variants,
        histogram: Histogram { edges, counts },
        metadata,
        runs,
    })
}

/// Paired success comparison between two variants over the same seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub fraction_first: f64,
    pub fraction_second: f64,
    /// Seeds where only the first variant succeeded.
    pub only_first: usize,
    pub only_second: usize,
}

pub fn paired_success(
    summary: &ExperimentSummary,
    first: Variant,
    second: Variant,
    threshold: f64,
) -> PairedComparison {
    let ok = |r: &RunRecord| r.final_loss.is_some_and(|l| l <= threshold);
    let a: Vec<bool> = summary.runs_for(first).map(ok).collect();
    let b: Vec<bool> = summary.runs_for(second).map(ok).collect();
    let n = a.len().min(b.len()).max(1) as f64;
    PairedComparison {
        fraction_first: a.iter().filter(|&&x| x).count() as f64 / n,
        fraction_second: b.iter().filter(|&&x| x).count() as f64 / n,
        only_first: a.iter().zip(&b).filter(|(x, y)| **x && !**y).count(),
        only_second: a.iter().zip(&b).filter(|(x, y)| !**x && **y).count(),
    }
}
