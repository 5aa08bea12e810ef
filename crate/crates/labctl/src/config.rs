use std::path::{Path, PathBuf};

use auxlab::augment::{AuxParams, Dataset, Problem, Reduction, DEFAULT_LAMBDA};
use auxlab::criteria::{LossCriterion, LossKind};
use auxlab::fixtures::{BasinFixture, ExampleFixture};
use auxlab::models::{Activation, ModelSpec};
use auxlab::optimize::{ExperimentSpec, Method, MonitorConfig, OptimizerConfig, Variant};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Mlp { widths: Vec<usize>, activation: Activation },
    Linear { input_dim: usize, output_dim: usize },
    BumpCurve,
    ShiftedBumpCurve,
    SlopedBumpCurve,
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSpec, CliError> {
        Ok(match self {
            ModelConfig::Mlp { widths, activation } => {
                ModelSpec::mlp(widths.clone(), *activation).map_err(|e| CliError::Config(e.to_string()))?
            }
            ModelConfig::Linear { input_dim, output_dim } => ModelSpec::linear(*input_dim, *output_dim),
            ModelConfig::BumpCurve => ModelSpec::bump_curve(),
            ModelConfig::ShiftedBumpCurve => ModelSpec::shifted_bump_curve(),
            ModelConfig::SlopedBumpCurve => ModelSpec::sloped_bump_curve(),
        })
    }
}

/// Exactly one of `path` (CSV, relative to the config file) or `fixture`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
}

/// Names accepted by `data.fixture`, besides the closed-form example names.
pub const DATA_FIXTURES: [&str; 3] = ["bump", "zero-jacobian", "sloped"];

pub fn fixture_dataset(name: &str) -> Result<Dataset<f64>, CliError> {
    match name {
        "bump" => Dataset::new(vec![vec![0.0]], vec![vec![-1.0]]).map_err(|e| CliError::Config(e.to_string())),
        "zero-jacobian" => Ok((*BasinFixture::zero_jacobian().problem.data).clone()),
        "sloped" => Ok((*BasinFixture::sloped().problem.data).clone()),
        other => ExampleFixture::get(other)
            .map(|fx| (*fx.problem.data).clone())
            .map_err(|_| CliError::UnknownFixture(other.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    #[serde(default = "default_seed_count")]
    pub count: usize,
    #[serde(default)]
    pub base: u64,
}

fn default_seed_count() -> usize {
    10
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self {
            count: default_seed_count(),
            base: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default = "default_aux_init")]
    pub aux_init_range: f64,
    #[serde(default = "default_success")]
    pub success_threshold: f64,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    /// Hold `θ` at this value and train only the added neuron.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen_theta: Option<Vec<f64>>,
}

fn default_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}
fn default_aux_init() -> f64 {
    0.1
}
fn default_success() -> f64 {
    0.1
}
fn default_bins() -> usize {
    20
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            variants: default_variants(),
            aux_init_range: default_aux_init(),
            success_threshold: default_success(),
            histogram_bins: default_bins(),
            frozen_theta: None,
        }
    }
}

/// A single point `(θ, a, b, W)` for point-wise checks; missing added-neuron
/// blocks default to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub bounds: Vec<(f64, f64)>,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
}

fn default_resolution() -> f64 {
    1e-3
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

fn default_optimizer() -> OptimizerConfig {
    OptimizerConfig::default()
}

/// Everything a run needs, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub reduction: Reduction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub model: ModelConfig,
    pub loss: LossKind,
    pub data: DataConfig,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub seeds: SeedConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<PointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::from_toml(&text)?, base))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(CliError::Config(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        match (&self.data.path, &self.data.fixture) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err(CliError::Config("data needs exactly one of `path` or `fixture`".into())),
        }
        self.optimizer.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.monitor.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.seeds.count == 0 {
            return Err(CliError::Config("seeds.count must be at least 1".into()));
        }
        if self.experiment.variants.is_empty() {
            return Err(CliError::Config("experiment.variants is empty".into()));
        }
        self.model.build()?;
        Ok(())
    }

    pub fn dataset(&self, base: &Path) -> Result<Dataset<f64>, CliError> {
        match (&self.data.path, &self.data.fixture) {
            (Some(p), _) => {
                let full = if p.is_absolute() { p.clone() } else { base.join(p) };
                Dataset::from_csv_path(&full).map_err(|e| CliError::Data(format!("{}: {e}", full.display())))
            }
            (_, Some(name)) => fixture_dataset(name),
            _ => Err(CliError::Config("no data source".into())),
        }
    }

    pub fn problem(&self, base: &Path) -> Result<Problem<f64>, CliError> {
        let data = self.dataset(base)?;
        let model = self.model.build()?;
        let criterion =
            LossCriterion::new(self.loss, data.output_dim()).map_err(|e| CliError::Config(e.to_string()))?;
        Problem::new(model, criterion, data, self.reduction).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn experiment(&self, problem: Problem<f64>) -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(problem, self.lambda, self.optimizer.clone(), self.monitor);
        spec.n_seeds = self.seeds.count;
        spec.base_seed = self.seeds.base;
        spec.variants = self.experiment.variants.clone();
        spec.aux_init_range = self.experiment.aux_init_range;
        spec.success_threshold = self.experiment.success_threshold;
        spec.histogram_bins = self.experiment.histogram_bins;
        spec.frozen_theta = self.experiment.frozen_theta.clone();
        spec
    }

    /// `θ` and the added neuron from the `[point]` section.
    pub fn point(&self, problem: &Problem<f64>) -> Result<(Vec<f64>, AuxParams<f64>), CliError> {
        let p = self
            .point
            .as_ref()
            .ok_or_else(|| CliError::Config("no [point] section and no --params".into()))?;
        let (dy, dx) = (problem.output_dim(), problem.input_dim());
        if p.theta.len() != problem.theta_dim() {
            return Err(CliError::Config(format!(
                "point.theta has {} entries, the model has {}",
                p.theta.len(),
                problem.theta_dim()
            )));
        }
        let aux = AuxParams::new(
            p.a.clone().unwrap_or_else(|| vec![0.0; dy]),
            p.b.clone().unwrap_or_else(|| vec![0.0; dy]),
            p.w.clone().unwrap_or_else(|| vec![0.0; dy * dx]),
            dx,
            self.lambda,
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        Ok((p.theta.clone(), aux))
    }
}

/// Config for the two-well curve in the histogram experiment.
pub fn bump_curve_example() -> RunConfig {
    RunConfig {
        lambda: DEFAULT_LAMBDA,
        reduction: Reduction::Sum,
        out: None,
        model: ModelConfig::BumpCurve,
        loss: LossKind::SmoothedHinge { p: 3 },
        data: DataConfig {
            path: None,
            fixture: Some("bump".into()),
        },
        optimizer: OptimizerConfig {
            method: Method::AdaGrad { lr: 0.5, delta: 1e-8 },
            max_iter: 50_000,
            grad_tol: 1e-8,
            sample_every: 100,
            ..OptimizerConfig::default()
        },
        monitor: MonitorConfig {
            action: auxlab::optimize::MonitorAction::Restart {
                max_restarts: 5,
                init_range: 0.1,
                redraw_theta: true,
            },
            ..MonitorConfig::default()
        },
        seeds: SeedConfig { count: 200, base: 0 },
        experiment: ExperimentConfig::default(),
        point: None,
        oracle: Some(OracleConfig {
            bounds: vec![(0.0, 1.0)],
            resolution: 1e-4,
        }),
    }
}
