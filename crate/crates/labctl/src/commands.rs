use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use auxlab::augment::{augmented_objective, original_objective, AuxParams, Problem};
use auxlab::fixtures::{landscape_grid, run_example, FixtureError, LandscapeConfig, DEFAULT_LADDER, EXAMPLE_NAMES};
use auxlab::optimize::{
    multi_seed_experiment, paired_success, write_histogram_csv, write_runs_jsonl, write_trajectory_csv,
    ExperimentSummary, RunRecord, Variant,
};
use auxlab::oracles::{
    gradient_check, gradient_factorization, grid_global_min, per_sample_gradient_check, pgb_check, stationary_a_check,
    verify_local_min, write_matrix_csv, Factorization, OracleVerdict, PgbConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::OutputDir;
use crate::{CliError, Outcome, VerifyWhat, EXIT_OK, EXIT_VERDICT};

const DEFAULT_OUT: &str = "runs";

/// Points per objective in `verify grad`.
pub const GRAD_POINTS: usize = 100;

fn out_root(cli: Option<&Path>, cfg: Option<&RunConfig>, base: &Path) -> PathBuf {
    match (cli, cfg.and_then(|c| c.out.as_ref())) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) if p.is_absolute() => p.clone(),
        (None, Some(p)) => base.join(p),
        (None, None) => PathBuf::from(DEFAULT_OUT),
    }
}

/// Write everything `train` produces into `dir`.
pub fn write_train_outputs(dir: &OutputDir, cfg: &RunConfig, summary: &ExperimentSummary) -> Result<(), CliError> {
    dir.write("config.toml", cfg.to_toml())?;
    dir.write_json("summary.json", &summary_json(summary))?;
    let stripped: Vec<RunRecord> = summary
        .runs
        .iter()
        .map(|r| RunRecord {
            trajectory: Vec::new(),
            ..r.clone()
        })
        .collect();
    write_runs_jsonl(&stripped, dir.file("runs.jsonl")?)?;
    write_histogram_csv(summary, dir.file("histogram.csv")?).map_err(|e| CliError::Output(e.to_string()))?;
    for r in &summary.runs {
        let name = format!("trajectories/{}-{}.csv", r.label, r.seed);
        write_trajectory_csv(r, dir.file(&name)?).map_err(|e| CliError::Output(e.to_string()))?;
    }
    Ok(())
}

pub fn summary_json(summary: &ExperimentSummary) -> serde_json::Value {
    let has = |v: Variant| summary.variants.iter().any(|s| s.variant == v);
    let paired = (has(Variant::AugmentedMonitor) && has(Variant::Original)).then(|| {
        paired_success(
            summary,
            Variant::AugmentedMonitor,
            Variant::Original,
            summary.success_threshold,
        )
    });
    json!({ "summary": summary, "paired_monitor_vs_original": paired, "runs": summary.runs.len() })
}

pub fn train(config: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<Outcome, CliError> {
    let (mut cfg, base) = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seeds.base = s;
    }
    let problem = cfg.problem(&base)?;
    let summary = multi_seed_experiment(&cfg.experiment(problem)).map_err(|e| CliError::Config(e.to_string()))?;
    let dir = OutputDir::create(&out_root(out, Some(&cfg), &base), &cfg.to_toml())?;
    write_train_outputs(&dir, &cfg, &summary)?;
    let mut report = summary_json(&summary);
    report["out_dir"] = json!(dir.path);
    Ok(Outcome {
        code: EXIT_OK,
        report,
        out_dir: Some(dir.path),
    })
}

/// A point to verify: `θ` and the added neuron, which is all zeros for
/// runs of the standard objective.
#[derive(Debug, Clone)]
pub struct Point {
    pub label: String,
    pub theta: Vec<f64>,
    pub aux: AuxParams<f64>,
    pub augmented: bool,
}

pub fn read_runs(path: &Path) -> Result<Vec<RunRecord>, CliError> {
    let f = std::fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut runs = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CliError::Data(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        runs.push(
            serde_json::from_str(&line).map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(runs)
}

pub fn run_points(
    cfg: &RunConfig,
    problem: &Problem<f64>,
    runs: &[RunRecord],
    variant: Option<&str>,
    index: Option<usize>,
) -> Result<Vec<Point>, CliError> {
    let selected: Vec<&RunRecord> = runs.iter().filter(|r| variant.is_none_or(|v| r.label == v)).collect();
    let selected: Vec<&RunRecord> = match index {
        Some(i) => selected.get(i).copied().into_iter().collect(),
        None => selected,
    };
    if selected.is_empty() {
        return Err(CliError::Config("no runs match the selection".into()));
    }
    let (dy, dx, dt) = (problem.output_dim(), problem.input_dim(), problem.theta_dim());
    selected
        .into_iter()
        .map(|r| {
            let (theta, aux_vals) = match &cfg.experiment.frozen_theta {
                Some(t) => (t.clone(), r.final_params.clone()),
                None if r.final_params.len() == dt => (r.final_params.clone(), Vec::new()),
                None => (r.final_params[..dt].to_vec(), r.final_params[dt..].to_vec()),
            };
            let augmented = !aux_vals.is_empty();
            let aux = if augmented {
                AuxParams::from_packed(&aux_vals, dx, dy, cfg.lambda)
            } else {
                AuxParams::zeros(dx, dy, cfg.lambda)
            }
            .map_err(|e| CliError::Data(format!("run {} seed {}: {e}", r.label, r.seed)))?;
            Ok(Point {
                label: format!("{}-{}", r.label, r.seed),
                theta,
                aux,
                augmented,
            })
        })
        .collect()
}

fn packed(p: &Point) -> Vec<f64> {
    let mut v = p.theta.clone();
    v.extend(p.aux.packed());
    v
}

/// Random `θ` from the model initialiser and added-neuron parameters in
/// `[-1, 1]`, for gradient checks.
pub fn random_points(problem: &Problem<f64>, n: usize, seed: u64, augmented: bool) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut p: Vec<f64> = problem.model.init_params(&mut rng);
            if augmented {
                p.extend((0..problem.aux_dim()).map(|_| rng.random_range(-1.0..1.0)));
            }
            p
        })
        .collect()
}

fn oracle_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

pub fn verify_point(
    what: VerifyWhat,
    problem: &Problem<f64>,
    lambda: f64,
    p: &Point,
    seed: u64,
) -> Result<(OracleVerdict, Option<Factorization>), CliError> {
    let v = match what {
        VerifyWhat::Grad => return Err(CliError::Config("gradient checks do not take a point".into())),
        VerifyWhat::StationaryA => stationary_a_check(problem, &p.theta, &p.aux).map_err(oracle_err)?,
        VerifyWhat::LocalMin => {
            let (obj, x) = if p.augmented {
                (augmented_objective(problem, lambda).map_err(oracle_err)?, packed(p))
            } else {
                (original_objective(problem), p.theta.clone())
            };
            verify_local_min(&obj, &x, 1e-2, 2000, seed).map_err(oracle_err)?
        }
        VerifyWhat::Pgb => pgb_check(
            problem,
            &p.theta,
            &p.aux,
            &PgbConfig {
                seed,
                ..PgbConfig::default()
            },
        )
        .map_err(oracle_err)?,
        VerifyWhat::Realizable => per_sample_gradient_check(problem, &p.theta).map_err(oracle_err)?,
        VerifyWhat::Factorization => {
            let aux = p.augmented.then_some(&p.aux);
            let f = gradient_factorization(problem, &p.theta, aux).map_err(oracle_err)?;
            let grad = if p.augmented {
                augmented_objective(problem, lambda)
                    .map_err(oracle_err)?
                    .value_and_gradient(&packed(p))
            } else {
                original_objective(problem).value_and_gradient(&p.theta)
            }
            .map_err(oracle_err)?
            .1;
            let g = &grad[..p.theta.len()];
            let diff = g
                .iter()
                .zip(&f.a)
                .map(|(x, row)| (x - row.iter().zip(&f.r).map(|(a, r)| a * r).sum::<f64>()).powi(2))
                .sum::<f64>()
                .sqrt();
            let tol = 1e-9 * (1.0 + g.iter().map(|x| x * x).sum::<f64>().sqrt());
            let v = OracleVerdict::new("factorization", diff <= tol)
                .residual("ar_norm", f.ar_norm)
                .residual("relative", f.relative)
                .residual("reconstruction_error", diff);
            return Ok((v.note(p.label.clone()), Some(f)));
        }
    };
    Ok((v.note(p.label.clone()), None))
}

#[allow(clippy::too_many_arguments)]
pub fn verify(
    what: VerifyWhat,
    config: &Path,
    params: Option<&Path>,
    variant: Option<&str>,
    index: Option<usize>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<Outcome, CliError> {
    let (cfg, base) = RunConfig::load(config)?;
    let problem = cfg.problem(&base)?;
    let seed = seed.unwrap_or(cfg.seeds.base);
    let mut verdicts = Vec::new();
    let mut matrices = Vec::new();
    if what == VerifyWhat::Grad {
        let orig = original_objective(&problem);
        let aug = augmented_objective(&problem, cfg.lambda).map_err(oracle_err)?;
        verdicts.push(gradient_check(&orig, &random_points(&problem, GRAD_POINTS, seed, false)).map_err(oracle_err)?);
        verdicts.push(gradient_check(&aug, &random_points(&problem, GRAD_POINTS, seed, true)).map_err(oracle_err)?);
    } else {
        let points = match params {
            Some(path) => run_points(&cfg, &problem, &read_runs(path)?, variant, index)?,
            None => {
                let (theta, aux) = cfg.point(&problem)?;
                vec![Point {
                    label: "point".into(),
                    theta,
                    aux,
                    augmented: true,
                }]
            }
        };
        for p in &points {
            let (v, m) = verify_point(what, &problem, cfg.lambda, p, seed)?;
            verdicts.push(v);
            matrices.push((p.label.clone(), m));
        }
    }
    let pass = verdicts.iter().all(|v| v.pass);
    let report = json!({ "what": format!("{what:?}"), "pass": pass, "verdicts": verdicts });
    let out_dir = match out {
        Some(root) => {
            let dir = OutputDir::create(root, &format!("verify {what:?}\n{}", cfg.to_toml()))?;
            dir.write_json("verdicts.json", &report)?;
            for (label, m) in &matrices {
                if let Some(f) = m {
                    write_matrix_csv(&f.a_matrix(), dir.file(&format!("factorization/{label}.csv"))?)
                        .map_err(|e| CliError::Output(e.to_string()))?;
                }
            }
            Some(dir.path)
        }
        None => None,
    };
    Ok(Outcome {
        code: if pass { EXIT_OK } else { EXIT_VERDICT },
        report,
        out_dir,
    })
}

fn fixture_err(e: FixtureError) -> CliError {
    match e {
        FixtureError::UnknownFixture(n) => CliError::UnknownFixture(n),
        other => CliError::Config(other.to_string()),
    }
}

pub fn example(name: &str, eps: &[f64], out: Option<&Path>) -> Result<Outcome, CliError> {
    let names: Vec<&str> = if name == "all" {
        EXAMPLE_NAMES.to_vec()
    } else {
        vec![name]
    };
    let ladder: Vec<f64> = if eps.is_empty() {
        DEFAULT_LADDER.to_vec()
    } else {
        eps.to_vec()
    };
    let reports = names
        .iter()
        .map(|n| run_example(n, &ladder))
        .collect::<Result<Vec<_>, _>>()
        .map_err(fixture_err)?;
    let pass = reports.iter().all(|r| r.pass);
    let report = json!({ "pass": pass, "reports": reports });
    let out_dir = match out {
        Some(root) => {
            let dir = OutputDir::create(root, &format!("example {name} {ladder:?}"))?;
            dir.write_json("reports.json", &report)?;
            Some(dir.path)
        }
        None => None,
    };
    Ok(Outcome {
        code: if pass { EXIT_OK } else { EXIT_VERDICT },
        report,
        out_dir,
    })
}

pub fn load_landscape_config(path: Option<&Path>) -> Result<LandscapeConfig, CliError> {
    match path {
        None => Ok(LandscapeConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

pub fn landscape(config: Option<&Path>, out: Option<&Path>) -> Result<Outcome, CliError> {
    let cfg = load_landscape_config(config)?;
    let grid = landscape_grid(&cfg).map_err(fixture_err)?;
    let root = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let key = toml::to_string(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let dir = OutputDir::create(&root, &format!("landscape\n{key}"))?;
    let mut csv = dir.file("landscape.csv")?;
    grid.write_csv(&mut csv).map_err(|e| CliError::Output(e.to_string()))?;
    csv.flush()?;
    let meta = grid.metadata();
    dir.write_json("metadata.json", &meta)?;
    let report = json!({ "metadata": meta, "out_dir": dir.path });
    Ok(Outcome {
        code: EXIT_OK,
        report,
        out_dir: Some(dir.path),
    })
}

pub fn oracle(config: &Path, resolution: Option<f64>, out: Option<&Path>) -> Result<Outcome, CliError> {
    let (cfg, base) = RunConfig::load(config)?;
    let problem = cfg.problem(&base)?;
    let oc = cfg
        .oracle
        .as_ref()
        .ok_or_else(|| CliError::Config("no [oracle] section".into()))?;
    let res = resolution.unwrap_or(oc.resolution);
    let min = grid_global_min(&original_objective(&problem), &oc.bounds, res).map_err(oracle_err)?;
    let report = json!({ "grid_min": min, "resolution": res, "bounds": oc.bounds });
    let out_dir = match out {
        Some(root) => {
            let dir = OutputDir::create(root, &format!("oracle {res}\n{}", cfg.to_toml()))?;
            dir.write_json("grid_min.json", &report)?;
            Some(dir.path)
        }
        None => None,
    };
    Ok(Outcome {
        code: EXIT_OK,
        report,
        out_dir,
    })
}
