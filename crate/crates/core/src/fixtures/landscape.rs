use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{LossCriterion, LossKind};
use crate::fixtures::FixtureError;
use crate::models::GaussianCurve;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeConfig {
    #[serde(flatten)]
    pub loss: LossKind,
    pub target: f64,
    pub lambda: f64,
    pub theta_range: (f64, f64),
    pub b_range: (f64, f64),
    pub theta_steps: usize,
    pub b_steps: usize,
    /// Inner search interval is `[-a_bracket, a_bracket]`.
    pub a_bracket: f64,
    pub newton_steps: usize,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::SmoothedHinge { p: 3 },
            target: -1.0,
            lambda: 0.01,
            theta_range: (0.0, 1.0),
            b_range: (-5.0, 15.0),
            theta_steps: 200,
            b_steps: 200,
            a_bracket: 10.0,
            newton_steps: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapeRow {
    pub theta: f64,
    pub b: f64,
    pub value: f64,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeGrid {
    pub config: LandscapeConfig,
    pub rows: Vec<LandscapeRow>,
    pub failures: usize,
}

/// The inner problem `min_a ℓ(f + a·s, y) + λa²` at one cell, `s = exp(b)`.
pub struct InnerProblem<'a> {
    criterion: &'a LossCriterion,
    target: f64,
    output: f64,
    scale: f64,
    lambda: f64,
}

impl<'a> InnerProblem<'a> {
    pub fn new(criterion: &'a LossCriterion, target: f64, output: f64, b: f64, lambda: f64) -> Self {
        Self {
            criterion,
            target,
            output,
            scale: b.exp(),
            lambda,
        }
    }

    /// Loss part only, `ℓ(f + a·s, y)`.
    pub fn unregularised(&self, a: f64) -> f64 {
        self.criterion
            .loss_value(&[self.output + a * self.scale], &[self.target])
            .unwrap_or(f64::NAN)
    }

    pub fn value(&self, a: f64) -> f64 {
        self.unregularised(a) + self.lambda * a * a
    }

    fn slope(&self, a: f64) -> f64 {
        let g = self
            .criterion
            .loss_gradient(&[self.output + a * self.scale], &[self.target])
            .map_or(f64::NAN, |g| g[0]);
        self.scale * g + 2.0 * self.lambda * a
    }

    /// Golden-section search on the bracket, then safeguarded Newton steps
    /// that are kept only when they shrink the slope without raising the
    /// value beyond roundoff.
    pub fn minimise(&self, bracket: f64, newton_steps: usize) -> (f64, f64) {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (-bracket, bracket);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (self.value(x1), self.value(x2));
        for _ in 0..300 {
            if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
                break;
            }
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = self.value(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = self.value(x2);
            }
        }
        let (mut a, mut v) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
        for _ in 0..newton_steps {
            let g = self.slope(a);
            if g == 0.0 || !g.is_finite() {
                break;
            }
            let h = 1e-6 * (1.0 + a.abs());
            let curv = (self.slope(a + h) - self.slope(a - h)) / (2.0 * h);
            if !(curv > 0.0) {
                break;
            }
            let next = (a - g / curv).clamp(-bracket, bracket);
            let nv = self.value(next);
            let roundoff = 4.0 * f64::EPSILON * (1.0 + v.abs());
            if next == a || !(nv <= v + roundoff) || !(self.slope(next).abs() < g.abs()) {
                break;
            }
            a = next;
            v = nv;
        }
        (a, v)
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// Profile `V(θ, b) = min_a L̃` for the two-well curve with a single sample
/// at `x = 0`, so the added neuron reduces to `a·exp(b)`.
///
/// Both axes are half-open, `lo + (hi - lo)·i/n` for `i < n`. Rows are in
/// `(θ, b)` order. A cell whose inner solve is non-finite counts as a
/// failure and is reported as NaN.
pub fn landscape_grid(config: &LandscapeConfig) -> Result<LandscapeGrid, FixtureError> {
    let criterion = LossCriterion::new(config.loss, 1).map_err(|e| FixtureError::Invalid(e.to_string()))?;
    criterion
        .validate_target(&[config.target])
        .map_err(|e| FixtureError::Invalid(e.to_string()))?;
    if config.theta_steps == 0 || config.b_steps == 0 {
        return Err(FixtureError::Invalid("grid needs at least one step per axis".into()));
    }
    if !(config.lambda > 0.0 && config.a_bracket > 0.0) {
        return Err(FixtureError::Invalid("lambda and a_bracket must be positive".into()));
    }
    let curve = GaussianCurve::bump();
    let thetas = axis(config.theta_range.0, config.theta_range.1, config.theta_steps);
    let bs = axis(config.b_range.0, config.b_range.1, config.b_steps);
    let rows: Vec<LandscapeRow> = thetas
        .par_iter()
        .flat_map_iter(|&theta| {
            let f = curve.eval(theta);
            let criterion = &criterion;
            bs.iter().map(move |&b| {
                let inner = InnerProblem::new(criterion, config.target, f, b, config.lambda);
                let (a, value) = inner.minimise(config.a_bracket, config.newton_steps);
                let value = if value.is_finite() { value } else { f64::NAN };
                LandscapeRow { theta, b, value, a }
            })
        })
        .collect();
    let failures = rows.iter().filter(|r| !r.value.is_finite()).count();
    Ok(LandscapeGrid {
        config: config.clone(),
        rows,
        failures,
    })
}

impl LandscapeGrid {
    pub fn value_at(&self, theta: f64, b: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| (r.theta - theta).abs() < 1e-12 && (r.b - b).abs() < 1e-12)
            .map(|r| r.value)
    }

    /// CSV with header `theta,b,value`.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["theta", "b", "value"])?;
        for r in &self.rows {
            out.write_record([r.theta.to_string(), r.b.to_string(), r.value.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.config,
            "rows": self.rows.len(),
            "failures": self.failures,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(theta: (f64, f64), b: (f64, f64), n: usize) -> LandscapeConfig {
        LandscapeConfig {
            theta_range: theta,
            b_range: b,
            theta_steps: n,
            b_steps: n,
            ..Default::default()
        }
    }

    #[test]
    fn reference_cells() {
        let g = landscape_grid(&small((0.2, 0.3), (-10.0, 20.0), 3)).unwrap();
        let deep_neg = g.value_at(0.2, -10.0).unwrap();
        assert!((deep_neg - 7.9995).abs() < 1e-3, "{deep_neg}");
        let big_b = g.value_at(0.2, 10.0).unwrap();
        assert!(big_b < 1e-3, "{big_b}");
        let g = LandscapeConfig::default();
        let grid = landscape_grid(&g).unwrap();
        assert_eq!(grid.rows.len(), 40_000);
        assert_eq!(grid.failures, 0);
        assert!(grid.value_at(0.8, 0.0).unwrap() <= 1e-6);
    }

    #[test]
    fn inner_minimum_is_stationary() {
        let c = LossCriterion::smoothed_hinge(3).unwrap();
        let f = GaussianCurve::bump().eval(0.2);
        for b in [-5.0, -1.0, 0.0, 2.0, 7.0] {
            let inner = InnerProblem::new(&c, -1.0, f, b, 0.01);
            let (a, v) = inner.minimise(10.0, 20);
            assert!(inner.slope(a).abs() < 1e-9, "b={b} slope={}", inner.slope(a));
            for da in [-1e-4, 1e-4] {
                assert!(inner.value(a + da) >= v - 1e-14);
            }
        }
    }

    #[test]
    fn shift_in_b_rescales_a() {
        let c = LossCriterion::smoothed_hinge(3).unwrap();
        let f = GaussianCurve::bump().eval(0.35);
        for b in [-2.0, 0.5, 3.0] {
            let here = InnerProblem::new(&c, -1.0, f, b, 0.01);
            let (a, _) = here.minimise(10.0, 20);
            let there = InnerProblem::new(&c, -1.0, f, b - std::f64::consts::LN_2, 0.01);
            assert!((here.unregularised(a) - there.unregularised(2.0 * a)).abs() < 1e-8);
        }
    }

    #[test]
    fn value_never_exceeds_loss() {
        let g = landscape_grid(&small((0.0, 1.0), (-5.0, 15.0), 20)).unwrap();
        let c = LossCriterion::smoothed_hinge(3).unwrap();
        let curve = GaussianCurve::bump();
        for r in &g.rows {
            let loss = c.loss_value(&[curve.eval(r.theta)], &[-1.0]).unwrap();
            assert!(r.value <= loss + 1e-12);
        }
    }

    #[test]
    fn csv_layout() {
        let g = landscape_grid(&small((0.0, 1.0), (0.0, 1.0), 2)).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "theta,b,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,0,"));
        assert!(lines[2].starts_with("0,0.5,"));
    }

    #[test]
    fn rejects_bad_config() {
        assert!(landscape_grid(&LandscapeConfig {
            theta_steps: 0,
            ..Default::default()
        })
        .is_err());
        assert!(landscape_grid(&LandscapeConfig {
            lambda: 0.0,
            ..Default::default()
        })
        .is_err());
        assert!(landscape_grid(&LandscapeConfig {
            target: f64::NAN,
            ..Default::default()
        })
        .is_err());
    }
}
