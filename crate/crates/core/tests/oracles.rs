use auxlab::augment::{augmented_objective, original_objective, AuxParams, Dataset, Problem, Reduction};
use auxlab::criteria::LossCriterion;
use auxlab::diff::Quadratic;
use auxlab::fixtures::{landscape_grid, run_example, ExampleFixture, InnerProblem, LandscapeConfig, EXAMPLE_NAMES};
use auxlab::models::ModelSpec;
use auxlab::oracles::{grid_global_min, pgb_check, verify_local_min, PgbConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grid_finds_the_lattice_minimum(cx in -1.0..1.0f64, cy in -1.0..1.0f64) {
        let q = Quadratic { center: vec![cx, cy], weights: vec![1.0, 2.0] }.program();
        let g = grid_global_min(&q, &[(-1.0, 1.0), (-1.0, 1.0)], 0.01).unwrap();
        // nearest lattice point, computed directly
        let snap = |c: f64| -1.0 + ((c + 1.0) / 0.01).round() * 0.01;
        let best = q.evaluate_slice(&[snap(cx), snap(cy)]).unwrap();
        prop_assert!(g.value <= best + 1e-12);
        prop_assert!(g.value <= 3.0 * 0.005f64.powi(2) * 2.0);
    }

    #[test]
    fn centre_of_a_bowl_is_a_local_min(cx in -3.0..3.0f64, seed in 0u64..100) {
        let q = Quadratic { center: vec![cx, 0.5], weights: vec![0.7, 4.0] }.program();
        prop_assert!(verify_local_min(&q, &[cx, 0.5], 1e-2, 200, seed).unwrap().pass);
        let off = verify_local_min(&q, &[cx + 0.1, 0.5], 1e-2, 200, seed).unwrap();
        prop_assert!(!off.pass);
        prop_assert!(off.witness.is_some());
    }
}

#[test]
fn examples_match_their_closed_forms() {
    for name in EXAMPLE_NAMES {
        let r = run_example(name, &[1.0, 0.5, 0.25]).unwrap();
        assert!(r.pass, "{name}: {r:?}");
        let fx = ExampleFixture::get(name).unwrap();
        let obj = fx.objective();
        for row in &r.rows {
            let direct = obj.evaluate_slice(&fx.packed(row.eps)).unwrap();
            assert_eq!(direct, row.general);
        }
    }
}

#[test]
fn duplicate_inputs_block_the_added_neuron() {
    let fx = ExampleFixture::get("squared-duplicate-input").unwrap();
    let obj = augmented_objective(&fx.problem, 0.01).unwrap();
    for p in [[0.0, 0.0, 0.0, 0.5, 0.5], [0.0, 0.0, 0.0, -1.0, 2.0]] {
        assert_eq!(obj.evaluate_slice(&p).unwrap(), 2.0);
        assert!(verify_local_min(&obj, &p, 1e-2, 2000, 1).unwrap().pass);
    }
    let aux = AuxParams::new(vec![0.0], vec![0.0], vec![0.0], 1, 0.01).unwrap();
    assert!(
        pgb_check(&fx.problem, &[0.0, 0.0], &aux, &PgbConfig::default())
            .unwrap()
            .pass
    );
}

#[test]
fn one_sample_is_refuted_with_a_lower_witness() {
    let data = Dataset::new(vec![vec![0.5]], vec![vec![1.0]]).unwrap();
    let p = Problem::new(ModelSpec::linear(1, 1), LossCriterion::squared(1), data, Reduction::Sum).unwrap();
    let aux = AuxParams::new(vec![0.0], vec![0.3], vec![0.0], 1, 0.01).unwrap();
    let v = pgb_check(&p, &[0.0, 2.0], &aux, &PgbConfig::default()).unwrap();
    assert!(!v.pass);
    assert_eq!(v.get("objective"), Some(1.0));
    assert!(v.get("witness_value").unwrap() < 1.0);
    assert!(original_objective(&p).evaluate_slice(&[0.0, 1.0]).unwrap() == 0.0);
}

#[test]
fn landscape_never_exceeds_the_loss() {
    let cfg = LandscapeConfig {
        theta_steps: 20,
        b_steps: 20,
        ..LandscapeConfig::default()
    };
    let grid = landscape_grid(&cfg).unwrap();
    assert_eq!(grid.rows.len(), 400);
    assert_eq!(grid.failures, 0);
    let crit = LossCriterion::new(cfg.loss, 1).unwrap();
    for row in &grid.rows {
        let f = auxlab::models::GaussianCurve::bump().eval(row.theta);
        let loss = crit.loss_value(&[f], &[cfg.target]).unwrap();
        assert!(row.value <= loss + 1e-12, "{row:?} vs {loss}");
        let inner = InnerProblem::new(&crit, cfg.target, f, row.b, cfg.lambda);
        assert!((inner.value(row.a) - row.value).abs() < 1e-12);
    }
}
