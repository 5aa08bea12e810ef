use auxlab::augment::{augmented_objective, original_objective, AuxParams, Dataset, Problem, Reduction};
use auxlab::criteria::LossCriterion;
use auxlab::models::ModelSpec;
use auxlab::oracles::stationary_a_check;
use proptest::prelude::*;

fn linear(xs: &[f64], ys: &[f64], reduction: Reduction) -> Problem<f64> {
    let data = Dataset::new(
        xs.iter().map(|&x| vec![x]).collect(),
        ys.iter().map(|&y| vec![y]).collect(),
    )
    .unwrap();
    Problem::new(ModelSpec::linear(1, 1), LossCriterion::squared(1), data, reduction).unwrap()
}

/// Hand-written value and gradient of the augmented objective for a 1-d
/// line with mean squared loss. Order: slope, intercept, a, b, w.
fn by_hand(xs: &[f64], ys: &[f64], p: &[f64; 5], lambda: f64) -> (f64, [f64; 5]) {
    let [s, c, a, b, w] = *p;
    let n = xs.len() as f64;
    let mut value = 0.0;
    let mut g = [0.0; 5];
    for (&x, &y) in xs.iter().zip(ys) {
        let e = (b + w * x).exp();
        let r = s * x + c + a * e - y;
        value += r * r / n;
        let d = 2.0 * r / n;
        g[0] += d * x;
        g[1] += d;
        g[2] += d * e;
        g[3] += d * a * e;
        g[4] += d * a * e * x;
    }
    value += lambda * a * a;
    g[2] += 2.0 * lambda * a;
    (value, g)
}

fn samples() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(-2.0..2.0f64, n),
            prop::collection::vec(-2.0..2.0f64, n),
        )
    })
}

proptest! {
    #[test]
    fn tape_matches_hand_gradient(
        (xs, ys) in samples(),
        p in prop::array::uniform5(-1.5..1.5f64),
        lambda in 1e-3..1.0f64,
    ) {
        let problem = linear(&xs, &ys, Reduction::Mean);
        let obj = augmented_objective(&problem, lambda).unwrap();
        let (v, g) = obj.value_and_gradient(&p).unwrap();
        let (hv, hg) = by_hand(&xs, &ys, &p, lambda);
        prop_assert!((v - hv).abs() <= 1e-12 * (1.0 + hv.abs()));
        for (x, y) in g.iter().zip(&hg) {
            prop_assert!((x - y).abs() <= 1e-11 * (1.0 + y.abs()), "{g:?} vs {hg:?}");
        }
    }

    #[test]
    fn amplitude_identity_holds_everywhere(
        (xs, ys) in samples(),
        p in prop::array::uniform5(-1.5..1.5f64),
        lambda in 1e-3..1.0f64,
    ) {
        let problem = linear(&xs, &ys, Reduction::Sum);
        let aux = AuxParams::new(vec![p[2]], vec![p[3]], vec![p[4]], 1, lambda).unwrap();
        let v = stationary_a_check(&problem, &p[..2], &aux).unwrap();
        prop_assert!(v.get("identity_residual").unwrap() <= 1e-10);
    }

    #[test]
    fn bias_shift_trades_against_amplitude(
        (xs, ys) in samples(),
        p in prop::array::uniform5(-1.5..1.5f64),
        shift in -2.0..2.0f64,
    ) {
        // a·e^{b+wx} is unchanged by (a, b) -> (a·e^{-s}, b + s), so only the
        // regulariser moves.
        let lambda = 0.05;
        let problem = linear(&xs, &ys, Reduction::Mean);
        let obj = augmented_objective(&problem, lambda).unwrap();
        let mut q = p;
        q[2] *= (-shift).exp();
        q[3] += shift;
        let lhs = obj.evaluate_slice(&q).unwrap() - lambda * q[2] * q[2];
        let rhs = obj.evaluate_slice(&p).unwrap() - lambda * p[2] * p[2];
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn zero_amplitude_recovers_the_loss(
        (xs, ys) in samples(),
        p in prop::array::uniform5(-1.5..1.5f64),
    ) {
        let problem = linear(&xs, &ys, Reduction::Sum);
        let mut q = p;
        q[2] = 0.0;
        let aug = augmented_objective(&problem, 0.3).unwrap().evaluate_slice(&q).unwrap();
        let orig = original_objective(&problem).evaluate_slice(&q[..2]).unwrap();
        prop_assert_eq!(aug, orig);
    }
}

#[test]
fn sum_and_mean_differ_by_sample_count() {
    let xs = [0.0, 1.0, 3.0];
    let ys = [1.0, -1.0, 0.5];
    let sum = original_objective(&linear(&xs, &ys, Reduction::Sum))
        .evaluate_slice(&[0.2, 0.1])
        .unwrap();
    let mean = original_objective(&linear(&xs, &ys, Reduction::Mean))
        .evaluate_slice(&[0.2, 0.1])
        .unwrap();
    assert!((sum - 3.0 * mean).abs() < 1e-14);
}
