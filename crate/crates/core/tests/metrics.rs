use dlr_core::dataset::Case;
use dlr_core::evaluation::{mae, mse, r_squared};
use dlr_core::rng::SplitMix64;
use dlr_core::MetricsReport;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

// Straight left-to-right loops, no compensation.
fn brute(pred: &[f64], actual: &[f64]) -> (f64, f64, f64) {
    let n = pred.len() as f64;
    let (mut se, mut ae, mut sa) = (0.0, 0.0, 0.0);
    for i in 0..pred.len() {
        let e = pred[i] - actual[i];
        se += e * e;
        ae += e.abs();
        sa += actual[i];
    }
    let mean = sa / n;
    let mut tot = 0.0;
    for a in actual {
        tot += (a - mean) * (a - mean);
    }
    (se / n, ae / n, 1.0 - se / tot)
}

#[test]
fn hundred_thousand_values_match_brute_force() {
    let mut rng = SplitMix64::new(2024);
    let actual: Vec<f64> = (0..100_000).map(|_| 150.0 + 40.0 * rng.normal()).collect();
    let pred: Vec<f64> = actual.iter().map(|a| a + 5.0 * rng.normal()).collect();
    let (m, a, r) = brute(&pred, &actual);
    assert!(rel(mse(&pred, &actual).unwrap(), m) < 1e-12);
    assert!(rel(mae(&pred, &actual).unwrap(), a) < 1e-12);
    assert!(rel(r_squared(&pred, &actual).unwrap(), r) < 1e-12);
}

#[test]
fn perfect_and_mean_predictors() {
    let mut rng = SplitMix64::new(7);
    let actual: Vec<f64> = (0..5_000).map(|_| rng.uniform(90.0, 240.0)).collect();
    assert!((r_squared(&actual, &actual).unwrap() - 1.0).abs() < 1e-12);
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let flat = vec![mean; actual.len()];
    assert!(r_squared(&flat, &actual).unwrap().abs() < 1e-12);
}

fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..200).prop_flat_map(|n| {
        (
            prop::collection::vec(-1e3..1e3f64, n),
            prop::collection::vec(-1e3..1e3f64, n),
        )
    })
}

proptest! {
    #[test]
    fn mae_squared_bounded_by_mse((p, a) in pairs()) {
        let m = mse(&p, &a).unwrap();
        let e = mae(&p, &a).unwrap();
        prop_assert!(e * e <= m * (1.0 + 1e-14), "mae² {} > mse {}", e * e, m);
    }

    #[test]
    fn accuracy_is_exactly_100_r2((p, a) in pairs()) {
        let r = MetricsReport::from_predictions(Case::Multivariate, &p, &a).unwrap();
        prop_assert_eq!(r.accuracy_pct, 100.0 * r.r_squared);
        prop_assert_eq!(r.r_squared, r_squared(&p, &a).unwrap());
        prop_assert!(r.r_squared <= 1.0);
        prop_assert!(r.mse >= 0.0 && r.mae >= 0.0);
    }

    #[test]
    fn agrees_with_brute_force((p, a) in pairs()) {
        let (m, e, r) = brute(&p, &a);
        prop_assert!(rel(mse(&p, &a).unwrap(), m) < 1e-12);
        prop_assert!(rel(mae(&p, &a).unwrap(), e) < 1e-12);
        prop_assert!((r_squared(&p, &a).unwrap() - r).abs() < 1e-12 * r.abs().max(1.0));
    }
}
