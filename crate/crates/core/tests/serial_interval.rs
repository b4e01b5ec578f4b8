mod common;

use common::GammaOracle;
use epiexplain_core::serial_interval::{default_serial_interval, discretize, GammaParams};
use proptest::prelude::*;

const PARAMS: [(f64, f64); 5] = [(7.0, 4.5), (5.0, 5.0), (3.0, 1.0), (10.0, 2.0), (4.7, 2.9)];

#[test]
fn cdf_matches_quadrature() {
    for (mean, sd) in PARAMS {
        let oracle = GammaOracle::from_mean_sd(mean, sd);
        let params = GammaParams::from_mean_sd(mean, sd).unwrap();
        for i in 0..=120 {
            let x = i as f64 * 0.25;
            let expected = oracle.probability(0.0, x);
            let got = params.cdf(x).unwrap();
            assert!(
                (got - expected).abs() < 1e-10,
                "mean {mean} sd {sd}: F({x}) = {got}, oracle {expected}"
            );
        }
    }
}

#[test]
fn weights_match_quadrature() {
    for (mean, sd) in PARAMS {
        let oracle = GammaOracle::from_mean_sd(mean, sd);
        let si = discretize(&GammaParams::from_mean_sd(mean, sd).unwrap(), 60).unwrap();
        for s in 1..=60 {
            let expected = oracle.weight(s);
            assert!(
                (si.weight(s) - expected).abs() < 1e-9,
                "mean {mean} sd {sd}: g_{s} = {}, oracle {expected}",
                si.weight(s)
            );
        }
    }
}

#[test]
fn default_interval_puts_almost_all_mass_in_the_horizon() {
    let si = default_serial_interval();
    assert_eq!(si.horizon(), 100);
    assert!(si.total_mass() > 0.999_999);
    assert!(si.total_mass() <= 1.0);
    let peak = (1..=si.horizon())
        .max_by(|&a, &b| si.weight(a).total_cmp(&si.weight(b)))
        .unwrap();
    assert!(
        (4..=6).contains(&peak),
        "mode of the serial interval at lag {peak}"
    );
}

proptest! {
    #[test]
    fn weights_are_nonnegative_and_bounded(mean in 0.5f64..20.0, cv in 0.1f64..2.0, horizon in 1usize..150) {
        let si = discretize(&GammaParams::from_mean_sd(mean, mean * cv).unwrap(), horizon).unwrap();
        prop_assert_eq!(si.weights().len(), horizon);
        prop_assert!(si.weights().iter().all(|&w| (0.0..=1.0).contains(&w)));
        prop_assert!(si.total_mass() <= 1.0 + 1e-12);
    }

    #[test]
    fn longer_horizons_extend_shorter_ones(mean in 1.0f64..15.0, cv in 0.2f64..1.0, h in 1usize..80, extra in 1usize..40) {
        let params = GammaParams::from_mean_sd(mean, mean * cv).unwrap();
        let short = discretize(&params, h).unwrap();
        let long = discretize(&params, h + extra).unwrap();
        prop_assert_eq!(short.weights(), &long.weights()[..h]);
    }
}
