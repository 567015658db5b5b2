use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use screenlink::analysis::{binomial_halfwidth, monte_carlo_ber, q_function, BerModel};
use screenlink::channel::{geometric_gain, ChannelGeometry};
use screenlink::decoder::{decide_symbols, synchronize, LevelEstimate, SyncResult};
use screenlink::oracles::{integrated_gain, q_by_quadrature};
use screenlink::{Error, ModulationParams, SymbolSeries};

/// Upper normal tail at 2, from a 30-digit adaptive quadrature.
const Q2: f64 = 0.022_750_131_948_179_21;

#[test]
fn q_of_two_agrees_with_quadrature() {
    let by_quadrature = q_by_quadrature(2.0, 20_000);
    assert!((by_quadrature - Q2).abs() < 1e-14, "{by_quadrature}");
    assert!((q_function(2.0) - by_quadrature).abs() < 1e-12);
}

#[test]
fn q_absolute_error_below_1e12_on_a_grid() {
    for i in -60..=60 {
        let x = i as f64 * 0.1;
        let (a, b) = (q_function(x), q_by_quadrature(x, 20_000));
        assert!((a - b).abs() < 1e-12, "x={x}: {a} vs {b}");
    }
}

#[test]
fn monte_carlo_at_q_argument_two() {
    let model = BerModel::with_q_argument(2.0).unwrap();
    let est = monte_carlo_ber(&model, 100_000, 17).unwrap();
    assert!(est.contains(Q2), "{est:?}");
}

#[test]
fn symbol_error_rate_at_q_argument_two() {
    // one sample per symbol, known levels: the statistic is the sample itself
    let (mu0, mu1, sigma) = (0.4, 0.6, 0.05);
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let sent: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let values: Vec<f64> = sent
        .iter()
        .map(|&s| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let mu = if s == 1 { mu1 } else { mu0 };
            mu + sigma * z
        })
        .collect();
    let series = SymbolSeries::new(values, 1.0).unwrap();
    let sync = SyncResult { start_offset: 0, frames_per_symbol: 1.0, peak_correlation: 1.0 };
    let levels = LevelEstimate::from_extremes(mu0, mu1, sigma, 2).unwrap();
    let decided = decide_symbols(&series, &sync, &levels);
    assert_eq!(decided.len(), n);
    let errors = decided.iter().zip(&sent).filter(|(a, b)| a != b).count();
    let ser = errors as f64 / n as f64;
    assert!((ser - Q2).abs() <= binomial_halfwidth(Q2, n as u64), "ser={ser}");
}

#[test]
fn pure_noise_never_locks() {
    let params = ModulationParams::ook(6, 30.0).unwrap();
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..576)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                0.5 + 0.05 * z
            })
            .collect();
        let series = SymbolSeries::new(values, 30.0).unwrap();
        match synchronize(&series, &params, 30.0) {
            Err(Error::SyncFailure { peak, .. }) => worst = worst.max(peak),
            other => panic!("seed {seed}: expected sync failure, got {other:?}"),
        }
    }
    assert!(worst < 0.5);
}

#[test]
fn small_element_gain_matches_integration_in_far_field() {
    let cases = [
        (1.0, 0.0, 0.0, 0.01, 0.0004),
        (3.0, 0.6, 0.2, 0.04, 0.0001),
        (5.0, 1.0, 1.0, 0.2, 0.01),
        (20.0, 0.3, 0.9, 1.0, 0.0025),
    ];
    for (d, phi, theta, s, a) in cases {
        let g = ChannelGeometry::new(d, phi, theta, s, a).unwrap();
        let (exact, approx) = (integrated_gain(&g, 64), geometric_gain(&g));
        assert!((approx / exact - 1.0).abs() < 0.01, "{g:?}: {approx} vs {exact}");
    }
}
