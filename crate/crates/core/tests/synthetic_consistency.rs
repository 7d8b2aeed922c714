//! Estimators on synthetic generalized Pareto samples with known parameters.

use evtail::gpd::{gpd_sample, GpdParams};
use evtail::tail::{endpoint_estimate, shape_estimate_known_endpoint, ErrorSample};

const N: usize = 100_000;

fn k_rule() -> usize {
    (N as f64).powf(0.55).ceil() as usize
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
}

fn samples(gamma: f64) -> impl Iterator<Item = ErrorSample> {
    let g = GpdParams::new(gamma, 1.0).unwrap();
    (0..50u64).map(move |seed| ErrorSample::new(gpd_sample(&g, N, 7000 + seed).unwrap()).unwrap())
}

#[test]
fn endpoint_estimate_recovers_true_endpoint() {
    let m = median(samples(-0.5).map(|s| endpoint_estimate(&s, k_rule()).unwrap()).collect());
    assert!((m - 2.0).abs() <= 0.1, "median endpoint {m}");
}

#[test]
fn known_endpoint_shape_is_consistent() {
    let xstar = 1.0 / 0.3;
    let m = median(
        samples(-0.3)
            .map(|s| shape_estimate_known_endpoint(&s, k_rule(), xstar).unwrap())
            .collect(),
    );
    assert!((m - -0.3).abs() <= 0.05, "median shape {m}");
}

#[test]
fn sampler_matches_the_cdf() {
    let g = GpdParams::new(-0.5, 1.0).unwrap();
    let s = ErrorSample::new(gpd_sample(&g, N, 1).unwrap()).unwrap();
    assert!(s.values().iter().all(|&x| (0.0..=2.0).contains(&x)));
    let n = N as f64;
    let ks = s.values().iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = evtail::gpd_cdf(&g, x).unwrap();
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    });
    assert!(ks < 0.01, "KS distance {ks}");
}
