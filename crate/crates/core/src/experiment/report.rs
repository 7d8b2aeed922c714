use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::figure::FigureRow;
use crate::mlp::TrainReport;
use crate::tail::{ErrorSummary, TailFit};

/// Mean and sample standard deviation (`n - 1` denominator; zero for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Mean with one- and two-standard-deviation bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub one_sigma: [f64; 2],
    pub two_sigma: [f64; 2],
}

impl Band {
    pub fn from_values(values: &[f64]) -> Self {
        let (mean, std) = mean_std(values);
        Self {
            count: values.len(),
            mean,
            std,
            one_sigma: [mean - std, mean + std],
            two_sigma: [mean - 2.0 * std, mean + 2.0 * std],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetFit {
    #[serde(flatten)]
    pub fit: TailFit,
    /// EVT estimate of `P(E > u)` at the set's own threshold; `k/N` by construction.
    pub exceedance_at_u: f64,
    /// EVT estimate of `P(E > ū)` at the common threshold `ū`.
    pub exceedance_at_common_u: f64,
    pub mean_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSetResult {
    pub index: usize,
    pub summary: ErrorSummary,
    pub fit: Option<SetFit>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub successful_fits: usize,
    pub failed_fits: usize,
    pub threshold_u: Band,
    pub exceedance_at_u: Band,
    pub exceedance_at_common_u: Band,
    pub mean_excess: Band,
    pub xstar_hat: Band,
    pub gamma_hat: Band,
}

impl Aggregates {
    pub fn from_sets(sets: &[TestSetResult]) -> Self {
        let fits: Vec<&SetFit> = sets.iter().filter_map(|s| s.fit.as_ref()).collect();
        let band = |f: &dyn Fn(&SetFit) -> f64| Band::from_values(&fits.iter().map(|s| f(s)).collect::<Vec<_>>());
        Self {
            successful_fits: fits.len(),
            failed_fits: sets.len() - fits.len(),
            threshold_u: band(&|s| s.fit.u),
            exceedance_at_u: band(&|s| s.exceedance_at_u),
            exceedance_at_common_u: band(&|s| s.exceedance_at_common_u),
            mean_excess: band(&|s| s.mean_excess),
            xstar_hat: band(&|s| s.fit.xstar_hat),
            gamma_hat: band(&|s| s.fit.gamma_hat),
        }
    }
}

/// Empirical reference values from all test errors pooled together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledReference {
    pub n: usize,
    pub summary: ErrorSummary,
    /// `ū`, the median of the per-set thresholds.
    pub common_u: f64,
    pub exceedance_at_common_u: f64,
    /// Average of pooled `P(E > u_s)` over the sets' own thresholds.
    pub exceedance_at_set_u: f64,
    /// Pooled `E[E - ū | E > ū]`.
    pub mean_excess_at_common_u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub spot: f64,
    pub training: TrainReport,
    pub test_sets: Vec<TestSetResult>,
    pub aggregates: Aggregates,
    pub pooled: PooledReference,
    pub figure: Vec<FigureRow>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_values() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(mean_std(&[]).0.is_nan());
    }

    #[test]
    fn band_edges() {
        let b = Band::from_values(&[1.0, 3.0]);
        let s = 2f64.sqrt();
        assert_eq!(b.count, 2);
        assert!((b.two_sigma[1] - (2.0 + 2.0 * s)).abs() < 1e-15);
        assert!((b.one_sigma[0] - (2.0 - s)).abs() < 1e-15);
    }
}
