//! Generalized Pareto distribution `H(x) = 1 - (1 + γx/σ)^(-1/γ)` on `x ≥ 0`.
//!
//! Powers are evaluated as `exp(-(1/γ)·ln_1p(γx/σ))` so that small `γx/σ`
//! keeps full precision; `|γ| < 1e-12` switches to the exponential limit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::prng;

/// Below this `|γ|` the exponential limit is used.
const GAMMA_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    gamma: f64,
    sigma: f64,
}

impl GpdParams {
    pub fn new(gamma: f64, sigma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::invalid("gamma", gamma, "must be finite"));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid("sigma", sigma, "must be positive and finite"));
        }
        Ok(Self { gamma, sigma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Upper end of the support: `σ/(-γ)` for `γ < 0`, infinite otherwise.
    pub fn upper_endpoint(&self) -> f64 {
        if self.is_exponential() || self.gamma > 0.0 {
            f64::INFINITY
        } else {
            self.sigma / -self.gamma
        }
    }

    fn is_exponential(&self) -> bool {
        self.gamma.abs() < GAMMA_ZERO
    }

    /// `ln(1 - H(x))`, `-∞` at or beyond the upper endpoint.
    fn log_sf(&self, x: f64) -> f64 {
        if self.is_exponential() {
            return -x / self.sigma;
        }
        if x >= self.upper_endpoint() {
            return f64::NEG_INFINITY;
        }
        let t = self.gamma * x / self.sigma;
        if t <= -1.0 {
            return f64::NEG_INFINITY;
        }
        -t.ln_1p() / self.gamma
    }
}

fn check_level(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::invalid("x", x, "must be nonnegative"));
    }
    Ok(())
}

pub fn gpd_cdf(params: &GpdParams, x: f64) -> Result<f64> {
    check_level(x)?;
    Ok(-params.log_sf(x).exp_m1())
}

/// Survival function `1 - H(x)`.
pub fn gpd_sf(params: &GpdParams, x: f64) -> Result<f64> {
    check_level(x)?;
    Ok(params.log_sf(x).exp())
}

pub fn gpd_quantile(params: &GpdParams, p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid("p", p, "must lie in [0, 1)"));
    }
    // ln(1 - p)
    let log_q = (-p).ln_1p();
    if params.is_exponential() {
        return Ok(-params.sigma * log_q);
    }
    let x = params.sigma / params.gamma * (-params.gamma * log_q).exp_m1();
    // Rounding can push the result a hair past the endpoint.
    Ok(x.clamp(0.0, params.upper_endpoint()))
}

/// Inverse-transform draws from a seeded [`crate::rng::Prng`] stream.
pub fn gpd_sample(params: &GpdParams, count: usize, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::invalid("count", count, "must be at least 1"));
    }
    let mut rng = prng(seed);
    (0..count)
        .map(|_| gpd_quantile(params, rng.random::<f64>()))
        .collect()
}
