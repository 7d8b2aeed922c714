//! Ground-truth pricer: American puts on a Cox–Ross–Rubinstein tree, a
//! Black–Scholes European put used as an independent check, and uniform
//! sampling over the contract domains.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::rng::prng;

/// Initial stock price in USD. Strikes are quoted as a fraction of it, so one
/// U.S. cent is `0.01` in price units.
pub const SPOT_REF: f64 = 100.0;

/// Tree depth used for the reference prices unless configured otherwise.
pub const DEFAULT_TREE_STEPS: usize = 1000;

/// A contract `(K, T, r, q, σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionContract {
    /// Strike as a fraction of the initial stock price.
    pub strike_pct: f64,
    pub maturity_months: f64,
    pub rate: f64,
    pub dividend_yield: f64,
    pub volatility: f64,
}

impl OptionContract {
    pub fn new(
        strike_pct: f64,
        maturity_months: f64,
        rate: f64,
        dividend_yield: f64,
        volatility: f64,
    ) -> Result<Self> {
        let c = Self {
            strike_pct,
            maturity_months,
            rate,
            dividend_yield,
            volatility,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            strike_pct: a[0],
            maturity_months: a[1],
            rate: a[2],
            dividend_yield: a[3],
            volatility: a[4],
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.strike_pct,
            self.maturity_months,
            self.rate,
            self.dividend_yield,
            self.volatility,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("contract", format!("{self:?}"), "all fields must be finite"));
        }
        if self.strike_pct <= 0.0 {
            return Err(Error::invalid("strike_pct", self.strike_pct, "must be positive"));
        }
        if self.maturity_months <= 0.0 {
            return Err(Error::invalid("maturity_months", self.maturity_months, "must be positive"));
        }
        if self.volatility <= 0.0 {
            return Err(Error::invalid("volatility", self.volatility, "must be positive"));
        }
        Ok(())
    }

    pub fn maturity_years(&self) -> f64 {
        self.maturity_months / 12.0
    }
}

/// Axis-aligned box over `(K, T, r, q, σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lower: [f64; 5],
    pub upper: [f64; 5],
}

/// Training domain.
pub const C_TRAIN: DomainBox = DomainBox {
    lower: [0.40, 11.0, 0.015, 0.00, 0.05],
    upper: [1.60, 12.0, 0.025, 0.05, 0.55],
};

/// Test domain, strictly inside [`C_TRAIN`] in strike and volatility.
pub const C_TEST: DomainBox = DomainBox {
    lower: [0.50, 11.0, 0.015, 0.00, 0.10],
    upper: [1.50, 12.0, 0.025, 0.05, 0.50],
};

impl DomainBox {
    pub fn new(lower: [f64; 5], upper: [f64; 5]) -> Result<Self> {
        for i in 0..5 {
            if !(lower[i] < upper[i]) {
                return Err(Error::invalid(
                    "domain",
                    format!("[{}, {}] on axis {i}", lower[i], upper[i]),
                    "lower bound must be below upper bound",
                ));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, c: &OptionContract) -> bool {
        c.to_array()
            .iter()
            .enumerate()
            .all(|(i, &v)| self.lower[i] <= v && v <= self.upper[i])
    }

    pub fn midpoint(&self) -> [f64; 5] {
        std::array::from_fn(|i| 0.5 * (self.lower[i] + self.upper[i]))
    }

    fn corners(&self) -> impl Iterator<Item = OptionContract> + '_ {
        (0..32u32).map(move |mask| {
            OptionContract::from_array(std::array::from_fn(|i| {
                if mask & (1 << i) == 0 {
                    self.lower[i]
                } else {
                    self.upper[i]
                }
            }))
        })
    }
}

/// CRR tree quantities for one contract.
struct Lattice {
    up: f64,
    p_up: f64,
    disc: f64,
}

fn lattice(contract: &OptionContract, steps: usize) -> Result<Lattice> {
    let dt = contract.maturity_years() / steps as f64;
    let up = (contract.volatility * dt.sqrt()).exp();
    let down = 1.0 / up;
    let growth = ((contract.rate - contract.dividend_yield) * dt).exp();
    let p_up = (growth - down) / (up - down);
    if !(0.0..=1.0).contains(&p_up) {
        return Err(Error::invalid(
            "contract",
            format!("{contract:?} with {steps} steps"),
            "risk-neutral probability outside [0, 1]",
        ));
    }
    Ok(Lattice {
        up,
        p_up,
        disc: (-contract.rate * dt).exp(),
    })
}

/// American put by backward induction on a CRR tree with `steps` levels.
/// The dollar strike is `strike_pct · spot`.
pub fn crr_american_put(contract: &OptionContract, spot: f64, steps: usize) -> Result<f64> {
    contract.validate()?;
    if !(spot.is_finite() && spot > 0.0) {
        return Err(Error::invalid("spot", spot, "must be positive"));
    }
    if steps == 0 {
        return Err(Error::invalid("steps", steps, "must be at least 1"));
    }
    let Lattice { up, p_up, disc } = lattice(contract, steps)?;
    let strike = contract.strike_pct * spot;
    let log_up = up.ln();

    // Node (i, j) sits at spot·up^(2j - i). Its exponent has the parity of
    // (steps - i) after shifting by `steps`, so splitting the price grid by
    // parity makes every level a contiguous slice.
    let n = steps;
    let level_price = |m: usize| spot * ((m as f64 - n as f64) * log_up).exp();
    let even: Vec<f64> = (0..=n).map(|a| level_price(2 * a)).collect();
    let odd: Vec<f64> = (0..n).map(|a| level_price(2 * a + 1)).collect();
    let prices_at = |i: usize| -> &[f64] {
        let shift = n - i;
        if shift % 2 == 0 {
            &even[shift / 2..shift / 2 + i + 1]
        } else {
            &odd[(shift - 1) / 2..(shift - 1) / 2 + i + 1]
        }
    };

    let mut cur: Vec<f64> = prices_at(n).iter().map(|s| (strike - s).max(0.0)).collect();
    let mut next = vec![0.0; n + 1];
    let (a, b) = (disc * p_up, disc * (1.0 - p_up));
    for i in (0..n).rev() {
        let s = prices_at(i);
        for (((out, &lo), &hi), &st) in next[..=i]
            .iter_mut()
            .zip(&cur[..=i])
            .zip(&cur[1..=i + 1])
            .zip(s)
        {
            *out = (strike - st).max(a * hi + b * lo);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur[0])
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Black–Scholes European put with continuous dividend yield.
pub fn bs_european_put(contract: &OptionContract, spot: f64) -> Result<f64> {
    contract.validate()?;
    if !(spot.is_finite() && spot > 0.0) {
        return Err(Error::invalid("spot", spot, "must be positive"));
    }
    let t = contract.maturity_years();
    let strike = contract.strike_pct * spot;
    let vol_t = contract.volatility * t.sqrt();
    let d1 = ((spot / strike).ln()
        + (contract.rate - contract.dividend_yield + 0.5 * contract.volatility.powi(2)) * t)
        / vol_t;
    let d2 = d1 - vol_t;
    let price = strike * (-contract.rate * t).exp() * norm_cdf(-d2)
        - spot * (-contract.dividend_yield * t).exp() * norm_cdf(-d1);
    Ok(price.max(0.0))
}

/// Checks every corner of `domain` for a valid risk-neutral probability at
/// `steps` levels. The probability is monotone in each coordinate, so corners
/// bound the whole box.
pub fn check_domain_arbitrage(domain: &DomainBox, steps: usize) -> Result<()> {
    if steps == 0 {
        return Err(Error::invalid("steps", steps, "must be at least 1"));
    }
    for c in domain.corners() {
        lattice(&c, steps)?;
    }
    Ok(())
}

/// `count` independent uniform contracts over `domain`.
pub fn sample_uniform(domain: &DomainBox, count: usize, seed: u64) -> Result<Vec<OptionContract>> {
    if count == 0 {
        return Err(Error::invalid("count", count, "must be at least 1"));
    }
    let mut rng = prng(seed);
    Ok((0..count)
        .map(|_| {
            OptionContract::from_array(std::array::from_fn(|i| {
                let u: f64 = rng.random();
                domain.lower[i] + (domain.upper[i] - domain.lower[i]) * u
            }))
        })
        .collect())
}

/// Prices every contract, in parallel, preserving input order.
pub fn price_all(contracts: &[OptionContract], spot: f64, steps: usize) -> Result<Vec<f64>> {
    contracts
        .par_iter()
        .map(|c| crr_american_put(c, spot, steps))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contract(k: f64, t: f64, r: f64, q: f64, s: f64) -> OptionContract {
        OptionContract::new(k, t, r, q, s).unwrap()
    }

    #[test]
    fn rejects_invalid_contracts() {
        assert!(OptionContract::new(0.0, 12.0, 0.02, 0.0, 0.2).is_err());
        assert!(OptionContract::new(1.0, 0.0, 0.02, 0.0, 0.2).is_err());
        assert!(OptionContract::new(1.0, 12.0, 0.02, 0.0, 0.0).is_err());
        assert!(OptionContract::new(1.0, 12.0, f64::NAN, 0.0, 0.2).is_err());
        let c = contract(1.0, 12.0, 0.02, 0.0, 0.2);
        assert!(crr_american_put(&c, 100.0, 0).is_err());
        assert!(crr_american_put(&c, -1.0, 10).is_err());
    }

    #[test]
    fn one_step_tree_by_hand() {
        let c = contract(1.0, 12.0, 0.05, 0.0, 0.2);
        let (up, down) = (0.2f64.exp(), (-0.2f64).exp());
        let p = (0.05f64.exp() - down) / (up - down);
        let cont = (-0.05f64).exp() * (1.0 - p) * (100.0 - 100.0 * down);
        let got = crr_american_put(&c, 100.0, 1).unwrap();
        assert!((got - cont.max(0.0)).abs() < 1e-12);
    }

    #[test]
    fn deep_in_the_money_is_at_least_intrinsic() {
        let c = contract(1.6, 12.0, 0.02, 0.0, 0.05);
        assert!(crr_american_put(&c, 100.0, 1000).unwrap() >= 60.0);
    }

    #[test]
    fn zero_rate_matches_european() {
        let c = contract(1.0, 12.0, 0.0, 0.0, 0.2);
        let tree = crr_american_put(&c, 100.0, 1000).unwrap();
        let bs = bs_european_put(&c, 100.0).unwrap();
        assert!((tree - bs).abs() < 0.02, "{tree} vs {bs}");
    }

    #[test]
    fn european_put_reference_value() {
        // K = S = 100, T = 1, r = 5%, q = 0, σ = 20%: textbook value 5.573526
        let c = contract(1.0, 12.0, 0.05, 0.0, 0.2);
        assert!((bs_european_put(&c, 100.0).unwrap() - 5.573_526_022).abs() < 1e-6);
    }

    #[test]
    fn european_approaches_discounted_strike_for_large_vol() {
        let c = contract(1.0, 12.0, 0.03, 0.0, 50.0);
        let p = bs_european_put(&c, 100.0).unwrap();
        let cap = 100.0 * (-0.03f64).exp();
        assert!(p <= cap && cap - p < 1e-6, "{p} vs {cap}");
    }

    #[test]
    fn domains_are_arbitrage_free() {
        check_domain_arbitrage(&C_TRAIN, 12).unwrap();
        check_domain_arbitrage(&C_TEST, 12).unwrap();
        let wild = DomainBox::new([1.0, 12.0, 0.5, 0.0, 0.01], [1.1, 12.1, 0.6, 0.01, 0.02]).unwrap();
        assert!(check_domain_arbitrage(&wild, 1).is_err());
    }

    #[test]
    fn sampler_is_deterministic_and_contained() {
        let a = sample_uniform(&C_TEST, 1000, 3).unwrap();
        assert_eq!(a, sample_uniform(&C_TEST, 1000, 3).unwrap());
        assert!(a.iter().all(|c| C_TEST.contains(c)));
        assert!(sample_uniform(&C_TEST, 0, 3).is_err());
        assert!(DomainBox::new([0.0; 5], [1.0, 1.0, 1.0, 0.0, 1.0]).is_err());
    }
}
