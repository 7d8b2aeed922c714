//! Tail quantification for the absolute error of a surrogate model.
//!
//! The error `E = |f(ω) - φ(ω)|` of a continuous surrogate on a compact domain
//! is bounded, so its exceedances over a high threshold follow a generalized
//! Pareto law with negative shape. [`tail`] estimates the upper endpoint and
//! the shape from the top order statistics and turns them into exceedance
//! probabilities and mean excesses. [`pricing`], [`mlp`] and [`experiment`]
//! reproduce an American put surrogate study end to end.

pub mod error;
pub mod experiment;
pub mod gpd;
pub mod mlp;
pub mod pricing;
pub mod rng;
pub mod tail;

pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport};
pub use gpd::{gpd_cdf, gpd_quantile, gpd_sample, gpd_sf, GpdParams};
pub use mlp::{forward, init_model, LabeledSet, MlpModel, TrainConfig};
pub use pricing::{bs_european_put, crr_american_put, sample_uniform, DomainBox, OptionContract, C_TEST, C_TRAIN};
pub use tail::{
    endpoint_estimate, exceedance_probability, exceeds_max_probability, markov_bound, mean_excess,
    shape_estimate_known_endpoint, summarize, tail_fit, ErrorSample, ErrorSummary, TailFit,
};
