//! End-to-end reproduction of the surrogate error study.
//!
//! Stages, each seeded from `master_seed` and a fixed label:
//! 1. sample `M` training contracts and price them on the tree,
//! 2. train the surrogate,
//! 3. per test set: sample and price `N` contracts, collect the absolute
//!    errors, fit the tail with `k`,
//! 4. pool all test errors as the empirical reference,
//! 5. write `config.toml`, `report.json`, `figure1.csv`, `training.csv` and
//!    `model.json` to `output_dir`.

mod config;
mod figure;
mod report;

use std::io::Write;
use std::path::Path;

pub use config::{k_for, ExperimentConfig, ALT_K_RATE, CONFIG_VERSION, DEFAULT_K_RATE};
pub use figure::{
    emit_figure_csv, figure_rows, geometric_grid, pooled_empirical_sf, set_exceedance, write_figure_csv,
    FigureRow, FIGURE_HEADER,
};
pub use report::{mean_std, Aggregates, Band, ExperimentReport, PooledReference, SetFit, TestSetResult};

use crate::error::{Error, Result};
use crate::mlp::{error_sample, train, LabeledSet, MlpModel};
use crate::pricing::{check_domain_arbitrage, price_all, sample_uniform, C_TEST, C_TRAIN, SPOT_REF};
use crate::rng::derive_seed;
use crate::tail::{exceedance_probability, mean_excess, summarize, tail_fit, ErrorSample};

/// Samples `count` contracts from `domain` and prices them on the tree.
pub fn priced_set(
    domain: &crate::pricing::DomainBox,
    count: usize,
    seed: u64,
    tree_steps: usize,
) -> Result<LabeledSet> {
    let inputs = sample_uniform(domain, count, seed)?;
    let targets = price_all(&inputs, SPOT_REF, tree_steps)?;
    LabeledSet::new(inputs, targets)
}

pub fn test_set_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, "test-contracts", index as u64)
}

pub fn train_set_seed(master_seed: u64) -> u64 {
    derive_seed(master_seed, "train-contracts", 0)
}

/// Runs the experiment and writes every artifact into `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with_progress(config, |_| {})
}

pub fn run_experiment_with_progress(
    config: &ExperimentConfig,
    progress: impl Fn(&str),
) -> Result<ExperimentReport> {
    config.validate()?;
    check_domain_arbitrage(&C_TRAIN, config.tree_steps)?;
    check_domain_arbitrage(&C_TEST, config.tree_steps)?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_file(&out.join("config.toml"), config.to_toml().as_bytes())?;

    progress(&format!("pricing {} training contracts", config.train_samples));
    let train_data = priced_set(
        &C_TRAIN,
        config.train_samples,
        train_set_seed(config.master_seed),
        config.tree_steps,
    )?;
    progress(&format!("training {:?} network", config.widths));
    let (model, training) = train(&train_data, &config.widths, &config.train_config())?;
    drop(train_data);

    let mut samples = Vec::with_capacity(config.test_sets);
    for s in 0..config.test_sets {
        progress(&format!("test set {}/{}", s + 1, config.test_sets));
        let set = priced_set(
            &C_TEST,
            config.test_set_size,
            test_set_seed(config.master_seed, s),
            config.tree_steps,
        )?;
        samples.push(error_sample(&model, &set)?);
    }

    let report = analyze(config, training, &samples)?;
    write_outputs(&report, &model, out)?;
    Ok(report)
}

/// Fits every test set and assembles the report from the error samples.
pub fn analyze(
    config: &ExperimentConfig,
    training: crate::mlp::TrainReport,
    samples: &[ErrorSample],
) -> Result<ExperimentReport> {
    let fits: Vec<Result<crate::tail::TailFit>> = samples.iter().map(|s| tail_fit(s, config.k)).collect();
    let mut thresholds: Vec<f64> = fits.iter().filter_map(|f| f.as_ref().ok().map(|f| f.u)).collect();
    if thresholds.is_empty() {
        return Err(Error::DegenerateSample("every test set failed to fit".into()));
    }
    thresholds.sort_by(f64::total_cmp);
    let common_u = median(&thresholds);

    let mut test_sets = Vec::with_capacity(samples.len());
    for (index, (sample, fit)) in samples.iter().zip(&fits).enumerate() {
        let (fit, failure) = match fit {
            Ok(fit) => (
                Some(SetFit {
                    fit: *fit,
                    exceedance_at_u: exceedance_probability(fit, fit.u)?,
                    exceedance_at_common_u: set_exceedance(fit, sample, common_u)?,
                    mean_excess: mean_excess(fit),
                }),
                None,
            ),
            Err(e) => (None, Some(e.to_string())),
        };
        test_sets.push(TestSetResult {
            index,
            summary: summarize(sample),
            fit,
            failure,
        });
    }

    let pooled = ErrorSample::new(samples.iter().flat_map(|s| s.values().iter().copied()).collect())?;
    let set_u_sf: Vec<f64> = thresholds
        .iter()
        .map(|&u| pooled_empirical_sf(&pooled, u))
        .collect::<Result<_>>()?;
    let pooled_ref = PooledReference {
        n: pooled.len(),
        summary: summarize(&pooled),
        common_u,
        exceedance_at_common_u: pooled_empirical_sf(&pooled, common_u)?,
        exceedance_at_set_u: set_u_sf.iter().sum::<f64>() / set_u_sf.len() as f64,
        mean_excess_at_common_u: empirical_mean_excess(&pooled, common_u),
    };

    let ok: Vec<_> = fits
        .iter()
        .zip(samples)
        .filter_map(|(f, s)| f.as_ref().ok().map(|f| (*f, s)))
        .collect();
    let top = pooled.max();
    let grid = if top > common_u {
        geometric_grid(common_u, top, config.grid_points)?
    } else {
        vec![common_u]
    };
    let figure = figure_rows(&ok, &pooled, &grid)?;

    Ok(ExperimentReport {
        config: config.clone(),
        spot: SPOT_REF,
        training,
        aggregates: Aggregates::from_sets(&test_sets),
        test_sets,
        pooled: pooled_ref,
        figure,
    })
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Mean of `e - u` over the errors strictly above `u`; zero if there are none.
pub fn empirical_mean_excess(sample: &ErrorSample, u: f64) -> f64 {
    let v = sample.values();
    let above = &v[v.partition_point(|&e| e <= u)..];
    if above.is_empty() {
        return 0.0;
    }
    above.iter().map(|e| e - u).sum::<f64>() / above.len() as f64
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn write_outputs(report: &ExperimentReport, model: &MlpModel, out: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::parse(out.join("report.json"), e))?;
    write_file(&out.join("report.json"), json.as_bytes())?;
    emit_figure_csv(report, out)?;

    let mut training = String::from("epoch,train_mse,validation_mse\n");
    for e in &report.training.epochs {
        training.push_str(&format!("{},{},{}\n", e.epoch, e.train_mse, e.validation_mse));
    }
    write_file(&out.join("training.csv"), training.as_bytes())?;
    model.save(out.join("model.json"))
}

/// Reads a report written by [`run_experiment`].
pub fn load_report(path: impl AsRef<Path>) -> Result<ExperimentReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}
