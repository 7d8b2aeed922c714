//! Exceedance-curve table: per-test-set EVT estimates averaged pointwise,
//! the pooled empirical curve, and Markov bounds from pooled moments.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::{mean_std, ExperimentReport};
use crate::error::{Error, Result};
use crate::tail::{exceedance_probability, markov_from_moment, ErrorSample, TailFit};

pub const FIGURE_HEADER: &str = "x,evt_mean,evt_lo,evt_hi,empirical,markov_m2,markov_m4";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub x: f64,
    pub evt_mean: f64,
    pub evt_lo: f64,
    pub evt_hi: f64,
    pub empirical: f64,
    pub markov_m2: f64,
    pub markov_m4: f64,
}

/// Fraction of `all_errors` strictly above `x`.
pub fn pooled_empirical_sf(all_errors: &ErrorSample, x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::invalid("x", x, "must be nonnegative"));
    }
    let v = all_errors.values();
    let at_or_below = v.partition_point(|&e| e <= x);
    Ok((v.len() - at_or_below) as f64 / v.len() as f64)
}

/// One test set's estimate of `P(E > x)`: the fitted tail at or above its own
/// threshold, the set's empirical frequency below it.
pub fn set_exceedance(fit: &TailFit, sample: &ErrorSample, x: f64) -> Result<f64> {
    if x >= fit.u {
        exceedance_probability(fit, x)
    } else {
        pooled_empirical_sf(sample, x)
    }
}

/// `count` geometrically spaced levels from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid("grid", format!("[{lo}, {hi}]"), "need 0 < lo < hi"));
    }
    if count < 2 {
        return Err(Error::invalid("grid_points", count, "must be at least 2"));
    }
    let ratio = (hi / lo).ln();
    let last = (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo * (ratio * i as f64 / last).exp()
            }
        })
        .collect())
}

/// Builds the figure rows. `fits` pairs each successful test set's fit with
/// its error sample.
pub fn figure_rows(
    fits: &[(TailFit, &ErrorSample)],
    pooled: &ErrorSample,
    grid: &[f64],
) -> Result<Vec<FigureRow>> {
    if fits.is_empty() {
        return Err(Error::InsufficientData("no successful tail fits to average".into()));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("grid", "unsorted", "levels must be ascending"));
    }
    let m2 = crate::tail::empirical_moment(pooled, 2.0);
    let m4 = crate::tail::empirical_moment(pooled, 4.0);
    grid.iter()
        .map(|&x| {
            let per_set = fits
                .iter()
                .map(|(fit, sample)| set_exceedance(fit, sample, x))
                .collect::<Result<Vec<_>>>()?;
            let (mean, std) = mean_std(&per_set);
            Ok(FigureRow {
                x,
                evt_mean: mean,
                evt_lo: (mean - 2.0 * std).clamp(0.0, 1.0),
                evt_hi: (mean + 2.0 * std).clamp(0.0, 1.0),
                empirical: pooled_empirical_sf(pooled, x)?,
                markov_m2: markov_from_moment(m2, 2.0, x),
                markov_m4: markov_from_moment(m4, 4.0, x),
            })
        })
        .collect()
}

pub fn write_figure_csv<W: Write>(rows: &[FigureRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{FIGURE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.x, r.evt_mean, r.evt_lo, r.evt_hi, r.empirical, r.markov_m2, r.markov_m4
        )?;
    }
    w.flush()
}

/// Writes `figure1.csv` into `dir`.
pub fn emit_figure_csv(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<()> {
    let path = dir.as_ref().join("figure1.csv");
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_figure_csv(&report.figure, std::io::BufWriter::new(file)).map_err(|e| Error::io(&path, e))
}
