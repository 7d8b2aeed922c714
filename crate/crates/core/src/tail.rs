//! Peaks-over-threshold estimation for bounded error distributions.
//!
//! Order statistics are written 1-based in the docs, `ε_(1) ≤ … ≤ ε_(N)`, and
//! stored 0-based, so `ε_(N-j)` lives at `values[n - 1 - j]`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute errors sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSample {
    values: Vec<f64>,
}

impl ErrorSample {
    /// Sorts `values`. Rejects empty input and negative or non-finite entries.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("error sample is empty".into()));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::invalid(
                "error",
                format!("{v} (entry {i})"),
                "errors must be finite and nonnegative",
            ));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `ε_(N-j)`, the `j`-th value counted down from the maximum (`j = 0` is the max).
    pub fn upper(&self, j: usize) -> f64 {
        self.values[self.values.len() - 1 - j]
    }

    /// Reads a one-column CSV with header `error`.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file).map_err(|e| match e {
            Error::Parse { detail, .. } => Error::parse(path, detail),
            other => other,
        })
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::parse("<csv>", e))?;
        if headers.len() != 1 || &headers[0] != "error" {
            return Err(Error::parse(
                "<csv>",
                format!("expected header `error`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            ));
        }
        let mut values = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::parse("<csv>", e))?;
            let field = rec.get(0).unwrap_or("");
            let v: f64 = field
                .parse()
                .map_err(|_| Error::parse("<csv>", format!("row {}: `{field}` is not a number", row + 2)))?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::parse("<csv>", format!("row {}: error {v} is negative", row + 2)));
            }
            values.push(v);
        }
        Self::new(values)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::io("<csv>", e.into());
        w.write_record(["error"]).map_err(io)?;
        for v in &self.values {
            w.write_record([v.to_string()]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    /// `E₁`
    pub mean_abs: f64,
    /// `E₂`
    pub mean_sq: f64,
    /// `E∞`
    pub max_err: f64,
}

pub fn summarize(sample: &ErrorSample) -> ErrorSummary {
    let n = sample.len() as f64;
    let (s1, s2) = sample
        .values()
        .iter()
        .fold((0.0, 0.0), |(a, b), &e| (a + e, b + e * e));
    ErrorSummary {
        mean_abs: s1 / n,
        mean_sq: s2 / n,
        max_err: sample.max(),
    }
}

/// Probability that one more independent draw from a continuous law exceeds
/// the maximum of `n` earlier draws: `1/(n+1)`.
pub fn exceeds_max_probability(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", n, "must be at least 1"));
    }
    Ok(1.0 / (n as f64 + 1.0))
}

/// Plug-in Markov bound `min(1, mean(ε^m) / x^m)` on `P(E > x)`.
pub fn markov_bound(sample: &ErrorSample, m: f64, x: f64) -> Result<f64> {
    if !(m.is_finite() && m >= 0.0) {
        return Err(Error::invalid("m", m, "moment order must be nonnegative"));
    }
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::invalid("x", x, "level must be positive"));
    }
    Ok(markov_from_moment(empirical_moment(sample, m), m, x))
}

/// `mean(ε^m)`, with `0^0 = 1`.
pub fn empirical_moment(sample: &ErrorSample, m: f64) -> f64 {
    let s: f64 = sample.values().iter().map(|&e| e.powf(m)).sum();
    s / sample.len() as f64
}

pub(crate) fn markov_from_moment(moment: f64, m: f64, x: f64) -> f64 {
    (moment / x.powf(m)).min(1.0)
}

/// Weight `ln(1 + 1/(k+i)) / ln 2` of `ε_(N-k-i)` in the endpoint estimator.
/// The `k` weights telescope to exactly one.
pub fn endpoint_weight(k: usize, i: usize) -> f64 {
    (1.0 / (k + i) as f64).ln_1p() / std::f64::consts::LN_2
}

/// Right-endpoint estimator
/// `ε_(N) + ε_(N-k) - Σ_{i<k} ln(1 + 1/(k+i))/ln 2 · ε_(N-k-i)`.
///
/// Uses the top `2k` order statistics, so `2k ≤ N` is required.
pub fn endpoint_estimate(sample: &ErrorSample, k: usize) -> Result<f64> {
    let n = sample.len();
    if k == 0 {
        return Err(Error::invalid("k", k, "must be at least 1"));
    }
    if 2 * k > n {
        return Err(Error::InsufficientData(format!(
            "endpoint estimate with k = {k} needs at least {} errors, have {n}",
            2 * k
        )));
    }
    let weighted: f64 = (0..k)
        .map(|i| endpoint_weight(k, i) * sample.upper(k + i))
        .sum();
    Ok(sample.max() + sample.upper(k) - weighted)
}

/// Shape estimator for a known upper endpoint `xstar`:
/// `(1/k) Σ_{j<k} ln(1 - (ε_(N-j) - ε_(N-k)) / (xstar - ε_(N-k)))`.
///
/// Nonpositive for every valid input; zero only when the top `k` values all
/// equal `ε_(N-k)`.
pub fn shape_estimate_known_endpoint(sample: &ErrorSample, k: usize, xstar: f64) -> Result<f64> {
    let n = sample.len();
    if k == 0 {
        return Err(Error::invalid("k", k, "must be at least 1"));
    }
    if k >= n {
        return Err(Error::InsufficientData(format!(
            "shape estimate with k = {k} needs more than k errors, have {n}"
        )));
    }
    if !(xstar > sample.max()) {
        return Err(Error::DegenerateSample(format!(
            "endpoint {xstar} does not exceed the sample maximum {}",
            sample.max()
        )));
    }
    let u = sample.upper(k);
    let span = xstar - u;
    let s: f64 = (0..k).map(|j| (-(sample.upper(j) - u) / span).ln_1p()).sum();
    Ok(s / k as f64)
}

/// Fitted tail above the threshold `u = ε_(N-k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub n: usize,
    pub k: usize,
    pub u: f64,
    pub xstar_hat: f64,
    pub gamma_hat: f64,
    /// `σ(u) = -γ̂ (x̂* - u)`
    pub sigma_u: f64,
}

impl TailFit {
    /// Empirical exceedance rate at the threshold, `k/N`.
    pub fn threshold_rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("fit fields are all TOML-representable")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let fit: TailFit = toml::from_str(text).map_err(|e| Error::parse("<fit>", e))?;
        fit.validate()?;
        Ok(fit)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k >= 1 && self.k < self.n) {
            return Err(Error::invalid("k", self.k, "must satisfy 1 <= k < n"));
        }
        if !(self.gamma_hat < 0.0) {
            return Err(Error::invalid("gamma_hat", self.gamma_hat, "must be negative"));
        }
        if !(self.xstar_hat > self.u) {
            return Err(Error::invalid("xstar_hat", self.xstar_hat, "must exceed the threshold u"));
        }
        Ok(())
    }
}

/// Fits the tail with the endpoint estimate plugged into the shape estimator.
pub fn tail_fit(sample: &ErrorSample, k: usize) -> Result<TailFit> {
    let xstar_hat = endpoint_estimate(sample, k)?;
    if !(xstar_hat > sample.max()) {
        return Err(Error::DegenerateSample(format!(
            "tied order statistics: endpoint estimate {xstar_hat} equals the maximum (k = {k})"
        )));
    }
    let gamma_hat = shape_estimate_known_endpoint(sample, k, xstar_hat)?;
    if !(gamma_hat < 0.0) {
        return Err(Error::DegenerateSample(format!(
            "top {k} errors all equal the threshold {}",
            sample.upper(k)
        )));
    }
    let u = sample.upper(k);
    Ok(TailFit {
        n: sample.len(),
        k,
        u,
        xstar_hat,
        gamma_hat,
        sigma_u: -gamma_hat * (xstar_hat - u),
    })
}

/// `P(E > x) ≈ (k/N) (1 - (x-u)/(x̂*-u))^(-1/γ̂)` for `u ≤ x < x̂*`, zero beyond `x̂*`.
pub fn exceedance_probability(fit: &TailFit, x: f64) -> Result<f64> {
    if x.is_nan() || x < fit.u {
        return Err(Error::invalid("x", x, "must not lie below the threshold u"));
    }
    if x >= fit.xstar_hat {
        return Ok(0.0);
    }
    let ratio = 1.0 - (x - fit.u) / (fit.xstar_hat - fit.u);
    Ok(fit.threshold_rate() * ratio.powf(-1.0 / fit.gamma_hat))
}

/// `E[E - u | E > u] ≈ (x̂* - u) / (1 - 1/γ̂)`.
pub fn mean_excess(fit: &TailFit) -> f64 {
    (fit.xstar_hat - fit.u) / (1.0 - 1.0 / fit.gamma_hat)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(v: &[f64]) -> ErrorSample {
        ErrorSample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn construction_sorts_and_validates() {
        let s = sample(&[3.0, 1.0, 2.0]);
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.upper(0), 3.0);
        assert!(ErrorSample::new(vec![]).is_err());
        assert!(ErrorSample::new(vec![1.0, -0.1]).is_err());
        assert!(ErrorSample::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn summaries() {
        let z = summarize(&sample(&[0.0, 0.0, 0.0]));
        assert_eq!((z.mean_abs, z.mean_sq, z.max_err), (0.0, 0.0, 0.0));
        let c = summarize(&sample(&[0.7]));
        assert_eq!((c.mean_abs, c.mean_sq, c.max_err), (0.7, 0.7 * 0.7, 0.7));
        let s = summarize(&sample(&[1.0, 2.0, 3.0]));
        assert_eq!(s.mean_abs, 2.0);
        assert!((s.mean_sq - 14.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.max_err, 3.0);
    }

    #[test]
    fn exceeds_max_formula() {
        assert_eq!(exceeds_max_probability(1).unwrap(), 0.5);
        assert!((exceeds_max_probability(99).unwrap() - 0.01).abs() < 1e-18);
        assert!(exceeds_max_probability(0).is_err());
    }

    #[test]
    fn markov_examples() {
        assert_eq!(markov_bound(&sample(&[1.0; 4]), 2.0, 2.0).unwrap(), 0.25);
        let s = sample(&[0.3, 0.5, 2.0]);
        assert_eq!(markov_bound(&s, 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(markov_bound(&s, 0.0, 5.0).unwrap(), 1.0);
        assert_eq!(markov_bound(&s, 1.0, 0.1).unwrap(), 1.0);
        assert!(markov_bound(&s, 2.0, 0.0).is_err());
        assert!(markov_bound(&s, -1.0, 1.0).is_err());
    }

    #[test]
    fn endpoint_of_constant_sample_is_the_constant() {
        let s = sample(&[2.5; 10]);
        for k in 1..=5 {
            assert!((endpoint_estimate(&s, k).unwrap() - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn endpoint_requires_two_k_values() {
        let s = sample(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(endpoint_estimate(&s, 2).is_ok());
        assert!(endpoint_estimate(&s, 3).is_err());
        assert!(endpoint_estimate(&s, 0).is_err());
    }

    #[test]
    fn hand_case() {
        let s = sample(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        // 8 - log2(6), evaluated independently
        assert!((endpoint_estimate(&s, 2).unwrap() - 5.415_037_499_278_844).abs() < 1e-12);
        // ln(2/9) / 2
        let g = shape_estimate_known_endpoint(&s, 2, 6.0).unwrap();
        assert!((g - -0.752_038_698_388_137_1).abs() < 1e-12);
    }

    #[test]
    fn shape_rejects_endpoint_at_or_below_max() {
        let s = sample(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(matches!(
            shape_estimate_known_endpoint(&s, 2, 5.0),
            Err(Error::DegenerateSample(_))
        ));
        assert!(shape_estimate_known_endpoint(&s, 5, 6.0).is_err());
    }

    #[test]
    fn flat_top_gives_zero_shape_and_fit_rejects() {
        let s = sample(&[1.0, 2.0, 3.0, 3.0, 3.0]);
        assert_eq!(shape_estimate_known_endpoint(&s, 2, 4.0).unwrap(), 0.0);
        assert!(matches!(tail_fit(&sample(&[4.0; 8]), 2), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn exceedance_formula() {
        let fit = TailFit {
            n: 10_000,
            k: 100,
            u: 1.0,
            xstar_hat: 2.0,
            gamma_hat: -0.5,
            sigma_u: 0.5,
        };
        assert_eq!(exceedance_probability(&fit, 1.0).unwrap(), 0.01);
        assert!((exceedance_probability(&fit, 1.5).unwrap() - 0.0025).abs() < 1e-15);
        assert_eq!(exceedance_probability(&fit, 2.0).unwrap(), 0.0);
        assert_eq!(exceedance_probability(&fit, 9.0).unwrap(), 0.0);
        assert!(exceedance_probability(&fit, 0.99).is_err());
    }

    #[test]
    fn mean_excess_formula() {
        let fit = TailFit {
            n: 10,
            k: 2,
            u: 1.0,
            xstar_hat: 2.0,
            gamma_hat: -1.0,
            sigma_u: 1.0,
        };
        assert_eq!(mean_excess(&fit), 0.5);
        let shrunk = TailFit { xstar_hat: 1.0 + 1e-300, ..fit };
        assert!(mean_excess(&shrunk) < 1e-299);
    }

    #[test]
    fn fit_toml_round_trip() {
        let fit = tail_fit(&sample(&[1.0, 2.0, 3.0, 4.0, 5.0]), 2).unwrap();
        let text = fit.to_toml();
        assert!(text.contains("u = 3.0"), "{text}");
        assert_eq!(TailFit::from_toml(&text).unwrap(), fit);
        let bad = text.replace("k = 2", "k = 0");
        assert!(TailFit::from_toml(&bad).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let s = sample(&[0.25, 1e-7, 3.5]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"error\n"));
        assert_eq!(ErrorSample::from_csv_reader(buf.as_slice()).unwrap(), s);
        assert!(ErrorSample::from_csv_reader("value\n1\n".as_bytes()).is_err());
        let err = ErrorSample::from_csv_reader("error\n1\nabc\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
        assert!(ErrorSample::from_csv_reader("error\n-1\n".as_bytes()).is_err());
    }
}
