//! Fully connected ReLU network used as the pricing surrogate.
//!
//! Inputs are min–max normalized with the training-domain bounds; the single
//! output is mapped back to USD through an affine [`TargetScale`].

mod adam;
mod backprop;
mod data;
mod train;

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pricing::{DomainBox, OptionContract, C_TRAIN};
use crate::rng::prng;
use crate::tail::ErrorSample;

pub use adam::{adam_step, AdamState};
pub use backprop::{batch_loss, gradient};
pub use data::LabeledSet;
pub use train::{train, EpochStats, TrainConfig, TrainReport};

pub const INPUT_DIM: usize = 5;
pub const DESK_WIDTHS: [usize; 5] = [5, 64, 64, 64, 1];
pub const PAPER_WIDTHS: [usize; 5] = [5, 300, 300, 300, 1];

const MODEL_FORMAT: &str = "evtail-mlp";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
        }
    }
}

/// Min–max map of each input coordinate onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub lower: [f64; INPUT_DIM],
    pub upper: [f64; INPUT_DIM],
}

impl Normalizer {
    pub fn from_domain(domain: &DomainBox) -> Self {
        Self {
            lower: domain.lower,
            upper: domain.upper,
        }
    }

    pub fn apply(&self, x: &[f64; INPUT_DIM]) -> [f64; INPUT_DIM] {
        std::array::from_fn(|i| (x[i] - self.lower[i]) / (self.upper[i] - self.lower[i]))
    }

    pub fn invert(&self, z: &[f64; INPUT_DIM]) -> [f64; INPUT_DIM] {
        std::array::from_fn(|i| self.lower[i] + z[i] * (self.upper[i] - self.lower[i]))
    }
}

/// `price = offset + scale · output`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub offset: f64,
    pub scale: f64,
}

impl TargetScale {
    /// Prices in the training domain stay below 160 USD.
    pub const USD: TargetScale = TargetScale {
        offset: 0.0,
        scale: 100.0,
    };

    pub fn to_price(&self, out: f64) -> f64 {
        self.offset + self.scale * out
    }

    pub fn to_output(&self, price: f64) -> f64 {
        (price - self.offset) / self.scale
    }
}

/// Dense layer with a `rows × cols` (fan-out × fan-in) row-major weight matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            biases: vec![0.0; rows],
        }
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.cols..(o + 1) * self.cols]
    }

    fn same_shape(&self, other: &Layer) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.weights.len() == other.weights.len()
            && self.biases.len() == other.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub normalizer: Normalizer,
    pub target_scale: TargetScale,
    pub layers: Vec<Layer>,
}

fn check_widths(widths: &[usize]) -> Result<()> {
    if widths.len() < 2 {
        return Err(Error::Shape(format!("need at least input and output widths, got {widths:?}")));
    }
    if widths[0] != INPUT_DIM || widths[widths.len() - 1] != 1 {
        return Err(Error::Shape(format!(
            "widths must start with {INPUT_DIM} and end with 1, got {widths:?}"
        )));
    }
    if widths.contains(&0) {
        return Err(Error::Shape(format!("zero-width layer in {widths:?}")));
    }
    Ok(())
}

/// Glorot-uniform weights, zero biases.
pub fn init_model(widths: &[usize], seed: u64) -> Result<MlpModel> {
    check_widths(widths)?;
    let mut rng = prng(seed);
    let layers = widths
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut layer = Layer::zeros(fan_out, fan_in);
            for x in &mut layer.weights {
                *x = rng.random_range(-limit..limit);
            }
            layer
        })
        .collect();
    Ok(MlpModel {
        widths: widths.to_vec(),
        activation: Activation::Relu,
        normalizer: Normalizer::from_domain(&C_TRAIN),
        target_scale: TargetScale::USD,
        layers,
    })
}

/// Four independent accumulators, combined in a fixed order.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl MlpModel {
    pub fn validate(&self) -> Result<()> {
        check_widths(&self.widths)?;
        if self.layers.len() != self.widths.len() - 1 {
            return Err(Error::Shape(format!(
                "{} layers for widths {:?}",
                self.layers.len(),
                self.widths
            )));
        }
        for (l, (layer, w)) in self.layers.iter().zip(self.widths.windows(2)).enumerate() {
            if layer.cols != w[0]
                || layer.rows != w[1]
                || layer.weights.len() != w[0] * w[1]
                || layer.biases.len() != w[1]
            {
                return Err(Error::Shape(format!(
                    "layer {l} is {}x{} with {} weights and {} biases, expected {}x{}",
                    layer.rows,
                    layer.cols,
                    layer.weights.len(),
                    layer.biases.len(),
                    w[1],
                    w[0]
                )));
            }
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub(crate) fn features(&self, c: &OptionContract) -> [f64; INPUT_DIM] {
        self.normalizer.apply(&c.to_array())
    }

    /// Raw network output on already-normalized features.
    pub fn forward_normalized(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            a = (0..layer.rows)
                .map(|o| {
                    let z = layer.biases[o] + dot(layer.row(o), &a);
                    if l == last {
                        z
                    } else {
                        self.activation.apply(z)
                    }
                })
                .collect();
        }
        a[0]
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let doc = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::parse(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { detail, .. } => Error::parse(path, detail),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelFile = serde_json::from_str(text).map_err(|e| Error::parse("<model>", e))?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::parse("<model>", format!("unknown format `{}`", doc.format)));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::parse(
                "<model>",
                format!("unsupported model version {} (expected {MODEL_VERSION})", doc.version),
            ));
        }
        doc.model.validate()?;
        Ok(doc.model)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    model: MlpModel,
}

/// Predicted price in USD.
pub fn forward(model: &MlpModel, contract: &OptionContract) -> f64 {
    let x = model.features(contract);
    model.target_scale.to_price(model.forward_normalized(&x))
}

pub fn predict(model: &MlpModel, contracts: &[OptionContract]) -> Vec<f64> {
    contracts.par_iter().map(|c| forward(model, c)).collect()
}

/// Sorted absolute errors `|f(ω) - φ(ω)|` over an oracle-priced set.
pub fn error_sample(model: &MlpModel, oracle: &LabeledSet) -> Result<ErrorSample> {
    let preds = predict(model, &oracle.inputs);
    ErrorSample::new(
        oracle
            .targets
            .iter()
            .zip(preds)
            .map(|(t, p)| (t - p).abs())
            .collect(),
    )
}
