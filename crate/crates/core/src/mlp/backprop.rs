//! Mean-squared-error loss and its exact gradient by backpropagation.
//!
//! The loss is measured on the network's raw output scale,
//! `L = (1/B) Σ_b (φ_b - t_b)²` with `t_b = (price_b - offset) / scale`.
//! Every reduction runs over a fixed index order so gradients are bitwise
//! reproducible.

use super::{dot, LabeledSet, Layer, MlpModel, INPUT_DIM};
use crate::error::{Error, Result};

/// Normalized features and scaled targets, laid out row-major.
pub(crate) struct Batch {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
}

impl Batch {
    pub fn from_set(model: &MlpModel, set: &LabeledSet) -> Self {
        Batch {
            x: set.inputs.iter().flat_map(|c| model.features(c)).collect(),
            t: set
                .targets
                .iter()
                .map(|&p| model.target_scale.to_output(p))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }
}

/// Forward pass keeping every layer's post-activation values.
fn forward_cached(model: &MlpModel, x: &[f64], rows: usize) -> Vec<Vec<f64>> {
    let last = model.layers.len() - 1;
    let mut acts = Vec::with_capacity(model.layers.len() + 1);
    acts.push(x.to_vec());
    for (l, layer) in model.layers.iter().enumerate() {
        let input = &acts[l];
        let mut out = vec![0.0; rows * layer.rows];
        for b in 0..rows {
            let a = &input[b * layer.cols..(b + 1) * layer.cols];
            let z = &mut out[b * layer.rows..(b + 1) * layer.rows];
            for (o, zo) in z.iter_mut().enumerate() {
                let v = layer.biases[o] + dot(layer.row(o), a);
                *zo = if l == last { v } else { model.activation.apply(v) };
            }
        }
        acts.push(out);
    }
    acts
}

/// Loss and gradient on a prepared batch, restricted to the rows in `idx`.
pub(crate) fn loss_and_gradient(model: &MlpModel, data: &Batch, idx: &[usize]) -> (f64, Vec<Layer>) {
    let rows = idx.len();
    let mut x = Vec::with_capacity(rows * INPUT_DIM);
    for &i in idx {
        x.extend_from_slice(&data.x[i * INPUT_DIM..(i + 1) * INPUT_DIM]);
    }
    let acts = forward_cached(model, &x, rows);
    let out = &acts[acts.len() - 1];

    let scale = 2.0 / rows as f64;
    let mut loss = 0.0;
    let mut delta: Vec<f64> = idx
        .iter()
        .zip(out)
        .map(|(&i, &y)| {
            let r = y - data.t[i];
            loss += r * r;
            scale * r
        })
        .collect();
    loss /= rows as f64;

    let mut grads: Vec<Layer> = model
        .layers
        .iter()
        .map(|l| Layer::zeros(l.rows, l.cols))
        .collect();

    for l in (0..model.layers.len()).rev() {
        let layer = &model.layers[l];
        let input = &acts[l];
        let g = &mut grads[l];
        for b in 0..rows {
            let a = &input[b * layer.cols..(b + 1) * layer.cols];
            let d = &delta[b * layer.rows..(b + 1) * layer.rows];
            for (o, &dv) in d.iter().enumerate() {
                g.biases[o] += dv;
                let gw = &mut g.weights[o * layer.cols..(o + 1) * layer.cols];
                for (w, &av) in gw.iter_mut().zip(a) {
                    *w += dv * av;
                }
            }
        }
        if l == 0 {
            break;
        }
        // Back through the weights, then the ReLU of the previous layer.
        // A post-activation of zero means the unit was inactive.
        let mut prev = vec![0.0; rows * layer.cols];
        for b in 0..rows {
            let p = &mut prev[b * layer.cols..(b + 1) * layer.cols];
            let d = &delta[b * layer.rows..(b + 1) * layer.rows];
            for (o, &dv) in d.iter().enumerate() {
                for (pv, &w) in p.iter_mut().zip(layer.row(o)) {
                    *pv += dv * w;
                }
            }
            let a = &input[b * layer.cols..(b + 1) * layer.cols];
            for (pv, &av) in p.iter_mut().zip(a) {
                if av <= 0.0 {
                    *pv = 0.0;
                }
            }
        }
        delta = prev;
    }
    (loss, grads)
}

/// Exact gradient of the batch MSE with respect to every weight and bias,
/// shaped like `model.layers`.
pub fn gradient(model: &MlpModel, batch: &LabeledSet) -> Result<Vec<Layer>> {
    if batch.is_empty() {
        return Err(Error::InsufficientData("gradient of an empty batch".into()));
    }
    let data = Batch::from_set(model, batch);
    let idx: Vec<usize> = (0..data.len()).collect();
    Ok(loss_and_gradient(model, &data, &idx).1)
}

/// Batch MSE on the network's output scale.
pub fn batch_loss(model: &MlpModel, batch: &LabeledSet) -> f64 {
    let data = Batch::from_set(model, batch);
    let n = data.len();
    (0..n)
        .map(|i| {
            let r = model.forward_normalized(&data.x[i * INPUT_DIM..(i + 1) * INPUT_DIM]) - data.t[i];
            r * r
        })
        .sum::<f64>()
        / n as f64
}
