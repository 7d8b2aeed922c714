use super::{Layer, MlpModel, TrainConfig};
use crate::error::{Error, Result};

/// First and second moment estimates, shaped like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Layer>,
    pub v: Vec<Layer>,
    pub step: u64,
}

impl AdamState {
    pub fn new(model: &MlpModel) -> Self {
        let zeros = || {
            model
                .layers
                .iter()
                .map(|l| Layer::zeros(l.rows, l.cols))
                .collect::<Vec<_>>()
        };
        Self {
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update of `model` in place.
pub fn adam_step(
    model: &mut MlpModel,
    state: &mut AdamState,
    grad: &[Layer],
    config: &TrainConfig,
) -> Result<()> {
    let shapes_match = grad.len() == model.layers.len()
        && state.m.len() == grad.len()
        && model
            .layers
            .iter()
            .zip(grad)
            .zip(&state.m)
            .all(|((p, g), m)| p.same_shape(g) && p.same_shape(m));
    if !shapes_match {
        return Err(Error::Shape("gradient and optimizer state do not match the model".into()));
    }
    state.step += 1;
    let (b1, b2) = (config.adam_beta1, config.adam_beta2);
    let t = state.step as i32;
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let lr = config.learning_rate;
    let eps = config.adam_epsilon;

    let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
        for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    };
    for (l, layer) in model.layers.iter_mut().enumerate() {
        let (m, v) = (&mut state.m[l], &mut state.v[l]);
        update(&mut layer.weights, &grad[l].weights, &mut m.weights, &mut v.weights);
        update(&mut layer.biases, &grad[l].biases, &mut m.biases, &mut v.biases);
    }
    Ok(())
}
