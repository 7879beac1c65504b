use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::Network;
use crate::error::{Error, Result};

/// Activations recorded during a forward pass: `activations[0]` is the input,
/// `activations[l + 1]` the output of layer `l` (raw logits for the last one).
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub activations: Vec<Array2<f64>>,
    /// Head output (probabilities).
    pub output: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// One gradient per parameter tensor, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: Array2::zeros(l.weights.dim()),
                    bias: Array1::zeros(l.bias.dim()),
                })
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|g| g.weights.iter().chain(g.bias.iter()))
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|g| g.weights.iter().chain(g.bias.iter()))
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

impl Network {
    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<ForwardCache> {
        let logits_check = x.ncols() == self.input_dim();
        if !logits_check {
            return Err(Error::Dimension {
                layer: 0,
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_owned());
        for layer in &self.layers {
            let next = layer.forward(activations.last().expect("non-empty").view());
            activations.push(next);
        }
        let logits = activations.last().expect("non-empty").clone();
        let output = self.head_activation(logits);
        Ok(ForwardCache { activations, output })
    }

    /// Gradient of the mean head loss toward `target`, plus the loss itself.
    ///
    /// For every head the loss is matched to the output nonlinearity, so the
    /// gradient at the logits is `(output - target) / B`.
    pub fn backward(&self, x: ArrayView2<f64>, target: ArrayView2<f64>) -> Result<(Gradients, f64)> {
        let cache = self.forward_cached(x)?;
        let loss = self.loss_from_output(cache.output.view(), target)?;
        let delta = self.output_delta(&cache, target)?;
        let (grads, _) = self.backward_from_delta(&cache, delta, true, false)?;
        Ok((grads.expect("requested"), loss))
    }

    /// `dL/dlogits` for the head-matched loss, averaged over the batch.
    pub fn output_delta(&self, cache: &ForwardCache, target: ArrayView2<f64>) -> Result<Array2<f64>> {
        if cache.output.dim() != target.dim() {
            return Err(Error::Shape(format!(
                "output {:?} vs target {:?}",
                cache.output.dim(),
                target.dim()
            )));
        }
        let b = cache.output.nrows() as f64;
        Ok((&cache.output - &target) / b)
    }

    /// Gradient of the loss with respect to the network input, parameters untouched.
    pub fn input_gradient(&self, cache: &ForwardCache, delta: Array2<f64>) -> Result<Array2<f64>> {
        let (_, dx) = self.backward_from_delta(cache, delta, false, true)?;
        Ok(dx.expect("requested"))
    }

    /// Backpropagates a logit-level delta through the dense stack.
    pub fn backward_from_delta(
        &self,
        cache: &ForwardCache,
        mut delta: Array2<f64>,
        want_params: bool,
        want_input: bool,
    ) -> Result<(Option<Gradients>, Option<Array2<f64>>)> {
        let n = self.layers.len();
        let mut grads = want_params.then(|| Vec::with_capacity(n));
        let mut dx = None;
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            if l + 1 < n {
                layer.activation.backprop(&mut delta, &cache.activations[l + 1]);
            }
            if delta.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer: l });
            }
            if let Some(g) = grads.as_mut() {
                g.push(LayerGrad {
                    weights: cache.activations[l].t().dot(&delta),
                    bias: delta.sum_axis(Axis(0)),
                });
            }
            if l > 0 || want_input {
                let upstream = if delta.nrows() == 1 {
                    let d = delta.row(0);
                    layer.weights.rows().into_iter().map(|w| w.dot(&d)).collect::<Array1<f64>>().insert_axis(Axis(0))
                } else {
                    delta.dot(&layer.weights.t())
                };
                if l == 0 {
                    dx = Some(upstream);
                    break;
                }
                delta = upstream;
            }
        }
        let grads = grads.map(|mut g| {
            g.reverse();
            Gradients { layers: g }
        });
        Ok((grads, dx))
    }
}
