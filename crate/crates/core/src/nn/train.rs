use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Gradients, Network};
use crate::datasets::LabeledSet;
use crate::error::{Error, Result};

/// Plain mini-batch SGD: constant learning rate, no momentum, no decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::param(format!("learning_rate must be >= 0, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size must be >= 1"));
        }
        if self.max_epochs == 0 {
            return Err(Error::param("max_epochs must be >= 1"));
        }
        Ok(())
    }
}

/// `p <- p - learning_rate * g` for every parameter.
pub fn sgd_step(net: &mut Network, grads: &Gradients, learning_rate: f64) -> Result<()> {
    if grads.layers.len() != net.layers.len() {
        return Err(Error::Shape(format!(
            "{} gradient layers for {} network layers",
            grads.layers.len(),
            net.layers.len()
        )));
    }
    for (i, (layer, g)) in net.layers.iter().zip(&grads.layers).enumerate() {
        if layer.weights.dim() != g.weights.dim() || layer.bias.dim() != g.bias.dim() {
            return Err(Error::Shape(format!("gradient shape differs from layer {i}")));
        }
    }
    for (layer, g) in net.layers.iter_mut().zip(&grads.layers) {
        layer.weights.scaled_add(-learning_rate, &g.weights);
        layer.bias.scaled_add(-learning_rate, &g.bias);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions<'a> {
    /// Evaluated after every epoch when present.
    pub validation: Option<&'a LabeledSet>,
    /// Restore the parameters of the best-validation epoch at the end.
    pub keep_best: bool,
    /// Measure training accuracy after every epoch.
    pub track_train_accuracy: bool,
    /// Stop once training accuracy reaches this value (implies tracking).
    pub stop_at_train_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean minibatch loss over the epoch.
    pub train_loss: f64,
    pub train_accuracy: Option<f64>,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were kept when `keep_best` was set.
    pub best_epoch: Option<usize>,
}

/// Fraction of rows whose predicted class equals the label.
pub fn accuracy(net: &Network, inputs: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    if inputs.nrows() != labels.len() {
        return Err(Error::Shape(format!("{} inputs vs {} labels", inputs.nrows(), labels.len())));
    }
    if labels.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (chunk, ys) in inputs.axis_chunks_iter(Axis(0), 1024).zip(labels.chunks(1024)) {
        let pred = net.predict(chunk)?;
        correct += pred.iter().zip(ys).filter(|(p, y)| p == y).count();
    }
    Ok(correct as f64 / labels.len() as f64)
}

/// Trains `net` on `data` with shuffled mini-batch SGD.
///
/// Batch order is reshuffled every epoch from `cfg.seed`, so a given
/// `(net, data, cfg)` always yields the same parameter trajectory.
pub fn fit<F>(net: &mut Network, data: &LabeledSet, cfg: &SgdConfig, opts: FitOptions<'_>, mut on_epoch: F) -> Result<TrainHistory>
where
    F: FnMut(&EpochStats),
{
    cfg.validate()?;
    if data.num_classes() != net.num_classes() {
        return Err(Error::param(format!(
            "data has {} classes, network has {}",
            data.num_classes(),
            net.num_classes()
        )));
    }
    let targets = net.targets(data.labels())?;
    let inputs = data.inputs();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, Network)> = None;
    let track_train = opts.track_train_accuracy || opts.stop_at_train_accuracy.is_some();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let xb = inputs.select(Axis(0), chunk);
            let tb = targets.select(Axis(0), chunk);
            let (grads, loss) = net.backward(xb.view(), tb.view())?;
            sgd_step(net, &grads, cfg.learning_rate)?;
            loss_sum += loss;
            batches += 1;
        }
        let train_accuracy = if track_train {
            Some(accuracy(net, inputs, data.labels())?)
        } else {
            None
        };
        let validation_accuracy = match opts.validation {
            Some(v) => Some(accuracy(net, v.inputs(), v.labels())?),
            None => None,
        };
        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / batches as f64,
            train_accuracy,
            validation_accuracy,
        };
        on_epoch(&stats);
        if opts.keep_best {
            if let Some(acc) = validation_accuracy {
                if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                    best = Some((acc, net.clone()));
                    history.best_epoch = Some(epoch);
                }
            }
        }
        history.epochs.push(stats);
        if let (Some(goal), Some(acc)) = (opts.stop_at_train_accuracy, train_accuracy) {
            if acc >= goal {
                break;
            }
        }
    }
    if let Some((_, kept)) = best {
        *net = kept;
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, DenseLayer, Head, InitScheme, NetSpec};
    use ndarray::{array, Array2};

    #[test]
    fn zero_learning_rate_is_noop() {
        let spec = NetSpec::new(3, vec![4], 2, Head::Softmax);
        let mut net = Network::init(&spec, InitScheme::Glorot, 1).unwrap();
        let before = net.clone();
        let (g, _) = net.backward(array![[0.1, 0.2, 0.3]].view(), array![[1.0, 0.0]].view()).unwrap();
        sgd_step(&mut net, &g, 0.0).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn scalar_step() {
        let layer = DenseLayer {
            weights: array![[1.0]],
            bias: array![0.0],
            activation: Activation::Identity,
        };
        let mut net = Network::from_layers(vec![layer], Head::Softmax, 1).unwrap();
        let mut g = Gradients::zeros_like(&net);
        g.layers[0].weights[[0, 0]] = 2.0;
        sgd_step(&mut net, &g, 0.1).unwrap();
        assert!((net.layers()[0].weights[[0, 0]] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn mismatched_gradients_rejected() {
        let spec = NetSpec::new(3, vec![4], 2, Head::Softmax);
        let mut net = Network::init(&spec, InitScheme::Glorot, 1).unwrap();
        let other = Network::init(&NetSpec::new(3, vec![5], 2, Head::Softmax), InitScheme::Glorot, 1).unwrap();
        assert!(sgd_step(&mut net, &Gradients::zeros_like(&other), 0.1).is_err());
    }

    #[test]
    fn separable_points_reach_low_loss() {
        let x: Array2<f64> = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let data = LabeledSet::new(x, vec![0, 0, 1, 1], 2).unwrap();
        let spec = NetSpec::new(2, vec![4], 2, Head::Softmax);
        let mut net = Network::init(&spec, InitScheme::Glorot, 5).unwrap();
        let cfg = SgdConfig {
            learning_rate: 0.5,
            batch_size: 4,
            max_epochs: 5000,
            seed: 5,
        };
        fit(&mut net, &data, &cfg, FitOptions::default(), |_| {}).unwrap();
        let loss = net.loss(data.inputs(), net.targets(data.labels()).unwrap().view()).unwrap();
        assert!(loss < 0.01, "loss {loss}");
    }
}
