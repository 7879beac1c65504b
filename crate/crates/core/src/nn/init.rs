use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::{Activation, DenseLayer, NetSpec, Network};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitScheme {
    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    Glorot,
    /// Glorot for hidden layers, Gaussian output weights with the given std.
    GlorotWithHighVarianceOutput { output_std: f64 },
}

impl InitScheme {
    pub fn validate(&self) -> Result<()> {
        if let InitScheme::GlorotWithHighVarianceOutput { output_std } = *self {
            if !(output_std.is_finite() && output_std > 0.0) {
                return Err(Error::param(format!("output_std must be positive, got {output_std}")));
            }
        }
        Ok(())
    }
}

pub(crate) fn glorot_layer<R: Rng>(fan_in: usize, fan_out: usize, activation: Activation, rng: &mut R) -> DenseLayer {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
    let mut layer = DenseLayer::zeros(fan_in, fan_out, activation);
    layer.weights.iter_mut().for_each(|w| *w = dist.sample(rng));
    layer
}

impl Network {
    /// Builds and initializes a network; identical `(spec, scheme, seed)` give
    /// bit-identical parameters.
    pub fn init(spec: &NetSpec, scheme: InitScheme, seed: u64) -> Result<Self> {
        spec.validate()?;
        scheme.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let widths = spec.widths();
        let n = widths.len() - 1;
        let mut layers = Vec::with_capacity(n);
        for (i, w) in widths.windows(2).enumerate() {
            let is_output = i + 1 == n;
            let activation = if is_output { Activation::Identity } else { spec.hidden_activation };
            let layer = match scheme {
                InitScheme::GlorotWithHighVarianceOutput { output_std } if is_output => {
                    let normal = Normal::new(0.0, output_std).expect("validated std");
                    let mut layer = DenseLayer::zeros(w[0], w[1], activation);
                    layer.weights.iter_mut().for_each(|v| *v = normal.sample(&mut rng));
                    layer
                }
                _ => glorot_layer(w[0], w[1], activation, &mut rng),
            };
            layers.push(layer);
        }
        let mut net = Network::from_layers(layers, spec.head.clone(), spec.num_classes)?;
        net.hidden_activation = spec.hidden_activation;
        Ok(net)
    }
}
