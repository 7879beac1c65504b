//! Dense feed-forward networks with a softmax, COOL, or independent-logistic head.
//!
//! Weights are stored `[fan_in, fan_out]` so a batch `X[B, fan_in]` maps to
//! `X W + b`. The last dense layer always produces raw logits; the head decides
//! the output nonlinearity and the matching loss.

mod backprop;
pub(crate) mod init;
mod loss;
mod serialize;
mod train;

pub use backprop::{ForwardCache, Gradients, LayerGrad};
pub use init::InitScheme;
pub use loss::{binary_cross_entropy, cross_entropy, logistic, softmax_rows, PROB_FLOOR};
pub use serialize::{load_network, read_network, save_network, write_network, FORMAT_VERSION};
pub use train::{accuracy, fit, sgd_step, EpochStats, FitOptions, SgdConfig, TrainHistory};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::cool::{self, AggregateConfig, AggregateOp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Logistic,
    Relu,
    Identity,
}

impl Activation {
    pub(crate) fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Logistic => z.mapv_inplace(logistic),
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Identity => {}
        }
    }

    /// Multiplies `grad` by the activation derivative, expressed through the
    /// activation output `a`.
    pub(crate) fn backprop(self, grad: &mut Array2<f64>, a: &Array2<f64>) {
        match self {
            Activation::Logistic => grad.zip_mut_with(a, |g, &y| *g *= y * (1.0 - y)),
            Activation::Relu => grad.zip_mut_with(a, |g, &y| {
                if y <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Identity => {}
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" | "sigmoid" => Ok(Activation::Logistic),
            "relu" => Ok(Activation::Relu),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::param(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(fan_in: usize, fan_out: usize, activation: Activation) -> Self {
        Self {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
            activation,
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = if x.nrows() == 1 {
            let mut acc = self.bias.clone();
            for (xi, w) in x.row(0).iter().zip(self.weights.rows()) {
                if *xi != 0.0 {
                    acc.scaled_add(*xi, &w);
                }
            }
            acc.insert_axis(Axis(0))
        } else {
            let mut z = x.dot(&self.weights);
            z += &self.bias;
            z
        };
        self.activation.apply(&mut z);
        z
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Output head of a classifier network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Head {
    /// One unit per class, softmax over all units.
    Softmax,
    /// `omega` softmax-coupled members per class.
    Cool(AggregateConfig),
    /// COOL layout and inference, but each member is an independent logistic unit.
    NoCompetition(AggregateConfig),
}

impl Head {
    pub fn width(&self, num_classes: usize) -> usize {
        match self {
            Head::Softmax => num_classes,
            Head::Cool(cfg) | Head::NoCompetition(cfg) => cfg.width(),
        }
    }

    pub fn aggregate(&self) -> Option<&AggregateConfig> {
        match self {
            Head::Softmax => None,
            Head::Cool(cfg) | Head::NoCompetition(cfg) => Some(cfg),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Head::Softmax => "softmax",
            Head::Cool(_) => "cool",
            Head::NoCompetition(_) => "no_competition",
        }
    }
}

/// A head described independently of the class count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HeadKind {
    Softmax,
    Cool { omega: usize, op: AggregateOp },
    NoCompetition { omega: usize },
}

impl HeadKind {
    /// The head for `num_classes` classes, with unit softness.
    pub fn build(&self, num_classes: usize) -> Result<Head> {
        Ok(match *self {
            HeadKind::Softmax => Head::Softmax,
            HeadKind::Cool { omega, op } => Head::Cool(AggregateConfig::new(omega, num_classes)?.with_op(op)),
            HeadKind::NoCompetition { omega } => Head::NoCompetition(AggregateConfig::new(omega, num_classes)?),
        })
    }
}

/// Architecture of a classifier: input width, hidden widths, and head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub num_classes: usize,
    pub head: Head,
}

impl NetSpec {
    pub fn new(input_dim: usize, hidden: Vec<usize>, num_classes: usize, head: Head) -> Self {
        Self {
            input_dim,
            hidden,
            hidden_activation: Activation::Logistic,
            num_classes,
            head,
        }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.hidden_activation = activation;
        self
    }

    pub fn output_width(&self) -> usize {
        self.head.width(self.num_classes)
    }

    /// Layer widths from input to output, e.g. `[2, 400, 300, 10]`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.input_dim);
        w.extend(&self.hidden);
        w.push(self.output_width());
        w
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 {
            return Err(Error::param("num_classes must be >= 1"));
        }
        if self.widths().contains(&0) {
            return Err(Error::param(format!("layer widths must be >= 1, got {:?}", self.widths())));
        }
        if let Some(cfg) = self.head.aggregate() {
            if cfg.num_classes() != self.num_classes {
                return Err(Error::param(format!(
                    "head covers {} classes but the network has {}",
                    cfg.num_classes(),
                    self.num_classes
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub(crate) layers: Vec<DenseLayer>,
    pub(crate) head: Head,
    pub(crate) num_classes: usize,
    pub(crate) hidden_activation: Activation,
}

impl Network {
    /// Assembles a network from explicit layers. The last layer must be
    /// `Identity` and have the head's width.
    pub fn from_layers(layers: Vec<DenseLayer>, head: Head, num_classes: usize) -> Result<Self> {
        let last = layers.last().ok_or_else(|| Error::param("a network needs at least one layer"))?;
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].fan_out() != pair[1].fan_in() {
                return Err(Error::Dimension {
                    layer: i + 1,
                    expected: pair[0].fan_out(),
                    got: pair[1].fan_in(),
                });
            }
        }
        if last.activation != Activation::Identity {
            return Err(Error::param("the output layer must produce raw logits (identity activation)"));
        }
        let width = head.width(num_classes);
        if last.fan_out() != width {
            return Err(Error::param(format!(
                "output layer has {} units but the {} head needs {width}",
                last.fan_out(),
                head.kind_name()
            )));
        }
        if let Some(cfg) = head.aggregate() {
            if cfg.num_classes() != num_classes {
                return Err(Error::param("head class count differs from the network's"));
            }
        }
        let hidden_activation = layers
            .first()
            .filter(|_| layers.len() > 1)
            .map_or(Activation::Logistic, |l| l.activation);
        Ok(Self {
            layers,
            head,
            num_classes,
            hidden_activation,
        })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn head(&self) -> &Head {
        &self.head
    }

    /// Replaces the head while keeping the weights; the output width must not change.
    pub fn set_head(&mut self, head: Head) -> Result<()> {
        if head.width(self.num_classes) != self.output_width() {
            return Err(Error::param("new head changes the output width"));
        }
        self.head = head;
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(DenseLayer::num_params).sum()
    }

    pub fn spec(&self) -> NetSpec {
        NetSpec {
            input_dim: self.input_dim(),
            hidden: self.layers[..self.layers.len() - 1].iter().map(DenseLayer::fan_out).collect(),
            hidden_activation: self.hidden_activation,
            num_classes: self.num_classes,
            head: self.head.clone(),
        }
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Dimension {
                layer: 0,
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    /// Raw output-layer logits.
    pub fn logits(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let mut a = self.layers[0].forward(x);
        for layer in &self.layers[1..] {
            a = layer.forward(a.view());
        }
        Ok(a)
    }

    /// Output-unit probabilities: row softmax for softmax/COOL heads, elementwise
    /// logistic for the no-competition head.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let z = self.logits(x)?;
        Ok(self.head_activation(z))
    }

    pub(crate) fn head_activation(&self, mut z: Array2<f64>) -> Array2<f64> {
        match self.head {
            Head::Softmax | Head::Cool(_) => softmax_rows(&mut z),
            Head::NoCompetition(_) => z.mapv_inplace(logistic),
        }
        z
    }

    /// Per-class scores `[B, k]`: softmax probabilities, or aggregate scores for
    /// the COOL-style heads.
    pub fn class_scores(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let p = self.forward(x)?;
        self.scores_from_output(p.view())
    }

    pub fn scores_from_output(&self, p: ArrayView2<f64>) -> Result<Array2<f64>> {
        match &self.head {
            Head::Softmax => Ok(p.to_owned()),
            Head::Cool(cfg) | Head::NoCompetition(cfg) => cool::infer_batch(p, cfg),
        }
    }

    /// Argmax class per row.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        let s = self.class_scores(x)?;
        Ok(s.axis_iter(Axis(0)).map(cool::predict_class).collect())
    }

    /// Training target for one class under this network's head.
    pub fn target_for(&self, class: usize) -> Result<Array1<f64>> {
        match &self.head {
            Head::Softmax => {
                if class >= self.num_classes {
                    return Err(Error::Index {
                        index: class,
                        bound: self.num_classes,
                    });
                }
                let mut t = Array1::zeros(self.num_classes);
                t[class] = 1.0;
                Ok(t)
            }
            Head::Cool(cfg) | Head::NoCompetition(cfg) => cool::encode_target(class, cfg),
        }
    }

    pub fn targets(&self, labels: &[usize]) -> Result<Array2<f64>> {
        let mut t = Array2::zeros((labels.len(), self.output_width()));
        for (mut row, &y) in t.axis_iter_mut(Axis(0)).zip(labels) {
            row.assign(&self.target_for(y)?);
        }
        Ok(t)
    }

    /// Mean batch loss matching the head: cross-entropy for softmax outputs,
    /// summed per-unit binary cross-entropy for independent logistic outputs.
    pub fn loss(&self, x: ArrayView2<f64>, target: ArrayView2<f64>) -> Result<f64> {
        let p = self.forward(x)?;
        self.loss_from_output(p.view(), target)
    }

    pub(crate) fn loss_from_output(&self, p: ArrayView2<f64>, target: ArrayView2<f64>) -> Result<f64> {
        match self.head {
            Head::Softmax | Head::Cool(_) => cross_entropy(p, target),
            Head::NoCompetition(_) => binary_cross_entropy(p, target),
        }
    }

    /// Order-sensitive FNV-1a digest of every parameter bit pattern.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for l in &self.layers {
            l.weights.iter().copied().for_each(&mut feed);
            l.bias.iter().copied().for_each(&mut feed);
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn identity_net() -> Network {
        let layer = DenseLayer {
            weights: array![[1.0, 0.0], [0.0, 1.0]],
            bias: array![0.0, 0.0],
            activation: Activation::Identity,
        };
        Network::from_layers(vec![layer], Head::Softmax, 2).unwrap()
    }

    #[test]
    fn zero_net_is_uniform() {
        let net = Network::from_layers(
            vec![DenseLayer::zeros(3, 5, Activation::Logistic), DenseLayer::zeros(5, 4, Activation::Identity)],
            Head::Softmax,
            4,
        )
        .unwrap();
        let out = net.forward(array![[0.3, -2.0, 9.0], [1.0, 1.0, 1.0]].view()).unwrap();
        assert!(out.iter().all(|&v| v == 0.25));
    }

    #[test]
    fn softmax_of_ln3() {
        let out = identity_net().forward(array![[3f64.ln(), 0.0]].view()).unwrap();
        assert!((out[[0, 0]] - 0.75).abs() < 1e-15);
        assert!((out[[0, 1]] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn wrong_width_names_layer() {
        let err = identity_net().forward(array![[1.0, 2.0, 3.0]].view()).unwrap_err();
        assert!(matches!(err, Error::Dimension { layer: 0, expected: 2, got: 3 }));
    }

    #[test]
    fn from_layers_checks_head_width() {
        let cfg = AggregateConfig::new(5, 2).unwrap();
        let layers = vec![DenseLayer::zeros(2, 8, Activation::Identity)];
        assert!(Network::from_layers(layers, Head::Cool(cfg), 2).is_err());
        let layers = vec![DenseLayer::zeros(2, 3, Activation::Logistic), DenseLayer::zeros(4, 2, Activation::Identity)];
        assert!(matches!(Network::from_layers(layers, Head::Softmax, 2), Err(Error::Dimension { layer: 1, .. })));
    }

    #[test]
    fn spec_widths_follow_head() {
        let cfg = AggregateConfig::new(5, 2).unwrap();
        let spec = NetSpec::new(2, vec![400, 300], 2, Head::Cool(cfg));
        assert_eq!(spec.widths(), vec![2, 400, 300, 10]);
        spec.validate().unwrap();
    }
}
