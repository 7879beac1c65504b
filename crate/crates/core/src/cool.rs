//! Competitive overcomplete output layer.
//!
//! Each class owns an aggregate of `omega` member units that share one softmax
//! with every other output unit. Member `i` of class `j` sits at position
//! `i * k + j` (0-based), so the output vector is a sequence of `omega` blocks of
//! width `k`, one member of every class per block.
//!
//! Training targets put `1/omega` on every member of the true class. At inference
//! time the members of a class are combined by a scaled product
//! `prod_i (p[i*k + j] * omega)`, then raised to a per-class softness exponent.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How member activations of one aggregate are combined at inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateOp {
    Product,
    Sum,
}

impl std::str::FromStr for AggregateOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "product" | "prod" | "x" | "*" => Ok(AggregateOp::Product),
            "sum" | "+" => Ok(AggregateOp::Sum),
            other => Err(Error::param(format!("unknown aggregate op `{other}`"))),
        }
    }
}

/// Hyperparameters of a COOL head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateConfig {
    omega: usize,
    softness: Vec<f64>,
    op: AggregateOp,
    num_classes: usize,
}

impl AggregateConfig {
    /// Product aggregation with unit softness.
    pub fn new(omega: usize, num_classes: usize) -> Result<Self> {
        Self::with_softness(omega, vec![1.0; num_classes], AggregateOp::Product)
    }

    pub fn with_softness(omega: usize, softness: Vec<f64>, op: AggregateOp) -> Result<Self> {
        if omega == 0 {
            return Err(Error::param("degree of overcompleteness must be >= 1"));
        }
        if softness.is_empty() {
            return Err(Error::param("at least one class is required"));
        }
        if let Some(bad) = softness.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::param(format!("softness must be positive, got {bad}")));
        }
        Ok(Self {
            omega,
            num_classes: softness.len(),
            softness,
            op,
        })
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn softness(&self) -> &[f64] {
        &self.softness
    }

    pub fn op(&self) -> AggregateOp {
        self.op
    }

    /// Width of the output layer, `omega * k`.
    pub fn width(&self) -> usize {
        self.omega * self.num_classes
    }

    pub fn with_op(&self, op: AggregateOp) -> Self {
        Self { op, ..self.clone() }
    }

    pub fn set_softness(&mut self, softness: Vec<f64>) -> Result<()> {
        let updated = Self::with_softness(self.omega, softness, self.op)?;
        if updated.num_classes != self.num_classes {
            return Err(Error::Shape(format!(
                "softness has {} entries for {} classes",
                updated.num_classes, self.num_classes
            )));
        }
        *self = updated;
        Ok(())
    }
}

/// Training target for class `eta`: `1/omega` on each of its members, zero elsewhere.
pub fn encode_target(eta: usize, cfg: &AggregateConfig) -> Result<Array1<f64>> {
    let k = cfg.num_classes;
    if eta >= k {
        return Err(Error::Index {
            index: eta,
            bound: k,
        });
    }
    let mut target = Array1::zeros(cfg.width());
    let member = 1.0 / cfg.omega as f64;
    for i in 0..cfg.omega {
        target[i * k + eta] = member;
    }
    Ok(target)
}

/// Aggregate class scores for one post-softmax output vector.
pub fn infer(pred: ArrayView1<f64>, cfg: &AggregateConfig) -> Result<Array1<f64>> {
    if pred.len() != cfg.width() {
        return Err(Error::Shape(format!(
            "prediction has {} entries, head expects omega*k = {}",
            pred.len(),
            cfg.width()
        )));
    }
    let mut scores = Array1::zeros(cfg.num_classes);
    infer_into(pred, cfg, scores.view_mut().into_slice().expect("contiguous"));
    Ok(scores)
}

/// Row-wise [`infer`] over a batch of predictions.
pub fn infer_batch(pred: ArrayView2<f64>, cfg: &AggregateConfig) -> Result<Array2<f64>> {
    if pred.ncols() != cfg.width() {
        return Err(Error::Shape(format!(
            "prediction has {} columns, head expects omega*k = {}",
            pred.ncols(),
            cfg.width()
        )));
    }
    let mut scores = Array2::zeros((pred.nrows(), cfg.num_classes));
    for (row, mut out) in pred.axis_iter(Axis(0)).zip(scores.axis_iter_mut(Axis(0))) {
        infer_into(row, cfg, out.as_slice_mut().expect("contiguous"));
    }
    Ok(scores)
}

fn infer_into(pred: ArrayView1<f64>, cfg: &AggregateConfig, out: &mut [f64]) {
    let k = cfg.num_classes;
    let omega = cfg.omega as f64;
    for (j, slot) in out.iter_mut().enumerate() {
        let members = (0..cfg.omega).map(|i| pred[i * k + j]);
        let raw = match cfg.op {
            // Log domain: omega = 80 products of ~1/80 factors stay representable.
            // An exact zero member gives ln 0 = -inf and a score of exactly 0.
            AggregateOp::Product => members.map(|p| (p * omega).ln()).sum::<f64>() * cfg.softness[j],
            AggregateOp::Sum => members.sum::<f64>().ln() * cfg.softness[j],
        };
        *slot = raw.exp().clamp(0.0, 1.0);
    }
}

/// Argmax over class scores; ties go to the lowest index.
pub fn predict_class(scores: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (j, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = j;
        }
    }
    best
}

/// The `omega` member activations of class `j`, in member order.
pub fn member_slice(pred: ArrayView1<f64>, class: usize, cfg: &AggregateConfig) -> Result<Array1<f64>> {
    let k = cfg.num_classes;
    if class >= k {
        return Err(Error::Index {
            index: class,
            bound: k,
        });
    }
    if pred.len() != cfg.width() {
        return Err(Error::Shape(format!(
            "prediction has {} entries, head expects {}",
            pred.len(),
            cfg.width()
        )));
    }
    Ok((0..cfg.omega).map(|i| pred[i * k + class]).collect())
}

/// Softness that maps a mean activation onto an observed accuracy:
/// `mean_activation ^ softness == accuracy`.
pub fn calibrate_softness(accuracy: f64, mean_activation: f64) -> Result<f64> {
    let valid = |v: f64| v > 0.0 && v < 1.0;
    if !valid(accuracy) || !valid(mean_activation) {
        return Err(Error::param(format!(
            "calibration needs accuracy and mean activation in (0,1), got {accuracy} and {mean_activation}"
        )));
    }
    Ok(accuracy.ln() / mean_activation.ln())
}
