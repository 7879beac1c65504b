//! One-class networks: one two-class model per known class, trained against
//! sampled negatives, combined by maximum inclusion score.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::datasets::{build_oneclass_set, LabeledSet, NegativeSampler};
use crate::error::{Error, Result};
use crate::nn::{fit, FitOptions, InitScheme, NetSpec, Network, SgdConfig};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// A two-class network whose class 0 is the positive class.
#[derive(Debug, Clone, PartialEq)]
pub struct OneClassModel {
    pub net: Network,
    pub positive_class: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneClassReport {
    /// Fraction of covered instances whose own model has the highest score.
    pub max_activation_accuracy: f64,
    /// Like `max_activation_accuracy`, also requiring the winning score to reach the threshold.
    pub thresholded_accuracy: f64,
    /// Fraction of (model, non-member instance) pairs scored below the threshold.
    pub rejection_rate: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneClassEpoch {
    pub epoch: usize,
    pub mean_train_loss: f64,
    pub report: Option<OneClassReport>,
}

/// Everything needed to train an ensemble apart from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneClassSetup {
    /// Must have `num_classes == 2`.
    pub spec: NetSpec,
    pub init: InitScheme,
    pub sgd: SgdConfig,
    pub sampler: NegativeSampler,
    pub k_neg: usize,
}

impl OneClassSetup {
    pub fn validate(&self, dim: usize) -> Result<()> {
        self.spec.validate()?;
        self.init.validate()?;
        self.sgd.validate()?;
        if self.spec.num_classes != 2 {
            return Err(Error::param("one-class models have exactly two output classes"));
        }
        if self.spec.input_dim != dim || self.sampler.dim() != dim {
            return Err(Error::param(format!(
                "input width mismatch: data {dim}, model {}, sampler {}",
                self.spec.input_dim,
                self.sampler.dim()
            )));
        }
        Ok(())
    }
}

fn model_seed(seed: u64, class: usize) -> u64 {
    seed.wrapping_mul(0xd134_2543_de82_ef95).wrapping_add(class as u64 + 1)
}

/// Trains a single one-class model on `positives`.
pub fn train_oneclass(positives: ArrayView2<f64>, positive_class: usize, setup: &OneClassSetup, seed: u64) -> Result<OneClassModel> {
    setup.validate(positives.ncols())?;
    let s = model_seed(seed, positive_class);
    let set = build_oneclass_set(positives, &setup.sampler, setup.k_neg, s)?;
    let mut net = Network::init(&setup.spec, setup.init, s)?;
    fit(&mut net, &set, &SgdConfig { seed: s, ..setup.sgd }, FitOptions::default(), |_| {})?;
    Ok(OneClassModel { net, positive_class })
}

/// Trains one model per class in `classes` epoch by epoch, evaluating the
/// ensemble on `eval` after every epoch when given.
pub fn train_ensemble(
    train: &LabeledSet,
    classes: &[usize],
    setup: &OneClassSetup,
    seed: u64,
    eval: Option<&LabeledSet>,
    threshold: f64,
    mut on_epoch: impl FnMut(&OneClassEpoch),
) -> Result<(Vec<OneClassModel>, Vec<OneClassEpoch>)> {
    setup.validate(train.dim())?;
    if classes.is_empty() {
        return Err(Error::param("need at least one positive class"));
    }
    let mut jobs = Vec::with_capacity(classes.len());
    for &c in classes {
        let idx: Vec<usize> = (0..train.len()).filter(|&i| train.labels()[i] == c).collect();
        if idx.is_empty() {
            return Err(Error::param(format!("class {c} has no training examples")));
        }
        let s = model_seed(seed, c);
        let positives = train.inputs().select(Axis(0), &idx);
        let set = build_oneclass_set(positives.view(), &setup.sampler, setup.k_neg, s)?;
        let model = OneClassModel {
            net: Network::init(&setup.spec, setup.init, s)?,
            positive_class: c,
        };
        jobs.push((model, set, s));
    }

    use rayon::prelude::*;
    let mut log = Vec::with_capacity(setup.sgd.max_epochs);
    for epoch in 1..=setup.sgd.max_epochs {
        let losses: Vec<f64> = jobs
            .par_iter_mut()
            .map(|(model, set, s)| {
                let cfg = SgdConfig {
                    max_epochs: 1,
                    seed: s.wrapping_add(epoch as u64),
                    ..setup.sgd
                };
                let h = fit(&mut model.net, set, &cfg, FitOptions::default(), |_| {})?;
                Ok(h.epochs[0].train_loss)
            })
            .collect::<Result<_>>()?;
        let models: Vec<OneClassModel> = jobs.iter().map(|j| j.0.clone()).collect();
        let report = eval.map(|e| threshold_report(&models, e, threshold)).transpose()?;
        let entry = OneClassEpoch {
            epoch,
            mean_train_loss: losses.iter().sum::<f64>() / losses.len() as f64,
            report,
        };
        on_epoch(&entry);
        log.push(entry);
    }
    Ok((jobs.into_iter().map(|j| j.0).collect(), log))
}

/// Positive-class score per row.
pub fn score_inclusion(m: &OneClassModel, x: ArrayView2<f64>) -> Result<Array1<f64>> {
    Ok(m.net.class_scores(x)?.column(0).to_owned())
}

/// Inclusion scores `[B, models]`.
pub fn inclusion_matrix(models: &[OneClassModel], x: ArrayView2<f64>) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((x.nrows(), models.len()));
    for (j, m) in models.iter().enumerate() {
        out.column_mut(j).assign(&score_inclusion(m, x)?);
    }
    Ok(out)
}

/// Index into `models` of the winner per row; ties go to the lowest class id.
fn winners(models: &[OneClassModel], scores: &Array2<f64>) -> Vec<usize> {
    scores
        .axis_iter(Axis(0))
        .map(|row| {
            (0..models.len())
                .reduce(|best, j| {
                    let better = row[j] > row[best] || (row[j] == row[best] && models[j].positive_class < models[best].positive_class);
                    if better {
                        j
                    } else {
                        best
                    }
                })
                .expect("non-empty")
        })
        .collect()
}

/// Predicted class id per row.
pub fn ensemble_classify(models: &[OneClassModel], x: ArrayView2<f64>) -> Result<Vec<usize>> {
    if models.is_empty() {
        return Err(Error::param("ensemble needs at least one model"));
    }
    let scores = inclusion_matrix(models, x)?;
    Ok(winners(models, &scores).into_iter().map(|j| models[j].positive_class).collect())
}

pub fn threshold_report(models: &[OneClassModel], eval: &LabeledSet, threshold: f64) -> Result<OneClassReport> {
    if models.is_empty() {
        return Err(Error::param("ensemble needs at least one model"));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::param(format!("threshold must be in [0,1], got {threshold}")));
    }
    let (mut covered, mut hits, mut hits_thr) = (0usize, 0usize, 0usize);
    let (mut pairs, mut rejected) = (0usize, 0usize);
    for (chunk, labels) in eval.inputs().axis_chunks_iter(Axis(0), 1024).zip(eval.labels().chunks(1024)) {
        let scores = inclusion_matrix(models, chunk)?;
        let win = winners(models, &scores);
        for (i, &y) in labels.iter().enumerate() {
            if let Some(own) = models.iter().position(|m| m.positive_class == y) {
                covered += 1;
                if win[i] == own {
                    hits += 1;
                    if scores[[i, own]] >= threshold {
                        hits_thr += 1;
                    }
                }
            }
            for (j, m) in models.iter().enumerate() {
                if m.positive_class != y {
                    pairs += 1;
                    if scores[[i, j]] < threshold {
                        rejected += 1;
                    }
                }
            }
        }
    }
    let frac = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok(OneClassReport {
        max_activation_accuracy: frac(hits, covered),
        thresholded_accuracy: frac(hits_thr, covered),
        rejection_rate: frac(rejected, pairs),
        threshold,
    })
}
