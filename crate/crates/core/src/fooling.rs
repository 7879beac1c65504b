//! Fooling generator network (FGN) attack.
//!
//! A single logistic dense layer `g` maps a fixed random seed image `z` to a
//! candidate input `g(z)` in `(0,1)^n`. Only `g` is trained, by backpropagating
//! the frozen classifier's cross-entropy toward the target class through the
//! classifier into `g`. For COOL heads the target is the member-level training
//! target of the class, not the aggregated score.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cool;
use crate::error::{Error, Result};
use crate::nn::{init::glorot_layer, Activation, DenseLayer, Network};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgnConfig {
    /// Maximum number of generator updates.
    pub budget: usize,
    pub confidence_threshold: f64,
    pub learning_rate: f64,
    pub seed: u64,
    pub target_class: usize,
}

impl Default for FgnConfig {
    fn default() -> Self {
        Self {
            budget: 10_000,
            confidence_threshold: 0.99,
            learning_rate: 1e-5,
            seed: 0,
            target_class: 0,
        }
    }
}

impl FgnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::param("fooling budget must be >= 1"));
        }
        if !(self.confidence_threshold > 0.0 && self.confidence_threshold < 1.0) {
            return Err(Error::param("confidence threshold must be in (0,1)"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("generator learning rate must be positive"));
        }
        Ok(())
    }
}

/// Single-layer logistic generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub layer: DenseLayer,
}

/// Glorot-initialized `m -> n` logistic generator.
pub fn make_fgn(input_dim: usize, output_dim: usize, seed: u64) -> Result<Generator> {
    if input_dim == 0 || output_dim == 0 {
        return Err(Error::param("generator dimensions must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Generator {
        layer: glorot_layer(input_dim, output_dim, Activation::Logistic, &mut rng),
    })
}

impl Generator {
    pub fn generate(&self, z: ArrayView1<f64>) -> Array1<f64> {
        let z2 = z.insert_axis(Axis(0));
        self.layer.forward(z2).index_axis_move(Axis(0), 0)
    }

    /// One SGD step given `dL/d output` at the current output `x = g(z)`.
    pub fn step(&mut self, z: ArrayView1<f64>, x: ArrayView1<f64>, dl_dx: ArrayView1<f64>, lr: f64) {
        let delta = output_delta(x, dl_dx);
        let z_col = z.insert_axis(Axis(1));
        let d_row = delta.view().insert_axis(Axis(0));
        ndarray::linalg::general_mat_mul(-lr, &z_col, &d_row, 1.0, &mut self.layer.weights);
        self.layer.bias.scaled_add(-lr, &delta);
    }
}

fn output_delta(x: ArrayView1<f64>, dl_dx: ArrayView1<f64>) -> Array1<f64> {
    dl_dx.iter().zip(x).map(|(g, y)| g * y * (1.0 - y)).collect()
}

/// A generator driven by one fixed seed input. Every SGD step on `(W, b)`
/// moves the pre-activation `zW + b` by `-lr (|z|^2 + 1) delta`, so the trial
/// tracks the pre-activation and the accumulated deltas and materializes the
/// weights only on request.
struct FixedSeedGenerator {
    initial: Generator,
    z: Array1<f64>,
    z_norm_sq_plus_one: f64,
    pre: Array1<f64>,
    delta_sum: Array1<f64>,
}

impl FixedSeedGenerator {
    fn new(initial: Generator, z: Array1<f64>) -> Self {
        let pre = z.dot(&initial.layer.weights) + &initial.layer.bias;
        Self {
            z_norm_sq_plus_one: z.dot(&z) + 1.0,
            delta_sum: Array1::zeros(pre.len()),
            initial,
            z,
            pre,
        }
    }

    fn output(&self) -> Array1<f64> {
        self.pre.mapv(crate::nn::logistic)
    }

    fn step(&mut self, x: ArrayView1<f64>, dl_dx: ArrayView1<f64>, lr: f64) {
        let delta = output_delta(x, dl_dx);
        self.pre.scaled_add(-lr * self.z_norm_sq_plus_one, &delta);
        self.delta_sum.scaled_add(lr, &delta);
    }

    fn materialize(&self) -> Generator {
        let mut g = self.initial.clone();
        let z_col = self.z.view().insert_axis(Axis(1));
        let d_row = self.delta_sum.view().insert_axis(Axis(0));
        ndarray::linalg::general_mat_mul(-1.0, &z_col, &d_row, 1.0, &mut g.layer.weights);
        g.layer.bias -= &self.delta_sum;
        g
    }
}

/// The frozen model's confidence that `input` belongs to `target_class`: the
/// softmax probability, or the aggregate class score for COOL-style heads.
pub fn confidence(model: &Network, input: ArrayView1<f64>, target_class: usize) -> Result<f64> {
    if target_class >= model.num_classes() {
        return Err(Error::Index {
            index: target_class,
            bound: model.num_classes(),
        });
    }
    let scores = model.class_scores(input.insert_axis(Axis(0)))?;
    Ok(scores[[0, target_class]])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub target_class: usize,
    pub success: bool,
    pub updates_used: usize,
    pub final_confidence: f64,
    /// The generated input, kept only on success.
    #[serde(skip)]
    pub fooling_input: Option<Array1<f64>>,
}

/// Trains a fresh generator against the frozen model until the target-class
/// confidence reaches the threshold or the update budget runs out.
///
/// Confidence is checked after every update; `updates_used` is the update
/// after which the threshold was first met (or the budget on failure).
pub fn run_trial(frozen: &Network, cfg: &FgnConfig) -> Result<TrialReport> {
    run_trial_with_generator(frozen, cfg).map(|(r, _, _)| r)
}

/// Like [`run_trial`], also returning the final generator and its seed input.
pub fn run_trial_with_generator(frozen: &Network, cfg: &FgnConfig) -> Result<(TrialReport, Generator, Array1<f64>)> {
    cfg.validate()?;
    let dim = frozen.input_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let z: Array1<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let generator = make_fgn(dim, dim, rng.random())?;
    let target = frozen.target_for(cfg.target_class)?.insert_axis(Axis(0));
    let mut fgn = FixedSeedGenerator::new(generator, z);

    let mut x = fgn.output();
    let mut conf = 0.0;
    let mut success = false;
    let mut updates_used = cfg.budget;
    for update in 0..=cfg.budget {
        let cache = frozen.forward_cached(x.view().insert_axis(Axis(0)))?;
        if update > 0 {
            let scores = frozen.scores_from_output(cache.output.view())?;
            conf = scores[[0, cfg.target_class]];
            if conf >= cfg.confidence_threshold {
                success = true;
                updates_used = update;
                break;
            }
            if update == cfg.budget {
                break;
            }
        }
        let delta = frozen.output_delta(&cache, target.view())?;
        let dx = frozen.input_gradient(&cache, delta)?;
        fgn.step(x.view(), dx.row(0), cfg.learning_rate);
        x = fgn.output();
    }
    let report = TrialReport {
        target_class: cfg.target_class,
        success,
        updates_used,
        final_confidence: conf,
        fooling_input: success.then_some(x),
    };
    Ok((report, fgn.materialize(), fgn.z))
}

/// Runs `trials_per_class` trials for each class. Trial seeds are derived from
/// `base_seed`, the class, and the trial index, so the schedule is reproducible
/// regardless of execution order.
pub fn run_campaign(frozen: &Network, base: &FgnConfig, trials_per_class: usize, classes: &[usize]) -> Result<Vec<TrialReport>> {
    use rayon::prelude::*;
    let jobs: Vec<FgnConfig> = classes
        .iter()
        .flat_map(|&c| {
            (0..trials_per_class).map(move |t| FgnConfig {
                target_class: c,
                seed: trial_seed(base.seed, c, t),
                ..*base
            })
        })
        .collect();
    jobs.par_iter().map(|cfg| run_trial(frozen, cfg)).collect()
}

pub fn trial_seed(base: u64, class: usize, trial: usize) -> u64 {
    base.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add((class as u64) << 32)
        .wrapping_add(trial as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Median updates over successful trials.
    pub median_updates: Option<f64>,
    pub mean_updates: Option<f64>,
    pub per_class_success: Vec<(usize, usize, usize)>,
}

pub fn summarize(reports: &[TrialReport]) -> CampaignSummary {
    let mut updates: Vec<f64> = reports.iter().filter(|r| r.success).map(|r| r.updates_used as f64).collect();
    updates.sort_by(f64::total_cmp);
    let successes = updates.len();
    let median_updates = (!updates.is_empty()).then(|| {
        let m = updates.len() / 2;
        if updates.len() % 2 == 1 {
            updates[m]
        } else {
            (updates[m - 1] + updates[m]) / 2.0
        }
    });
    let mean_updates = (!updates.is_empty()).then(|| updates.iter().sum::<f64>() / updates.len() as f64);
    let mut classes: Vec<usize> = reports.iter().map(|r| r.target_class).collect();
    classes.sort_unstable();
    classes.dedup();
    let per_class_success = classes
        .into_iter()
        .map(|c| {
            let of: Vec<&TrialReport> = reports.iter().filter(|r| r.target_class == c).collect();
            (c, of.iter().filter(|r| r.success).count(), of.len())
        })
        .collect();
    CampaignSummary {
        trials: reports.len(),
        successes,
        success_rate: if reports.is_empty() { 0.0 } else { successes as f64 / reports.len() as f64 },
        median_updates,
        mean_updates,
        per_class_success,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProbeReport {
    pub threshold: f64,
    /// `(argmax class, confidence)` per noise sample.
    pub samples: Vec<(usize, f64)>,
    /// Per class: fraction of all samples assigned to it at or above threshold.
    pub confident_fraction: Vec<f64>,
    /// Fraction of samples whose top confidence reaches the threshold.
    pub total_confident_fraction: f64,
    pub max_confidence: f64,
}

/// Classifies `n_samples` uniform-noise inputs and tallies confident verdicts.
pub fn noise_probe(frozen: &Network, n_samples: usize, threshold: f64, seed: u64) -> Result<NoiseProbeReport> {
    if n_samples == 0 {
        return Err(Error::param("noise probe needs at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n_samples, frozen.input_dim()), |_| rng.random::<f64>());
    let scores = frozen.class_scores(x.view())?;
    let samples: Vec<(usize, f64)> = scores
        .axis_iter(Axis(0))
        .map(|row| {
            let c = cool::predict_class(row);
            (c, row[c])
        })
        .collect();
    let mut confident_fraction = vec![0.0; frozen.num_classes()];
    for &(c, s) in &samples {
        if s >= threshold {
            confident_fraction[c] += 1.0 / n_samples as f64;
        }
    }
    Ok(NoiseProbeReport {
        threshold,
        total_confident_fraction: confident_fraction.iter().sum(),
        max_confidence: samples.iter().map(|s| s.1).fold(0.0, f64::max),
        confident_fraction,
        samples,
    })
}
