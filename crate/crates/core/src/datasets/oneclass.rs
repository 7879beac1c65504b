use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabeledSet;
use crate::error::{Error, Result};

/// Source of second-class instances for one-class training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NegativeSampler {
    /// i.i.d. uniform values in `[0, 1]`, e.g. random-pixel images.
    UniformNoise { dim: usize },
    /// Always the same point.
    FixedPoint { point: Vec<f64> },
}

impl NegativeSampler {
    pub fn dim(&self) -> usize {
        match self {
            NegativeSampler::UniformNoise { dim } => *dim,
            NegativeSampler::FixedPoint { point } => point.len(),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            NegativeSampler::UniformNoise { dim } => (0..*dim).map(|_| rng.random::<f64>()).collect(),
            NegativeSampler::FixedPoint { point } => point.clone(),
        }
    }
}

/// Positives (label 0) plus `k_neg` sampled negatives resampled uniformly with
/// replacement up to the positive count (label 1).
pub fn build_oneclass_set(positives: ArrayView2<f64>, sampler: &NegativeSampler, k_neg: usize, seed: u64) -> Result<LabeledSet> {
    let n = positives.nrows();
    if n == 0 {
        return Err(Error::param("one-class training needs at least one positive"));
    }
    if k_neg == 0 {
        return Err(Error::param("k_neg must be >= 1"));
    }
    let d = positives.ncols();
    if sampler.dim() != d {
        return Err(Error::Shape(format!("negatives have {} dims, positives {d}", sampler.dim())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<Vec<f64>> = (0..k_neg).map(|_| sampler.sample(&mut rng)).collect();
    let mut x = Array2::zeros((2 * n, d));
    x.slice_mut(ndarray::s![..n, ..]).assign(&positives);
    for i in 0..n {
        let pick = &pool[rng.random_range(0..k_neg)];
        x.row_mut(n + i).iter_mut().zip(pick).for_each(|(dst, &v)| *dst = v);
    }
    let labels = (0..2 * n).map(|i| usize::from(i >= n)).collect();
    LabeledSet::new(x, labels, 2)
}
