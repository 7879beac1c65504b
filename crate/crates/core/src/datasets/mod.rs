//! Training containers, synthetic generators, and file loaders.

mod csv;
mod grid;
mod idx;
mod oneclass;
mod partition;
mod synthetic;

pub use self::csv::{load_csv, parse_csv};
pub use grid::{grid_points, GridSpec};
pub use idx::{load_idx, load_mnist, parse_idx, MnistSplit};
pub use oneclass::{build_oneclass_set, NegativeSampler};
pub use partition::{partition_scl, Partition, SclSubset};
pub use synthetic::{gen_disk, gen_spiral_in_circle, gen_two_circles, spiral_point, TwoCircles, SPIRAL_A, SPIRAL_B, SPIRAL_CIRCLE_RADIUS, SPIRAL_TURNS};

use ndarray::{concatenate, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Inputs `[N, d]` with one class label in `[0, k)` per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    inputs: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabeledSet {
    pub fn new(inputs: Array2<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if inputs.nrows() != labels.len() {
            return Err(Error::Shape(format!("{} inputs but {} labels", inputs.nrows(), labels.len())));
        }
        if labels.is_empty() {
            return Err(Error::param("a labeled set needs at least one example"));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::Index {
                index: bad,
                bound: num_classes,
            });
        }
        Ok(Self {
            inputs,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn inputs(&self) -> ArrayView2<'_, f64> {
        self.inputs.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            self.inputs.select(Axis(0), indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.num_classes,
        )
    }

    /// The first `n` examples (or all, if fewer).
    pub fn head(&self, n: usize) -> Result<Self> {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.select(&idx)
    }

    /// Splits off the last `fraction` of rows: `(leading, tail)`.
    pub fn split_tail(&self, fraction: f64) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::param(format!("split fraction must be in [0,1), got {fraction}")));
        }
        let tail = ((self.len() as f64) * fraction).round() as usize;
        let cut = self.len() - tail.clamp(1, self.len() - 1);
        let lead: Vec<usize> = (0..cut).collect();
        let rest: Vec<usize> = (cut..self.len()).collect();
        Ok((self.select(&lead)?, self.select(&rest)?))
    }

    /// Keeps only examples whose label is in `classes`, up to `per_class` each.
    pub fn filter_classes(&self, classes: &[usize], per_class: Option<usize>) -> Result<Self> {
        let mut taken = vec![0usize; self.num_classes];
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| {
                let y = self.labels[i];
                if !classes.contains(&y) || per_class.is_some_and(|cap| taken[y] >= cap) {
                    return false;
                }
                taken[y] += 1;
                true
            })
            .collect();
        if idx.is_empty() {
            return Err(Error::param(format!("no examples of classes {classes:?}")));
        }
        self.select(&idx)
    }

    /// Row-wise concatenation; class counts must agree.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.num_classes != other.num_classes || self.dim() != other.dim() {
            return Err(Error::Shape("cannot concatenate sets with different shapes".into()));
        }
        let inputs = concatenate(Axis(0), &[self.inputs.view(), other.inputs.view()]).expect("same width");
        let mut labels = self.labels.clone();
        labels.extend(&other.labels);
        Self::new(inputs, labels, self.num_classes)
    }

    /// Same inputs with relabeled classes.
    pub fn relabel(&self, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        Self::new(self.inputs.clone(), labels, num_classes)
    }

    pub fn into_parts(self) -> (Array2<f64>, Vec<usize>, usize) {
        (self.inputs, self.labels, self.num_classes)
    }
}
