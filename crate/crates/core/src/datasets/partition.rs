use std::collections::HashSet;

use super::LabeledSet;
use crate::error::{Error, Result};

/// Disjoint class subsets, each with at least two classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    subsets: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(subsets: Vec<Vec<usize>>) -> Result<Self> {
        if subsets.is_empty() {
            return Err(Error::param("a partition needs at least one subset"));
        }
        let mut seen = HashSet::new();
        for s in &subsets {
            if s.len() < 2 {
                return Err(Error::param(format!("subset {s:?} has fewer than two classes")));
            }
            for &c in s {
                if !seen.insert(c) {
                    return Err(Error::param(format!("class {c} appears in more than one subset")));
                }
            }
        }
        Ok(Self { subsets })
    }

    /// `{0,1}, {2,3}, ...` over `k` classes; `k` must be even.
    pub fn consecutive_pairs(k: usize) -> Result<Self> {
        if k < 2 || !k.is_multiple_of(2) {
            return Err(Error::param(format!("consecutive pairs need an even k >= 2, got {k}")));
        }
        Self::new((0..k).step_by(2).map(|c| vec![c, c + 1]).collect())
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn num_classes(&self) -> usize {
        self.subsets.iter().map(Vec::len).sum()
    }
}

/// One subset's training data with local labels and the local -> global map.
#[derive(Debug, Clone, PartialEq)]
pub struct SclSubset {
    pub set: LabeledSet,
    pub classes: Vec<usize>,
}

/// Splits `set` by class subset, remapping labels to `0..|subset|`.
pub fn partition_scl(set: &LabeledSet, partition: &Partition) -> Result<Vec<SclSubset>> {
    let counts = set.class_counts();
    partition
        .subsets()
        .iter()
        .map(|classes| {
            if let Some(&missing) = classes.iter().find(|&&c| counts.get(c).copied().unwrap_or(0) == 0) {
                return Err(Error::param(format!("class {missing} is absent from the data")));
            }
            let idx: Vec<usize> = (0..set.len()).filter(|&i| classes.contains(&set.labels()[i])).collect();
            let local = set.select(&idx)?;
            let labels = local
                .labels()
                .iter()
                .map(|y| classes.iter().position(|c| c == y).expect("filtered"))
                .collect();
            Ok(SclSubset {
                set: local.relabel(labels, classes.len())?,
                classes: classes.clone(),
            })
        })
        .collect()
}
