//! Separable concept learning: independently trained members over disjoint
//! class subsets, merged by placing each member's class scores at its global
//! class positions.

use std::path::{Path, PathBuf};

use ndarray::{s, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cool::{self, AggregateOp};
use crate::datasets::{partition_scl, LabeledSet, Partition};
use crate::error::{Error, Result};
use crate::nn::{fit, load_network, save_network, Activation, FitOptions, Head, HeadKind, InitScheme, NetSpec, Network, SgdConfig, TrainHistory};

/// Fraction of each subset held out for model selection.
pub const VALIDATION_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub net: Network,
    /// `classes[local] = global`.
    pub classes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    members: Vec<Member>,
    global_k: usize,
}

impl Assembly {
    pub fn new(members: Vec<Member>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::param("an assembly needs at least one member"));
        }
        let global_k: usize = members.iter().map(|m| m.classes.len()).sum();
        let mut seen = vec![false; global_k];
        let dim = members[0].net.input_dim();
        for m in &members {
            if m.net.num_classes() != m.classes.len() {
                return Err(Error::param(format!(
                    "member with {} classes has a class map of size {}",
                    m.net.num_classes(),
                    m.classes.len()
                )));
            }
            if m.net.input_dim() != dim {
                return Err(Error::param("assembly members disagree on input width"));
            }
            for &c in &m.classes {
                if c >= global_k || seen[c] {
                    return Err(Error::param(format!("class maps must cover 0..{global_k} exactly once; bad class {c}")));
                }
                seen[c] = true;
            }
        }
        Ok(Self { members, global_k })
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn global_k(&self) -> usize {
        self.global_k
    }

    /// Copy with every COOL member's aggregation operator replaced.
    pub fn with_aggregate_op(&self, op: AggregateOp) -> Result<Self> {
        let mut out = self.clone();
        for m in &mut out.members {
            if let Head::Cool(cfg) = m.net.head().clone() {
                m.net.set_head(Head::Cool(cfg.with_op(op)))?;
            }
        }
        Ok(out)
    }
}

/// Architecture shared by all members; the class count comes from each subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberArch {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub head: HeadKind,
    pub init: InitScheme,
}

impl MemberArch {
    pub fn spec(&self, input_dim: usize, num_classes: usize) -> Result<NetSpec> {
        let spec = NetSpec::new(input_dim, self.hidden.clone(), num_classes, self.head.build(num_classes)?).with_activation(self.activation);
        spec.validate()?;
        Ok(spec)
    }
}

pub fn member_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(index as u64 + 1)
}

/// Trains one member per subset on that subset's data only, keeping the
/// parameters of the epoch with the best accuracy on the subset's last
/// [`VALIDATION_FRACTION`] of examples.
pub fn train_members(full: &LabeledSet, partition: &Partition, arch: &MemberArch, cfg: &SgdConfig, seed: u64) -> Result<(Assembly, Vec<TrainHistory>)> {
    cfg.validate()?;
    if partition.subsets().iter().flatten().any(|&c| c >= full.num_classes()) {
        return Err(Error::param("partition references classes beyond the data set"));
    }
    let subsets = partition_scl(full, partition)?;
    let trained: Vec<(Member, TrainHistory)> = subsets
        .into_par_iter()
        .enumerate()
        .map(|(i, sub)| {
            let s = member_seed(seed, i);
            let spec = arch.spec(full.dim(), sub.classes.len())?;
            let mut net = Network::init(&spec, arch.init, s)?;
            let (train, valid) = sub.set.split_tail(VALIDATION_FRACTION)?;
            let opts = FitOptions {
                validation: Some(&valid),
                keep_best: true,
                ..FitOptions::default()
            };
            let history = fit(&mut net, &train, &SgdConfig { seed: s, ..*cfg }, opts, |_| {})?;
            Ok((Member { net, classes: sub.classes }, history))
        })
        .collect::<Result<_>>()?;
    let (members, histories) = trained.into_iter().unzip();
    Ok((Assembly::new(members)?, histories))
}

/// Global class-score matrix `[B, global_k]`.
pub fn assembly_scores(a: &Assembly, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((x.nrows(), a.global_k));
    for m in &a.members {
        let scores = m.net.class_scores(x)?;
        for (local, &global) in m.classes.iter().enumerate() {
            out.column_mut(global).assign(&scores.column(local));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SclEval {
    pub accuracy: f64,
    /// Empirical risk under 0-1 loss.
    pub risk: f64,
    /// `None` for classes absent from the evaluation set.
    pub per_class_accuracy: Vec<Option<f64>>,
    pub n: usize,
}

pub fn scl_evaluate(a: &Assembly, eval: &LabeledSet) -> Result<SclEval> {
    if eval.labels().iter().any(|&y| y >= a.global_k) {
        return Err(Error::param("evaluation labels exceed the assembly's classes"));
    }
    let mut hits = vec![0usize; a.global_k];
    let mut totals = vec![0usize; a.global_k];
    let inputs = eval.inputs();
    for start in (0..eval.len()).step_by(1024) {
        let end = (start + 1024).min(eval.len());
        let scores = assembly_scores(a, inputs.slice(s![start..end, ..]))?;
        for (row, &y) in scores.axis_iter(Axis(0)).zip(&eval.labels()[start..end]) {
            totals[y] += 1;
            if cool::predict_class(row) == y {
                hits[y] += 1;
            }
        }
    }
    let correct: usize = hits.iter().sum();
    let accuracy = if eval.is_empty() { 0.0 } else { correct as f64 / eval.len() as f64 };
    Ok(SclEval {
        accuracy,
        risk: 1.0 - accuracy,
        per_class_accuracy: hits
            .iter()
            .zip(&totals)
            .map(|(&h, &t)| (t > 0).then(|| h as f64 / t as f64))
            .collect(),
        n: eval.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SclReport {
    pub variant: String,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub per_class_accuracy: Vec<Option<f64>>,
    /// Risk on the combined training set.
    pub risk: f64,
}

pub fn scl_report(variant: &str, a: &Assembly, train: &LabeledSet, test: &LabeledSet) -> Result<SclReport> {
    let tr = scl_evaluate(a, train)?;
    let te = scl_evaluate(a, test)?;
    Ok(SclReport {
        variant: variant.to_string(),
        train_accuracy: tr.accuracy,
        test_accuracy: te.accuracy,
        per_class_accuracy: tr.per_class_accuracy,
        risk: tr.risk,
    })
}

/// Plain-text table with one row per report.
pub fn format_table(reports: &[SclReport]) -> String {
    let mut out = format!("{:<16} {:>12} {:>12}\n", "model", "train acc %", "test acc %");
    for r in reports {
        out.push_str(&format!("{:<16} {:>12.1} {:>12.1}\n", r.variant, 100.0 * r.train_accuracy, 100.0 * r.test_accuracy));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub model_file: PathBuf,
    pub classes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyManifest {
    pub members: Vec<ManifestEntry>,
}

/// Writes `member_<i>.bin` files plus `assembly.json` into `dir`.
pub fn save_assembly(a: &Assembly, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut members = Vec::new();
    for (i, m) in a.members.iter().enumerate() {
        let name = PathBuf::from(format!("member_{i}.bin"));
        save_network(&m.net, dir.join(&name))?;
        members.push(ManifestEntry {
            model_file: name,
            classes: m.classes.clone(),
        });
    }
    let path = dir.join("assembly.json");
    let json = serde_json::to_string_pretty(&AssemblyManifest { members }).map_err(|e| Error::param(e.to_string()))?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Loads an assembly manifest; model paths are relative to the manifest.
pub fn load_assembly(manifest: &Path) -> Result<Assembly> {
    let text = std::fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let m: AssemblyManifest = serde_json::from_str(&text).map_err(|e| Error::param(format!("{}: {e}", manifest.display())))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let members = m
        .members
        .into_iter()
        .map(|e| {
            Ok(Member {
                net: load_network(base.join(&e.model_file))?,
                classes: e.classes,
            })
        })
        .collect::<Result<_>>()?;
    Assembly::new(members)
}
