//! Experiment runners. Each takes a validated config, writes its artifacts
//! into the output directory, and returns metrics for the manifest.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use cool_core::datasets::{self, LabeledSet, MnistSplit, Partition};
use cool_core::fooling::{self, FgnConfig};
use cool_core::nn::{self, FitOptions};
use cool_core::oneclass::{self, OneClassSetup};
use cool_core::scl::{self, MemberArch};
use cool_core::vizmap::{self, MapFormat};
use cool_core::{AggregateOp, Head, Network};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{DatasetConfig, Experiment, RunConfig};
use crate::error::{CliError, Result};
use crate::manifest::{now_unix, RunManifest};

/// Values given on the command line (or, for the output directory, the environment).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

/// Applies overrides over the config, falls back to `runs/<experiment>`, and validates.
pub fn prepare(mut cfg: RunConfig, experiment: Experiment, ov: &Overrides) -> Result<RunConfig> {
    cfg.set_experiment(experiment)?;
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    let out = ov
        .out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(experiment.name()));
    cfg.out_dir = Some(std::path::absolute(&out).unwrap_or(out));
    cfg.validate()?;
    Ok(cfg)
}

/// What a runner hands back.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub metrics: Value,
    pub artifacts: Vec<PathBuf>,
    /// Human-readable table for stdout.
    pub summary: String,
}

/// Runs a prepared config and writes its manifest. `progress` prints per-epoch
/// lines to stderr.
pub fn execute(cfg: &RunConfig, progress: bool) -> Result<(RunManifest, Outcome)> {
    let experiment = cfg.experiment()?;
    let out = cfg.out_dir.clone().ok_or_else(|| CliError::config("out_dir", "not resolved"))?;
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let started_at = now_unix();
    let outcome = match experiment {
        Experiment::Train => run_train(cfg, &out, progress)?,
        Experiment::Vizmap => run_vizmap(cfg, &out)?,
        Experiment::Fool => run_fool(cfg, &out)?,
        Experiment::NoiseProbe => run_noise_probe(cfg, &out)?,
        Experiment::Scl => run_scl(cfg, &out)?,
        Experiment::Oneclass => run_oneclass(cfg, &out, progress)?,
    };
    let manifest = RunManifest {
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment,
        seed: cfg.seed,
        config: cfg.clone(),
        started_at,
        finished_at: now_unix(),
        metrics: outcome.metrics.clone(),
        artifacts: outcome.artifacts.clone(),
    };
    manifest.write(&out)?;
    Ok((manifest, outcome))
}

/// Training and optional test split.
pub struct Data {
    pub train: LabeledSet,
    pub test: Option<LabeledSet>,
}

pub fn load_data(d: &DatasetConfig, seed: u64) -> Result<Data> {
    Ok(match d {
        DatasetConfig::TwoCircles { .. } => Data {
            train: datasets::gen_two_circles(&d.two_circles().expect("two circles"), seed)?,
            test: None,
        },
        DatasetConfig::Spiral { n_per_class } => Data {
            train: datasets::gen_spiral_in_circle(*n_per_class, seed)?,
            test: None,
        },
        DatasetConfig::Disk { n, radius } => Data {
            train: datasets::gen_disk(*n, *radius, seed)?,
            test: None,
        },
        DatasetConfig::Mnist {
            dir,
            train_limit,
            test_limit,
            classes,
            per_class_limit,
        } => {
            let shape = |set: LabeledSet, limit: &Option<usize>| -> Result<LabeledSet> {
                let set = match limit {
                    Some(n) => set.head(*n)?,
                    None => set,
                };
                Ok(match classes {
                    Some(c) => set.filter_classes(c, *per_class_limit)?,
                    None => set,
                })
            };
            Data {
                train: shape(datasets::load_mnist(dir, MnistSplit::Train)?, train_limit)?,
                test: Some(shape(datasets::load_mnist(dir, MnistSplit::Test)?, test_limit)?),
            }
        }
        DatasetConfig::Csv { train, test } => Data {
            train: datasets::load_csv(train)?,
            test: test.as_ref().map(datasets::load_csv).transpose()?,
        },
    })
}

/// Re-declares the class count so labels index the model's classes.
fn fit_classes(set: LabeledSet, k: usize, dim: usize, what: &str) -> Result<LabeledSet> {
    if set.dim() != dim {
        return Err(CliError::config(
            "model.architecture",
            format!("input width {dim} but the {what} set has {} features", set.dim()),
        ));
    }
    if set.num_classes() == k {
        return Ok(set);
    }
    if set.labels().iter().any(|&y| y >= k) {
        return Err(CliError::config(
            "model.num_classes",
            format!("{what} set has labels >= {k}"),
        ));
    }
    let labels = set.labels().to_vec();
    Ok(set.relabel(labels, k)?)
}

fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for row in rows {
        let line = serde_json::to_string(&row).map_err(|e| CliError::Parse(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn run_train(cfg: &RunConfig, out: &Path, progress: bool) -> Result<Outcome> {
    let m = cfg.model()?;
    let opt = cfg.optimizer()?;
    let spec = m.net_spec()?;
    let data = load_data(cfg.dataset()?, cfg.seed)?;
    let train = fit_classes(data.train, spec.num_classes, spec.input_dim, "training")?;
    let test = data
        .test
        .map(|t| fit_classes(t, spec.num_classes, spec.input_dim, "test"))
        .transpose()?;
    let (train, valid) = match opt.validation_fraction {
        Some(f) => {
            let (a, b) = train.split_tail(f)?;
            (a, Some(b))
        }
        None => (train, None),
    };

    let mut net = Network::init(&spec, m.init_scheme(), cfg.seed)?;
    let opts = FitOptions {
        validation: valid.as_ref(),
        keep_best: false,
        track_train_accuracy: true,
        stop_at_train_accuracy: opt.stop_at_train_accuracy,
    };
    let every = (opt.epochs / 10).max(1);
    let history = nn::fit(&mut net, &train, &opt.sgd(cfg.seed), opts, |s| {
        if progress && s.epoch % every == 0 {
            eprintln!("epoch {:>6}  loss {:.5}  train acc {:.4}", s.epoch, s.train_loss, s.train_accuracy.unwrap_or(f64::NAN));
        }
    })?;

    let model_path = out.join("model.bin");
    nn::save_network(&net, &model_path)?;
    let log_path = out.join("epochs.jsonl");
    write_jsonl(&log_path, &history.epochs)?;

    let last = history.epochs.last().expect("at least one epoch");
    let test_accuracy = test
        .as_ref()
        .map(|t| nn::accuracy(&net, t.inputs(), t.labels()))
        .transpose()?;
    let metrics = json!({
        "epochs_run": history.epochs.len(),
        "final_train_loss": last.train_loss,
        "train_accuracy": last.train_accuracy,
        "validation_accuracy": last.validation_accuracy,
        "test_accuracy": test_accuracy,
        "model_checksum": net.checksum(),
    });
    let mut summary = format!("{:<20} {:>12}\n", "metric", "value");
    let _ = writeln!(summary, "{:<20} {:>12}", "epochs", history.epochs.len());
    let _ = writeln!(summary, "{:<20} {:>12.6}", "train loss", last.train_loss);
    for (name, v) in [
        ("train acc %", last.train_accuracy),
        ("validation acc %", last.validation_accuracy),
        ("test acc %", test_accuracy),
    ] {
        if let Some(v) = v {
            let _ = writeln!(summary, "{:<20} {:>12.2}", name, 100.0 * v);
        }
    }
    Ok(Outcome {
        metrics,
        artifacts: vec![model_path, log_path],
        summary,
    })
}

fn run_vizmap(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let v = cfg.vizmap.as_ref().expect("validated");
    let net = nn::load_network(&v.model)?;
    let maps = vizmap::all_class_maps(&net, &v.grid())?;
    let mut artifacts = Vec::new();
    let mut rows = Vec::new();
    let mut summary = format!("{:<6} {:>8} {:>8} {:>8}\n", "class", "mean", "min", "max");
    for m in &maps {
        for (ext, fmt) in [("csv", MapFormat::Csv), ("pgm", MapFormat::Pgm)] {
            let path = out.join(format!("map_class{}.{ext}", m.class_id));
            vizmap::export_map(m, &path, fmt)?;
            artifacts.push(path);
        }
        let mean = m.values.mean().unwrap_or(0.0);
        let min = m.values.fold(f64::INFINITY, |a, &b| a.min(b));
        let max = m.values.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let _ = writeln!(summary, "{:<6} {:>8.4} {:>8.4} {:>8.4}", m.class_id, mean, min, max);
        rows.push(json!({
            "class": m.class_id,
            "head": m.head_kind,
            "mean": mean,
            "min": min,
            "max": max,
            "corners": m.value_at_corners(),
        }));
    }
    let report = out.join("maps.jsonl");
    write_jsonl(&report, &rows)?;
    artifacts.push(report);
    Ok(Outcome {
        metrics: json!({ "maps": rows }),
        artifacts,
        summary,
    })
}

/// Side length when `dim` is a perfect square, for image export.
fn square_side(dim: usize) -> Option<usize> {
    let s = (dim as f64).sqrt().round() as usize;
    (s * s == dim && s > 1).then_some(s)
}

fn pgm_image(x: &[f64], side: usize) -> Vec<u8> {
    let mut bytes = format!("P5\n{side} {side}\n255\n").into_bytes();
    bytes.extend(x.iter().map(|&v| vizmap::to_gray(v)));
    bytes
}

fn run_fool(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let f = cfg.fool.as_ref().expect("validated");
    let net = nn::load_network(&f.model)?;
    let classes: Vec<usize> = f.classes.clone().unwrap_or_else(|| (0..net.num_classes()).collect());
    if let Some(&c) = classes.iter().find(|&&c| c >= net.num_classes()) {
        return Err(CliError::config("fool.classes", format!("class {c} but the model has {}", net.num_classes())));
    }
    let base = FgnConfig {
        budget: f.budget,
        confidence_threshold: f.threshold,
        learning_rate: f.learning_rate,
        seed: cfg.seed,
        target_class: 0,
    };
    let reports = fooling::run_campaign(&net, &base, f.trials_per_class, &classes)?;
    let summary_stats = fooling::summarize(&reports);

    let mut artifacts = Vec::new();
    let trials_path = out.join("trials.jsonl");
    let rows: Vec<Value> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            json!({
                "target_class": r.target_class,
                "trial": i % f.trials_per_class,
                "success": r.success,
                "updates_used": r.updates_used,
                "final_confidence": r.final_confidence,
            })
        })
        .collect();
    write_jsonl(&trials_path, &rows)?;
    artifacts.push(trials_path);
    if f.export_images {
        if let Some(side) = square_side(net.input_dim()) {
            for (i, r) in reports.iter().enumerate() {
                if let Some(x) = &r.fooling_input {
                    let path = out.join(format!("fool_class{}_trial{}.pgm", r.target_class, i % f.trials_per_class));
                    std::fs::write(&path, pgm_image(x.as_slice().expect("contiguous"), side)).map_err(|e| CliError::io(&path, e))?;
                    artifacts.push(path);
                }
            }
        }
    }

    let mut summary = format!("{:<6} {:>10} {:>8}\n", "class", "successes", "trials");
    for (c, s, n) in &summary_stats.per_class_success {
        let _ = writeln!(summary, "{c:<6} {s:>10} {n:>8}");
    }
    let _ = writeln!(
        summary,
        "success rate {:.3}, median updates {}",
        summary_stats.success_rate,
        summary_stats.median_updates.map_or("n/a".to_string(), |m| format!("{m}"))
    );
    Ok(Outcome {
        metrics: serde_json::to_value(&summary_stats).map_err(|e| CliError::Parse(e.to_string()))?,
        artifacts,
        summary,
    })
}

fn run_noise_probe(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let p = cfg.noise_probe.as_ref().expect("validated");
    let net = nn::load_network(&p.model)?;
    let r = fooling::noise_probe(&net, p.samples, p.threshold, cfg.seed)?;
    let path = out.join("samples.jsonl");
    write_jsonl(&path, r.samples.iter().map(|(c, conf)| json!({ "class": c, "confidence": conf })))?;
    let mut summary = format!("{:<6} {:>18}\n", "class", "confident fraction");
    for (c, f) in r.confident_fraction.iter().enumerate() {
        let _ = writeln!(summary, "{c:<6} {f:>18.4}");
    }
    let _ = writeln!(summary, "total {:.4}, max confidence {:.6}", r.total_confident_fraction, r.max_confidence);
    Ok(Outcome {
        metrics: json!({
            "threshold": r.threshold,
            "confident_fraction": r.confident_fraction,
            "total_confident_fraction": r.total_confident_fraction,
            "max_confidence": r.max_confidence,
        }),
        artifacts: vec![path],
        summary,
    })
}

fn run_scl(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let m = cfg.model()?;
    let opt = cfg.optimizer()?;
    let spec = m.net_spec()?;
    let data = load_data(cfg.dataset()?, cfg.seed)?;
    let k = data.train.num_classes();
    let test = data.test.expect("validated");
    let partition = match cfg.scl.as_ref().and_then(|s| s.subsets.clone()) {
        Some(s) => Partition::new(s)?,
        None => Partition::consecutive_pairs(k)?,
    };
    let arch = MemberArch {
        hidden: spec.hidden.clone(),
        activation: spec.hidden_activation,
        head: m.head_kind()?,
        init: m.init_scheme(),
    };
    if spec.input_dim != data.train.dim() {
        return Err(CliError::config("model.architecture", format!("input width {} but the data has {}", spec.input_dim, data.train.dim())));
    }
    let (assembly, histories) = scl::train_members(&data.train, &partition, &arch, &opt.sgd(cfg.seed), cfg.seed)?;
    let name = match spec.head {
        Head::Softmax => "conventional",
        Head::Cool(_) => "cool(x)",
        Head::NoCompetition(_) => "no-competition",
    };
    let mut variants = vec![(name.to_string(), assembly.clone())];
    if matches!(spec.head, Head::Cool(_)) && cfg.scl.as_ref().is_none_or(|s| s.sum_variant) {
        variants.push(("cool(+)".to_string(), assembly.with_aggregate_op(AggregateOp::Sum)?));
    }
    let reports = variants
        .iter()
        .map(|(n, a)| scl::scl_report(n, a, &data.train, &test))
        .collect::<cool_core::Result<Vec<_>>>()?;

    let manifest = scl::save_assembly(&assembly, &out.join("assembly"))?;
    let path = out.join("scl.jsonl");
    write_jsonl(&path, &reports)?;
    let hist_path = out.join("members.jsonl");
    write_jsonl(&hist_path, &histories)?;
    Ok(Outcome {
        metrics: json!({ "reports": reports }),
        artifacts: vec![manifest, path, hist_path],
        summary: scl::format_table(&reports),
    })
}

fn run_oneclass(cfg: &RunConfig, out: &Path, progress: bool) -> Result<Outcome> {
    let m = cfg.model()?;
    let o = cfg.oneclass.as_ref().expect("validated");
    let spec = m.net_spec()?;
    let data = load_data(cfg.dataset()?, cfg.seed)?;
    let setup = OneClassSetup {
        sampler: o.sampler(spec.input_dim),
        spec,
        init: m.init_scheme(),
        sgd: cfg.optimizer()?.sgd(cfg.seed),
        k_neg: o.k_neg,
    };
    let eval = data.test.as_ref().unwrap_or(&data.train);
    let (models, log) = oneclass::train_ensemble(&data.train, &o.classes, &setup, cfg.seed, Some(eval), o.threshold, |e| {
        if let (true, Some(r)) = (progress, &e.report) {
            eprintln!(
                "epoch {:>4}  loss {:.5}  acc {:.4}  rejection {:.4}",
                e.epoch, e.mean_train_loss, r.max_activation_accuracy, r.rejection_rate
            );
        }
    })?;
    let mut artifacts = Vec::new();
    for model in &models {
        let path = out.join(format!("oneclass_class{}.bin", model.positive_class));
        nn::save_network(&model.net, &path)?;
        artifacts.push(path);
    }
    let path = out.join("epochs.jsonl");
    write_jsonl(&path, &log)?;
    artifacts.push(path);
    let r = log.last().and_then(|e| e.report).expect("at least one epoch with a report");
    let mut summary = format!("{:<24} {:>10}\n", "metric", "value");
    let _ = writeln!(summary, "{:<24} {:>10.2}", "max-activation acc %", 100.0 * r.max_activation_accuracy);
    let _ = writeln!(summary, "{:<24} {:>10.2}", "thresholded acc %", 100.0 * r.thresholded_accuracy);
    let _ = writeln!(summary, "{:<24} {:>10.2}", "rejection rate %", 100.0 * r.rejection_rate);
    Ok(Outcome {
        metrics: serde_json::to_value(r).map_err(|e| CliError::Parse(e.to_string()))?,
        artifacts,
        summary,
    })
}
