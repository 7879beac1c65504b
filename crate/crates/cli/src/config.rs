//! Declarative run configuration, parsed from TOML and validated before any
//! compute starts.

use std::path::{Path, PathBuf};

use cool_core::datasets::{GridSpec, NegativeSampler, TwoCircles};
use cool_core::{Activation, AggregateConfig, AggregateOp, Head, HeadKind, InitScheme, NetSpec, SgdConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Train,
    Vizmap,
    Fool,
    Scl,
    Oneclass,
    NoiseProbe,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Train => "train",
            Experiment::Vizmap => "vizmap",
            Experiment::Fool => "fool",
            Experiment::Scl => "scl",
            Experiment::Oneclass => "oneclass",
            Experiment::NoiseProbe => "noise-probe",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional in files; the subcommand fills it in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vizmap: Option<VizmapConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fool: Option<FoolConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_probe: Option<NoiseProbeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scl: Option<SclConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oneclass: Option<OneClassConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetConfig {
    TwoCircles {
        #[serde(default = "d_n_total")]
        n_total: usize,
        #[serde(default = "d_r_inner")]
        r_inner: f64,
        #[serde(default = "d_r_outer")]
        r_outer: f64,
        #[serde(default = "d_band")]
        band_width: f64,
    },
    Spiral {
        #[serde(default = "d_spiral_n")]
        n_per_class: usize,
    },
    Disk {
        #[serde(default = "d_spiral_n")]
        n: usize,
        #[serde(default = "d_radius")]
        radius: f64,
    },
    Mnist {
        dir: PathBuf,
        #[serde(default)]
        train_limit: Option<usize>,
        #[serde(default)]
        test_limit: Option<usize>,
        /// Keep only these classes (labels stay global).
        #[serde(default)]
        classes: Option<Vec<usize>>,
        #[serde(default)]
        per_class_limit: Option<usize>,
    },
    Csv {
        train: PathBuf,
        #[serde(default)]
        test: Option<PathBuf>,
    },
}

fn d_n_total() -> usize {
    TwoCircles::default().n_total
}
fn d_r_inner() -> f64 {
    TwoCircles::default().r_inner
}
fn d_r_outer() -> f64 {
    TwoCircles::default().r_outer
}
fn d_band() -> f64 {
    TwoCircles::default().band_width
}
fn d_spiral_n() -> usize {
    500
}
fn d_radius() -> f64 {
    1.0
}

impl DatasetConfig {
    pub fn two_circles(&self) -> Option<TwoCircles> {
        match *self {
            DatasetConfig::TwoCircles {
                n_total,
                r_inner,
                r_outer,
                band_width,
            } => Some(TwoCircles {
                n_total,
                r_inner,
                r_outer,
                band_width,
            }),
            _ => None,
        }
    }

    pub fn has_test_split(&self) -> bool {
        matches!(self, DatasetConfig::Mnist { .. } | DatasetConfig::Csv { test: Some(_), .. })
    }

    fn validate(&self) -> Result<()> {
        match self {
            DatasetConfig::TwoCircles { .. } => self.two_circles().expect("two circles").validate().map_err(|e| field("dataset", e)),
            DatasetConfig::Spiral { n_per_class } if *n_per_class == 0 => Err(CliError::config("dataset.n_per_class", "must be >= 1")),
            DatasetConfig::Disk { n, radius } if *n == 0 || !(radius.is_finite() && *radius > 0.0) => Err(CliError::config("dataset", "disk needs n >= 1 and radius > 0")),
            DatasetConfig::Mnist { dir, .. } => require_file(&dir.join("train-images-idx3-ubyte"), "dataset.dir"),
            DatasetConfig::Csv { train, test, .. } => {
                require_file(train, "dataset.train")?;
                if let Some(t) = test {
                    require_file(t, "dataset.test")?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn resolve(&mut self, base: &Path) {
        match self {
            DatasetConfig::Mnist { dir, .. } => *dir = join(base, dir),
            DatasetConfig::Csv { train, test, .. } => {
                *train = join(base, train);
                if let Some(t) = test {
                    *t = join(base, t);
                }
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadName {
    Softmax,
    Cool,
    NoCompetition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitName {
    Glorot,
    HighVarianceOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Comma-separated layer widths from input to output, e.g. `2,400,300,10`.
    pub architecture: String,
    #[serde(default = "d_activation")]
    pub hidden_activation: Activation,
    pub head: HeadName,
    #[serde(default = "d_omega")]
    pub omega: usize,
    pub num_classes: usize,
    #[serde(default)]
    pub softness: Option<Vec<f64>>,
    #[serde(default = "d_op")]
    pub op: AggregateOp,
    #[serde(default = "d_init")]
    pub init: InitName,
    #[serde(default = "d_output_std")]
    pub output_std: f64,
}

fn d_activation() -> Activation {
    Activation::Logistic
}
fn d_omega() -> usize {
    1
}
fn d_op() -> AggregateOp {
    AggregateOp::Product
}
fn d_init() -> InitName {
    InitName::Glorot
}
fn d_output_std() -> f64 {
    1.0
}

/// Parses `2,400,300,10` into widths.
pub fn parse_architecture(s: &str) -> Result<Vec<usize>> {
    let widths: Vec<usize> = s
        .split(',')
        .map(|w| w.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::config("model.architecture", format!("`{s}` is not a comma-separated list of widths")))?;
    if widths.len() < 2 {
        return Err(CliError::config("model.architecture", "needs at least an input and an output width"));
    }
    if widths.contains(&0) {
        return Err(CliError::config("model.architecture", "widths must be >= 1"));
    }
    Ok(widths)
}

impl ModelConfig {
    pub fn head_kind(&self) -> Result<HeadKind> {
        Ok(match self.head {
            HeadName::Softmax => HeadKind::Softmax,
            HeadName::Cool => HeadKind::Cool {
                omega: self.omega,
                op: self.op,
            },
            HeadName::NoCompetition => HeadKind::NoCompetition { omega: self.omega },
        })
    }

    pub fn init_scheme(&self) -> InitScheme {
        match self.init {
            InitName::Glorot => InitScheme::Glorot,
            InitName::HighVarianceOutput => InitScheme::GlorotWithHighVarianceOutput { output_std: self.output_std },
        }
    }

    pub fn hidden(&self) -> Result<Vec<usize>> {
        let w = parse_architecture(&self.architecture)?;
        Ok(w[1..w.len() - 1].to_vec())
    }

    pub fn input_dim(&self) -> Result<usize> {
        Ok(parse_architecture(&self.architecture)?[0])
    }

    /// Full network spec; checks that the declared output width equals the head's.
    pub fn net_spec(&self) -> Result<NetSpec> {
        let widths = parse_architecture(&self.architecture)?;
        if self.omega == 0 {
            return Err(CliError::config("model.omega", "must be >= 1"));
        }
        if self.num_classes == 0 {
            return Err(CliError::config("model.num_classes", "must be >= 1"));
        }
        if self.head == HeadName::Softmax && self.omega != 1 {
            return Err(CliError::config("model.omega", "a softmax head has omega = 1"));
        }
        let head = match self.head_kind()?.build(self.num_classes).map_err(|e| field("model", e))? {
            Head::Cool(cfg) => Head::Cool(self.with_softness(cfg)?),
            other => {
                if self.softness.is_some() {
                    return Err(CliError::config("model.softness", "only applies to a cool head"));
                }
                other
            }
        };
        let declared = *widths.last().expect("non-empty");
        let expected = head.width(self.num_classes);
        if declared != expected {
            let how = match self.head {
                HeadName::Softmax => format!("{} classes", self.num_classes),
                _ => format!("omega {} x {} classes = {}", self.omega, self.num_classes, expected),
            };
            return Err(CliError::config(
                "model.architecture",
                format!("declared output width {declared} does not match the head ({how})"),
            ));
        }
        let spec = NetSpec::new(widths[0], widths[1..widths.len() - 1].to_vec(), self.num_classes, head).with_activation(self.hidden_activation);
        spec.validate().map_err(|e| field("model", e))?;
        self.init_scheme().validate().map_err(|e| field("model.output_std", e))?;
        Ok(spec)
    }

    fn with_softness(&self, mut cfg: AggregateConfig) -> Result<AggregateConfig> {
        if let Some(s) = &self.softness {
            cfg.set_softness(s.clone()).map_err(|e| field("model.softness", e))?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    pub epochs: usize,
    /// Stop once training accuracy reaches this value.
    #[serde(default)]
    pub stop_at_train_accuracy: Option<f64>,
    /// Hold out this tail fraction of the training set for validation.
    #[serde(default)]
    pub validation_fraction: Option<f64>,
}

fn d_batch() -> usize {
    32
}

impl OptimizerConfig {
    pub fn sgd(&self, seed: u64) -> SgdConfig {
        SgdConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.epochs,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        self.sgd(0).validate().map_err(|e| field("optimizer", e))?;
        if let Some(v) = self.validation_fraction {
            if !(v > 0.0 && v < 1.0) {
                return Err(CliError::config("optimizer.validation_fraction", "must be in (0,1)"));
            }
        }
        if let Some(a) = self.stop_at_train_accuracy {
            if !(a > 0.0 && a <= 1.0) {
                return Err(CliError::config("optimizer.stop_at_train_accuracy", "must be in (0,1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VizmapConfig {
    pub model: PathBuf,
    #[serde(default = "d_range")]
    pub x_range: (f64, f64),
    #[serde(default = "d_range")]
    pub y_range: (f64, f64),
    #[serde(default = "d_resolution")]
    pub resolution: usize,
}

fn d_range() -> (f64, f64) {
    GridSpec::default().x_range
}
fn d_resolution() -> usize {
    GridSpec::default().resolution
}

impl VizmapConfig {
    pub fn grid(&self) -> GridSpec {
        GridSpec {
            x_range: self.x_range,
            y_range: self.y_range,
            resolution: self.resolution,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoolConfig {
    pub model: PathBuf,
    #[serde(default = "d_trials")]
    pub trials_per_class: usize,
    #[serde(default = "d_budget")]
    pub budget: usize,
    #[serde(default = "d_fool_threshold")]
    pub threshold: f64,
    #[serde(default = "d_fool_lr")]
    pub learning_rate: f64,
    /// Target classes; all classes when absent.
    #[serde(default)]
    pub classes: Option<Vec<usize>>,
    #[serde(default = "d_true")]
    pub export_images: bool,
}

fn d_trials() -> usize {
    20
}
fn d_budget() -> usize {
    10_000
}
fn d_fool_threshold() -> f64 {
    0.99
}
fn d_fool_lr() -> f64 {
    1e-5
}
fn d_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseProbeConfig {
    pub model: PathBuf,
    #[serde(default = "d_samples")]
    pub samples: usize,
    #[serde(default = "d_fool_threshold")]
    pub threshold: f64,
}

fn d_samples() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SclConfig {
    /// Class subsets; consecutive pairs over all classes when absent.
    #[serde(default)]
    pub subsets: Option<Vec<Vec<usize>>>,
    /// Also evaluate COOL members with sum aggregation.
    #[serde(default = "d_true")]
    pub sum_variant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SamplerConfig {
    UniformNoise,
    FixedPoint { point: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneClassConfig {
    pub classes: Vec<usize>,
    #[serde(default = "d_k_neg")]
    pub k_neg: usize,
    #[serde(default = "d_sampler")]
    pub sampler: SamplerConfig,
    #[serde(default = "d_oc_threshold")]
    pub threshold: f64,
}

fn d_k_neg() -> usize {
    1
}
fn d_sampler() -> SamplerConfig {
    SamplerConfig::UniformNoise
}
fn d_oc_threshold() -> f64 {
    0.5
}

impl OneClassConfig {
    pub fn sampler(&self, dim: usize) -> NegativeSampler {
        match &self.sampler {
            SamplerConfig::UniformNoise => NegativeSampler::UniformNoise { dim },
            SamplerConfig::FixedPoint { point } => NegativeSampler::FixedPoint { point: point.clone() },
        }
    }
}

fn join(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn require_file(p: &Path, name: &str) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(CliError::config(name, format!("file {} does not exist", p.display())))
    }
}

fn field(name: &str, e: cool_core::Error) -> CliError {
    CliError::config(name, e.to_string())
}

fn missing(section: &str, experiment: Experiment) -> CliError {
    CliError::config(section, format!("section is required for `{}`", experiment.name()))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Reads a TOML config, or the config embedded in a run manifest (`.json`),
    /// resolving relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = if path.extension().is_some_and(|e| e == "json") {
            crate::manifest::RunManifest::read(path)?.config
        } else {
            Self::from_toml(&std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?)?
        };
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve_paths(&std::path::absolute(&base).unwrap_or(base));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(d) = &mut self.dataset {
            d.resolve(base);
        }
        for p in [
            self.vizmap.as_mut().map(|v| &mut v.model),
            self.fool.as_mut().map(|v| &mut v.model),
            self.noise_probe.as_mut().map(|v| &mut v.model),
        ]
        .into_iter()
        .flatten()
        {
            *p = join(base, p);
        }
        if let Some(o) = &mut self.out_dir {
            *o = join(base, o);
        }
    }

    pub fn experiment(&self) -> Result<Experiment> {
        self.experiment.ok_or_else(|| CliError::config("experiment", "not set by the config or the subcommand"))
    }

    /// Sets the experiment from the subcommand; a different value in the file is an error.
    pub fn set_experiment(&mut self, e: Experiment) -> Result<()> {
        match self.experiment {
            Some(own) if own != e => Err(CliError::config(
                "experiment",
                format!("config declares `{}` but the subcommand is `{}`", own.name(), e.name()),
            )),
            _ => {
                self.experiment = Some(e);
                Ok(())
            }
        }
    }

    fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T> {
        match (s, self.experiment) {
            (Some(v), _) => Ok(v),
            (None, Some(e)) => Err(missing(name, e)),
            (None, None) => Err(CliError::config(name, "section is required")),
        }
    }

    pub fn dataset(&self) -> Result<&DatasetConfig> {
        self.section(&self.dataset, "dataset")
    }

    pub fn model(&self) -> Result<&ModelConfig> {
        self.section(&self.model, "model")
    }

    pub fn optimizer(&self) -> Result<&OptimizerConfig> {
        self.section(&self.optimizer, "optimizer")
    }

    /// Checks every field the chosen experiment needs.
    pub fn validate(&self) -> Result<()> {
        let e = self.experiment()?;
        match e {
            Experiment::Train => {
                self.dataset()?.validate()?;
                self.model()?.net_spec()?;
                self.optimizer()?.validate()?;
            }
            Experiment::Vizmap => {
                let v = self.vizmap.as_ref().ok_or_else(|| missing("vizmap", e))?;
                require_file(&v.model, "vizmap.model")?;
                v.grid().validate().map_err(|err| field("vizmap", err))?;
            }
            Experiment::Fool => {
                let f = self.fool.as_ref().ok_or_else(|| missing("fool", e))?;
                require_file(&f.model, "fool.model")?;
                if f.trials_per_class == 0 {
                    return Err(CliError::config("fool.trials_per_class", "must be >= 1"));
                }
                let probe = cool_core::fooling::FgnConfig {
                    budget: f.budget,
                    confidence_threshold: f.threshold,
                    learning_rate: f.learning_rate,
                    ..Default::default()
                };
                probe.validate().map_err(|err| field("fool", err))?;
            }
            Experiment::NoiseProbe => {
                let n = self.noise_probe.as_ref().ok_or_else(|| missing("noise_probe", e))?;
                require_file(&n.model, "noise_probe.model")?;
                if n.samples == 0 {
                    return Err(CliError::config("noise_probe.samples", "must be >= 1"));
                }
                if !(n.threshold > 0.0 && n.threshold < 1.0) {
                    return Err(CliError::config("noise_probe.threshold", "must be in (0,1)"));
                }
            }
            Experiment::Scl => {
                let d = self.dataset()?;
                d.validate()?;
                if !d.has_test_split() {
                    return Err(CliError::config("dataset", "scl needs a dataset with a test split (mnist, or csv with `test`)"));
                }
                let m = self.model()?;
                m.net_spec()?;
                self.optimizer()?.validate()?;
                if let Some(subsets) = self.scl.as_ref().and_then(|s| s.subsets.clone()) {
                    let p = cool_core::datasets::Partition::new(subsets).map_err(|err| field("scl.subsets", err))?;
                    if p.subsets().iter().any(|s| s.len() != m.num_classes) {
                        return Err(CliError::config("scl.subsets", format!("every subset must have model.num_classes = {} classes", m.num_classes)));
                    }
                } else if m.num_classes != 2 {
                    return Err(CliError::config("model.num_classes", "the default pair partition needs 2 classes per member"));
                }
            }
            Experiment::Oneclass => {
                self.dataset()?.validate()?;
                let m = self.model()?;
                let spec = m.net_spec()?;
                self.optimizer()?.validate()?;
                let o = self.oneclass.as_ref().ok_or_else(|| missing("oneclass", e))?;
                if m.num_classes != 2 {
                    return Err(CliError::config("model.num_classes", "one-class models have 2 classes"));
                }
                if o.classes.is_empty() {
                    return Err(CliError::config("oneclass.classes", "needs at least one class"));
                }
                if o.k_neg == 0 {
                    return Err(CliError::config("oneclass.k_neg", "must be >= 1"));
                }
                if !(0.0..=1.0).contains(&o.threshold) {
                    return Err(CliError::config("oneclass.threshold", "must be in [0,1]"));
                }
                if o.sampler(spec.input_dim).dim() != spec.input_dim {
                    return Err(CliError::config("oneclass.sampler", "point width differs from the model input width"));
                }
            }
        }
        Ok(())
    }
}
