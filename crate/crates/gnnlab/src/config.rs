//! TOML run configuration.
//!
//! ```toml
//! [dataset]
//! generator = "sbm"        # or path = "graph.txt"
//! blocks = [100, 100]
//! intra_p = 0.3
//! inter_p = 0.02
//! features = 8
//! seed = 42
//! train_fraction = 0.8
//!
//! [model]
//! hidden = 2
//! kappa = 0.1
//! loss = "mse"             # or "ce"
//! activation = "relu-sqrt2" # or "relu"
//!
//! [train]
//! mode = "mini"            # or "full"
//! batch_size = 20
//! fanout = 3
//! eta = "theoretical"      # or a number
//! max_iters = 1000
//! eval_every = 10
//! seed = 1
//!
//! [sweep]
//! batch_sizes = [20, 50]
//! fanouts = [1, 3]
//! etas = ["theoretical-grid"]
//! seeds = [1, 2, 3]
//!
//! [metrics]
//! target_loss = "derive"   # "tail", a number, or omitted
//! target_accuracy = "derive"
//! ```
//!
//! Unknown keys anywhere are errors.

use std::path::{Path, PathBuf};

use gnnlab_core::generate::{generate_er, generate_random_regular, generate_sbm};
use gnnlab_core::trainer::{DEFAULT_C4, DEFAULT_C6};
use gnnlab_core::{split_train_test, ActivationScale, Graph, LossKind, Normalization};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::ManifestSection;

/// Environment variable that replaces every seed in a configuration.
pub const SEED_ENV: &str = "GNNLAB_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Sbm,
    Er,
    Regular,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intra_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inter_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Fraction of nodes assigned to training; when omitted a graph file's
    /// own split is kept and generated graphs train on every node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_fraction: Option<f64>,
}

/// A loaded dataset and the bytes its content hash is taken over.
pub struct Dataset {
    pub graph: Graph,
    pub content: Vec<u8>,
}

impl DatasetConfig {
    /// Reads or generates the graph. Relative paths resolve against `base`.
    pub fn load(&self, base: &Path) -> Result<Dataset> {
        fn need<T>(v: Option<T>, key: &str) -> Result<T> {
            v.ok_or_else(|| Error::Config(format!("[dataset] needs `{}` for this generator", key)))
        }
        let (graph, content) = match (&self.path, self.generator) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "[dataset] takes either `path` or `generator`, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config("[dataset] needs `path` or `generator`".into()))
            }
            (Some(p), None) => {
                let full = base.join(p);
                let bytes = std::fs::read(&full).map_err(|e| Error::io(&full, e))?;
                let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Parse {
                    path: full.clone(),
                    line: 0,
                    msg: "file is not UTF-8".into(),
                })?;
                (crate::graph_io::parse_graph(&text, &full)?, bytes)
            }
            (None, Some(kind)) => {
                let r = need(self.features, "features")?;
                let g = match kind {
                    GeneratorKind::Sbm => generate_sbm(
                        &need(self.blocks.clone(), "blocks")?,
                        need(self.intra_p, "intra_p")?,
                        need(self.inter_p, "inter_p")?,
                        r,
                        self.seed,
                    )?,
                    GeneratorKind::Er => {
                        generate_er(need(self.nodes, "nodes")?, need(self.p, "p")?, r, self.seed)?
                    }
                    GeneratorKind::Regular => generate_random_regular(
                        need(self.nodes, "nodes")?,
                        need(self.degree, "degree")?,
                        r,
                        self.seed,
                    )?,
                };
                (g, Vec::new())
            }
        };
        let graph = match self.train_fraction {
            Some(f) => split_train_test(&graph, f, self.seed)?,
            None => graph,
        };
        let content = if content.is_empty() {
            crate::graph_io::to_text(&graph).into_bytes()
        } else {
            content
        };
        Ok(Dataset { graph, content })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossName {
    #[default]
    Mse,
    Ce,
}

impl From<LossName> for LossKind {
    fn from(l: LossName) -> Self {
        match l {
            LossName::Mse => LossKind::Mse,
            LossName::Ce => LossKind::Ce,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    #[default]
    Relu,
    ReluSqrt2,
}

impl From<Activation> for ActivationScale {
    fn from(a: Activation) -> Self {
        match a {
            Activation::Relu => ActivationScale::One,
            Activation::ReluSqrt2 => ActivationScale::Sqrt2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default)]
    pub loss: LossName,
    #[serde(default)]
    pub activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: default_hidden(),
            kappa: 1.0,
            loss: LossName::Mse,
            activation: Activation::Relu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    Full,
    #[default]
    Mini,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationName {
    #[default]
    SampledGraph,
    FullDegrees,
    BatchTargets,
}

impl From<NormalizationName> for Normalization {
    fn from(n: NormalizationName) -> Self {
        match n {
            NormalizationName::SampledGraph => Normalization::SampledGraph,
            NormalizationName::FullDegrees => Normalization::FullDegrees,
            NormalizationName::BatchTargets => Normalization::BatchTargets,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClockName {
    /// Elapsed time from the cost model; reproducible.
    #[default]
    Modeled,
    /// Host wall-clock time; not reproducible.
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaName {
    /// Closed-form step for the run's own `(b, β)`.
    Theoretical,
    /// Midpoint of the step-size intervals shared by every grid point.
    TheoreticalGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSetting {
    Value(f64),
    Named(EtaName),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default)]
    pub mode: ModeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fanout: Option<usize>,
    #[serde(default = "default_eta")]
    pub eta: EtaSetting,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_loss: Option<f64>,
    #[serde(default = "one_usize")]
    pub eval_every: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub nested: bool,
    #[serde(default)]
    pub normalization: NormalizationName,
    #[serde(default)]
    pub clock: ClockName,
    /// Modeled-clock compute capacity, nodes per second.
    #[serde(default = "one")]
    pub compute: f64,
    /// Modeled-clock bandwidth, nodes per second.
    #[serde(default = "one")]
    pub bandwidth: f64,
    #[serde(default = "default_c4")]
    pub c4: f64,
    #[serde(default = "default_c6")]
    pub c6: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            mode: ModeName::Mini,
            batch_size: None,
            fanout: None,
            eta: default_eta(),
            max_iters: default_max_iters(),
            target_loss: None,
            eval_every: 1,
            seed: 0,
            nested: false,
            normalization: NormalizationName::SampledGraph,
            clock: ClockName::Modeled,
            compute: 1.0,
            bandwidth: 1.0,
            c4: DEFAULT_C4,
            c6: DEFAULT_C6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub batch_sizes: Vec<usize>,
    pub fanouts: Vec<usize>,
    #[serde(default = "default_etas")]
    pub etas: Vec<EtaSetting>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetRule {
    /// First window of the reference trajectory whose variance is below the threshold.
    Derive,
    /// Worst value over the reference trajectory's last `tail_window` samples.
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSetting {
    Value(f64),
    Rule(TargetRule),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    #[serde(default = "default_loss_target", skip_serializing_if = "Option::is_none")]
    pub target_loss: Option<TargetSetting>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_accuracy: Option<TargetSetting>,
    #[serde(default = "default_tail_window")]
    pub tail_window: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            target_loss: default_loss_target(),
            target_accuracy: None,
            tail_window: default_tail_window(),
        }
    }
}

fn default_hidden() -> usize {
    2
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_eta() -> EtaSetting {
    EtaSetting::Named(EtaName::Theoretical)
}
fn default_etas() -> Vec<EtaSetting> {
    vec![default_eta()]
}
fn default_max_iters() -> usize {
    1000
}
fn default_c4() -> f64 {
    DEFAULT_C4
}
fn default_c6() -> f64 {
    DEFAULT_C6
}
fn default_loss_target() -> Option<TargetSetting> {
    Some(TargetSetting::Rule(TargetRule::Derive))
}
fn default_tail_window() -> usize {
    100
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Replaces every seed with `seed` (sweep seeds become `seed, seed+1, ...`).
    /// Manifests are already resolved and are left untouched.
    pub fn override_seeds(&mut self, seed: u64) {
        if self.manifest.is_some() {
            return;
        }
        self.dataset.seed = seed;
        self.train.seed = seed;
        if let Some(s) = &mut self.sweep {
            let n = s.seeds.len() as u64;
            s.seeds = (0..n).map(|k| seed.wrapping_add(k)).collect();
        }
    }

    /// Applies `GNNLAB_SEED` when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            let seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{}={:?} is not a u64", SEED_ENV, v)))?;
            self.override_seeds(seed);
        }
        Ok(())
    }
}
