//! Benchmark construction and on-disk manifests.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassifierHandle, LabeledDataset, Split};
use crate::seed;
use crate::tinylearn::{generate_task, train, weights, Activation, Mlp, MlpSpec, SyntheticTaskSpec, TaskFamily, TrainConfig};
use crate::variants::{self, ExtractionMode, NoiseMode, OutputNoise, TaskTag};

/// Task shape shared by all victims; each victim draws its own geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTemplate {
    pub family: TaskFamily,
    pub num_classes: usize,
    pub dim: usize,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(default = "default_noise")]
    pub label_noise: f64,
    #[serde(default = "default_spread")]
    pub spread: f64,
}

fn default_noise() -> f64 {
    0.1
}

fn default_spread() -> f64 {
    1.0
}

impl TaskTemplate {
    pub fn instantiate(&self, seed: u64) -> SyntheticTaskSpec {
        SyntheticTaskSpec {
            family: self.family,
            num_classes: self.num_classes,
            dim: self.dim,
            n_train: self.n_train,
            n_test: self.n_test,
            label_noise: self.label_noise,
            spread: self.spread,
            seed,
            sample_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StolenEntry {
    pub tag: TaskTag,
    #[serde(default = "one")]
    pub count: usize,
    /// Optional output obfuscation applied on top of the stolen model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseMode>,
}

fn one() -> usize {
    1
}

/// Where an attacker's training data comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// The victim's own training set.
    VictimTrain,
    /// A fresh sample from the victim's task, disjoint from its training set.
    Fresh,
}

fn default_source() -> DataSource {
    DataSource::VictimTrain
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub seed: u64,
    pub victims: usize,
    pub task: TaskTemplate,
    pub hidden: Vec<usize>,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default)]
    pub train: TrainConfig,
    pub stolen: Vec<StolenEntry>,
    pub unrelated: usize,
    /// Extra unrelated models per victim, held out for threshold calibration.
    #[serde(default)]
    pub calibration: usize,
    /// Query pool of extraction attacks.
    #[serde(default = "default_source")]
    pub extraction_pool: DataSource,
    /// Training data of finetuned copies. Transfer always uses a fresh sample.
    #[serde(default = "default_source")]
    pub finetune_data: DataSource,
}

fn default_activation() -> Activation {
    Activation::Relu
}

impl BenchmarkConfig {
    /// Five victims on overlapping 5-class blobs, five suspects per tag and
    /// ten unrelated models each.
    pub fn desk() -> Self {
        let tags = [
            TaskTag::Same,
            TaskTag::Quantize { bits: 8 },
            TaskTag::finetune(),
            TaskTag::Prune { fraction: 0.2 },
            TaskTag::transfer(),
            TaskTag::probit_extraction(),
            TaskTag::label_extraction(),
            TaskTag::adversarial_label_extraction(),
        ];
        Self {
            seed: 0,
            victims: 5,
            task: TaskTemplate {
                family: TaskFamily::Blobs,
                num_classes: 5,
                dim: 10,
                n_train: 1000,
                n_test: 2000,
                label_noise: 0.1,
                spread: 6.0,
            },
            hidden: vec![32],
            activation: Activation::Relu,
            // A small step and many epochs: victims settle instead of ending
            // on a noisy SGD iterate that any further training would move.
            train: TrainConfig {
                epochs: 60,
                learning_rate: 0.01,
                ..TrainConfig::default()
            },
            stolen: tags
                .into_iter()
                .map(|tag| StolenEntry {
                    tag,
                    count: 5,
                    noise: None,
                })
                .collect(),
            unrelated: 10,
            calibration: 5,
            extraction_pool: DataSource::VictimTrain,
            finetune_data: DataSource::VictimTrain,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stolen.is_empty() || self.stolen.iter().all(|e| e.count == 0) {
            return Err(Error::EmptyTaskList);
        }
        if self.victims == 0 {
            return Err(Error::InvalidConfig("at least one victim is required".into()));
        }
        if self.unrelated == 0 {
            return Err(Error::InvalidConfig("every victim needs at least one unrelated model".into()));
        }
        if let Some(e) = self.stolen.iter().find(|e| !e.tag.is_positive()) {
            return Err(Error::InvalidConfig(format!("stolen entry tagged {}", e.tag.name())));
        }
        self.train.validate()?;
        self.arch(0).validate()?;
        Ok(())
    }

    fn arch(&self, seed: u64) -> MlpSpec {
        MlpSpec::new(self.task.dim, &self.hidden, self.task.num_classes, self.activation, seed)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A suspect model with its provenance.
#[derive(Debug, Clone)]
pub struct Suspect {
    /// What the evaluator queries, including any output noise.
    pub handle: ClassifierHandle,
    /// The underlying network before output noise.
    pub base: ClassifierHandle,
    pub tag: TaskTag,
    pub seed: u64,
    pub noise: Option<NoiseMode>,
}

#[derive(Debug, Clone)]
pub struct VictimEntry {
    pub handle: ClassifierHandle,
    pub task: SyntheticTaskSpec,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub stolen: Vec<Suspect>,
    pub unrelated: Vec<Suspect>,
    pub calibration: Vec<ClassifierHandle>,
}

impl VictimEntry {
    pub fn data(&self, split: Split) -> &LabeledDataset {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    /// Stolen models first, then unrelated ones.
    pub fn suspects(&self) -> impl Iterator<Item = &Suspect> {
        self.stolen.iter().chain(&self.unrelated)
    }
}

/// Victims with their stolen and unrelated suspects.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub config: BenchmarkConfig,
    pub victims: Vec<VictimEntry>,
}

/// Sizes of the models involved, recorded so reports state their scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScale {
    pub input_dim: usize,
    pub num_classes: usize,
    pub hidden: Vec<usize>,
    pub parameters: usize,
    pub n_train: usize,
    pub n_test: usize,
}

impl Benchmark {
    pub fn model_scale(&self) -> ModelScale {
        let c = &self.config;
        let parameters = self
            .victims
            .first()
            .and_then(|v| v.handle.as_mlp())
            .map_or(0, Mlp::num_parameters);
        ModelScale {
            input_dim: c.task.dim,
            num_classes: c.task.num_classes,
            hidden: c.hidden.clone(),
            parameters,
            n_train: c.task.n_train,
            n_test: c.task.n_test,
        }
    }

    pub fn num_pairs(&self) -> usize {
        self.victims.iter().map(|v| v.stolen.len() + v.unrelated.len()).sum()
    }
}

mod labels {
    use crate::seed::label;

    pub fn task() -> u64 {
        label("task")
    }
    pub fn victim() -> u64 {
        label("victim")
    }
    pub fn stolen() -> u64 {
        label("stolen")
    }
    pub fn unrelated() -> u64 {
        label("unrelated")
    }
    pub fn calibration() -> u64 {
        label("calibration")
    }
    pub fn sample() -> u64 {
        label("sample")
    }
}

fn victim_task(cfg: &BenchmarkConfig, i: usize) -> SyntheticTaskSpec {
    cfg.task.instantiate(seed::derive(cfg.seed, &[labels::task(), i as u64]))
}

fn victim_seed(cfg: &BenchmarkConfig, i: usize) -> u64 {
    seed::derive(cfg.seed, &[labels::victim(), i as u64])
}

fn stolen_seed(cfg: &BenchmarkConfig, i: usize, entry: usize, j: usize) -> u64 {
    seed::derive(cfg.seed, &[labels::stolen(), i as u64, entry as u64, j as u64])
}

fn independent_seed(cfg: &BenchmarkConfig, kind: u64, i: usize, j: usize) -> u64 {
    seed::derive(cfg.seed, &[kind, i as u64, j as u64])
}

/// Training split of a fresh draw from `task`.
fn fresh_sample(task: &SyntheticTaskSpec, seed: u64) -> Result<LabeledDataset> {
    let (train, _) = generate_task(&task.resampled(seed::derive(seed, &[labels::sample()])))?;
    Ok(train)
}

fn make_stolen(
    cfg: &BenchmarkConfig,
    victim: &ClassifierHandle,
    task: &SyntheticTaskSpec,
    victim_train: &LabeledDataset,
    tag: &TaskTag,
    seed: u64,
) -> Result<ClassifierHandle> {
    let arch = cfg.arch(seed);
    let source = |src| match src {
        DataSource::VictimTrain => Ok(victim_train.clone()),
        DataSource::Fresh => fresh_sample(task, seed),
    };
    let pool = || source(cfg.extraction_pool);
    let tuned = |epochs, learning_rate| TrainConfig {
        epochs,
        learning_rate,
        ..cfg.train.clone()
    };
    match tag {
        TaskTag::Same => Ok(victim.clone()),
        TaskTag::Quantize { bits } => variants::quantize(victim, *bits),
        TaskTag::Prune { fraction } => variants::prune(victim, *fraction),
        TaskTag::Finetune { epochs, learning_rate } => {
            variants::finetune(victim, &source(cfg.finetune_data)?, &tuned(*epochs, *learning_rate), seed)
        }
        TaskTag::Transfer { epochs, learning_rate } => {
            variants::transfer(victim, &fresh_sample(task, seed)?, &tuned(*epochs, *learning_rate), seed)
        }
        TaskTag::ProbitExtraction { epochs, learning_rate } => {
            variants::extract(victim, &pool()?, &arch, &tuned(*epochs, *learning_rate), ExtractionMode::Probits, seed)
        }
        TaskTag::LabelExtraction { epochs, learning_rate } => {
            variants::extract(victim, &pool()?, &arch, &tuned(*epochs, *learning_rate), ExtractionMode::Labels, seed)
        }
        TaskTag::AdversarialLabelExtraction {
            epochs,
            learning_rate,
            warmup_epochs,
            epsilon,
        } => variants::extract(
            victim,
            &pool()?,
            &arch,
            &tuned(*epochs, *learning_rate),
            ExtractionMode::AdversarialLabels {
                warmup_epochs: *warmup_epochs,
                epsilon: *epsilon,
            },
            seed,
        ),
        TaskTag::Unrelated => Err(Error::InvalidConfig("unrelated models are not stolen".into())),
    }
}

fn renamed(h: &ClassifierHandle, id: &str) -> ClassifierHandle {
    ClassifierHandle::from_arc(id, h.inner().clone())
}

fn suspect(model: &ClassifierHandle, id: String, tag: TaskTag, seed: u64, noise: Option<NoiseMode>) -> Suspect {
    let base = renamed(model, &id);
    let handle = match noise {
        Some(mode) => ClassifierHandle::new(id, OutputNoise::new(base.clone(), mode)),
        None => base.clone(),
    };
    Suspect {
        handle,
        base,
        tag,
        seed,
        noise,
    }
}

fn build_victim(cfg: &BenchmarkConfig, i: usize) -> Result<VictimEntry> {
    let task = victim_task(cfg, i);
    let (train_set, test_set) = generate_task(&task)?;
    let vid = format!("v{i}");
    let victim = ClassifierHandle::new(vid.clone(), train(&train_set, &cfg.arch(victim_seed(cfg, i)), &cfg.train)?);
    let mut stolen = Vec::new();
    for (e, entry) in cfg.stolen.iter().enumerate() {
        for j in 0..entry.count {
            let s = stolen_seed(cfg, i, e, j);
            let model = make_stolen(cfg, &victim, &task, &train_set, &entry.tag, s)?;
            let id = format!("{vid}/{}-{e}-{j}", entry.tag.name());
            stolen.push(suspect(&model, id, entry.tag.clone(), s, entry.noise));
        }
    }
    let independent = |kind: u64, j: usize| -> Result<(ClassifierHandle, u64)> {
        let s = independent_seed(cfg, kind, i, j);
        let data = fresh_sample(&task, s)?;
        Ok((variants::unrelated(&data, &cfg.arch(0), &cfg.train, s)?, s))
    };
    let unrelated = (0..cfg.unrelated)
        .map(|j| {
            let (h, s) = independent(labels::unrelated(), j)?;
            Ok(suspect(&h, format!("{vid}/unrelated-{j}"), TaskTag::Unrelated, s, None))
        })
        .collect::<Result<Vec<_>>>()?;
    let calibration = (0..cfg.calibration)
        .map(|j| Ok(renamed(&independent(labels::calibration(), j)?.0, &format!("{vid}/calibration-{j}"))))
        .collect::<Result<Vec<_>>>()?;
    info!("built victim {vid}: {} stolen, {} unrelated", stolen.len(), unrelated.len());
    Ok(VictimEntry {
        handle: victim,
        task,
        train: train_set,
        test: test_set,
        stolen,
        unrelated,
        calibration,
    })
}

/// Trains every victim and suspect described by `config`. Deterministic in `config`.
pub fn build_benchmark(config: &BenchmarkConfig) -> Result<Benchmark> {
    config.validate()?;
    let victims = (0..config.victims)
        .into_par_iter()
        .map(|i| build_victim(config, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Benchmark {
        config: config.clone(),
        victims,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub id: String,
    pub file: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<TaskTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VictimRecord {
    pub model: ModelRecord,
    pub task: SyntheticTaskSpec,
    pub stolen: Vec<ModelRecord>,
    pub unrelated: Vec<ModelRecord>,
    #[serde(default)]
    pub calibration: Vec<ModelRecord>,
}

/// Everything needed to reload a benchmark exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: BenchmarkConfig,
    pub victims: Vec<VictimRecord>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn mlp(h: &ClassifierHandle) -> Result<&Mlp> {
    h.as_mlp().ok_or_else(|| Error::NotAnMlp(h.id().into()))
}

fn file_name(id: &str) -> String {
    format!("models/{}.bin", id.replace('/', "__"))
}

impl Benchmark {
    /// Writes `dir/manifest.json` and one weight file per model under `dir/models`.
    pub fn save(&self, dir: &Path) -> Result<Manifest> {
        fs::create_dir_all(dir.join("models"))?;
        let write = |id: &str, m: &Mlp| -> Result<String> {
            let file = file_name(id);
            weights::save(m, &dir.join(&file))?;
            Ok(file)
        };
        let mut victims = Vec::with_capacity(self.victims.len());
        for (i, v) in self.victims.iter().enumerate() {
            let suspect_record = |s: &Suspect| -> Result<ModelRecord> {
                Ok(ModelRecord {
                    id: s.handle.id().into(),
                    file: write(s.handle.id(), mlp(&s.base)?)?,
                    seed: s.seed,
                    tag: Some(s.tag.clone()),
                    noise: s.noise,
                })
            };
            victims.push(VictimRecord {
                model: ModelRecord {
                    id: v.handle.id().into(),
                    file: write(v.handle.id(), mlp(&v.handle)?)?,
                    seed: victim_seed(&self.config, i),
                    tag: None,
                    noise: None,
                },
                task: v.task.clone(),
                stolen: v.stolen.iter().map(suspect_record).collect::<Result<_>>()?,
                unrelated: v.unrelated.iter().map(suspect_record).collect::<Result<_>>()?,
                calibration: v
                    .calibration
                    .iter()
                    .enumerate()
                    .map(|(j, h)| {
                        Ok(ModelRecord {
                            id: h.id().into(),
                            file: write(h.id(), mlp(h)?)?,
                            seed: independent_seed(&self.config, labels::calibration(), i, j),
                            tag: Some(TaskTag::Unrelated),
                            noise: None,
                        })
                    })
                    .collect::<Result<_>>()?,
            });
        }
        let manifest = Manifest {
            version: crate::VERSION.into(),
            config: self.config.clone(),
            victims,
        };
        fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
        Ok(manifest)
    }

    /// Reloads a benchmark written by [`Benchmark::save`].
    pub fn load(dir: &Path) -> Result<Self> {
        let path: PathBuf = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path)?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::InvalidManifest(format!("{}: {e}", path.display())))?;
        manifest
            .config
            .validate()
            .map_err(|e| Error::InvalidManifest(format!("{}: {e}", path.display())))?;
        let read = |r: &ModelRecord| -> Result<Mlp> {
            weights::load(&dir.join(&r.file)).map_err(|e| Error::InvalidManifest(format!("{}: {e}", r.file)))
        };
        let load_suspect = |r: &ModelRecord| -> Result<Suspect> {
            let tag = r
                .tag
                .clone()
                .ok_or_else(|| Error::InvalidManifest(format!("{} has no task tag", r.id)))?;
            let model = ClassifierHandle::new(r.id.clone(), read(r)?);
            Ok(suspect(&model, r.id.clone(), tag, r.seed, r.noise))
        };
        let victims = manifest
            .victims
            .par_iter()
            .map(|v| {
                let (train_set, test_set) = generate_task(&v.task)?;
                let stolen: Vec<Suspect> = v.stolen.iter().map(load_suspect).collect::<Result<_>>()?;
                let unrelated: Vec<Suspect> = v.unrelated.iter().map(load_suspect).collect::<Result<_>>()?;
                if stolen.iter().any(|s| !s.tag.is_positive()) || unrelated.iter().any(|s| s.tag.is_positive()) {
                    return Err(Error::InvalidManifest(format!("victim {} mixes positive and negative tags", v.model.id)));
                }
                Ok(VictimEntry {
                    handle: ClassifierHandle::new(v.model.id.clone(), read(&v.model)?),
                    task: v.task.clone(),
                    train: train_set,
                    test: test_set,
                    stolen,
                    unrelated,
                    calibration: v
                        .calibration
                        .iter()
                        .map(|r| Ok(ClassifierHandle::new(r.id.clone(), read(r)?)))
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: manifest.config,
            victims,
        })
    }
}
