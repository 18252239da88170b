//! Run manifests: a JSON echo of the fully resolved configuration.
//!
//! `run --manifest m.json` reads the file as a baseline when it exists,
//! lets command-line flags override individual values, and rewrites the file
//! with everything resolved, so a later invocation of the same manifest
//! reproduces the run exactly.

use std::fs;
use std::path::{Path, PathBuf};

use actlogic::learner::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::{CliError, DataArgs, Format, KnobArgs};

#[derive(Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Manifest {
    pub dataset: Option<PathBuf>,
    pub format: Option<String>,
    pub labels: Option<PathBuf>,
    pub constraints: Option<PathBuf>,
    pub method: Option<String>,
    pub per_iteration: Option<usize>,
    pub max_iterations: Option<usize>,
    pub target_auc: Option<f64>,
    pub train_count: Option<usize>,
    pub seed: Option<u64>,
    pub train: Option<TrainSection>,
}

/// Optimizer knobs worth recording; the experiment derives its own
/// per-iteration training seeds from the root seed.
#[derive(Clone, Copy, Serialize, Deserialize)]
pub struct TrainSection {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
}

impl TrainSection {
    pub fn to_config(self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            l2: self.l2,
            epochs: self.epochs,
            ..TrainConfig::default()
        }
    }

    pub fn from_config(cfg: &TrainConfig) -> Self {
        TrainSection {
            batch_size: cfg.batch_size,
            learning_rate: cfg.learning_rate,
            l2: cfg.l2,
            epochs: cfg.epochs,
        }
    }
}

/// Everything a run needs, after merging flags over the manifest baseline
/// over built-in defaults. `train_count` resolves against the dataset size
/// later, so it may still be absent here.
pub struct Resolved {
    pub dataset: PathBuf,
    pub format: Format,
    pub labels: Option<PathBuf>,
    pub constraints: PathBuf,
    pub method: String,
    pub per_iteration: usize,
    pub max_iterations: usize,
    pub target_auc: f64,
    pub train_count: Option<usize>,
    pub seed: u64,
    pub train: TrainConfig,
}

pub fn read(path: &Path) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("manifest {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("manifest {}: {e}", path.display())))
}

fn parse_format(name: &str) -> Result<Format, CliError> {
    match name {
        "libsvm" => Ok(Format::Libsvm),
        "sparse" => Ok(Format::Sparse),
        other => Err(CliError::Config(format!(
            "manifest format must be `libsvm` or `sparse`, got `{other}`"
        ))),
    }
}

/// Flags beat manifest values beat defaults.
pub fn resolve(data: DataArgs, knobs: KnobArgs, baseline: Manifest) -> Result<Resolved, CliError> {
    let format = match (data.format, baseline.format) {
        (Some(f), _) => Some(f),
        (None, Some(name)) => Some(parse_format(&name)?),
        (None, None) => None,
    };
    let require = |field: Option<PathBuf>, flag: &str| {
        field.ok_or_else(|| CliError::Config(format!("missing --{flag}")))
    };
    Ok(Resolved {
        dataset: require(data.dataset.or(baseline.dataset), "dataset")?,
        format: format.ok_or_else(|| CliError::Config("missing --format".into()))?,
        labels: data.labels.or(baseline.labels),
        constraints: require(data.constraints.or(baseline.constraints), "constraints")?,
        method: knobs
            .method
            .or(baseline.method)
            .ok_or_else(|| CliError::Config("missing --method".into()))?,
        per_iteration: knobs.per_iter.or(baseline.per_iteration).unwrap_or(100),
        max_iterations: knobs.max_iters.or(baseline.max_iterations).unwrap_or(1000),
        target_auc: knobs.target_auc.or(baseline.target_auc).unwrap_or(0.999),
        train_count: knobs.train_count.or(baseline.train_count),
        seed: knobs.seed.or(baseline.seed).unwrap_or(0),
        train: baseline
            .train
            .map(TrainSection::to_config)
            .unwrap_or_default(),
    })
}

/// Writes the resolved configuration back, with the train count actually used.
pub fn write(path: &Path, r: &Resolved, train_count: usize) -> Result<(), CliError> {
    let full = Manifest {
        dataset: Some(r.dataset.clone()),
        format: Some(r.format.name().to_string()),
        labels: r.labels.clone(),
        constraints: Some(r.constraints.clone()),
        method: Some(r.method.clone()),
        per_iteration: Some(r.per_iteration),
        max_iterations: Some(r.max_iterations),
        target_auc: Some(r.target_auc),
        train_count: Some(train_count),
        seed: Some(r.seed),
        train: Some(TrainSection::from_config(&r.train)),
    };
    let text = serde_json::to_string_pretty(&full).expect("manifest serializes");
    fs::write(path, text + "\n")
        .map_err(|e| CliError::Runtime(format!("manifest {}: {e}", path.display())))
}
