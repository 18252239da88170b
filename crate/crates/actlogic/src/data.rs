//! Dataset ingestion, ground-truth storage, and train/test splitting.
//!
//! Two text formats are supported:
//!
//! * **LIBSVM multiclass** — one instance per line, `<class> <idx>:<val> ...`
//!   with 1-based feature indices. Class ids are remapped to a dense `[0, K)`
//!   range in sorted order and each instance gets a one-hot truth row.
//! * **Sparse two-file** — a features file `<id> <idx>:<val> ...` (0-based
//!   indices) plus a labels file `<id> <label_name> <0|1>`. Pairs absent from
//!   the labels file default to 0, so the format suits multi-label data where
//!   most labels are negative.
//!
//! In both formats `#` starts a comment line and blank lines are skipped.
//! Loaded truth rows are validated against the experiment's constraint set;
//! a dataset that contradicts its own constraints is rejected at the door.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::constraints::ConstraintSet;
use crate::learner::SparseVector;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("{0}: no instances found")]
    EmptyFile(String),
    #[error("instance {instance}: truth row violates {constraint}")]
    ConstraintViolation { instance: String, constraint: String },
    #[error("dataset does not match constraint set: {0}")]
    LabelMismatch(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("cannot save dataset: {0}")]
    Unsaveable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// An immutable pool of instances with full ground-truth labels.
#[derive(Clone, Debug)]
pub struct Dataset {
    instances: Vec<SparseVector>,
    /// Row-major N x K truth matrix.
    truth: Vec<bool>,
    label_names: Vec<String>,
    feature_dim: usize,
}

impl Dataset {
    pub fn new(
        instances: Vec<SparseVector>,
        truth: Vec<bool>,
        label_names: Vec<String>,
        feature_dim: usize,
    ) -> Result<Self, DataError> {
        if instances.is_empty() || label_names.is_empty() {
            return Err(DataError::LabelMismatch(
                "datasets need at least one instance and one label".into(),
            ));
        }
        if truth.len() != instances.len() * label_names.len() {
            return Err(DataError::LabelMismatch(format!(
                "truth matrix has {} entries, expected {}",
                truth.len(),
                instances.len() * label_names.len()
            )));
        }
        for x in &instances {
            if let Some(max) = x.max_index() {
                if max as usize >= feature_dim {
                    return Err(DataError::LabelMismatch(format!(
                        "feature index {max} outside dimension {feature_dim}"
                    )));
                }
            }
        }
        Ok(Dataset { instances, truth, label_names, feature_dim })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn label_count(&self) -> usize {
        self.label_names.len()
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn instance(&self, i: usize) -> &SparseVector {
        &self.instances[i]
    }

    pub fn instances(&self) -> &[SparseVector] {
        &self.instances
    }

    pub fn truth(&self, i: usize, k: usize) -> bool {
        self.truth[i * self.label_count() + k]
    }

    pub fn truth_row(&self, i: usize) -> &[bool] {
        let k = self.label_count();
        &self.truth[i * k..(i + 1) * k]
    }

    pub fn positive_count(&self, k: usize) -> usize {
        (0..self.len()).filter(|&i| self.truth(i, k)).count()
    }

    /// Checks that the label set matches `cs` (same names, same order) and
    /// that every truth row satisfies every constraint.
    pub fn validate_against(&self, cs: &ConstraintSet) -> Result<(), DataError> {
        if self.label_names != cs.label_names() {
            return Err(DataError::LabelMismatch(format!(
                "dataset labels {:?} != constraint labels {:?}",
                self.label_names,
                cs.label_names()
            )));
        }
        for i in 0..self.len() {
            if let Err(e) = cs.check_row(self.truth_row(i)) {
                return Err(DataError::ConstraintViolation {
                    instance: i.to_string(),
                    constraint: e.to_string(),
                });
            }
        }
        Ok(())
    }

    /// New dataset holding the given instances, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let k = self.label_count();
        let mut truth = Vec::with_capacity(indices.len() * k);
        let mut instances = Vec::with_capacity(indices.len());
        for &i in indices {
            instances.push(self.instances[i].clone());
            truth.extend_from_slice(self.truth_row(i));
        }
        Dataset {
            instances,
            truth,
            label_names: self.label_names.clone(),
            feature_dim: self.feature_dim,
        }
    }
}

// ---------------------------------------------------------------------------
// Shared line-level parsing
// ---------------------------------------------------------------------------

fn parse_err(file: &Path, line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse { file: file.display().to_string(), line, message: message.into() }
}

/// Yields (1-based line number, trimmed content) for data lines only.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|&(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses `idx:val` feature tokens with strictly increasing indices.
/// `min_index` is 1 for LIBSVM files and 0 for the sparse format.
fn parse_features(
    tokens: &[&str],
    min_index: u32,
    file: &Path,
    line: usize,
) -> Result<Vec<(u32, f64)>, DataError> {
    let mut entries = Vec::with_capacity(tokens.len());
    let mut prev: Option<u32> = None;
    for tok in tokens {
        let (idx_s, val_s) = tok
            .split_once(':')
            .ok_or_else(|| parse_err(file, line, format!("expected `index:value`, got `{tok}`")))?;
        let idx: u32 = idx_s
            .parse()
            .map_err(|_| parse_err(file, line, format!("invalid feature index `{idx_s}`")))?;
        if idx < min_index {
            return Err(parse_err(
                file,
                line,
                format!("feature index {idx} below minimum {min_index}"),
            ));
        }
        let val: f64 = val_s
            .parse()
            .map_err(|_| parse_err(file, line, format!("invalid feature value `{val_s}`")))?;
        if !val.is_finite() {
            return Err(parse_err(file, line, format!("non-finite feature value `{val_s}`")));
        }
        if prev.is_some_and(|p| p >= idx) {
            return Err(parse_err(file, line, "feature indices must be strictly increasing"));
        }
        prev = Some(idx);
        entries.push((idx - min_index, val));
    }
    Ok(entries)
}

// ---------------------------------------------------------------------------
// LIBSVM multiclass
// ---------------------------------------------------------------------------

/// Loads a LIBSVM multiclass file: each line's class becomes a one-hot truth
/// row, with class ids remapped to `[0, K)` in sorted order and recorded in
/// `label_names`.
pub fn load_libsvm_multiclass(path: &Path) -> Result<Dataset, DataError> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<(i64, Vec<(u32, f64)>)> = Vec::new();
    let mut classes: Vec<i64> = Vec::new();
    let mut feature_dim = 0usize;

    for (lineno, line) in data_lines(&text) {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let class: i64 = tokens[0]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("invalid class label `{}`", tokens[0])))?;
        let entries = parse_features(&tokens[1..], 1, path, lineno)?;
        if let Some(&(max, _)) = entries.last() {
            feature_dim = feature_dim.max(max as usize + 1);
        }
        if classes.binary_search(&class).is_err() {
            classes.push(class);
            classes.sort_unstable();
        }
        rows.push((class, entries));
    }
    if rows.is_empty() {
        return Err(DataError::EmptyFile(path.display().to_string()));
    }

    let k = classes.len();
    let mut instances = Vec::with_capacity(rows.len());
    let mut truth = Vec::with_capacity(rows.len() * k);
    for (class, entries) in rows {
        let slot = classes.binary_search(&class).expect("class was recorded");
        instances.push(SparseVector::new(entries).expect("entries were validated"));
        for j in 0..k {
            truth.push(j == slot);
        }
    }
    // One-hot rows always satisfy a single mutual-exclusion group.
    debug_assert!(truth.chunks(k).all(|row| row.iter().filter(|&&b| b).count() == 1));
    let label_names = classes.iter().map(|c| c.to_string()).collect();
    Dataset::new(instances, truth, label_names, feature_dim)
}

/// Writes a one-hot dataset back to LIBSVM multiclass text. Inverse of
/// [`load_libsvm_multiclass`] up to comment lines.
pub fn save_libsvm_multiclass(path: &Path, d: &Dataset) -> Result<(), DataError> {
    let mut out = String::new();
    for i in 0..d.len() {
        let row = d.truth_row(i);
        let mut positives = row.iter().enumerate().filter(|&(_, &b)| b);
        let class = match (positives.next(), positives.next()) {
            (Some((k, _)), None) => &d.label_names()[k],
            _ => {
                return Err(DataError::Unsaveable(format!(
                    "instance {i} is not one-hot; the multiclass format cannot express it"
                )))
            }
        };
        out.push_str(class);
        for &(idx, val) in d.instance(i).entries() {
            write!(out, " {}:{}", idx + 1, val).expect("string write");
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Sparse two-file format
// ---------------------------------------------------------------------------

/// Loads the sparse two-file format. Instance order follows the features
/// file; (instance, label) pairs not listed in the labels file default to 0.
/// Every truth row is validated against `cs`, whose label names define the
/// columns.
pub fn load_sparse_labels(
    features_path: &Path,
    labels_path: &Path,
    cs: &ConstraintSet,
) -> Result<Dataset, DataError> {
    let k = cs.label_count();
    let features_text = fs::read_to_string(features_path)?;
    let mut ids: Vec<String> = Vec::new();
    let mut id_slot: HashMap<String, usize> = HashMap::new();
    let mut instances: Vec<SparseVector> = Vec::new();
    let mut feature_dim = 0usize;

    for (lineno, line) in data_lines(&features_text) {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let id = tokens[0];
        if id_slot.contains_key(id) {
            return Err(parse_err(features_path, lineno, format!("duplicate instance id `{id}`")));
        }
        let entries = parse_features(&tokens[1..], 0, features_path, lineno)?;
        if let Some(&(max, _)) = entries.last() {
            feature_dim = feature_dim.max(max as usize + 1);
        }
        id_slot.insert(id.to_string(), ids.len());
        ids.push(id.to_string());
        instances.push(SparseVector::new(entries).expect("entries were validated"));
    }
    if instances.is_empty() {
        return Err(DataError::EmptyFile(features_path.display().to_string()));
    }

    let labels_text = fs::read_to_string(labels_path)?;
    let mut truth: Vec<Option<bool>> = vec![None; instances.len() * k];
    for (lineno, line) in data_lines(&labels_text) {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(parse_err(
                labels_path,
                lineno,
                format!("expected `<id> <label> <0|1>`, got {} tokens", tokens.len()),
            ));
        }
        let &slot = id_slot.get(tokens[0]).ok_or_else(|| {
            parse_err(labels_path, lineno, format!("unknown instance id `{}`", tokens[0]))
        })?;
        let label = cs.label_id(tokens[1]).ok_or_else(|| {
            parse_err(labels_path, lineno, format!("unknown label `{}`", tokens[1]))
        })?;
        let value = match tokens[2] {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(
                    labels_path,
                    lineno,
                    format!("label value must be 0 or 1, got `{other}`"),
                ))
            }
        };
        let cell = &mut truth[slot * k + label.0];
        if cell.is_some_and(|prev| prev != value) {
            return Err(parse_err(
                labels_path,
                lineno,
                format!("conflicting values for instance `{}` label `{}`", tokens[0], tokens[1]),
            ));
        }
        *cell = Some(value);
    }

    let truth: Vec<bool> = truth.into_iter().map(|c| c.unwrap_or(false)).collect();
    for (slot, id) in ids.iter().enumerate() {
        if let Err(e) = cs.check_row(&truth[slot * k..(slot + 1) * k]) {
            return Err(DataError::ConstraintViolation {
                instance: id.clone(),
                constraint: e.to_string(),
            });
        }
    }
    Dataset::new(instances, truth, cs.label_names().to_vec(), feature_dim)
}

/// Writes a dataset as the sparse two-file format, using instance positions
/// as ids and listing only positive labels (absent pairs default to 0).
pub fn save_sparse_labels(
    features_path: &Path,
    labels_path: &Path,
    d: &Dataset,
) -> Result<(), DataError> {
    let mut features = String::new();
    let mut labels = String::new();
    for i in 0..d.len() {
        write!(features, "{i}").expect("string write");
        for &(idx, val) in d.instance(i).entries() {
            write!(features, " {idx}:{val}").expect("string write");
        }
        features.push('\n');
        for (j, name) in d.label_names().iter().enumerate() {
            if d.truth(i, j) {
                writeln!(labels, "{i} {name} 1").expect("string write");
            }
        }
    }
    fs::write(features_path, features)?;
    fs::write(labels_path, labels)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_count: usize,
    pub seed: u64,
}

/// Seeded uniform shuffle of `0..n`; the first `train_count` indices form the
/// train side, the rest the test side.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if spec.train_count == 0 || spec.train_count >= n {
        return Err(DataError::InvalidSplit(format!(
            "train_count {} must lie strictly between 0 and {n}",
            spec.train_count
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let test = order.split_off(spec.train_count);
    Ok((order, test))
}

pub fn split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), DataError> {
    let (train, test) = split_indices(d.len(), spec)?;
    Ok((d.subset(&train), d.subset(&test)))
}
