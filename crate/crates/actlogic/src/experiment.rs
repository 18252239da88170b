//! The active-learning loop: train, select, propagate, migrate, retrain,
//! evaluate.
//!
//! A run starts from a seeded train/test split. Train-split labels are known
//! from the start; test-split labels form the acquisition pool. Each
//! iteration requests `per_iteration` (instance, label) pairs one at a time,
//! reveals their ground truth, optionally propagates constraints within the
//! instance, folds everything acquired into the training data, warm-retrains
//! all per-label models, and measures weighted average AUC over the *whole*
//! dataset with acquired labels scored as their known values.
//!
//! All randomness derives from `ExperimentConfig::seed` through fixed
//! substream tags, so a run is bitwise reproducible regardless of worker
//! thread count.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::constraints::{propagate, ConstraintError, ConstraintSet, LabelId, Origin, PartialAssignment};
use crate::data::{split_indices, DataError, Dataset, SplitSpec};
use crate::learner::{
    subsample_negatives, train, LearnerError, LinearModel, SparseVector, TrainConfig,
};
use crate::scoring::{
    deterministic_pair_score, resolve_me_group, select_next, MarginalMatrix, ScoringError,
    ScoringMethod, ScoringRule,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error("no label has both positive and negative examples; AUC is undefined")]
    Degenerate,
    #[error("metrics: {0}")]
    Metrics(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Configuration and results
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub method: ScoringMethod,
    /// Explicit label requests per iteration; propagated fixes are free.
    pub per_iteration: usize,
    pub max_iterations: usize,
    pub target_auc: f64,
    /// Optimizer settings. `train_cfg.seed` is ignored here: retraining seeds
    /// derive from `seed` per (iteration, label) substream.
    pub train_cfg: TrainConfig,
    pub split: SplitSpec,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(method: ScoringMethod, split: SplitSpec) -> Self {
        ExperimentConfig {
            method,
            per_iteration: 100,
            max_iterations: 1000,
            target_auc: 0.999,
            train_cfg: TrainConfig::default(),
            split,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub average_auc: f64,
    pub labels_requested: usize,
    pub labels_fixed: usize,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub iterations: Vec<IterationMetrics>,
    /// First iteration whose average AUC reached the target, or `None`.
    pub iterations_to_target: Option<usize>,
}

/// One acquired (instance, label) value, tagged with how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fix {
    pub instance: usize,
    pub label: LabelId,
    pub value: bool,
    pub origin: Origin,
}

#[derive(Clone, Debug, Default)]
pub struct BatchOutcome {
    pub fixes: Vec<Fix>,
    /// Explicit requests made; less than asked when the pool ran dry.
    pub requested: usize,
}

// ---------------------------------------------------------------------------
// Seed substreams
// ---------------------------------------------------------------------------

const STREAM_NEGATIVES: u64 = 1;
const STREAM_TRAIN: u64 = 2;
const STREAM_SELECT: u64 = 3;

/// SplitMix64 finalizer over (seed, tag): cheap independent substreams.
fn mix(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn tag(stream: u64, round: u64, label: u64) -> u64 {
    (stream << 56) | (round << 20) | label
}

// ---------------------------------------------------------------------------
// Batch selection
// ---------------------------------------------------------------------------

/// Requests up to `per_iteration` pairs sequentially: pick the top-scoring
/// eligible pair, reveal its truth, propagate within the instance when the
/// method calls for it, and mark the whole closure fixed and ineligible.
/// `fixed` and `m` are updated in place; the returned fixes mirror the delta.
///
/// Stops early (with `requested` below the ask) when the pool runs dry
/// mid-batch; errors with `PoolExhausted` only if it was empty at entry.
pub fn select_batch(
    m: &mut MarginalMatrix,
    cs: &ConstraintSet,
    method: &ScoringMethod,
    per_iteration: usize,
    fixed: &mut [PartialAssignment],
    reveal: impl Fn(usize, LabelId) -> bool,
    rng: &mut ChaCha8Rng,
) -> Result<BatchOutcome, ExperimentError> {
    assert!(per_iteration >= 1, "batches request at least one label");
    if m.eligible_count() == 0 {
        return Err(ScoringError::PoolExhausted.into());
    }
    let me_group = resolve_me_group(cs, method)?;

    // For deterministic rules, a pair's score depends only on the marginals
    // (static within a batch) and its own instance's fixed context, so each
    // pick invalidates one instance's cached best and nothing else. Random
    // redraws every eligible pair each round and bypasses the cache.
    let caching = !matches!(method.rule(), ScoringRule::Random);
    let mut best: Vec<Option<(f64, LabelId)>> = Vec::new();
    let instance_best = |m: &MarginalMatrix,
                         fixed_i: &PartialAssignment,
                         i: usize|
     -> Result<Option<(f64, LabelId)>, ScoringError> {
        let mut out: Option<(f64, LabelId)> = None;
        for ki in 0..m.labels() {
            let k = LabelId(ki);
            if !m.is_eligible(i, k) {
                continue;
            }
            let s = deterministic_pair_score(m, cs, method, me_group, i, k, fixed_i)?;
            if out.map_or(true, |(b, _)| s > b) {
                out = Some((s, k));
            }
        }
        Ok(out)
    };
    if caching {
        best = (0..m.instances())
            .into_par_iter()
            .map(|i| instance_best(m, &fixed[i], i))
            .collect::<Result<_, _>>()
            .map_err(ExperimentError::from)?;
    }

    let mut outcome = BatchOutcome::default();
    for _ in 0..per_iteration {
        let picked = if caching {
            let mut top: Option<(f64, usize, LabelId)> = None;
            for (i, slot) in best.iter().enumerate() {
                if let Some((s, k)) = *slot {
                    if top.map_or(true, |(b, _, _)| s > b) {
                        top = Some((s, i, k));
                    }
                }
            }
            top.map(|(_, i, k)| (i, k))
        } else {
            match select_next(m, cs, method, fixed, rng) {
                Ok(pair) => Some(pair),
                Err(ScoringError::PoolExhausted) => None,
                Err(e) => return Err(e.into()),
            }
        };
        let Some((i, k)) = picked else {
            break; // pool ran dry mid-batch
        };

        let value = reveal(i, k);
        outcome.requested += 1;
        if method.propagates_constraints() {
            let closure = propagate(cs, &fixed[i], (k, value))?;
            for (l, v, origin) in closure.iter() {
                if !fixed[i].is_fixed(l) {
                    outcome.fixes.push(Fix { instance: i, label: l, value: v, origin });
                    m.mark_fixed(i, l);
                }
            }
            fixed[i] = closure;
        } else {
            fixed[i].insert(k, value, Origin::Requested);
            m.mark_fixed(i, k);
            outcome.fixes.push(Fix { instance: i, label: k, value, origin: Origin::Requested });
        }
        if caching {
            best[i] = instance_best(m, &fixed[i], i)?;
        }
    }
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// ROC-AUC by the Mann–Whitney statistic with average ranks for ties.
/// `None` when the label has no positives or no negatives.
fn label_auc(scores: &[f64], truths: &[bool]) -> Option<f64> {
    let pos = truths.iter().filter(|&&t| t).count();
    let neg = truths.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("scores are finite"));
    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share their average.
        let rank = (i + j + 2) as f64 / 2.0;
        for &o in &order[i..=j] {
            if truths[o] {
                positive_rank_sum += rank;
            }
        }
        i = j + 1;
    }
    let u = positive_rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Some(u / (pos as f64 * neg as f64))
}

/// Weighted average AUC over the full dataset. Acquired pairs score their
/// known value (0 or 1); unfixed pairs score the model probability. Weights
/// are per-label positive counts; labels with no positives or no negatives
/// are skipped and excluded from the weight sum.
pub fn average_auc(
    models: &[LinearModel],
    fixed: &[PartialAssignment],
    d: &Dataset,
) -> Result<f64, ExperimentError> {
    assert_eq!(models.len(), d.label_count());
    assert_eq!(fixed.len(), d.len());
    let per_label: Vec<Option<(f64, f64)>> = (0..d.label_count())
        .into_par_iter()
        .map(|ki| {
            let k = LabelId(ki);
            let scores: Vec<f64> = (0..d.len())
                .map(|i| match fixed[i].value(k) {
                    Some(v) => v as u8 as f64,
                    None => models[ki]
                        .predict_proba(d.instance(i))
                        .expect("dataset features fit the model dimension"),
                })
                .collect();
            let truths: Vec<bool> = (0..d.len()).map(|i| d.truth(i, ki)).collect();
            label_auc(&scores, &truths).map(|auc| (auc, d.positive_count(ki) as f64))
        })
        .collect();
    let mut weighted = 0.0;
    let mut total = 0.0;
    for entry in per_label.into_iter().flatten() {
        weighted += entry.0 * entry.1;
        total += entry.1;
    }
    if total == 0.0 {
        return Err(ExperimentError::Degenerate);
    }
    Ok(weighted / total)
}

// ---------------------------------------------------------------------------
// The loop
// ---------------------------------------------------------------------------

/// Retrains every label's model on the currently known labels: all known
/// positives plus an equal-size fresh draw of known negatives, warm-started
/// from the previous weights.
fn retrain_all(
    models: &mut [LinearModel],
    d: &Dataset,
    fixed: &[PartialAssignment],
    cfg: &ExperimentConfig,
    round: u64,
) -> Result<(), ExperimentError> {
    models
        .par_iter_mut()
        .enumerate()
        .map(|(ki, model)| {
            let k = LabelId(ki);
            let mut positives = Vec::new();
            let mut negatives = Vec::new();
            for (i, pa) in fixed.iter().enumerate() {
                match pa.value(k) {
                    Some(true) => positives.push(i),
                    Some(false) => negatives.push(i),
                    None => {}
                }
            }
            if positives.is_empty() {
                // Nothing separates this label yet; leave the model as is.
                return Ok(());
            }
            let mut neg_rng =
                ChaCha8Rng::seed_from_u64(mix(cfg.seed, tag(STREAM_NEGATIVES, round, ki as u64)));
            let chosen = subsample_negatives(&positives, &negatives, &mut neg_rng);
            let data: Vec<(&SparseVector, bool)> = chosen
                .iter()
                .map(|&i| (d.instance(i), fixed[i].value(k).expect("chosen labels are fixed")))
                .collect();
            let train_cfg = TrainConfig {
                seed: mix(cfg.seed, tag(STREAM_TRAIN, round, ki as u64)),
                ..cfg.train_cfg
            };
            train(model, &data, &train_cfg).map(drop)
        })
        .collect::<Result<(), LearnerError>>()?;
    Ok(())
}

/// Fills the marginal matrix with fresh model predictions for every pair.
/// Eligibility is untouched; only values change.
fn refresh_marginals(m: &mut MarginalMatrix, models: &[LinearModel], d: &Dataset) {
    let rows: Vec<Vec<f64>> = (0..d.len())
        .into_par_iter()
        .map(|i| {
            models
                .iter()
                .map(|model| {
                    model
                        .predict_proba(d.instance(i))
                        .expect("dataset features fit the model dimension")
                })
                .collect()
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        for (ki, p) in row.into_iter().enumerate() {
            m.set(i, LabelId(ki), p);
        }
    }
}

/// Runs the full loop. See the module docs for the iteration structure.
pub fn run_experiment(
    d: &Dataset,
    cs: &ConstraintSet,
    cfg: &ExperimentConfig,
) -> Result<RunResult, ExperimentError> {
    assert!(cfg.per_iteration >= 1, "per_iteration must be at least 1");
    assert!(
        cfg.target_auc > 0.0 && cfg.target_auc <= 1.0,
        "target AUC must lie in (0, 1]"
    );
    d.validate_against(cs)?;
    let k = d.label_count();
    let (train_idx, _) = split_indices(d.len(), &cfg.split)?;

    // Train-split labels are known up front; the test split is the pool.
    let mut fixed: Vec<PartialAssignment> = vec![PartialAssignment::empty(k); d.len()];
    for &i in &train_idx {
        fixed[i] = PartialAssignment::from_row(d.truth_row(i), Origin::Requested);
    }
    let mut matrix = MarginalMatrix::new(d.len(), k);
    for (i, pa) in fixed.iter().enumerate() {
        for (l, _, _) in pa.iter() {
            matrix.mark_fixed(i, l);
        }
    }

    let mut models: Vec<LinearModel> = vec![LinearModel::new(d.feature_dim()); k];
    retrain_all(&mut models, d, &fixed, cfg, 0)?;
    refresh_marginals(&mut matrix, &models, d);

    let mut result = RunResult { iterations: Vec::new(), iterations_to_target: None };
    for iteration in 1..=cfg.max_iterations {
        if matrix.eligible_count() == 0 {
            break;
        }
        let started = Instant::now();
        let mut select_rng =
            ChaCha8Rng::seed_from_u64(mix(cfg.seed, tag(STREAM_SELECT, iteration as u64, 0)));
        let outcome = select_batch(
            &mut matrix,
            cs,
            &cfg.method,
            cfg.per_iteration,
            &mut fixed,
            |i, l| d.truth(i, l.0),
            &mut select_rng,
        )?;

        retrain_all(&mut models, d, &fixed, cfg, iteration as u64)?;
        refresh_marginals(&mut matrix, &models, d);
        let auc = average_auc(&models, &fixed, d)?;

        result.iterations.push(IterationMetrics {
            iteration,
            average_auc: auc,
            labels_requested: outcome.requested,
            labels_fixed: outcome.fixes.len(),
            wall_ms: started.elapsed().as_millis() as u64,
        });
        if auc >= cfg.target_auc {
            result.iterations_to_target = Some(iteration);
            break;
        }
    }
    Ok(result)
}

// ---------------------------------------------------------------------------
// Metrics CSV
// ---------------------------------------------------------------------------

const METRICS_HEADER: &str = "iteration,average_auc,labels_requested,labels_fixed,wall_ms";

pub fn metrics_to_csv(r: &RunResult) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for m in &r.iterations {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            m.iteration, m.average_auc, m.labels_requested, m.labels_fixed, m.wall_ms
        ));
    }
    match r.iterations_to_target {
        Some(n) => out.push_str(&format!("# iterations_to_target={n}\n")),
        None => out.push_str("# iterations_to_target=NA\n"),
    }
    out
}

pub fn emit_metrics(r: &RunResult, path: &Path) -> Result<(), ExperimentError> {
    std::fs::write(path, metrics_to_csv(r))?;
    Ok(())
}

pub fn parse_metrics(text: &str) -> Result<RunResult, ExperimentError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == METRICS_HEADER => {}
        other => {
            return Err(ExperimentError::Metrics(format!(
                "expected header `{METRICS_HEADER}`, got {other:?}"
            )))
        }
    }
    let mut result = RunResult { iterations: Vec::new(), iterations_to_target: None };
    let mut saw_trailer = false;
    for line in lines {
        if let Some(rest) = line.strip_prefix("# iterations_to_target=") {
            result.iterations_to_target = match rest {
                "NA" => None,
                n => Some(
                    n.parse()
                        .map_err(|_| ExperimentError::Metrics(format!("bad trailer `{line}`")))?,
                ),
            };
            saw_trailer = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(ExperimentError::Metrics(format!("expected 5 fields in `{line}`")));
        }
        let bad = |what: &str| ExperimentError::Metrics(format!("bad {what} in `{line}`"));
        result.iterations.push(IterationMetrics {
            iteration: fields[0].parse().map_err(|_| bad("iteration"))?,
            average_auc: fields[1].parse().map_err(|_| bad("average_auc"))?,
            labels_requested: fields[2].parse().map_err(|_| bad("labels_requested"))?,
            labels_fixed: fields[3].parse().map_err(|_| bad("labels_fixed"))?,
            wall_ms: fields[4].parse().map_err(|_| bad("wall_ms"))?,
        });
    }
    if !saw_trailer {
        return Err(ExperimentError::Metrics("missing iterations_to_target trailer".into()));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::Constraint;

    fn me_set(names: &[&str]) -> ConstraintSet {
        let ids = (0..names.len()).map(LabelId).collect();
        ConstraintSet::new(
            names.iter().map(|s| s.to_string()).collect(),
            vec![Constraint::MutualExclusion(ids)],
        )
        .unwrap()
    }

    /// One-hot dataset over an ME triple where the positive class is fully
    /// determined by which of three indicator features is set.
    fn indicator_dataset(n: usize) -> (Dataset, ConstraintSet) {
        let cs = me_set(&["a", "b", "c"]);
        let mut instances = Vec::new();
        let mut truth = Vec::new();
        for i in 0..n {
            let class = i % 3;
            instances
                .push(SparseVector::new(vec![(class as u32, 1.0), (3, 0.5)]).unwrap());
            for k in 0..3 {
                truth.push(k == class);
            }
        }
        let d = Dataset::new(
            instances,
            truth,
            vec!["a".into(), "b".into(), "c".into()],
            4,
        )
        .unwrap();
        (d, cs)
    }

    #[test]
    fn auc_handles_ties_by_average_rank() {
        // Scores: positives {0.9, 0.5}, negatives {0.5, 0.1}. The 0.5 tie
        // contributes half a concordant pair: AUC = (2 + 2 + 1 + 0.5+0.5)/2·2
        // counted pairwise = 3.5/4.
        let scores = [0.9, 0.5, 0.5, 0.1];
        let truths = [true, true, false, false];
        assert!((label_auc(&scores, &truths).unwrap() - 0.875).abs() < 1e-12);
        assert_eq!(label_auc(&[1.0, 0.0], &[true, false]).unwrap(), 1.0);
        assert_eq!(label_auc(&[0.0, 1.0], &[true, false]).unwrap(), 0.0);
        assert!(label_auc(&[0.3, 0.7], &[true, true]).is_none());
    }

    #[test]
    fn average_auc_weights_by_positive_count() {
        // Label 0: perfect ranking, 10 positives. Label 1: all scores tied
        // (AUC 0.5), 30 positives. Weighted: (10·1 + 30·0.5)/40 = 0.625.
        let n = 60;
        let mut instances = Vec::new();
        let mut truth = Vec::new();
        for i in 0..n {
            instances.push(SparseVector::new(vec![(0, i as f64)]).unwrap());
            truth.push(i >= 50); // label 0: last 10 positive
            truth.push(i < 30); // label 1: first 30 positive
        }
        let d = Dataset::new(instances, truth, vec!["p".into(), "q".into()], 1).unwrap();
        // Model for label 0 scores by the feature (perfect); model for label 1
        // has zero weights (all predictions tie at 0.5).
        let sharp = LinearModel::from_parts(vec![1.0], -50.0, vec![0.0], 0.0, 0).unwrap();
        let flat = LinearModel::new(1);
        let fixed = vec![PartialAssignment::empty(2); n];
        let auc = average_auc(&[sharp, flat], &fixed, &d).unwrap();
        assert!((auc - 0.625).abs() < 1e-12, "auc {auc}");
    }

    #[test]
    fn average_auc_scores_fixed_pairs_as_their_value() {
        let (d, _) = indicator_dataset(9);
        // Zero models everywhere, but fully fixed labels: AUC must be exactly 1.
        let models = vec![LinearModel::new(4); 3];
        let fixed: Vec<PartialAssignment> = (0..9)
            .map(|i| PartialAssignment::from_row(d.truth_row(i), Origin::Requested))
            .collect();
        assert_eq!(average_auc(&models, &fixed, &d).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_labels_are_an_error_only_when_universal() {
        let instances = vec![SparseVector::empty(), SparseVector::empty()];
        // Label 0 all-positive, label 1 all-negative: nothing rankable.
        let truth = vec![true, false, true, false];
        let d = Dataset::new(instances, truth, vec!["x".into(), "y".into()], 0).unwrap();
        let models = vec![LinearModel::new(0), LinearModel::new(0)];
        let fixed = vec![PartialAssignment::empty(2); 2];
        assert!(matches!(
            average_auc(&models, &fixed, &d),
            Err(ExperimentError::Degenerate)
        ));
    }

    #[test]
    fn batch_selection_matches_repeated_single_selection() {
        // Same marginals, two separate tracks: the incremental cache must
        // reproduce select_next's sequential picks exactly.
        let (d, cs) = indicator_dataset(12);
        for method in [
            ScoringMethod::entropy_cp(),
            ScoringMethod::probability_cp(),
            ScoringMethod::log_cp(),
            ScoringMethod::linear_cp(),
            ScoringMethod::entropy(),
        ] {
            let mut m1 = MarginalMatrix::new(12, 3);
            let mut rng_values = ChaCha8Rng::seed_from_u64(5);
            for i in 0..12 {
                for ki in 0..3 {
                    m1.set(i, LabelId(ki), rand::Rng::gen::<f64>(&mut rng_values));
                }
            }
            let mut m2 = m1.clone();
            let mut fixed1 = vec![PartialAssignment::empty(3); 12];
            let mut fixed2 = fixed1.clone();

            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let outcome = select_batch(
                &mut m1,
                &cs,
                &method,
                6,
                &mut fixed1,
                |i, l| d.truth(i, l.0),
                &mut rng,
            )
            .unwrap();

            let mut manual: Vec<(usize, LabelId)> = Vec::new();
            let mut rng2 = ChaCha8Rng::seed_from_u64(0);
            for _ in 0..6 {
                let (i, k) = select_next(&m2, &cs, &method, &fixed2, &mut rng2).unwrap();
                manual.push((i, k));
                let v = d.truth(i, k.0);
                if method.propagates_constraints() {
                    let closure = propagate(&cs, &fixed2[i], (k, v)).unwrap();
                    for (l, _, _) in closure.iter() {
                        m2.mark_fixed(i, l);
                    }
                    fixed2[i] = closure;
                } else {
                    fixed2[i].insert(k, v, Origin::Requested);
                    m2.mark_fixed(i, k);
                }
            }
            let batch_requests: Vec<(usize, LabelId)> = outcome
                .fixes
                .iter()
                .filter(|f| f.origin == Origin::Requested)
                .map(|f| (f.instance, f.label))
                .collect();
            assert_eq!(batch_requests, manual, "method {}", method.name());
            assert_eq!(outcome.requested, 6);
        }
    }

    #[test]
    fn propagating_batches_fix_whole_closures() {
        let (d, cs) = indicator_dataset(3);
        let mut m = MarginalMatrix::new(3, 3);
        // Instance 0's label "a" looks near-certain: probability-cp takes it
        // first, and the positive reveal closes all three labels.
        m.set(0, LabelId(0), 0.99);
        m.set(0, LabelId(1), 0.3);
        m.set(0, LabelId(2), 0.3);
        for i in 1..3 {
            for ki in 0..3 {
                m.set(i, LabelId(ki), 0.2);
            }
        }
        let mut fixed = vec![PartialAssignment::empty(3); 3];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let outcome = select_batch(
            &mut m,
            &cs,
            &ScoringMethod::probability_cp(),
            1,
            &mut fixed,
            |i, l| d.truth(i, l.0),
            &mut rng,
        )
        .unwrap();
        assert_eq!(outcome.requested, 1);
        assert_eq!(outcome.fixes.len(), 3);
        assert_eq!(outcome.fixes[0], Fix {
            instance: 0,
            label: LabelId(0),
            value: true,
            origin: Origin::Requested
        });
        assert!(outcome.fixes[1..]
            .iter()
            .all(|f| !f.value && f.origin == Origin::Propagated));
        assert_eq!(fixed[0].len(), 3);

        // A negative reveal closes only itself.
        let mut m2 = MarginalMatrix::new(3, 3);
        m2.set(1, LabelId(2), 0.9); // truth for instance 1 is class b=1
        let mut fixed2 = vec![PartialAssignment::empty(3); 3];
        let outcome2 = select_batch(
            &mut m2,
            &cs,
            &ScoringMethod::probability_cp(),
            1,
            &mut fixed2,
            |i, l| d.truth(i, l.0),
            &mut rng,
        )
        .unwrap();
        assert_eq!(outcome2.fixes.len(), 1);
        assert!(!outcome2.fixes[0].value);
    }

    #[test]
    fn non_propagating_batches_fix_exactly_what_they_request() {
        let (d, cs) = indicator_dataset(6);
        let mut m = MarginalMatrix::new(6, 3);
        let mut rng_values = ChaCha8Rng::seed_from_u64(3);
        for i in 0..6 {
            for ki in 0..3 {
                m.set(i, LabelId(ki), rand::Rng::gen::<f64>(&mut rng_values));
            }
        }
        let mut fixed = vec![PartialAssignment::empty(3); 6];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let outcome = select_batch(
            &mut m,
            &cs,
            &ScoringMethod::entropy(),
            2,
            &mut fixed,
            |i, l| d.truth(i, l.0),
            &mut rng,
        )
        .unwrap();
        assert_eq!(outcome.requested, 2);
        assert_eq!(outcome.fixes.len(), 2);
    }

    #[test]
    fn exhausted_pools_stop_batches_early() {
        let (d, cs) = indicator_dataset(2);
        let mut m = MarginalMatrix::new(2, 3);
        let mut fixed = vec![PartialAssignment::empty(3); 2];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let outcome = select_batch(
            &mut m,
            &cs,
            &ScoringMethod::probability_cp(),
            50,
            &mut fixed,
            |i, l| d.truth(i, l.0),
            &mut rng,
        )
        .unwrap();
        assert!(outcome.requested < 50);
        assert_eq!(m.eligible_count(), 0);
        // A second batch on the empty pool errors.
        assert!(matches!(
            select_batch(
                &mut m,
                &cs,
                &ScoringMethod::probability_cp(),
                1,
                &mut fixed,
                |i, l| d.truth(i, l.0),
                &mut rng,
            ),
            Err(ExperimentError::Scoring(ScoringError::PoolExhausted))
        ));
    }

    #[test]
    fn runs_are_bitwise_reproducible() {
        let (d, cs) = indicator_dataset(30);
        let mut cfg = ExperimentConfig::new(
            ScoringMethod::probability_cp(),
            SplitSpec { train_count: 9, seed: 2 },
        );
        cfg.per_iteration = 5;
        cfg.max_iterations = 10;
        cfg.seed = 77;
        let a = run_experiment(&d, &cs, &cfg).unwrap();
        let b = run_experiment(&d, &cs, &cfg).unwrap();
        assert_eq!(a.iterations.len(), b.iterations.len());
        for (x, y) in a.iterations.iter().zip(&b.iterations) {
            assert_eq!(x.average_auc.to_bits(), y.average_auc.to_bits());
            assert_eq!(x.labels_requested, y.labels_requested);
            assert_eq!(x.labels_fixed, y.labels_fixed);
        }
        assert_eq!(a.iterations_to_target, b.iterations_to_target);
    }

    #[test]
    fn exhausting_the_pool_reaches_exact_unit_auc() {
        // Every instance shares one feature, so no model can rank better
        // than chance: only acquiring all labels can reach AUC 1.
        let cs = me_set(&["a", "b", "c"]);
        let mut instances = Vec::new();
        let mut truth = Vec::new();
        for i in 0..15 {
            instances.push(SparseVector::new(vec![(0, 1.0)]).unwrap());
            for k in 0..3 {
                truth.push(k == i % 3);
            }
        }
        let d = Dataset::new(instances, truth, vec!["a".into(), "b".into(), "c".into()], 1)
            .unwrap();
        let mut cfg = ExperimentConfig::new(
            ScoringMethod::random(),
            SplitSpec { train_count: 6, seed: 1 },
        );
        cfg.per_iteration = 9;
        cfg.max_iterations = 50;
        cfg.target_auc = 1.0;
        let r = run_experiment(&d, &cs, &cfg).unwrap();
        let last = r.iterations.last().unwrap();
        assert_eq!(last.average_auc, 1.0);
        assert_eq!(r.iterations_to_target, Some(last.iteration));
        // 9 test instances x 3 labels = 27 pairs at 9 requests per iteration.
        assert_eq!(r.iterations.len(), 3);
        assert!(r.iterations.iter().all(|m| m.labels_requested == 9));
        assert!(r
            .iterations
            .iter()
            .all(|m| m.labels_fixed == m.labels_requested));
    }

    #[test]
    fn metrics_csv_round_trips() {
        let r = RunResult {
            iterations: vec![
                IterationMetrics {
                    iteration: 1,
                    average_auc: 0.8712345678901234,
                    labels_requested: 100,
                    labels_fixed: 137,
                    wall_ms: 12,
                },
                IterationMetrics {
                    iteration: 2,
                    average_auc: 1.0,
                    labels_requested: 100,
                    labels_fixed: 150,
                    wall_ms: 9,
                },
            ],
            iterations_to_target: Some(2),
        };
        let csv = metrics_to_csv(&r);
        assert!(csv.starts_with("iteration,average_auc,labels_requested,labels_fixed,wall_ms\n"));
        assert!(csv.ends_with("# iterations_to_target=2\n"));
        assert_eq!(parse_metrics(&csv).unwrap(), r);

        let empty = RunResult { iterations: Vec::new(), iterations_to_target: None };
        let csv = metrics_to_csv(&empty);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.contains("=NA"));
        assert_eq!(parse_metrics(&csv).unwrap(), empty);
    }

    #[test]
    fn malformed_metrics_are_rejected() {
        assert!(parse_metrics("not,a,header\n").is_err());
        let missing_trailer = "iteration,average_auc,labels_requested,labels_fixed,wall_ms\n";
        assert!(matches!(
            parse_metrics(missing_trailer),
            Err(ExperimentError::Metrics(msg)) if msg.contains("trailer")
        ));
        let bad_row = format!("{METRICS_HEADER}\n1,x,2,3,4\n# iterations_to_target=NA\n");
        assert!(parse_metrics(&bad_row).is_err());
    }

    #[test]
    fn substreams_are_pairwise_distinct() {
        let mut seen = std::collections::HashSet::new();
        for stream in [STREAM_NEGATIVES, STREAM_TRAIN, STREAM_SELECT] {
            for round in 0..50 {
                for label in 0..13 {
                    assert!(seen.insert(mix(42, tag(stream, round, label))));
                }
            }
        }
    }
}
