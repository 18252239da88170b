//! Bundled synthetic dataset generators.
//!
//! Two families cover the experiment shapes this crate cares about:
//!
//! * [`hierarchy_dataset`] — multi-label data over a constraint hierarchy.
//!   Truth rows are sampled from an explicit joint distribution over the
//!   valid assignments; features are per-label noisy indicator blocks. The
//!   canonical 13-label taxonomy lives in [`nell13_constraints`] with a
//!   default joint in [`nell13_default_joint`].
//! * [`clusters_dataset`] — one-hot multiclass data from overlapping
//!   Gaussian clusters, shaped like classic small multiclass benchmarks
//!   (7 classes, 19 dense features by default via [`segment_like_dataset`]).
//!
//! Both are fully determined by their seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::constraints::{Constraint, ConstraintSet, LabelId};
use crate::data::Dataset;
use crate::learner::SparseVector;
use crate::oracle::JointDistribution;

// ---------------------------------------------------------------------------
// The 13-label taxonomy
// ---------------------------------------------------------------------------

/// Order of the 13 taxonomy labels; index = LabelId.
pub const NELL13_LABELS: [&str; 13] = [
    "animal",
    "bird",
    "fish",
    "mammal",
    "location",
    "natural_location",
    "artificial_location",
    "city",
    "country",
    "lake",
    "river",
    "organization",
    "sports_team",
];

/// A three-root taxonomy: animals, locations, and organizations are mutually
/// exclusive top-level kinds, each subsuming its subtree, with sibling
/// subtrees mutually exclusive as well.
pub fn nell13_constraints() -> ConstraintSet {
    let id = |name: &str| {
        LabelId(
            NELL13_LABELS.iter().position(|&n| n == name).expect("known label"),
        )
    };
    let sub = |parent: &str, child: &str| Constraint::Subsumption {
        parent: id(parent),
        child: id(child),
    };
    let me = |names: &[&str]| Constraint::MutualExclusion(names.iter().map(|n| id(n)).collect());
    ConstraintSet::new(
        NELL13_LABELS.iter().map(|s| s.to_string()).collect(),
        vec![
            me(&["animal", "location", "organization"]),
            me(&["bird", "fish", "mammal"]),
            me(&["natural_location", "artificial_location"]),
            me(&["city", "country", "lake", "river"]),
            sub("animal", "bird"),
            sub("animal", "fish"),
            sub("animal", "mammal"),
            sub("location", "natural_location"),
            sub("location", "artificial_location"),
            sub("natural_location", "lake"),
            sub("natural_location", "river"),
            sub("artificial_location", "city"),
            sub("artificial_location", "country"),
            sub("organization", "sports_team"),
        ],
    )
    .expect("the taxonomy is well formed")
}

/// Default joint over the taxonomy: mass on each leaf closure (a leaf plus
/// all its ancestors) and on the all-negative row.
pub fn nell13_default_joint() -> JointDistribution {
    let leaf_masses: [(&str, f64); 8] = [
        ("mammal", 0.20),
        ("bird", 0.05),
        ("fish", 0.05),
        ("city", 0.20),
        ("country", 0.10),
        ("lake", 0.08),
        ("river", 0.07),
        ("sports_team", 0.15),
    ];
    let cs = nell13_constraints();
    let mut support = vec![vec![false; 13]];
    let mut mass = vec![0.10];
    for (leaf, m) in leaf_masses {
        let fix = (cs.label_id(leaf).expect("known label"), true);
        let closure = crate::constraints::propagate(
            &cs,
            &crate::constraints::PartialAssignment::empty(13),
            fix,
        )
        .expect("leaf closures are consistent");
        let mut row = vec![false; 13];
        for (l, v, _) in closure.iter() {
            row[l.0] = v;
        }
        support.push(row);
        mass.push(m);
    }
    JointDistribution::new(support, mass).expect("masses sum to one over distinct rows")
}

/// Labels `"1"..="k"` under one spanning mutual-exclusion group.
pub fn me_only_constraints(k: usize) -> ConstraintSet {
    ConstraintSet::new(
        (1..=k).map(|i| i.to_string()).collect(),
        vec![Constraint::MutualExclusion((0..k).map(LabelId).collect())],
    )
    .expect("a single spanning group is well formed")
}

// ---------------------------------------------------------------------------
// Hierarchy data
// ---------------------------------------------------------------------------

/// Indicator-block features per label.
const BLOCK: usize = 4;
/// Chance a block feature fires when its label is positive / negative. The
/// rates sit close enough together that a model trained on partial labels
/// plateaus well below perfect ranking — acquisition strategy has to matter.
const SIGNAL_RATE: f64 = 0.45;
const LEAK_RATE: f64 = 0.2;
/// Extra features carrying no signal at all.
const NOISE_FEATURES: usize = 20;
const NOISE_RATE: f64 = 0.3;

/// Multi-label dataset over `cs`: each instance's truth row is a draw from
/// `joint`, and its features are noisy indicators — label k's block of
/// [`BLOCK`] features fires at [`SIGNAL_RATE`] when k is positive and leaks
/// at [`LEAK_RATE`] when it is not, plus a tail of pure-noise features.
pub fn hierarchy_dataset(
    cs: &ConstraintSet,
    joint: &JointDistribution,
    n: usize,
    seed: u64,
) -> Dataset {
    assert_eq!(cs.label_count(), joint.label_count(), "joint must cover the label set");
    assert!(n > 0, "datasets need at least one instance");
    let k = cs.label_count();
    let dim = k * BLOCK + NOISE_FEATURES;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n * k);
    for _ in 0..n {
        let row = joint.sample(&mut rng).to_vec();
        let mut entries = Vec::new();
        for (ki, &positive) in row.iter().enumerate() {
            let rate = if positive { SIGNAL_RATE } else { LEAK_RATE };
            for b in 0..BLOCK {
                if rng.gen::<f64>() < rate {
                    entries.push(((ki * BLOCK + b) as u32, 1.0));
                }
            }
        }
        for j in 0..NOISE_FEATURES {
            if rng.gen::<f64>() < NOISE_RATE {
                entries.push(((k * BLOCK + j) as u32, 1.0));
            }
        }
        instances.push(SparseVector::new(entries).expect("indices grow within the loop"));
        truth.extend_from_slice(&row);
    }
    Dataset::new(instances, truth, cs.label_names().to_vec(), dim)
        .expect("generated rows are well formed")
}

/// The bundled 13-label synthetic dataset: taxonomy constraints, default
/// joint, `n` instances.
pub fn nell13_dataset(n: usize, seed: u64) -> (Dataset, ConstraintSet) {
    let cs = nell13_constraints();
    let d = hierarchy_dataset(&cs, &nell13_default_joint(), n, seed);
    (d, cs)
}

// ---------------------------------------------------------------------------
// Gaussian cluster data
// ---------------------------------------------------------------------------

/// One-hot multiclass data from `classes` Gaussian clusters in `dim`
/// dimensions. Cluster centers are drawn uniformly from `[-1, 1]^dim` and
/// points around them with standard deviation `sigma`; larger `sigma` means
/// more class overlap and a harder ranking problem. Values are rounded to
/// three decimals. Labels are named `"1"..="classes"`.
pub fn clusters_dataset(
    classes: usize,
    dim: usize,
    n: usize,
    sigma: f64,
    seed: u64,
) -> (Dataset, ConstraintSet) {
    assert!(classes >= 2 && n > 0 && dim > 0);
    let cs = me_only_constraints(classes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let noise = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let mut instances = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n * classes);
    for i in 0..n {
        let class = i % classes;
        let entries: Vec<(u32, f64)> = centers[class]
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                let v = ((c + noise.sample(&mut rng)) * 1000.0).round() / 1000.0;
                (j as u32, v)
            })
            .collect();
        instances.push(SparseVector::new(entries).expect("indices are 0..dim"));
        for ki in 0..classes {
            truth.push(ki == class);
        }
    }
    let d = Dataset::new(instances, truth, cs.label_names().to_vec(), dim)
        .expect("generated rows are well formed");
    (d, cs)
}

/// The bundled multiclass benchmark shape: 7 balanced classes, 19 features,
/// overlap tuned so models must actually acquire labels to reach high AUC.
pub fn segment_like_dataset(n: usize, seed: u64) -> (Dataset, ConstraintSet) {
    clusters_dataset(7, 19, n, 1.4, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::closure_size;
    use crate::data::{load_libsvm_multiclass, save_libsvm_multiclass};

    #[test]
    fn taxonomy_has_the_expected_shape() {
        let cs = nell13_constraints();
        assert_eq!(cs.label_count(), 13);
        assert_eq!(cs.constraints().len(), 14);
        // A positive leaf settles the entire taxonomy: ancestors turn on,
        // every other subtree turns off.
        let bird = cs.label_id("bird").unwrap();
        assert_eq!(closure_size(&cs, (bird, true)).unwrap(), 13);
        // A negative root settles only its own subtree.
        let animal = cs.label_id("animal").unwrap();
        assert_eq!(closure_size(&cs, (animal, false)).unwrap(), 4);
        let city = cs.label_id("city").unwrap();
        assert_eq!(closure_size(&cs, (city, false)).unwrap(), 1);
    }

    #[test]
    fn default_joint_matches_the_taxonomy() {
        let cs = nell13_constraints();
        let joint = nell13_default_joint();
        assert_eq!(joint.label_count(), 13);
        let marginals = joint.marginals();
        let p = |name: &str| marginals[cs.label_id(name).unwrap().0];
        assert!((p("animal") - 0.30).abs() < 1e-12);
        assert!((p("location") - 0.45).abs() < 1e-12);
        assert!((p("organization") - 0.15).abs() < 1e-12);
        assert!((p("mammal") - 0.20).abs() < 1e-12);
        assert!((p("sports_team") - 0.15).abs() < 1e-12);
    }

    #[test]
    fn hierarchy_data_is_valid_and_seed_deterministic() {
        let (d, cs) = nell13_dataset(200, 9);
        assert_eq!(d.len(), 200);
        assert_eq!(d.feature_dim(), 13 * BLOCK + NOISE_FEATURES);
        d.validate_against(&cs).unwrap();
        let (d2, _) = nell13_dataset(200, 9);
        for i in 0..d.len() {
            assert_eq!(d.instance(i), d2.instance(i));
            assert_eq!(d.truth_row(i), d2.truth_row(i));
        }
        let (d3, _) = nell13_dataset(200, 10);
        assert!((0..d.len()).any(|i| d.instance(i) != d3.instance(i)));
    }

    #[test]
    fn hierarchy_truth_frequencies_track_the_joint() {
        let (d, cs) = nell13_dataset(2000, 4);
        let animal = cs.label_id("animal").unwrap().0;
        let freq = d.positive_count(animal) as f64 / d.len() as f64;
        assert!((freq - 0.30).abs() < 0.05, "animal frequency {freq}");
        let zero_rows = (0..d.len())
            .filter(|&i| d.truth_row(i).iter().all(|&b| !b))
            .count() as f64
            / d.len() as f64;
        assert!((zero_rows - 0.10).abs() < 0.03, "all-negative frequency {zero_rows}");
    }

    #[test]
    fn block_features_carry_label_signal() {
        let (d, cs) = nell13_dataset(1000, 5);
        let mammal = cs.label_id("mammal").unwrap().0;
        let block = (mammal * BLOCK) as u32..((mammal + 1) * BLOCK) as u32;
        let mut on = 0usize;
        let mut on_total = 0usize;
        let mut off = 0usize;
        let mut off_total = 0usize;
        for i in 0..d.len() {
            let fires = d
                .instance(i)
                .entries()
                .iter()
                .filter(|&&(idx, _)| block.contains(&idx))
                .count();
            if d.truth(i, mammal) {
                on += fires;
                on_total += BLOCK;
            } else {
                off += fires;
                off_total += BLOCK;
            }
        }
        let on_rate = on as f64 / on_total as f64;
        let off_rate = off as f64 / off_total as f64;
        assert!((on_rate - SIGNAL_RATE).abs() < 0.05, "positive rate {on_rate}");
        assert!((off_rate - LEAK_RATE).abs() < 0.02, "negative rate {off_rate}");
    }

    #[test]
    fn cluster_data_is_one_hot_and_balanced() {
        let (d, cs) = segment_like_dataset(140, 3);
        assert_eq!(d.label_count(), 7);
        assert_eq!(d.feature_dim(), 19);
        d.validate_against(&cs).unwrap();
        for ki in 0..7 {
            assert_eq!(d.positive_count(ki), 20);
        }
        for i in 0..d.len() {
            assert_eq!(d.truth_row(i).iter().filter(|&&b| b).count(), 1);
            assert_eq!(d.instance(i).nnz(), 19);
        }
    }

    #[test]
    fn cluster_data_round_trips_through_the_multiclass_format() {
        let dir = tempfile::tempdir().unwrap();
        let (d, _) = segment_like_dataset(35, 8);
        let path = dir.path().join("clusters.svm");
        save_libsvm_multiclass(&path, &d).unwrap();
        let back = load_libsvm_multiclass(&path).unwrap();
        assert_eq!(back.label_names(), d.label_names());
        for i in 0..d.len() {
            assert_eq!(back.instance(i), d.instance(i));
            assert_eq!(back.truth_row(i), d.truth_row(i));
        }
    }

    #[test]
    fn me_only_groups_span_all_labels() {
        let cs = me_only_constraints(7);
        assert_eq!(cs.label_names()[0], "1");
        assert_eq!(cs.label_names()[6], "7");
        let first = cs.label_id("1").unwrap();
        assert_eq!(closure_size(&cs, (first, true)).unwrap(), 7);
        assert_eq!(closure_size(&cs, (first, false)).unwrap(), 1);
    }
}
