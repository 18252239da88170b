//! Shared fixtures: random constraint graphs and brute-force implication.

use actlogic::constraints::{
    enumerate_valid_assignments, Constraint, ConstraintSet, LabelId,
};
use rand::seq::SliceRandom;
use rand::Rng;

/// A random mix of subsumption edges (a forest, so always acyclic) and
/// mutual-exclusion groups over 2..=max_labels labels. Groups may overlap
/// each other and the hierarchy arbitrarily, including combinations that
/// make some fixes unsatisfiable — propagation must cope with all of them.
pub fn random_constraint_set(rng: &mut impl Rng, max_labels: usize) -> ConstraintSet {
    let k = rng.gen_range(2..=max_labels);
    let names: Vec<String> = (0..k).map(|i| format!("l{i}")).collect();
    let mut constraints = Vec::new();
    for child in 1..k {
        if rng.gen::<f64>() < 0.6 {
            constraints.push(Constraint::Subsumption {
                parent: LabelId(rng.gen_range(0..child)),
                child: LabelId(child),
            });
        }
    }
    let groups = rng.gen_range(0..=2.min(k / 2));
    for _ in 0..groups {
        let size = rng.gen_range(2..=k.min(4));
        let mut members: Vec<usize> = (0..k).collect();
        members.shuffle(rng);
        members.truncate(size);
        constraints.push(Constraint::MutualExclusion(
            members.into_iter().map(LabelId).collect(),
        ));
    }
    ConstraintSet::new(names, constraints).expect("forest edges and distinct members")
}

/// Brute-force implication closure of fixing `k = v`: the labels that take
/// the same value in *every* valid assignment extending the fix. `None` when
/// no valid assignment extends it.
pub fn brute_force_closure(
    cs: &ConstraintSet,
    k: LabelId,
    v: bool,
) -> Option<Vec<(LabelId, bool)>> {
    let all = enumerate_valid_assignments(cs).expect("small graphs enumerate");
    let matching: Vec<&Vec<bool>> = all.iter().filter(|row| row[k.0] == v).collect();
    let first = matching.first()?;
    let mut out = Vec::new();
    for l in 0..cs.label_count() {
        let value = first[l];
        if matching.iter().all(|row| row[l] == value) {
            out.push((LabelId(l), value));
        }
    }
    Some(out)
}
