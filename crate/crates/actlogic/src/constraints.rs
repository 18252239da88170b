//! Label universe, logical constraints between labels, and fixpoint propagation.
//!
//! Two constraint kinds are supported. A mutual-exclusion group allows at most
//! one of its members to be positive. A subsumption edge `parent ⊃ child`
//! means every positive child is also a positive parent. Given a partial
//! assignment of label values, [`propagate`] computes the least fixpoint of
//! the derivation rules, so callers learn every label value that is logically
//! forced by what they already know.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a label in a [`ConstraintSet`] universe, dense in `[0, K)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabelId(pub usize);

/// How an entry of a [`PartialAssignment`] came to be fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    /// Fixed directly: revealed by a query or given with the dataset.
    Requested,
    /// Derived from other fixed values by constraint propagation.
    Propagated,
}

/// A single logical constraint over label values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// At most one member is positive. Members are distinct, two or more.
    MutualExclusion(Vec<LabelId>),
    /// `child = 1` forces `parent = 1`; `parent = 0` forces `child = 0`.
    Subsumption { parent: LabelId, child: LabelId },
}

#[derive(Debug, Error)]
pub enum ConstraintError {
    /// Propagation derived both values for one label.
    #[error("inconsistent assignment: label `{label}` forced to conflicting values by {constraint}")]
    Inconsistent { label: String, constraint: String },
    /// A complete assignment violates a constraint outright.
    #[error("constraint violated: {0}")]
    Violated(String),
    #[error("invalid constraint set: {0}")]
    InvalidConfig(String),
    #[error("cannot enumerate assignments over {labels} labels (cap {cap})")]
    CapExceeded { labels: usize, cap: usize },
}

// ---------------------------------------------------------------------------
// Constraint set
// ---------------------------------------------------------------------------

/// A validated label universe plus the constraints over it.
///
/// Validation happens eagerly in [`ConstraintSet::new`]: indices must be in
/// bounds, names unique and non-empty, mutual-exclusion groups need at least
/// two distinct members, and subsumption edges must form a DAG. The all-zeros
/// assignment satisfies every supported constraint, so a valid set is always
/// satisfiable.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    label_names: Vec<String>,
    constraints: Vec<Constraint>,
    // Adjacency indexes used by propagation.
    me_groups: Vec<Vec<LabelId>>,
    me_membership: Vec<Vec<usize>>,
    parents: Vec<Vec<LabelId>>,
    children: Vec<Vec<LabelId>>,
    // Labels the constraints force negative in every valid assignment (a
    // positive setting contradicts itself), with the constraint to blame.
    // Detected once here so propagation can fold them into every closure.
    backbone: Vec<(LabelId, String)>,
}

impl ConstraintSet {
    pub fn new(
        label_names: Vec<String>,
        constraints: Vec<Constraint>,
    ) -> Result<Self, ConstraintError> {
        let k = label_names.len();
        if k == 0 {
            return Err(ConstraintError::InvalidConfig("empty label list".into()));
        }
        for (i, name) in label_names.iter().enumerate() {
            if name.is_empty() {
                return Err(ConstraintError::InvalidConfig(format!(
                    "label {i} has an empty name"
                )));
            }
            if label_names[..i].contains(name) {
                return Err(ConstraintError::InvalidConfig(format!(
                    "duplicate label name `{name}`"
                )));
            }
        }

        let mut me_groups = Vec::new();
        let mut me_membership = vec![Vec::new(); k];
        let mut parents = vec![Vec::new(); k];
        let mut children = vec![Vec::new(); k];

        let in_bounds = |l: LabelId| -> Result<(), ConstraintError> {
            if l.0 >= k {
                return Err(ConstraintError::InvalidConfig(format!(
                    "label index {} out of bounds for {k} labels",
                    l.0
                )));
            }
            Ok(())
        };

        for c in &constraints {
            match c {
                Constraint::MutualExclusion(members) => {
                    if members.len() < 2 {
                        return Err(ConstraintError::InvalidConfig(
                            "mutual-exclusion group needs at least two members".into(),
                        ));
                    }
                    for (i, &m) in members.iter().enumerate() {
                        in_bounds(m)?;
                        if members[..i].contains(&m) {
                            return Err(ConstraintError::InvalidConfig(format!(
                                "duplicate member `{}` in mutual-exclusion group",
                                label_names[m.0]
                            )));
                        }
                    }
                    let gi = me_groups.len();
                    me_groups.push(members.clone());
                    for &m in members {
                        me_membership[m.0].push(gi);
                    }
                }
                Constraint::Subsumption { parent, child } => {
                    in_bounds(*parent)?;
                    in_bounds(*child)?;
                    if parent == child {
                        return Err(ConstraintError::InvalidConfig(format!(
                            "subsumption edge from `{}` to itself",
                            label_names[parent.0]
                        )));
                    }
                    parents[child.0].push(*parent);
                    children[parent.0].push(*child);
                }
            }
        }

        let mut set = ConstraintSet {
            label_names,
            constraints,
            me_groups,
            me_membership,
            parents,
            children,
            backbone: Vec::new(),
        };
        set.check_acyclic()?;
        // A label whose positive setting propagates to a contradiction can
        // never be positive; remember it so closures include the implication.
        // Edges out of negative facts only reach other negative facts, so no
        // label can be forced positive and this detection cascades fully.
        for l in 0..k {
            let mut out = PartialAssignment::empty(k);
            out.insert(LabelId(l), true, Origin::Requested);
            let mut queue = VecDeque::from([LabelId(l)]);
            if let Err(ConstraintError::Inconsistent { constraint, .. }) =
                run_worklist(&set, &mut out, &mut queue, &mut PropagationStats::default())
            {
                set.backbone.push((LabelId(l), constraint));
            }
        }
        Ok(set)
    }

    /// DFS over child -> parent edges; a back edge means a subsumption cycle.
    fn check_acyclic(&self) -> Result<(), ConstraintError> {
        const WHITE: u8 = 0;
        const GRAY: u8 = 1;
        const BLACK: u8 = 2;
        let k = self.label_count();
        let mut color = vec![WHITE; k];
        for start in 0..k {
            if color[start] != WHITE {
                continue;
            }
            // Iterative DFS with an explicit stack of (node, next edge position).
            let mut stack = vec![(start, 0usize)];
            color[start] = GRAY;
            while let Some(&(node, pos)) = stack.last() {
                if pos < self.parents[node].len() {
                    stack.last_mut().expect("stack is non-empty").1 += 1;
                    let next = self.parents[node][pos].0;
                    match color[next] {
                        WHITE => {
                            color[next] = GRAY;
                            stack.push((next, 0));
                        }
                        GRAY => {
                            return Err(ConstraintError::InvalidConfig(format!(
                                "subsumption cycle through `{}`",
                                self.label_names[next]
                            )));
                        }
                        _ => {}
                    }
                } else {
                    color[node] = BLACK;
                    stack.pop();
                }
            }
        }
        Ok(())
    }

    pub fn label_count(&self) -> usize {
        self.label_names.len()
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn label_name(&self, l: LabelId) -> &str {
        &self.label_names[l.0]
    }

    pub fn label_id(&self, name: &str) -> Option<LabelId> {
        self.label_names.iter().position(|n| n == name).map(LabelId)
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Human-readable form of a constraint, used in diagnostics.
    pub fn describe(&self, c: &Constraint) -> String {
        match c {
            Constraint::MutualExclusion(members) => {
                let names: Vec<&str> = members.iter().map(|&m| self.label_name(m)).collect();
                format!("mutual_exclusion({})", names.join(", "))
            }
            Constraint::Subsumption { parent, child } => format!(
                "subsumption({} ⊃ {})",
                self.label_name(*parent),
                self.label_name(*child)
            ),
        }
    }

    /// Checks a complete assignment row against every constraint.
    pub fn check_row(&self, row: &[bool]) -> Result<(), ConstraintError> {
        assert_eq!(row.len(), self.label_count(), "row length != label count");
        for c in &self.constraints {
            let ok = match c {
                Constraint::MutualExclusion(members) => {
                    members.iter().filter(|&&m| row[m.0]).count() <= 1
                }
                Constraint::Subsumption { parent, child } => !row[child.0] || row[parent.0],
            };
            if !ok {
                return Err(ConstraintError::Violated(self.describe(c)));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON configuration
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ConfigFile {
    labels: Vec<String>,
    constraints: Vec<ConfigConstraint>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum ConfigConstraint {
    MutualExclusion { labels: Vec<String> },
    Subsumption { parent: String, child: String },
}

impl ConstraintSet {
    /// Parses the JSON configuration format:
    ///
    /// ```json
    /// { "labels": ["animal", "bird"],
    ///   "constraints": [
    ///     { "type": "mutual_exclusion", "labels": ["animal", "city"] },
    ///     { "type": "subsumption", "parent": "animal", "child": "bird" } ] }
    /// ```
    pub fn from_json_str(s: &str) -> Result<Self, ConstraintError> {
        let cfg: ConfigFile = serde_json::from_str(s)
            .map_err(|e| ConstraintError::InvalidConfig(format!("malformed JSON: {e}")))?;
        let resolve = |name: &str| -> Result<LabelId, ConstraintError> {
            cfg.labels
                .iter()
                .position(|n| n == name)
                .map(LabelId)
                .ok_or_else(|| {
                    ConstraintError::InvalidConfig(format!(
                        "constraint references unknown label `{name}`"
                    ))
                })
        };
        let mut constraints = Vec::with_capacity(cfg.constraints.len());
        for c in &cfg.constraints {
            constraints.push(match c {
                ConfigConstraint::MutualExclusion { labels } => Constraint::MutualExclusion(
                    labels
                        .iter()
                        .map(|n| resolve(n))
                        .collect::<Result<Vec<_>, _>>()?,
                ),
                ConfigConstraint::Subsumption { parent, child } => Constraint::Subsumption {
                    parent: resolve(parent)?,
                    child: resolve(child)?,
                },
            });
        }
        ConstraintSet::new(cfg.labels, constraints)
    }

    pub fn to_json_string(&self) -> String {
        let constraints = self
            .constraints
            .iter()
            .map(|c| match c {
                Constraint::MutualExclusion(members) => ConfigConstraint::MutualExclusion {
                    labels: members.iter().map(|&m| self.label_name(m).into()).collect(),
                },
                Constraint::Subsumption { parent, child } => ConfigConstraint::Subsumption {
                    parent: self.label_name(*parent).into(),
                    child: self.label_name(*child).into(),
                },
            })
            .collect();
        let cfg = ConfigFile {
            labels: self.label_names.clone(),
            constraints,
        };
        serde_json::to_string_pretty(&cfg).expect("constraint config serializes")
    }
}

// ---------------------------------------------------------------------------
// Partial assignments
// ---------------------------------------------------------------------------

/// A partial mapping from labels to binary values, with the origin of each fix.
///
/// Consistency with a constraint set is established by [`propagate`] (which
/// reports conflicts) or checked explicitly with [`is_consistent`]; the type
/// itself only stores values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialAssignment {
    slots: Vec<Option<(bool, Origin)>>,
    fixed: usize,
}

impl PartialAssignment {
    pub fn empty(label_count: usize) -> Self {
        PartialAssignment {
            slots: vec![None; label_count],
            fixed: 0,
        }
    }

    /// A fully fixed assignment taken from a complete truth row.
    pub fn from_row(row: &[bool], origin: Origin) -> Self {
        PartialAssignment {
            slots: row.iter().map(|&v| Some((v, origin))).collect(),
            fixed: row.len(),
        }
    }

    pub fn label_count(&self) -> usize {
        self.slots.len()
    }

    /// Number of fixed labels.
    pub fn len(&self) -> usize {
        self.fixed
    }

    pub fn is_empty(&self) -> bool {
        self.fixed == 0
    }

    pub fn value(&self, l: LabelId) -> Option<bool> {
        self.slots[l.0].map(|(v, _)| v)
    }

    pub fn origin(&self, l: LabelId) -> Option<Origin> {
        self.slots[l.0].map(|(_, o)| o)
    }

    pub fn is_fixed(&self, l: LabelId) -> bool {
        self.slots[l.0].is_some()
    }

    /// Fixes a label that is not fixed yet. Panics if it already is; conflict
    /// handling belongs to [`propagate`].
    pub fn insert(&mut self, l: LabelId, value: bool, origin: Origin) {
        assert!(
            self.slots[l.0].is_none(),
            "label {} is already fixed",
            l.0
        );
        self.slots[l.0] = Some((value, origin));
        self.fixed += 1;
    }

    /// Fixed entries in label-index order.
    pub fn iter(&self) -> impl Iterator<Item = (LabelId, bool, Origin)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|(v, o)| (LabelId(i), v, o)))
    }
}

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

/// Counters from one fixpoint computation, used to audit cost bounds.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct PropagationStats {
    /// Labels dequeued and expanded.
    pub rounds: usize,
    /// Individual rule firings (attempts to force a label value).
    pub rule_applications: usize,
}

/// Computes the least fixpoint extending `seed` with `new_fix` under `cs`.
///
/// The result contains the seed, the new fix (tagged [`Origin::Requested`]),
/// everything they force (tagged [`Origin::Propagated`]), and any labels the
/// constraint set forces outright. Derivation rules: a positive
/// mutual-exclusion member zeroes the other members, a positive child sets
/// its parents, a negative parent zeroes its children. Negative members,
/// positive parents and negative children force nothing. If two rules force
/// conflicting values the assignment has no valid completion and
/// `Inconsistent` is returned.
pub fn propagate(
    cs: &ConstraintSet,
    seed: &PartialAssignment,
    new_fix: (LabelId, bool),
) -> Result<PartialAssignment, ConstraintError> {
    propagate_counted(cs, seed, new_fix).map(|(a, _)| a)
}

pub(crate) fn propagate_counted(
    cs: &ConstraintSet,
    seed: &PartialAssignment,
    new_fix: (LabelId, bool),
) -> Result<(PartialAssignment, PropagationStats), ConstraintError> {
    assert_eq!(seed.label_count(), cs.label_count());
    let mut out = seed.clone();
    let mut queue: VecDeque<LabelId> = seed.iter().map(|(l, _, _)| l).collect();

    let (l0, v0) = new_fix;
    match out.value(l0) {
        None => {
            out.insert(l0, v0, Origin::Requested);
            queue.push_back(l0);
        }
        Some(v) if v == v0 => {}
        Some(_) => {
            return Err(ConstraintError::Inconsistent {
                label: cs.label_name(l0).into(),
                constraint: "the requested fix itself".into(),
            })
        }
    }

    let mut stats = PropagationStats::default();
    for (l, blame) in &cs.backbone {
        force(cs, &mut out, &mut queue, &mut stats, *l, false, || blame.clone())?;
    }
    run_worklist(cs, &mut out, &mut queue, &mut stats)?;
    Ok((out, stats))
}

/// Drains the queue, firing every rule each dequeued fact enables. Each label
/// enters the queue at most once because values never change after they are
/// set, so this terminates after <= K rounds.
fn run_worklist(
    cs: &ConstraintSet,
    out: &mut PartialAssignment,
    queue: &mut VecDeque<LabelId>,
    stats: &mut PropagationStats,
) -> Result<(), ConstraintError> {
    while let Some(l) = queue.pop_front() {
        stats.rounds += 1;
        let v = out.value(l).expect("queued labels are fixed");
        if v {
            for &gi in &cs.me_membership[l.0] {
                for &other in &cs.me_groups[gi] {
                    if other != l {
                        force(cs, out, queue, stats, other, false, || {
                            cs.describe(&Constraint::MutualExclusion(cs.me_groups[gi].clone()))
                        })?;
                    }
                }
            }
            for &parent in &cs.parents[l.0] {
                force(cs, out, queue, stats, parent, true, || {
                    cs.describe(&Constraint::Subsumption { parent, child: l })
                })?;
            }
        } else {
            for &child in &cs.children[l.0] {
                force(cs, out, queue, stats, child, false, || {
                    cs.describe(&Constraint::Subsumption { parent: l, child })
                })?;
            }
        }
    }
    Ok(())
}

fn force(
    cs: &ConstraintSet,
    out: &mut PartialAssignment,
    queue: &mut VecDeque<LabelId>,
    stats: &mut PropagationStats,
    target: LabelId,
    value: bool,
    describe: impl FnOnce() -> String,
) -> Result<(), ConstraintError> {
    stats.rule_applications += 1;
    match out.value(target) {
        None => {
            out.insert(target, value, Origin::Propagated);
            queue.push_back(target);
            Ok(())
        }
        Some(v) if v == value => Ok(()),
        Some(_) => Err(ConstraintError::Inconsistent {
            label: cs.label_name(target).into(),
            constraint: describe(),
        }),
    }
}

/// Size of the closure of a single fix from an empty seed, the fix included.
///
/// Errors only for constraint sets under which the fix has no valid
/// completion at all (for example a label that is both mutually exclusive
/// with and subsumed by another).
pub fn closure_size(cs: &ConstraintSet, fix: (LabelId, bool)) -> Result<usize, ConstraintError> {
    propagate(cs, &PartialAssignment::empty(cs.label_count()), fix).map(|a| a.len())
}

/// Upper bound on the label count accepted by [`enumerate_valid_assignments`].
pub const ENUMERATION_CAP: usize = 20;

/// All complete assignments satisfying `cs`, in lexicographic order.
pub fn enumerate_valid_assignments(cs: &ConstraintSet) -> Result<Vec<Vec<bool>>, ConstraintError> {
    enumerate_valid_assignments_capped(cs, ENUMERATION_CAP)
}

pub fn enumerate_valid_assignments_capped(
    cs: &ConstraintSet,
    cap: usize,
) -> Result<Vec<Vec<bool>>, ConstraintError> {
    let k = cs.label_count();
    if k > cap || k >= usize::BITS as usize {
        return Err(ConstraintError::CapExceeded { labels: k, cap });
    }
    let mut out = Vec::new();
    for code in 0..(1usize << k) {
        // Label 0 is the most significant bit, so codes enumerate rows in
        // lexicographic order.
        let row: Vec<bool> = (0..k).map(|j| (code >> (k - 1 - j)) & 1 == 1).collect();
        if cs.check_row(&row).is_ok() {
            out.push(row);
        }
    }
    Ok(out)
}

/// True iff some complete valid assignment extends `a`.
///
/// For mutual exclusion plus subsumption this is decidable by propagation
/// alone: close `a` under the derivation rules, and if no conflict appears
/// the closure extended with zeros is itself a valid completion.
pub fn is_consistent(cs: &ConstraintSet, a: &PartialAssignment) -> bool {
    if a.is_empty() {
        return true;
    }
    // Re-run the fixpoint over all existing entries via a self-merge: pick any
    // fixed label as the "new" fix; propagate re-queues every seed entry.
    let (l, v, _) = a.iter().next().expect("non-empty assignment");
    propagate(cs, a, (l, v)).is_ok()
}
