//! Selection scores for candidate (instance, label) queries.
//!
//! A scoring method ranks every eligible (instance, label) pair of the pool
//! from the current per-label marginal estimates. `entropy` and `probability`
//! price only the queried pair; the surprise scores also price the label
//! values that constraint propagation would fix alongside the answer, which
//! is what makes constraint-aware selection cheaper per labeled bit.

use rand::Rng;
use thiserror::Error;

use crate::constraints::{
    propagate, Constraint, ConstraintError, ConstraintSet, LabelId, PartialAssignment,
};

/// Probabilities are clamped away from zero inside logarithms.
pub const LOG_CLAMP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("no eligible (instance, label) pair remains")]
    PoolExhausted,
    #[error("invalid scoring method: {0}")]
    InvalidMethod(String),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

// ---------------------------------------------------------------------------
// Marginal estimates
// ---------------------------------------------------------------------------

/// Per-label positive-probability estimates for a pool of instances, plus an
/// eligibility mask. A pair becomes ineligible once its value is fixed.
#[derive(Clone, Debug)]
pub struct MarginalMatrix {
    instances: usize,
    labels: usize,
    values: Vec<f64>,
    eligible: Vec<bool>,
}

impl MarginalMatrix {
    pub fn new(instances: usize, labels: usize) -> Self {
        MarginalMatrix {
            instances,
            labels,
            values: vec![0.0; instances * labels],
            eligible: vec![true; instances * labels],
        }
    }

    pub fn instances(&self) -> usize {
        self.instances
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    fn slot(&self, i: usize, k: LabelId) -> usize {
        debug_assert!(i < self.instances && k.0 < self.labels);
        i * self.labels + k.0
    }

    pub fn get(&self, i: usize, k: LabelId) -> f64 {
        self.values[self.slot(i, k)]
    }

    pub fn set(&mut self, i: usize, k: LabelId, p: f64) {
        assert!((0.0..=1.0).contains(&p), "marginal {p} outside [0, 1]");
        let s = self.slot(i, k);
        self.values[s] = p;
    }

    pub fn is_eligible(&self, i: usize, k: LabelId) -> bool {
        self.eligible[self.slot(i, k)]
    }

    pub fn mark_fixed(&mut self, i: usize, k: LabelId) {
        let s = self.slot(i, k);
        self.eligible[s] = false;
    }

    pub fn eligible_count(&self) -> usize {
        self.eligible.iter().filter(|&&e| e).count()
    }
}

// ---------------------------------------------------------------------------
// Score functions
// ---------------------------------------------------------------------------

/// How surprising a predicted-probability `p` outcome is when it occurs.
/// Both kinds are decreasing in `p` with zero surprise at `p = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurpriseKind {
    /// `-ln p`, clamped at [`LOG_CLAMP`].
    Logarithmic,
    /// `1 - p`.
    Linear,
}

pub fn surprise(kind: SurpriseKind, p: f64) -> f64 {
    match kind {
        SurpriseKind::Logarithmic => -(p.max(LOG_CLAMP).ln()),
        SurpriseKind::Linear => 1.0 - p,
    }
}

/// Binary entropy of the pair's marginal, in nats; `0 ln 0 = 0`.
pub fn score_entropy(p: f64) -> f64 {
    let half = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    half(p) + half(1.0 - p)
}

/// The marginal itself: prefers pairs most likely to be positive.
pub fn score_probability(p: f64) -> f64 {
    p
}

/// Expected surprise of querying `k` when its mutual-exclusion group is the
/// whole story: a positive answer also reveals a negative for every other
/// unfixed member of `group`.
///
/// Already-fixed members carry no remaining surprise and are skipped.
pub fn score_me(
    m: &MarginalMatrix,
    kind: SurpriseKind,
    i: usize,
    k: LabelId,
    group: &[LabelId],
) -> f64 {
    debug_assert!(group.contains(&k), "queried label must belong to the group");
    let p_k = m.get(i, k);
    let mut others = 0.0;
    for &c in group {
        if c != k && m.is_eligible(i, c) {
            others += surprise(kind, 1.0 - m.get(i, c));
        }
    }
    p_k * (surprise(kind, p_k) + others) + (1.0 - p_k) * surprise(kind, 1.0 - p_k)
}

/// Expected surprise of querying `k` under arbitrary constraints: each answer
/// is priced by the summed surprise of every pair its propagated closure
/// newly fixes (the queried pair included). Pairs already fixed in `fixed`
/// contribute nothing.
pub fn score_constraints(
    m: &MarginalMatrix,
    cs: &ConstraintSet,
    kind: SurpriseKind,
    i: usize,
    k: LabelId,
    fixed: &PartialAssignment,
) -> Result<f64, ScoringError> {
    let closure_surprise = |closure: &PartialAssignment| -> f64 {
        closure
            .iter()
            .filter(|(l, _, _)| !fixed.is_fixed(*l))
            .map(|(l, v, _)| {
                let p = m.get(i, l);
                if v {
                    surprise(kind, p)
                } else {
                    surprise(kind, 1.0 - p)
                }
            })
            .sum()
    };
    let up = propagate(cs, fixed, (k, true))?;
    let down = propagate(cs, fixed, (k, false))?;
    let p_k = m.get(i, k);
    Ok(p_k * closure_surprise(&up) + (1.0 - p_k) * closure_surprise(&down))
}

// ---------------------------------------------------------------------------
// Methods
// ---------------------------------------------------------------------------

/// The score a method assigns to an eligible pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoringRule {
    /// Uniform random score per pair.
    Random,
    /// [`score_entropy`].
    Entropy,
    /// [`score_probability`].
    Probability,
    /// [`score_me`]; requires a single mutual-exclusion group spanning all labels.
    MutualExclusionSurprise(SurpriseKind),
    /// [`score_constraints`].
    ConstraintSurprise(SurpriseKind),
}

/// A selection strategy: a scoring rule plus whether revealed answers are
/// propagated through the constraints before the next selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScoringMethod {
    rule: ScoringRule,
    propagate_constraints: bool,
}

impl ScoringMethod {
    /// Probability and constraint-surprise scores only make sense when the
    /// revealed answers are propagated, so those combinations are rejected.
    pub fn new(rule: ScoringRule, propagate_constraints: bool) -> Result<Self, ScoringError> {
        let needs_propagation = matches!(
            rule,
            ScoringRule::Probability | ScoringRule::ConstraintSurprise(_)
        );
        if needs_propagation && !propagate_constraints {
            return Err(ScoringError::InvalidMethod(format!(
                "{rule:?} requires constraint propagation"
            )));
        }
        Ok(ScoringMethod {
            rule,
            propagate_constraints,
        })
    }

    pub fn rule(&self) -> ScoringRule {
        self.rule
    }

    pub fn propagates_constraints(&self) -> bool {
        self.propagate_constraints
    }

    pub fn random() -> Self {
        ScoringMethod { rule: ScoringRule::Random, propagate_constraints: false }
    }

    pub fn entropy() -> Self {
        ScoringMethod { rule: ScoringRule::Entropy, propagate_constraints: false }
    }

    pub fn random_cp() -> Self {
        ScoringMethod { rule: ScoringRule::Random, propagate_constraints: true }
    }

    pub fn entropy_cp() -> Self {
        ScoringMethod { rule: ScoringRule::Entropy, propagate_constraints: true }
    }

    pub fn probability_cp() -> Self {
        ScoringMethod { rule: ScoringRule::Probability, propagate_constraints: true }
    }

    pub fn log_cp() -> Self {
        ScoringMethod {
            rule: ScoringRule::ConstraintSurprise(SurpriseKind::Logarithmic),
            propagate_constraints: true,
        }
    }

    pub fn linear_cp() -> Self {
        ScoringMethod {
            rule: ScoringRule::ConstraintSurprise(SurpriseKind::Linear),
            propagate_constraints: true,
        }
    }

    /// Every method reachable by name, in catalog order.
    pub const CATALOG: [&'static str; 7] = [
        "random",
        "entropy",
        "random-cp",
        "entropy-cp",
        "probability-cp",
        "log-cp",
        "linear-cp",
    ];

    pub fn from_name(name: &str) -> Result<Self, ScoringError> {
        match name {
            "random" => Ok(Self::random()),
            "entropy" => Ok(Self::entropy()),
            "random-cp" => Ok(Self::random_cp()),
            "entropy-cp" => Ok(Self::entropy_cp()),
            "probability-cp" => Ok(Self::probability_cp()),
            "log-cp" => Ok(Self::log_cp()),
            "linear-cp" => Ok(Self::linear_cp()),
            other => Err(ScoringError::InvalidMethod(format!(
                "unknown method `{other}`; valid methods: {}",
                Self::CATALOG.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match (self.rule, self.propagate_constraints) {
            (ScoringRule::Random, false) => "random",
            (ScoringRule::Random, true) => "random-cp",
            (ScoringRule::Entropy, false) => "entropy",
            (ScoringRule::Entropy, true) => "entropy-cp",
            (ScoringRule::Probability, _) => "probability-cp",
            (ScoringRule::ConstraintSurprise(SurpriseKind::Logarithmic), _) => "log-cp",
            (ScoringRule::ConstraintSurprise(SurpriseKind::Linear), _) => "linear-cp",
            (ScoringRule::MutualExclusionSurprise(SurpriseKind::Logarithmic), _) => {
                "me-surprise-log"
            }
            (ScoringRule::MutualExclusionSurprise(SurpriseKind::Linear), _) => {
                "me-surprise-linear"
            }
        }
    }
}

/// The single mutual-exclusion group if `cs` consists of exactly one ME
/// constraint spanning every label.
fn spanning_me_group(cs: &ConstraintSet) -> Option<&[LabelId]> {
    match cs.constraints() {
        [Constraint::MutualExclusion(group)] if group.len() == cs.label_count() => {
            Some(group.as_slice())
        }
        _ => None,
    }
}

/// Scores every eligible pair and returns the argmax, breaking score ties
/// toward the lowest (instance, label) pair.
///
/// `fixed` holds each instance's currently known labels and is the context
/// against which constraint-surprise closures are evaluated; it must agree
/// with the eligibility mask of `m`.
/// Resolves the spanning ME group when `method` needs one.
pub(crate) fn resolve_me_group<'a>(
    cs: &'a ConstraintSet,
    method: &ScoringMethod,
) -> Result<Option<&'a [LabelId]>, ScoringError> {
    match method.rule {
        ScoringRule::MutualExclusionSurprise(_) => {
            spanning_me_group(cs).map(Some).ok_or_else(|| {
                ScoringError::InvalidMethod(
                    "mutual-exclusion surprise needs a single group spanning all labels".into(),
                )
            })
        }
        _ => Ok(None),
    }
}

/// Score of one eligible pair under any rule except `Random` (which draws
/// from the selection RNG instead of a function of the marginals).
pub(crate) fn deterministic_pair_score(
    m: &MarginalMatrix,
    cs: &ConstraintSet,
    method: &ScoringMethod,
    me_group: Option<&[LabelId]>,
    i: usize,
    k: LabelId,
    fixed_i: &PartialAssignment,
) -> Result<f64, ScoringError> {
    Ok(match method.rule {
        ScoringRule::Random => unreachable!("random picks are drawn, not scored"),
        ScoringRule::Entropy => score_entropy(m.get(i, k)),
        ScoringRule::Probability => score_probability(m.get(i, k)),
        ScoringRule::MutualExclusionSurprise(kind) => {
            score_me(m, kind, i, k, me_group.expect("group resolved for ME rule"))
        }
        ScoringRule::ConstraintSurprise(kind) => score_constraints(m, cs, kind, i, k, fixed_i)?,
    })
}

pub fn select_next(
    m: &MarginalMatrix,
    cs: &ConstraintSet,
    method: &ScoringMethod,
    fixed: &[PartialAssignment],
    rng: &mut impl Rng,
) -> Result<(usize, LabelId), ScoringError> {
    assert_eq!(fixed.len(), m.instances(), "one assignment per instance");
    let me_group = resolve_me_group(cs, method)?;

    let mut best: Option<(f64, usize, LabelId)> = None;
    for i in 0..m.instances() {
        for ki in 0..m.labels() {
            let k = LabelId(ki);
            if !m.is_eligible(i, k) {
                continue;
            }
            debug_assert!(!fixed[i].is_fixed(k), "eligible pair must be unfixed");
            let score = match method.rule {
                ScoringRule::Random => rng.gen::<f64>(),
                _ => deterministic_pair_score(m, cs, method, me_group, i, k, &fixed[i])?,
            };
            // Strict comparison keeps the first (lowest) pair on ties.
            if best.map_or(true, |(s, _, _)| score > s) {
                best = Some((score, i, k));
            }
        }
    }
    best.map(|(_, i, k)| (i, k)).ok_or(ScoringError::PoolExhausted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn me_cs(k: usize) -> ConstraintSet {
        ConstraintSet::new(
            (0..k).map(|i| format!("y{i}")).collect(),
            vec![Constraint::MutualExclusion((0..k).map(LabelId).collect())],
        )
        .unwrap()
    }

    fn matrix_1xk(p: &[f64]) -> MarginalMatrix {
        let mut m = MarginalMatrix::new(1, p.len());
        for (k, &pi) in p.iter().enumerate() {
            m.set(0, LabelId(k), pi);
        }
        m
    }

    fn empty_fixed(n: usize, k: usize) -> Vec<PartialAssignment> {
        (0..n).map(|_| PartialAssignment::empty(k)).collect()
    }

    #[test]
    fn surprise_values_and_monotonicity() {
        assert_eq!(surprise(SurpriseKind::Linear, 1.0), 0.0);
        assert!(close(surprise(SurpriseKind::Linear, 0.3), 0.7, 1e-12));
        assert!(close(
            surprise(SurpriseKind::Logarithmic, 0.5),
            2.0f64.ln(),
            1e-12
        ));
        assert_eq!(surprise(SurpriseKind::Logarithmic, 1.0), 0.0);
        assert!(surprise(SurpriseKind::Logarithmic, 0.0).is_finite());
        for kind in [SurpriseKind::Logarithmic, SurpriseKind::Linear] {
            let mut prev = surprise(kind, 0.01);
            for step in 1..=99 {
                let cur = surprise(kind, 0.01 + step as f64 * 0.01);
                assert!(cur < prev, "{kind:?} must decrease");
                prev = cur;
            }
        }
    }

    #[test]
    fn entropy_score_values() {
        assert!(close(score_entropy(0.5), 2.0f64.ln(), 1e-12));
        assert!(close(score_entropy(0.9), 0.3251, 1e-4));
        assert_eq!(score_entropy(0.0), 0.0);
        assert_eq!(score_entropy(1.0), 0.0);
    }

    #[test]
    fn entropy_prefers_closest_to_half_probability_prefers_largest() {
        let m = matrix_1xk(&[0.9, 0.2]);
        let cs = me_cs(2);
        let fixed = empty_fixed(1, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = select_next(&m, &cs, &ScoringMethod::entropy(), &fixed, &mut rng).unwrap();
        assert_eq!(e, (0, LabelId(1)));
        let p = select_next(&m, &cs, &ScoringMethod::probability_cp(), &fixed, &mut rng).unwrap();
        assert_eq!(p, (0, LabelId(0)));
    }

    #[test]
    fn me_surprise_matches_hand_computed_values() {
        let m = matrix_1xk(&[0.6, 0.3]);
        let group = [LabelId(0), LabelId(1)];
        let s0 = score_me(&m, SurpriseKind::Linear, 0, LabelId(0), &group);
        let s1 = score_me(&m, SurpriseKind::Linear, 0, LabelId(1), &group);
        assert!(close(s0, 0.66, 1e-12));
        assert!(close(s1, 0.60, 1e-12));

        // Degenerate single-member group: no cross terms.
        let single = matrix_1xk(&[0.5]);
        let s = score_me(&single, SurpriseKind::Linear, 0, LabelId(0), &[LabelId(0)]);
        assert!(close(s, 0.5, 1e-12));
    }

    #[test]
    fn me_surprise_skips_fixed_members() {
        let mut m = matrix_1xk(&[0.6, 0.3, 0.8]);
        m.mark_fixed(0, LabelId(2));
        let full = [LabelId(0), LabelId(1), LabelId(2)];
        let masked = score_me(&m, SurpriseKind::Linear, 0, LabelId(0), &full);
        let two = score_me(&matrix_1xk(&[0.6, 0.3]), SurpriseKind::Linear, 0, LabelId(0), &full[..2]);
        assert!(close(masked, two, 1e-12));
    }

    #[test]
    fn constraint_surprise_matches_hand_computed_subsumption_values() {
        // animal(0) ⊃ bird(1); querying bird prices animal on the positive side.
        let cs = ConstraintSet::new(
            vec!["animal".into(), "bird".into()],
            vec![Constraint::Subsumption { parent: LabelId(0), child: LabelId(1) }],
        )
        .unwrap();
        let m = matrix_1xk(&[0.7, 0.4]);
        let fixed = PartialAssignment::empty(2);
        let lin =
            score_constraints(&m, &cs, SurpriseKind::Linear, 0, LabelId(1), &fixed).unwrap();
        assert!(close(lin, 0.60, 1e-12));
        let log =
            score_constraints(&m, &cs, SurpriseKind::Logarithmic, 0, LabelId(1), &fixed).unwrap();
        assert!(close(log, 0.8157, 1e-4));
    }

    #[test]
    fn constraint_surprise_generalizes_me_surprise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let k = 2 + (rng.gen::<u64>() % 5) as usize;
            let p: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
            let m = matrix_1xk(&p);
            let cs = me_cs(k);
            let group: Vec<LabelId> = (0..k).map(LabelId).collect();
            let fixed = PartialAssignment::empty(k);
            for kind in [SurpriseKind::Logarithmic, SurpriseKind::Linear] {
                for target in 0..k {
                    let via_me = score_me(&m, kind, 0, LabelId(target), &group);
                    let via_cp =
                        score_constraints(&m, &cs, kind, 0, LabelId(target), &fixed).unwrap();
                    let denom = via_me.abs().max(via_cp.abs()).max(1e-12);
                    assert!(
                        (via_me - via_cp).abs() / denom <= 1e-12,
                        "k={k} target={target} {via_me} vs {via_cp}"
                    );
                }
            }
        }
    }

    #[test]
    fn fixed_pairs_contribute_zero_surprise() {
        // With y1 already fixed negative, querying y0 in an ME pair prices
        // only y0 itself on both sides.
        let cs = me_cs(2);
        let mut m = matrix_1xk(&[0.6, 0.3]);
        m.mark_fixed(0, LabelId(1));
        let mut fixed = PartialAssignment::empty(2);
        fixed.insert(LabelId(1), false, crate::constraints::Origin::Requested);
        let s =
            score_constraints(&m, &cs, SurpriseKind::Linear, 0, LabelId(0), &fixed).unwrap();
        let self_only = 0.6 * surprise(SurpriseKind::Linear, 0.6)
            + 0.4 * surprise(SurpriseKind::Linear, 0.4);
        assert!(close(s, self_only, 1e-12));
    }

    #[test]
    fn ties_break_toward_lowest_instance_then_label() {
        let mut m = MarginalMatrix::new(2, 2);
        for i in 0..2 {
            for k in 0..2 {
                m.set(i, LabelId(k), 0.5);
            }
        }
        let cs = me_cs(2);
        let fixed = empty_fixed(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let first = select_next(&m, &cs, &ScoringMethod::entropy(), &fixed, &mut rng).unwrap();
        assert_eq!(first, (0, LabelId(0)));
        m.mark_fixed(0, LabelId(0));
        let second = select_next(&m, &cs, &ScoringMethod::entropy(), &fixed, &mut rng).unwrap();
        assert_eq!(second, (0, LabelId(1)));
    }

    #[test]
    fn exhausted_pool_is_an_error() {
        let mut m = matrix_1xk(&[0.5]);
        m.mark_fixed(0, LabelId(0));
        let cs = ConstraintSet::new(vec!["y0".into()], vec![]).unwrap();
        let mut fixed = empty_fixed(1, 1);
        fixed[0].insert(LabelId(0), true, crate::constraints::Origin::Requested);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            select_next(&m, &cs, &ScoringMethod::entropy(), &fixed, &mut rng),
            Err(ScoringError::PoolExhausted)
        ));
    }

    #[test]
    fn method_catalog_round_trips_and_validates() {
        for name in ScoringMethod::CATALOG {
            let m = ScoringMethod::from_name(name).unwrap();
            assert_eq!(m.name(), name);
        }
        match ScoringMethod::from_name("gibberish") {
            Err(ScoringError::InvalidMethod(msg)) => {
                for name in ScoringMethod::CATALOG {
                    assert!(msg.contains(name), "message must list `{name}`");
                }
            }
            other => panic!("expected InvalidMethod, got {other:?}"),
        }
        assert!(ScoringMethod::new(ScoringRule::Probability, false).is_err());
        assert!(ScoringMethod::new(
            ScoringRule::ConstraintSurprise(SurpriseKind::Linear),
            false
        )
        .is_err());
        assert!(ScoringMethod::new(ScoringRule::Entropy, false).is_ok());
    }

    #[test]
    fn me_surprise_method_requires_spanning_group() {
        let method =
            ScoringMethod::new(ScoringRule::MutualExclusionSurprise(SurpriseKind::Linear), true)
                .unwrap();
        let cs = ConstraintSet::new(vec!["a".into(), "b".into()], vec![]).unwrap();
        let m = matrix_1xk(&[0.5, 0.5]);
        let fixed = empty_fixed(1, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            select_next(&m, &cs, &method, &fixed, &mut rng),
            Err(ScoringError::InvalidMethod(_))
        ));
        let ok = select_next(&m, &me_cs(2), &method, &fixed, &mut rng);
        assert!(ok.is_ok());
    }

    #[test]
    fn random_selection_is_seed_deterministic() {
        let m = matrix_1xk(&[0.1, 0.2, 0.3]);
        let cs = me_cs(3);
        let fixed = empty_fixed(1, 3);
        let a = select_next(
            &m,
            &cs,
            &ScoringMethod::random(),
            &fixed,
            &mut ChaCha8Rng::seed_from_u64(5),
        )
        .unwrap();
        let b = select_next(
            &m,
            &cs,
            &ScoringMethod::random(),
            &fixed,
            &mut ChaCha8Rng::seed_from_u64(5),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn entropy_and_probability_agree_when_argmax_sets_coincide() {
        // Whenever the largest marginal is also the one closest to 1/2 the
        // two rules must pick the same pair.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut coincided = 0;
        for trial in 0..1000 {
            let n = 1 + (rng.gen::<u64>() % 4) as usize;
            let k = 2 + (rng.gen::<u64>() % 4) as usize;
            let cap = if trial % 2 == 0 { 0.5 } else { 1.0 };
            let mut m = MarginalMatrix::new(n, k);
            for i in 0..n {
                for ki in 0..k {
                    m.set(i, LabelId(ki), rng.gen::<f64>() * cap);
                }
            }
            let mut max_p = f64::NEG_INFINITY;
            let mut min_dist = f64::INFINITY;
            for i in 0..n {
                for ki in 0..k {
                    let p = m.get(i, LabelId(ki));
                    max_p = max_p.max(p);
                    min_dist = min_dist.min((p - 0.5).abs());
                }
            }
            let argmax_p: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (0..k).map(move |ki| (i, ki)))
                .filter(|&(i, ki)| m.get(i, LabelId(ki)) == max_p)
                .collect();
            let argmin_d: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (0..k).map(move |ki| (i, ki)))
                .filter(|&(i, ki)| (m.get(i, LabelId(ki)) - 0.5).abs() == min_dist)
                .collect();
            if argmax_p != argmin_d {
                continue;
            }
            coincided += 1;
            let cs = ConstraintSet::new((0..k).map(|x| format!("y{x}")).collect(), vec![]).unwrap();
            let fixed = empty_fixed(n, k);
            let e = select_next(&m, &cs, &ScoringMethod::entropy(), &fixed, &mut rng).unwrap();
            let p =
                select_next(&m, &cs, &ScoringMethod::probability_cp(), &fixed, &mut rng).unwrap();
            assert_eq!(e, p);
        }
        assert!(coincided >= 400, "only {coincided} matrices exercised the property");
    }

    #[test]
    fn linear_scores_are_finite_and_non_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let cs = me_cs(4);
        let group: Vec<LabelId> = (0..4).map(LabelId).collect();
        for _ in 0..200 {
            let p: Vec<f64> = (0..4).map(|_| rng.gen()).collect();
            let m = matrix_1xk(&p);
            let fixed = PartialAssignment::empty(4);
            for ki in 0..4 {
                for kind in [SurpriseKind::Linear, SurpriseKind::Logarithmic] {
                    let a = score_me(&m, kind, 0, LabelId(ki), &group);
                    let b =
                        score_constraints(&m, &cs, kind, 0, LabelId(ki), &fixed).unwrap();
                    assert!(a.is_finite() && a >= 0.0);
                    assert!(b.is_finite() && b >= 0.0);
                }
                assert!(score_entropy(p[ki]) >= 0.0);
            }
        }
    }
}
