//! Exact reference distributions over constrained label vectors.
//!
//! Everything here works with an explicit joint distribution whose support is
//! a list of complete, constraint-valid assignments. That makes information
//! quantities computable by direct marginalization, which is what the test
//! suites compare the fast heuristics against. All entropies are in nats.

use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

use crate::constraints::{
    enumerate_valid_assignments, propagate, ConstraintError, ConstraintSet, LabelId,
    PartialAssignment,
};

/// Total probability mass may drift from 1 by at most this much.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Label count accepted by [`ig_decomposition`].
pub const DECOMPOSITION_CAP: usize = 8;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("marginals sum to {sum:.12}, which exceeds 1")]
    InvalidMarginals { sum: f64 },
    #[error("invalid joint distribution: {0}")]
    InvalidJoint(String),
    #[error("decomposition over {labels} labels exceeds cap {cap}")]
    CapExceeded { labels: usize, cap: usize },
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

/// A discrete joint distribution over complete label assignments.
#[derive(Clone, Debug)]
pub struct JointDistribution {
    label_count: usize,
    support: Vec<Vec<bool>>,
    mass: Vec<f64>,
}

impl JointDistribution {
    /// Builds a joint from explicit support rows and masses. Rows must be
    /// distinct and of equal width, masses non-negative and summing to 1
    /// within [`MASS_TOLERANCE`].
    pub fn new(support: Vec<Vec<bool>>, mass: Vec<f64>) -> Result<Self, OracleError> {
        if support.is_empty() {
            return Err(OracleError::InvalidJoint("empty support".into()));
        }
        if support.len() != mass.len() {
            return Err(OracleError::InvalidJoint(format!(
                "{} support rows but {} masses",
                support.len(),
                mass.len()
            )));
        }
        let label_count = support[0].len();
        let mut seen: HashMap<&[bool], ()> = HashMap::new();
        for row in &support {
            if row.len() != label_count {
                return Err(OracleError::InvalidJoint("ragged support rows".into()));
            }
            if seen.insert(row.as_slice(), ()).is_some() {
                return Err(OracleError::InvalidJoint("duplicate support row".into()));
            }
        }
        let mut total = 0.0;
        for &m in &mass {
            if !m.is_finite() || m < 0.0 {
                return Err(OracleError::InvalidJoint(format!("bad mass {m}")));
            }
            total += m;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(OracleError::InvalidJoint(format!(
                "masses sum to {total:.15}, not 1"
            )));
        }
        Ok(JointDistribution {
            label_count,
            support,
            mass,
        })
    }

    /// Joint induced by per-label marginals under one mutual-exclusion group
    /// spanning every label: support is the zero vector plus the K one-hot
    /// vectors, with leftover mass `1 - sum(p)` on the zero vector.
    pub fn from_me_marginals(p: &[f64]) -> Result<Self, OracleError> {
        let k = p.len();
        let sum: f64 = p.iter().sum();
        if sum > 1.0 + 1e-9 {
            return Err(OracleError::InvalidMarginals { sum });
        }
        for &pi in p {
            if !(0.0..=1.0).contains(&pi) {
                return Err(OracleError::InvalidJoint(format!("marginal {pi} not in [0, 1]")));
            }
        }
        let mut support = vec![vec![false; k]];
        let mut mass = vec![(1.0 - sum).max(0.0)];
        for (i, &pi) in p.iter().enumerate() {
            let mut row = vec![false; k];
            row[i] = true;
            support.push(row);
            mass.push(pi);
        }
        // Keep support in lexicographic order and absorb float drift so the
        // masses sum to 1 exactly enough for `new`.
        let mut paired: Vec<(Vec<bool>, f64)> = support.into_iter().zip(mass).collect();
        paired.sort_by(|a, b| a.0.cmp(&b.0));
        let total: f64 = paired.iter().map(|(_, m)| m).sum();
        let (support, mass) = paired
            .into_iter()
            .map(|(row, m)| (row, m / total))
            .unzip();
        JointDistribution::new(support, mass)
    }

    /// A random joint over every valid assignment of `cs`: mass is a
    /// symmetric Dirichlet draw (normalized unit exponentials), so any valid
    /// joint has positive density.
    pub fn random_valid(cs: &ConstraintSet, rng: &mut impl Rng) -> Result<Self, OracleError> {
        let support = enumerate_valid_assignments(cs)?;
        let mut mass: Vec<f64> = support
            .iter()
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        let total: f64 = mass.iter().sum();
        for m in &mut mass {
            *m /= total;
        }
        JointDistribution::new(support, mass)
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn support(&self) -> &[Vec<bool>] {
        &self.support
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Per-label positive-marginal probabilities.
    pub fn marginals(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.label_count];
        for (row, &m) in self.support.iter().zip(&self.mass) {
            for (k, &bit) in row.iter().enumerate() {
                if bit {
                    p[k] += m;
                }
            }
        }
        p
    }

    /// Joint entropy `H(Y)` in nats, with `0 ln 0 = 0`.
    pub fn entropy(&self) -> f64 {
        -self
            .mass
            .iter()
            .filter(|&&m| m > 0.0)
            .map(|&m| m * m.ln())
            .sum::<f64>()
    }

    /// Draws one support row according to the masses.
    pub fn sample(&self, rng: &mut impl Rng) -> &[bool] {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (row, &m) in self.support.iter().zip(&self.mass) {
            acc += m;
            if u < acc {
                return row;
            }
        }
        self.support.last().expect("non-empty support")
    }

    /// Probability of the event "all listed coordinates take the listed
    /// values". An empty event has probability 1.
    fn event_prob(&self, coords: &[(usize, bool)]) -> f64 {
        self.support
            .iter()
            .zip(&self.mass)
            .filter(|(row, _)| coords.iter().all(|&(i, v)| row[i] == v))
            .map(|(_, &m)| m)
            .sum()
    }

    /// Marginal distribution over all coordinates except `k`.
    fn off_marginal(&self, k: usize) -> HashMap<Vec<bool>, f64> {
        let mut out: HashMap<Vec<bool>, f64> = HashMap::new();
        for (row, &m) in self.support.iter().zip(&self.mass) {
            let mut rest = row.clone();
            rest.remove(k);
            *out.entry(rest).or_insert(0.0) += m;
        }
        out
    }
}

/// Exact mutual information `I(Y_k; Y_-k) = H(Y_k) + H(Y_-k) - H(Y)` in nats:
/// the expected entropy reduction of the rest of the vector from observing
/// label `k`.
pub fn exact_information_gain(joint: &JointDistribution, k: LabelId) -> f64 {
    let p = joint.marginals()[k.0];
    let h_k = binary_entropy(p);
    let h_rest = entropy_of(joint.off_marginal(k.0).values().copied());
    h_k + h_rest - joint.entropy()
}

fn binary_entropy(p: f64) -> f64 {
    entropy_of([p, 1.0 - p].into_iter())
}

fn entropy_of(masses: impl Iterator<Item = f64>) -> f64 {
    -masses
        .filter(|&m| m > 0.0)
        .map(|m| m * m.ln())
        .sum::<f64>()
}

/// The information gain of querying label `k`, split by what each part of the
/// answer is worth.
///
/// `entropy` prices the answer itself, `constraints` prices the values that
/// propagation fixes along with it, `remainder` prices what the rest of the
/// vector is still worth afterwards, and `constant` is the leftover the
/// selection heuristics drop because it is not affected by which labels the
/// closure fixes. The four parts sum to [`exact_information_gain`] exactly;
/// each is computed by independent marginalization, so the identity is a real
/// cross-check rather than bookkeeping.
#[derive(Clone, Copy, Debug)]
pub struct IgDecomposition {
    pub entropy: f64,
    pub constraints: f64,
    pub remainder: f64,
    pub constant: f64,
}

impl IgDecomposition {
    pub fn total(&self) -> f64 {
        self.entropy + self.constraints + self.remainder + self.constant
    }
}

/// Splits the exact information gain of label `k` under `cs`.
///
/// For each answer `v`, let `F(Y_k = v)` be the propagated closure with
/// coordinate set `f`. With `P` the joint and `y_f` the closure values:
///
/// - entropy:     sum over v of  `P(y_k) * -ln P(y_k)`
/// - constraints: sum over v of  `P(y_k) * -ln P(y_f)`
/// - remainder:   sum over v of  `-sum_y P(y) * ln P(y_-f | y_f\k)`
/// - constant:    `sum_y P(y) ln P(y) + sum_v P(y_k) * [ln P(y_f) - ln P(y_f\k)]`
pub fn ig_decomposition(
    joint: &JointDistribution,
    cs: &ConstraintSet,
    k: LabelId,
) -> Result<IgDecomposition, OracleError> {
    let kk = joint.label_count();
    if kk != cs.label_count() {
        return Err(OracleError::InvalidJoint(format!(
            "joint has {kk} labels, constraint set has {}",
            cs.label_count()
        )));
    }
    if kk > DECOMPOSITION_CAP {
        return Err(OracleError::CapExceeded {
            labels: kk,
            cap: DECOMPOSITION_CAP,
        });
    }
    for row in joint.support() {
        if let Err(e) = cs.check_row(row) {
            return Err(OracleError::InvalidJoint(format!(
                "support row violates constraints: {e}"
            )));
        }
    }

    let off_k = joint.off_marginal(k.0);
    let mut entropy = 0.0;
    let mut constraints = 0.0;
    let mut remainder = 0.0;
    // Dropped part, starting from sum_y P(y) ln P(y) = -H(Y).
    let mut constant = -joint.entropy();

    for v in [true, false] {
        let p_v = joint.event_prob(&[(k.0, v)]);
        if p_v <= 0.0 {
            continue;
        }
        // The closure exists whenever P(Y_k = v) > 0: some valid support row
        // realizes it.
        let closure = propagate(cs, &PartialAssignment::empty(kk), (k, v))?;
        let fixed: Vec<(usize, bool)> = closure.iter().map(|(l, b, _)| (l.0, b)).collect();
        let fixed_off_k: Vec<(usize, bool)> =
            fixed.iter().copied().filter(|&(i, _)| i != k.0).collect();

        let p_yf = joint.event_prob(&fixed);
        let p_yf_off_k = joint.event_prob(&fixed_off_k);

        entropy += p_v * -p_v.ln();
        constraints += p_v * -p_yf.ln();
        constant += p_v * (p_yf.ln() - p_yf_off_k.ln());

        // -sum_y P(y) ln P(y_-k) over rows with Y_k = v, then add back the
        // shared conditioning mass ln P(y_f\k).
        for (row, &m) in joint.support().iter().zip(joint.mass()) {
            if row[k.0] != v || m <= 0.0 {
                continue;
            }
            let mut rest = row.clone();
            rest.remove(k.0);
            let p_rest = off_k[&rest];
            remainder -= m * p_rest.ln();
        }
        remainder += p_v * p_yf_off_k.ln();
    }

    Ok(IgDecomposition {
        entropy,
        constraints,
        remainder,
        constant,
    })
}
