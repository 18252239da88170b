//! Pool-based active learning with propagation over label constraints.
//!
//! The library models datasets whose binary labels are tied together by
//! mutual-exclusion groups and subsumption (is-a) edges. Revealing one label
//! can therefore fix several others for free, and the selection strategies in
//! [`scoring`] exploit that: they rank candidate (instance, label) queries by
//! how much annotation the propagated answer is expected to save.
//!
//! Modules:
//! - [`constraints`]: label universe, constraint graphs, fixpoint propagation
//! - [`scoring`]: selection scores (entropy, probability, surprise) and argmax
//! - [`oracle`]: exact joint distributions, information gain, decomposition
//! - [`learner`]: per-label logistic models trained with AdaGrad
//! - [`data`]: dataset loading (LIBSVM multiclass, sparse two-file), splits
//! - [`experiment`]: the select / reveal / retrain / evaluate loop and metrics
//! - [`synth`]: deterministic synthetic dataset generators

pub mod constraints;
pub mod data;
pub mod experiment;
pub mod learner;
pub mod oracle;
pub mod scoring;
pub mod synth;
