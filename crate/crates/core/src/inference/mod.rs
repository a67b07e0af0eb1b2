//! Frequency counting, priors and Bayesian posteriors.

mod bayes;
mod bitset;
mod engine;
mod prior;

pub use bayes::{infer, infer_partitioned, residual_term, DropReason, InferenceResult, PartitionTerm, NEGLIGIBLE_PRIOR};
pub use bitset::BitSet;
pub use engine::{count, scan, AtomTable, FrequencyCounts, TermCounts, UndefinedPolicy};
pub use prior::{build_prior_empirical, build_prior_uniform, update_prior, PriorEntry, PriorError, PriorStore};
